//! Sparse multivariate polynomials over complex doubles.
//!
//! A [`Poly`] maps exponent vectors ([`MultiIndex`]) to coefficients. Terms
//! iterate in graded-lexicographic order: ascending total degree, and within a
//! degree the exponent of `x1` descending, then `x2`, and so on. That is the
//! order in which the Lyapunov recurrence consumes coefficients and the order
//! of every coefficient dump.
//!
//! Arithmetic never prunes by magnitude: a coefficient is dropped only when it
//! is exactly zero. Use [`Poly::clean`] for report output.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

use crate::linalg::CMatrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("imaginary residue {residue:e} exceeds tolerance {tolerance:e}")]
    ImaginaryResidue { residue: f64, tolerance: f64 },
}

pub type Result<T> = std::result::Result<T, SeriesError>;

fn check_dim(left: usize, right: usize) -> Result<()> {
    if left == right {
        Ok(())
    } else {
        Err(SeriesError::DimensionMismatch { left, right })
    }
}

/// Exponent vector addressing one monomial.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        assert!(!exponents.is_empty(), "multi-index needs dimension >= 1");
        Self(exponents)
    }

    pub fn zero(dim: usize) -> Self {
        Self::new(vec![0; dim])
    }

    /// `e_i`: exponent 1 in slot `i`.
    pub fn unit(dim: usize, i: usize) -> Self {
        let mut e = vec![0; dim];
        e[i] = 1;
        Self::new(e)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Total degree |j|.
    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn get(&self, i: usize) -> u32 {
        self.0[i]
    }

    /// Componentwise `self <= other`.
    pub fn divides(&self, other: &MultiIndex) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn plus(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `self - other`, or `None` if any slot would go negative.
    pub fn checked_minus(&self, other: &MultiIndex) -> Option<MultiIndex> {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<_>>>()
            .map(MultiIndex)
    }

    /// All multi-indices of dimension `dim` and total degree `degree`, in
    /// graded-lex order.
    pub fn all_of_degree(dim: usize, degree: u32) -> Vec<MultiIndex> {
        fn fill(slot: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
            if slot + 1 == cur.len() {
                cur[slot] = left;
                out.push(MultiIndex(cur.clone()));
                return;
            }
            for e in (0..=left).rev() {
                cur[slot] = e;
                fill(slot + 1, left - e, cur, out);
            }
        }
        let mut out = Vec::new();
        let mut cur = vec![0; dim];
        fill(0, degree, &mut cur, &mut out);
        out
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        f.write_str(&parts.join(" "))
    }
}

/// Sparse polynomial in `dim` variables with complex coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    dim: usize,
    terms: BTreeMap<MultiIndex, Complex64>,
}

impl Poly {
    pub fn zero(dim: usize) -> Self {
        assert!(dim >= 1, "polynomial dimension must be >= 1");
        Self {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, c: Complex64) -> Self {
        let mut p = Self::zero(dim);
        p.accumulate(MultiIndex::zero(dim), c);
        p
    }

    /// The coordinate function `x_i`.
    pub fn variable(dim: usize, i: usize) -> Self {
        let mut p = Self::zero(dim);
        p.accumulate(MultiIndex::unit(dim, i), Complex64::new(1.0, 0.0));
        p
    }

    pub fn monomial(exponents: Vec<u32>, c: Complex64) -> Self {
        let idx = MultiIndex::new(exponents);
        let mut p = Self::zero(idx.dim());
        p.accumulate(idx, c);
        p
    }

    /// Builds a polynomial from `(exponents, coefficient)` pairs; repeated
    /// exponents are summed.
    pub fn from_terms<I>(dim: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, Complex64)>,
    {
        let mut p = Self::zero(dim);
        for (exps, c) in terms {
            check_dim(dim, exps.len())?;
            p.accumulate(MultiIndex(exps), c);
        }
        Ok(p)
    }

    pub fn from_real_terms<I>(dim: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, f64)>,
    {
        Self::from_terms(
            dim,
            terms.into_iter().map(|(e, c)| (e, Complex64::new(c, 0.0))),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Maximum total degree among stored terms (0 for the zero polynomial).
    pub fn degree(&self) -> u32 {
        self.terms.keys().next_back().map_or(0, MultiIndex::degree)
    }

    /// Minimum total degree among stored terms (0 for the zero polynomial).
    pub fn min_degree(&self) -> u32 {
        self.terms.keys().next().map_or(0, MultiIndex::degree)
    }

    pub fn coeff(&self, idx: &MultiIndex) -> Complex64 {
        self.terms.get(idx).copied().unwrap_or_default()
    }

    pub fn coeff_of(&self, exponents: &[u32]) -> Complex64 {
        self.coeff(&MultiIndex(exponents.to_vec()))
    }

    /// Terms in graded-lex order.
    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &Complex64)> {
        self.terms.iter()
    }

    /// Adds `c` to the coefficient of `idx`, dropping it if the sum is exactly 0.
    pub fn accumulate(&mut self, idx: MultiIndex, c: Complex64) {
        debug_assert_eq!(idx.dim(), self.dim);
        if c == Complex64::default() {
            return;
        }
        let entry = self.terms.entry(idx);
        match entry {
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let v = *o.get() + c;
                if v == Complex64::default() {
                    o.remove();
                } else {
                    *o.get_mut() = v;
                }
            }
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Result<Poly> {
        check_dim(self.dim, other.dim)?;
        let mut out = self.clone();
        for (k, &c) in &other.terms {
            out.accumulate(k.clone(), c);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Poly) -> Result<Poly> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, s: Complex64) -> Poly {
        let mut out = Poly::zero(self.dim);
        for (k, &c) in &self.terms {
            out.accumulate(k.clone(), c * s);
        }
        out
    }

    /// Product with every term of total degree above `trunc` discarded.
    pub fn multiply(&self, other: &Poly, trunc: u32) -> Result<Poly> {
        check_dim(self.dim, other.dim)?;
        let mut out = Poly::zero(self.dim);
        for (ka, &ca) in &self.terms {
            let da = ka.degree();
            if da > trunc {
                break;
            }
            for (kb, &cb) in &other.terms {
                if da + kb.degree() > trunc {
                    break;
                }
                out.accumulate(ka.plus(kb), ca * cb);
            }
        }
        Ok(out)
    }

    /// Terms of total degree `<= max_degree`.
    pub fn truncate(&self, max_degree: u32) -> Poly {
        Poly {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .filter(|(k, _)| k.degree() <= max_degree)
                .map(|(k, &c)| (k.clone(), c))
                .collect(),
        }
    }

    /// Terms of total degree exactly `degree`.
    pub fn homogeneous_part(&self, degree: u32) -> Poly {
        Poly {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .filter(|(k, _)| k.degree() == degree)
                .map(|(k, &c)| (k.clone(), c))
                .collect(),
        }
    }

    /// `q(z) = p(M z)`, terms of degree above `trunc` discarded.
    ///
    /// A linear substitution maps each homogeneous part to a homogeneous part
    /// of the same degree, so truncation only drops input terms.
    pub fn compose_linear(&self, m: &CMatrix, trunc: u32) -> Result<Poly> {
        check_dim(self.dim, m.rows())?;
        check_dim(m.rows(), m.cols())?;
        let n = self.dim;
        let linear: Vec<Poly> = (0..n)
            .map(|i| {
                let mut l = Poly::zero(n);
                for k in 0..n {
                    l.accumulate(MultiIndex::unit(n, k), m[(i, k)]);
                }
                l
            })
            .collect();
        let max_exp = self
            .terms
            .keys()
            .flat_map(|k| k.0.iter().copied())
            .max()
            .unwrap_or(0);
        // powers[i][e] = (M z)_i^e
        let powers: Vec<Vec<Poly>> = linear
            .iter()
            .map(|l| {
                let mut pw = vec![Poly::constant(n, Complex64::new(1.0, 0.0))];
                for e in 1..=max_exp {
                    let next = pw[e as usize - 1].multiply(l, e).expect("same dim");
                    pw.push(next);
                }
                pw
            })
            .collect();
        let mut out = Poly::zero(n);
        for (k, &c) in &self.terms {
            if k.degree() > trunc {
                break;
            }
            let mut prod = Poly::constant(n, c);
            for (i, &e) in k.0.iter().enumerate() {
                if e > 0 {
                    prod = prod.multiply(&powers[i][e as usize], u32::MAX)?;
                }
            }
            for (kk, &cc) in &prod.terms {
                out.accumulate(kk.clone(), cc);
            }
        }
        Ok(out)
    }

    /// `∂p/∂x_i`.
    pub fn derivative(&self, i: usize) -> Poly {
        let mut out = Poly::zero(self.dim);
        for (k, &c) in &self.terms {
            let e = k.0[i];
            if e == 0 {
                continue;
            }
            let mut dk = k.clone();
            dk.0[i] -= 1;
            out.accumulate(dk, c * f64::from(e));
        }
        out
    }

    pub fn gradient(&self) -> Vec<Poly> {
        (0..self.dim).map(|i| self.derivative(i)).collect()
    }

    /// Evaluates at a complex point by direct monomial summation.
    pub fn evaluate(&self, x: &[Complex64]) -> Result<Complex64> {
        check_dim(self.dim, x.len())?;
        let powers = power_table(x, self.max_exponents());
        Ok(self
            .terms
            .iter()
            .map(|(k, &c)| {
                k.0.iter()
                    .enumerate()
                    .fold(c, |acc, (i, &e)| acc * powers[i][e as usize])
            })
            .sum())
    }

    /// Evaluates at a real point and returns the real part, failing if the
    /// imaginary part exceeds `1e-9 · (1 + |value|)`.
    pub fn evaluate_real(&self, x: &[f64]) -> Result<f64> {
        let z: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let v = self.evaluate(&z)?;
        let tolerance = 1e-9 * (1.0 + v.norm());
        if v.im.abs() >= tolerance {
            return Err(SeriesError::ImaginaryResidue {
                residue: v.im.abs(),
                tolerance,
            });
        }
        Ok(v.re)
    }

    /// `q(y) = p(center + y)`, by binomial expansion of every monomial.
    pub fn recenter(&self, center: &[Complex64]) -> Result<Poly> {
        check_dim(self.dim, center.len())?;
        let n = self.dim;
        let max_exp = self.max_exponents();
        let powers = power_table(center, max_exp.clone());
        let top = max_exp.iter().copied().max().unwrap_or(0) as usize;
        let binom = binomial_table(top);
        let mut out = Poly::zero(n);
        for (k, &c) in &self.terms {
            // expand prod_i (center_i + y_i)^{k_i}
            let mut partial: Vec<(Vec<u32>, Complex64)> = vec![(Vec::with_capacity(n), c)];
            for (i, &e) in k.0.iter().enumerate() {
                let mut next = Vec::with_capacity(partial.len() * (e as usize + 1));
                for (exps, coef) in &partial {
                    for m in 0..=e {
                        let w = powers[i][(e - m) as usize] * binom[e as usize][m as usize];
                        if w == Complex64::default() {
                            continue;
                        }
                        let mut ex = exps.clone();
                        ex.push(m);
                        next.push((ex, *coef * w));
                    }
                }
                partial = next;
            }
            for (exps, coef) in partial {
                out.accumulate(MultiIndex(exps), coef);
            }
        }
        Ok(out)
    }

    pub fn recenter_real(&self, center: &[f64]) -> Result<Poly> {
        let c: Vec<Complex64> = center.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.recenter(&c)
    }

    /// Copy with every coefficient of modulus below `eps` removed. Report
    /// output only; never call inside arithmetic.
    pub fn clean(&self, eps: f64) -> Poly {
        Poly {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .filter(|(_, c)| c.norm() >= eps)
                .map(|(k, &c)| (k.clone(), c))
                .collect(),
        }
    }

    pub fn max_coeff_modulus(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn max_imag(&self) -> f64 {
        self.terms.values().map(|c| c.im.abs()).fold(0.0, f64::max)
    }

    /// Zeroes imaginary parts (terms whose real part is 0 disappear).
    pub fn real_part(&self) -> Poly {
        let mut out = Poly::zero(self.dim);
        for (k, c) in &self.terms {
            out.accumulate(k.clone(), Complex64::new(c.re, 0.0));
        }
        out
    }

    /// Largest exponent per variable.
    pub fn max_exponents(&self) -> Vec<u32> {
        let mut m = vec![0; self.dim];
        for k in self.terms.keys() {
            for (slot, &e) in m.iter_mut().zip(&k.0) {
                *slot = (*slot).max(e);
            }
        }
        m
    }
}

/// Real polynomial flattened for repeated evaluation at real points.
#[derive(Clone, Debug)]
pub struct CompiledPoly {
    dim: usize,
    exps: Vec<u32>,
    coeffs: Vec<f64>,
    max_exp: Vec<u32>,
}

impl CompiledPoly {
    /// Compiles the real parts of `p`'s coefficients.
    pub fn new(p: &Poly) -> Self {
        let mut exps = Vec::with_capacity(p.len() * p.dim);
        let mut coeffs = Vec::with_capacity(p.len());
        for (k, c) in p.terms() {
            exps.extend_from_slice(k.exponents());
            coeffs.push(c.re);
        }
        Self {
            dim: p.dim,
            exps,
            coeffs,
            max_exp: p.max_exponents(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        let mut powers: Vec<Vec<f64>> = Vec::with_capacity(self.dim);
        for (i, &top) in self.max_exp.iter().enumerate() {
            let mut row = Vec::with_capacity(top as usize + 1);
            let mut acc = 1.0;
            row.push(acc);
            for _ in 0..top {
                acc *= x[i];
                row.push(acc);
            }
            powers.push(row);
        }
        let mut sum = 0.0;
        for (t, &c) in self.coeffs.iter().enumerate() {
            let e = &self.exps[t * self.dim..(t + 1) * self.dim];
            let mut term = c;
            for (i, &ei) in e.iter().enumerate() {
                term *= powers[i][ei as usize];
            }
            sum += term;
        }
        sum
    }
}

fn power_table(x: &[Complex64], max_exp: Vec<u32>) -> Vec<Vec<Complex64>> {
    x.iter()
        .zip(max_exp)
        .map(|(&xi, top)| {
            let mut row = Vec::with_capacity(top as usize + 1);
            let mut acc = Complex64::new(1.0, 0.0);
            row.push(acc);
            for _ in 0..top {
                acc *= xi;
                row.push(acc);
            }
            row
        })
        .collect()
}

fn binomial_table(n: usize) -> Vec<Vec<f64>> {
    let mut t = vec![vec![1.0]];
    for i in 1..=n {
        let prev = &t[i - 1];
        let mut row = vec![1.0; i + 1];
        for k in 1..i {
            row[k] = prev[k - 1] + prev[k];
        }
        t.push(row);
    }
    t
}
