//! Taylor coefficients of the optimal Lyapunov function.
//!
//! `V` solves `⟨∇V(x), f(x)⟩ = -‖x‖²`, `V(0) = 0`. In diagonalizing
//! coordinates `x = S z` the function `W = V ∘ S` has coefficients `B_j` that
//! follow from a triangular recurrence in the total degree `|j|`: the quadratic
//! block is fixed by the eigenvalues and the columns of `S`, and every higher
//! coefficient is a combination of lower-degree ones weighted by the
//! nonlinear coefficients `b^i_k` of `g = S⁻¹ ∘ f ∘ S`.

use std::collections::HashMap;
use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::linalg::RMatrix;
use crate::series::{MultiIndex, Poly, SeriesError};
use crate::spectral::{PolySystem, SpectralData, SpectralError};

/// Degree cap for systems with `n >= 2`.
pub const MAX_DEGREE: u32 = 64;
/// Degree cap for scalar equations, which need long series for the
/// convergence-radius and continuation estimates.
pub const MAX_DEGREE_1D: u32 = 400;
/// Coefficient magnitude above which the run is declared ill-conditioned.
pub const COEFF_LIMIT: f64 = 1e12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LyapError {
    #[error("degree {degree} outside [2, {max}]")]
    DegreeOutOfRange { degree: u32, max: u32 },
    #[error("near-resonant divisor {value:e} at multi-index ({index})")]
    Resonance { index: MultiIndex, value: f64 },
    #[error("coefficient at ({index}) has magnitude {magnitude:e} > 1e12; series is ill-conditioned")]
    CoefficientBlowup { index: MultiIndex, magnitude: f64 },
    #[error("back-transformed coefficients have imaginary residue {residue:e} > {tolerance:e}")]
    ImaginaryResidue { residue: f64, tolerance: f64 },
    #[error("Lyapunov equation is singular")]
    SingularLyapunov,
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

pub type Result<T> = std::result::Result<T, LyapError>;

/// Largest admissible degree for a system of dimension `dim`.
pub fn degree_cap(dim: usize) -> u32 {
    if dim == 1 {
        MAX_DEGREE_1D
    } else {
        MAX_DEGREE
    }
}

/// Degree-`p` Taylor polynomial of the optimal Lyapunov function, in both
/// coordinate systems.
#[derive(Clone, Debug)]
pub struct LyapunovPoly {
    pub degree: u32,
    /// `W_p` in diagonalizing coordinates (coefficients `B_j`).
    pub w: Poly,
    /// `V_p` in state coordinates (real coefficients `A_j`).
    pub v: Poly,
    pub spec: SpectralData,
}

impl LyapunovPoly {
    /// Full pipeline: diagonalize, run the recurrence, transform back.
    pub fn compute(sys: &PolySystem, degree: u32) -> Result<Self> {
        let spec = SpectralData::analyze(sys)?;
        Self::from_spectral(spec, degree)
    }

    pub fn from_spectral(spec: SpectralData, degree: u32) -> Result<Self> {
        let w = compute_b(&spec, degree)?;
        let v = back_transform(&w, &spec)?;
        Ok(Self {
            degree,
            w,
            v,
            spec,
        })
    }

    pub fn dim(&self) -> usize {
        self.v.dim()
    }

    /// Quadratic part of `V_p` as a symmetric matrix.
    pub fn quadratic_matrix(&self) -> RMatrix {
        let n = self.dim();
        let mut p = RMatrix::zeros(n, n);
        for (idx, c) in self.v.homogeneous_part(2).terms() {
            let slots: Vec<usize> = (0..n).filter(|&i| idx.get(i) > 0).collect();
            match slots.as_slice() {
                [i] => p[(*i, *i)] = c.re,
                [i, j] => {
                    p[(*i, *j)] = c.re / 2.0;
                    p[(*j, *i)] = c.re / 2.0;
                }
                _ => unreachable!("degree-2 index"),
            }
        }
        p
    }
}

/// Recurrence for the coefficients `B_j`, `2 <= |j| <= p`, of `W = V ∘ S`.
///
/// Multi-indices of equal degree are independent of each other and are
/// evaluated in parallel; the inner sum runs only over exponents present in
/// the nonlinear part of some `g_i`.
pub fn compute_b(spec: &SpectralData, p: u32) -> Result<Poly> {
    let n = spec.dim();
    let cap = degree_cap(n);
    if !(2..=cap).contains(&p) {
        return Err(LyapError::DegreeOutOfRange { degree: p, max: cap });
    }
    let lambda = &spec.eigenvalues;
    let s = &spec.s;

    // nonlinear[i] = [(k, b^i_k)] with |k| >= 2
    let nonlinear: Vec<Vec<(MultiIndex, Complex64)>> = spec
        .g
        .iter()
        .map(|gi| {
            gi.terms()
                .filter(|(k, _)| k.degree() >= 2)
                .map(|(k, &c)| (k.clone(), c))
                .collect()
        })
        .collect();

    let mut coeffs: HashMap<MultiIndex, Complex64> = HashMap::new();

    for j in MultiIndex::all_of_degree(n, 2) {
        let slots: Vec<usize> = (0..n).filter(|&i| j.get(i) > 0).collect();
        let b = match slots.as_slice() {
            [i0] => {
                let sum: Complex64 = (0..n).map(|i| s[(i, *i0)] * s[(i, *i0)]).sum();
                -sum / (2.0 * lambda[*i0])
            }
            [pp, qq] => {
                let sum: Complex64 = (0..n).map(|i| s[(i, *pp)] * s[(i, *qq)]).sum();
                -2.0 * sum / (lambda[*pp] + lambda[*qq])
            }
            _ => unreachable!("degree-2 index"),
        };
        check_magnitude(&j, b)?;
        coeffs.insert(j, b);
    }

    for m in 3..=p {
        let level = MultiIndex::all_of_degree(n, m);
        let computed: Vec<(MultiIndex, Complex64)> = level
            .into_par_iter()
            .map(|j| {
                let divisor: Complex64 = (0..n).map(|i| lambda[i] * f64::from(j.get(i))).sum();
                if divisor.norm() < 1e-12 {
                    return Err(LyapError::Resonance {
                        index: j.clone(),
                        value: divisor.norm(),
                    });
                }
                let mut acc = Complex64::default();
                for (i, terms) in nonlinear.iter().enumerate() {
                    for (k, b) in terms {
                        if k.degree() >= m || !k.divides(&j) {
                            continue;
                        }
                        let factor = f64::from(j.get(i) - k.get(i) + 1);
                        let target = j
                            .checked_minus(k)
                            .expect("k divides j")
                            .plus(&MultiIndex::unit(n, i));
                        if let Some(bt) = coeffs.get(&target) {
                            acc += b * bt * factor;
                        }
                    }
                }
                let value = -acc / divisor;
                check_magnitude(&j, value)?;
                Ok((j, value))
            })
            .collect::<Result<_>>()?;
        coeffs.extend(computed);
    }

    let mut entries: Vec<(MultiIndex, Complex64)> = coeffs.into_iter().collect();
    entries.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(Poly::from_terms(
        n,
        entries.into_iter().map(|(k, c)| (k.exponents().to_vec(), c)),
    )?)
}

fn check_magnitude(j: &MultiIndex, b: Complex64) -> Result<()> {
    let magnitude = b.norm();
    if !magnitude.is_finite() || magnitude > COEFF_LIMIT {
        return Err(LyapError::CoefficientBlowup {
            index: j.clone(),
            magnitude,
        });
    }
    Ok(())
}

/// `V_p(x) = W_p(S⁻¹ x)`, checked for an imaginary residue below
/// `1e-9 · (1 + max |coefficient|)` and then made exactly real.
pub fn back_transform(w: &Poly, spec: &SpectralData) -> Result<Poly> {
    let v = w.compose_linear(&spec.s_inv, w.degree())?;
    let residue = v.max_imag();
    let tolerance = 1e-9 * (1.0 + v.max_coeff_modulus());
    if residue >= tolerance {
        return Err(LyapError::ImaginaryResidue { residue, tolerance });
    }
    Ok(v.real_part())
}

/// Real symmetric positive definite matrix `P` of `V₂(x) = xᵀ P x`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticForm {
    pub p: RMatrix,
}

impl QuadraticForm {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let px = self.p.matvec(x);
        x.iter().zip(px).map(|(a, b)| a * b).sum()
    }

    pub fn to_poly(&self) -> Poly {
        let n = self.p.rows();
        let mut terms = Vec::new();
        for i in 0..n {
            for j in i..n {
                let mut e = vec![0; n];
                e[i] += 1;
                e[j] += 1;
                let c = if i == j {
                    self.p[(i, i)]
                } else {
                    2.0 * self.p[(i, j)]
                };
                terms.push((e, c));
            }
        }
        Poly::from_real_terms(n, terms).expect("consistent dimension")
    }

    /// Cholesky test for positive definiteness.
    pub fn is_positive_definite(&self) -> bool {
        let n = self.p.rows();
        let mut l = RMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let sum: f64 = (0..j).map(|k| l[(i, k)] * l[(j, k)]).sum();
                if i == j {
                    let d = self.p[(i, i)] - sum;
                    if d <= 0.0 {
                        return false;
                    }
                    l[(i, i)] = d.sqrt();
                } else {
                    l[(i, j)] = (self.p[(i, j)] - sum) / l[(j, j)];
                }
            }
        }
        true
    }
}

/// Solves `Aᵀ P + P A = -I` as an `n² × n²` linear system.
pub fn solve_lyapunov(a: &RMatrix) -> Result<QuadraticForm> {
    let n = a.rows();
    let idx = |r: usize, c: usize| r * n + c;
    let mut m = RMatrix::zeros(n * n, n * n);
    let mut rhs = vec![0.0; n * n];
    for r in 0..n {
        for c in 0..n {
            let row = idx(r, c);
            for k in 0..n {
                m[(row, idx(k, c))] += a[(k, r)];
                m[(row, idx(r, k))] += a[(k, c)];
            }
            if r == c {
                rhs[row] = -1.0;
            }
        }
    }
    let sol = m.solve(&rhs).ok_or(LyapError::SingularLyapunov)?;
    let mut p = RMatrix::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            p[(r, c)] = 0.5 * (sol[idx(r, c)] + sol[idx(c, r)]);
        }
    }
    Ok(QuadraticForm { p })
}

/// `⟨∇V_p, f⟩ + ‖x‖²` truncated to degree `p`; vanishes identically when the
/// recurrence is right.
pub fn residual(sys: &PolySystem, l: &LyapunovPoly) -> Result<Poly> {
    let n = sys.dim();
    let grad = l.v.gradient();
    let mut r = Poly::zero(n);
    for (gi, fi) in grad.iter().zip(sys.components()) {
        r = r.add(&gi.multiply(fi, l.degree)?)?;
    }
    for i in 0..n {
        let mut e = vec![0; n];
        e[i] = 2;
        r.accumulate(MultiIndex::new(e), Complex64::new(1.0, 0.0));
    }
    Ok(r.real_part())
}

/// Largest coefficient modulus of [`residual`].
pub fn residual_max(sys: &PolySystem, l: &LyapunovPoly) -> Result<f64> {
    Ok(residual(sys, l)?.max_coeff_modulus())
}

/// Formats `x` in C-style scientific notation with 17 significant digits,
/// e.g. `5.0000000000000000e-01`.
pub fn format_sci17(x: f64) -> String {
    let s = format!("{x:.16e}");
    match s.split_once('e') {
        Some((mantissa, exp)) => {
            let (sign, digits) = match exp.strip_prefix('-') {
                Some(d) => ('-', d),
                None => ('+', exp),
            };
            format!("{mantissa}e{sign}{digits:0>2}")
        }
        None => s,
    }
}

/// Coefficient dump: one line per multi-index of degree 2..=p in graded-lex
/// order, `j1 ... jn  re  im`, zeros included.
pub fn coefficient_dump(v: &Poly, degree: u32) -> String {
    let mut out = String::new();
    for m in 2..=degree {
        for j in MultiIndex::all_of_degree(v.dim(), m) {
            let c = v.coeff(&j);
            let _ = writeln!(out, "{j}  {}  {}", format_sci17(c.re), format_sci17(c.im));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear_1d(lambda: f64) -> PolySystem {
        PolySystem::from_real_terms(&[vec![(vec![1], -lambda)]]).unwrap()
    }

    #[test]
    fn linear_1d_has_single_coefficient() {
        let l = LyapunovPoly::compute(&linear_1d(2.5), 8).unwrap();
        assert_eq!(l.v.len(), 1);
        assert!((l.v.coeff_of(&[2]).re - 1.0 / 5.0).abs() < 1e-16);
        assert!(residual(&linear_1d(2.5), &l).unwrap().is_zero());
    }

    #[test]
    fn degree_out_of_range() {
        let spec = SpectralData::analyze(&linear_1d(1.0)).unwrap();
        assert!(matches!(
            compute_b(&spec, 1),
            Err(LyapError::DegreeOutOfRange { .. })
        ));
        let sys = PolySystem::from_real_terms(&[
            vec![(vec![1, 0], -1.0)],
            vec![(vec![0, 1], -1.0)],
        ])
        .unwrap();
        let spec = SpectralData::analyze(&sys).unwrap();
        assert!(compute_b(&spec, 64).is_ok());
        assert!(matches!(
            compute_b(&spec, 65),
            Err(LyapError::DegreeOutOfRange { degree: 65, max: 64 })
        ));
    }

    #[test]
    fn lyapunov_equation_minus_identity() {
        let q = solve_lyapunov(&RMatrix::identity(2).scale(-1.0)).unwrap();
        assert!(q.p.max_abs_diff(&RMatrix::identity(2).scale(0.5)) < 1e-15);
        let q = solve_lyapunov(&RMatrix::identity(2).scale(-4.0)).unwrap();
        assert!(q.p.max_abs_diff(&RMatrix::identity(2).scale(0.125)) < 1e-15);
        assert!(q.is_positive_definite());
    }

    #[test]
    fn singular_lyapunov_equation() {
        // eigenvalues ±i: Aᵀ P + P A = -I has no solution
        let a = RMatrix::from_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]]);
        assert_eq!(solve_lyapunov(&a), Err(LyapError::SingularLyapunov));
    }

    #[test]
    fn sci17_formatting() {
        assert_eq!(format_sci17(0.5), "5.0000000000000000e-01");
        assert_eq!(format_sci17(0.0), "0.0000000000000000e+00");
        assert_eq!(format_sci17(-1234.5), "-1.2345000000000000e+03");
        let tiny = format_sci17(1e-120);
        assert!(tiny.ends_with("e-121"), "{tiny}");
        assert_eq!(tiny.parse::<f64>().unwrap(), 1e-120);
    }

    #[test]
    fn dump_lists_every_index() {
        let l = LyapunovPoly::compute(&linear_1d(1.0), 4).unwrap();
        let dump = coefficient_dump(&l.v, 4);
        let lines: Vec<&str> = dump.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], "2  5.0000000000000000e-01  0.0000000000000000e+00");
    }
}
