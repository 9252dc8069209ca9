//! Linearization at the origin, diagonalization, and the change of
//! coordinates `g = S⁻¹ ∘ f ∘ S` that puts the linear part in diagonal form.
//!
//! The eigensolver is deliberately small: characteristic polynomial by
//! Faddeev-LeVerrier, roots by Aberth-Ehrlich iteration with Newton polish,
//! eigenvectors from the null space of `A - λI`. Matrices are limited to
//! `n <= 6`.

use num_complex::Complex64;
use thiserror::Error;

use crate::linalg::{CMatrix, RMatrix};
use crate::series::{MultiIndex, Poly, SeriesError};

pub const MAX_DIM: usize = 6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("origin is not exponentially stable: eigenvalues {eigenvalues:?}")]
    NotHurwitz { eigenvalues: Vec<Complex64> },
    #[error("Jacobian at the origin is not diagonalizable: {reason}")]
    NotDiagonalizable { reason: String },
    #[error("dimension {0} exceeds the supported maximum of 6")]
    TooLarge(usize),
    #[error("transformed linear part deviates from diag(λ) by {deviation:e}")]
    LinearPartMismatch { deviation: f64 },
    #[error("invalid system: {0}")]
    InvalidSystem(String),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

pub type Result<T> = std::result::Result<T, SpectralError>;

/// Polynomial vector field `ẋ = f(x)` with `f(0) = 0` and real coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct PolySystem {
    dim: usize,
    components: Vec<Poly>,
}

impl PolySystem {
    pub fn new(components: Vec<Poly>) -> Result<Self> {
        let dim = components.len();
        if dim == 0 {
            return Err(SpectralError::InvalidSystem("no equations".into()));
        }
        let zero = MultiIndex::zero(dim);
        for (i, f) in components.iter().enumerate() {
            if f.dim() != dim {
                return Err(SpectralError::InvalidSystem(format!(
                    "equation {} has dimension {}, expected {dim}",
                    i + 1,
                    f.dim()
                )));
            }
            if f.coeff(&zero) != Complex64::default() {
                return Err(SpectralError::InvalidSystem(format!(
                    "equation {} has a constant term; f(0) must vanish",
                    i + 1
                )));
            }
            if f.max_imag() != 0.0 {
                return Err(SpectralError::InvalidSystem(format!(
                    "equation {} has complex coefficients",
                    i + 1
                )));
            }
        }
        Ok(Self { dim, components })
    }

    /// Builds a system from real `(exponents, coefficient)` lists, one per equation.
    pub fn from_real_terms(equations: &[Vec<(Vec<u32>, f64)>]) -> Result<Self> {
        let dim = equations.len();
        let comps = equations
            .iter()
            .map(|eq| Poly::from_real_terms(dim, eq.iter().cloned()))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Self::new(comps)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> &[Poly] {
        &self.components
    }

    /// Largest total degree over all components.
    pub fn degree(&self) -> u32 {
        self.components.iter().map(Poly::degree).max().unwrap_or(0)
    }

    /// The time-reversed field `-f`.
    pub fn reversed(&self) -> PolySystem {
        PolySystem {
            dim: self.dim,
            components: self
                .components
                .iter()
                .map(|c| c.scale(Complex64::new(-1.0, 0.0)))
                .collect(),
        }
    }

    /// Entry `(i, k)` is the coefficient of `x_k` in `f_i`.
    pub fn jacobian_at_origin(&self) -> RMatrix {
        let mut a = RMatrix::zeros(self.dim, self.dim);
        for (i, f) in self.components.iter().enumerate() {
            for k in 0..self.dim {
                a[(i, k)] = f.coeff(&MultiIndex::unit(self.dim, k)).re;
            }
        }
        a
    }
}

/// Eigenvalues and eigenvector matrix of the Jacobian.
#[derive(Clone, Debug, PartialEq)]
pub struct Eigenbasis {
    pub eigenvalues: Vec<Complex64>,
    pub s: CMatrix,
    pub s_inv: CMatrix,
}

/// Eigenbasis plus the transformed field `g = S⁻¹ ∘ f ∘ S`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralData {
    pub eigenvalues: Vec<Complex64>,
    pub s: CMatrix,
    pub s_inv: CMatrix,
    pub g: Vec<Poly>,
}

impl SpectralData {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Diagonalizes the Jacobian of `sys` and transforms the field.
    pub fn analyze(sys: &PolySystem) -> Result<Self> {
        let basis = diagonalize(&sys.jacobian_at_origin())?;
        transform_system(sys, basis)
    }
}

/// Coefficients `[c_0, c_1, ..., c_{n-1}, 1]` of `det(λI - A)`.
pub fn characteristic_polynomial(a: &RMatrix) -> Vec<f64> {
    let n = a.rows();
    let mut coeffs = vec![0.0; n + 1];
    coeffs[n] = 1.0;
    let mut m = RMatrix::zeros(n, n);
    for k in 1..=n {
        // M_k = A M_{k-1} + c_{n-k+1} I
        let mut next = a.matmul(&m);
        for i in 0..n {
            next[(i, i)] += coeffs[n - k + 1];
        }
        m = next;
        let am = a.matmul(&m);
        let trace: f64 = (0..n).map(|i| am[(i, i)]).sum();
        coeffs[n - k] = -trace / k as f64;
    }
    coeffs
}

fn horner(coeffs: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::default();
    let mut dp = Complex64::default();
    for &c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// All complex roots of a real monic-or-not polynomial (ascending coefficients)
/// by Aberth-Ehrlich iteration.
pub fn polynomial_roots(coeffs: &[f64]) -> Vec<Complex64> {
    let mut c = coeffs.to_vec();
    while c.len() > 1 && *c.last().unwrap() == 0.0 {
        c.pop();
    }
    let n = c.len() - 1;
    if n == 0 {
        return Vec::new();
    }
    let lead = c[n];
    let monic: Vec<f64> = c.iter().map(|v| v / lead).collect();
    // Cauchy bound on root moduli
    let bound = 1.0 + monic[..n].iter().map(|v| v.abs()).fold(0.0, f64::max);
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.4;
            Complex64::from_polar(0.5 * bound, theta)
        })
        .collect();
    for _ in 0..1000 {
        let mut max_step: f64 = 0.0;
        for i in 0..n {
            let (p, dp) = horner(&monic, z[i]);
            if p == Complex64::default() {
                continue;
            }
            let ratio = p / dp;
            let repulsion: Complex64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    let d = z[i] - z[j];
                    if d == Complex64::default() {
                        Complex64::default()
                    } else {
                        1.0 / d
                    }
                })
                .sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            if step.is_finite() {
                z[i] -= step;
                max_step = max_step.max(step.norm() / (1.0 + z[i].norm()));
            }
        }
        if max_step < 1e-15 {
            break;
        }
    }
    z
}

fn sort_key_desc(a: &Complex64, b: &Complex64) -> std::cmp::Ordering {
    b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im))
}

fn normalize_vector(v: &mut [Complex64]) {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in v.iter_mut() {
        *z /= norm;
    }
    // phase: first entry that is not negligible becomes real positive
    if let Some(first) = v.iter().copied().find(|z| z.norm() > 1e-12) {
        let phase = first.conj() / first.norm();
        for z in v.iter_mut() {
            *z *= phase;
        }
    }
}

/// Eigendecomposition `S⁻¹ A S = diag(λ)` of a real Hurwitz matrix.
///
/// Eigenvalues are sorted by real part, then imaginary part, both descending;
/// eigenvectors have unit norm with the first non-negligible entry real
/// positive, and conjugate eigenvalues get conjugate columns.
pub fn diagonalize(a: &RMatrix) -> Result<Eigenbasis> {
    let n = a.rows();
    if !a.is_square() || n == 0 {
        return Err(SpectralError::InvalidSystem("Jacobian must be square".into()));
    }
    if n > MAX_DIM {
        return Err(SpectralError::TooLarge(n));
    }
    let scale = a.max_abs().max(1.0);
    let mut roots = polynomial_roots(&characteristic_polynomial(a));

    // Newton polish on the characteristic polynomial for well-separated roots.
    let cp = characteristic_polynomial(a);
    for r in roots.iter_mut() {
        for _ in 0..3 {
            let (p, dp) = horner(&cp, *r);
            if dp.norm() > 1e-8 * scale {
                let step = p / dp;
                if step.is_finite() && step.norm() < 1e-6 * scale {
                    *r -= step;
                }
            }
        }
    }

    // snap near-real roots, pair complex ones exactly
    let real_tol = 1e-10 * scale;
    for r in roots.iter_mut() {
        if r.im.abs() < real_tol {
            r.im = 0.0;
        }
    }
    let mut paired = vec![false; n];
    for i in 0..n {
        if roots[i].im <= 0.0 || paired[i] {
            continue;
        }
        let partner = (0..n)
            .filter(|&j| !paired[j] && roots[j].im < 0.0)
            .min_by(|&a, &b| {
                let da = (roots[a] - roots[i].conj()).norm();
                let db = (roots[b] - roots[i].conj()).norm();
                da.total_cmp(&db)
            });
        if let Some(j) = partner {
            let m = Complex64::new(
                0.5 * (roots[i].re + roots[j].re),
                0.5 * (roots[i].im - roots[j].im),
            );
            roots[i] = m;
            roots[j] = m.conj();
            paired[i] = true;
            paired[j] = true;
        }
    }
    roots.sort_by(sort_key_desc);

    if let Some(bad) = roots.iter().find(|r| r.re >= -1e-12 * scale) {
        let _ = bad;
        return Err(SpectralError::NotHurwitz { eigenvalues: roots });
    }

    // cluster (nearly) repeated roots
    let cluster_tol = 1e-6 * scale;
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        match clusters
            .iter_mut()
            .find(|cl| (roots[cl[0]] - roots[i]).norm() < cluster_tol)
        {
            Some(cl) => cl.push(i),
            None => clusters.push(vec![i]),
        }
    }

    let ac = a.to_complex();
    let mut s = CMatrix::zeros(n, n);
    let mut eigenvalues = vec![Complex64::default(); n];
    let mut filled = vec![false; n];
    for cl in &clusters {
        let first = cl[0];
        if filled[first] {
            continue;
        }
        let mean: Complex64 =
            cl.iter().map(|&i| roots[i]).sum::<Complex64>() / cl.len() as f64;
        let lambda = if mean.im == 0.0 || mean.im.abs() < real_tol {
            Complex64::new(mean.re, 0.0)
        } else {
            mean
        };
        let shifted = ac.sub(&CMatrix::identity(n).scale(lambda));
        let rank_tol = 1e-7 * scale;
        let mut basis = shifted.null_space(rank_tol);
        if basis.len() < cl.len() {
            return Err(SpectralError::NotDiagonalizable {
                reason: format!(
                    "eigenvalue {lambda} has algebraic multiplicity {} but geometric multiplicity {}",
                    cl.len(),
                    basis.len()
                ),
            });
        }
        basis.truncate(cl.len());
        for (v, &col) in basis.iter_mut().zip(cl) {
            if lambda.im == 0.0 {
                for z in v.iter_mut() {
                    z.im = 0.0;
                }
            }
            normalize_vector(v);
            s.set_column(col, v);
            eigenvalues[col] = lambda;
            filled[col] = true;
        }
        // conjugate partner cluster gets the conjugate columns
        if lambda.im != 0.0 {
            let partner = clusters
                .iter()
                .find(|other| {
                    !filled[other[0]] && (roots[other[0]] - lambda.conj()).norm() < cluster_tol
                })
                .cloned();
            if let Some(other) = partner {
                for (&col, &src) in other.iter().zip(cl) {
                    let v: Vec<Complex64> = s.column(src).iter().map(|z| z.conj()).collect();
                    s.set_column(col, &v);
                    eigenvalues[col] = lambda.conj();
                    filled[col] = true;
                }
            }
        }
    }

    let s_inv = s.inverse().ok_or_else(|| SpectralError::NotDiagonalizable {
        reason: "eigenvector matrix is singular".into(),
    })?;
    let cond = s.norm_1() * s_inv.norm_1();
    if cond > 1e8 {
        return Err(SpectralError::NotDiagonalizable {
            reason: format!("eigenvector matrix condition number {cond:.3e} exceeds 1e8"),
        });
    }

    let d = s_inv.matmul(&ac).matmul(&s);
    for (i, lam) in eigenvalues.iter_mut().enumerate() {
        let refined = d[(i, i)];
        *lam = if lam.im == 0.0 {
            Complex64::new(refined.re, 0.0)
        } else {
            refined
        };
    }
    // keep conjugate pairs exactly conjugate after refinement
    for i in 0..n {
        if eigenvalues[i].im > 0.0 {
            if let Some(j) = (0..n).find(|&j| {
                j != i
                    && eigenvalues[j].im < 0.0
                    && (s.column(j)
                        .iter()
                        .zip(s.column(i))
                        .all(|(a, b)| *a == b.conj()))
            }) {
                eigenvalues[j] = eigenvalues[i].conj();
            }
        }
    }

    let off = d.max_abs_diff(&CMatrix::from_diagonal(&eigenvalues));
    if off > 1e-8 * scale {
        return Err(SpectralError::NotDiagonalizable {
            reason: format!("S⁻¹AS deviates from diagonal by {off:.3e}"),
        });
    }
    let id_err = s.matmul(&s_inv).max_abs_diff(&CMatrix::identity(n));
    if id_err > 1e-10 {
        return Err(SpectralError::NotDiagonalizable {
            reason: format!("S·S⁻¹ deviates from identity by {id_err:.3e}"),
        });
    }
    if let Some(bad) = eigenvalues.iter().find(|l| l.re >= 0.0) {
        let _ = bad;
        return Err(SpectralError::NotHurwitz { eigenvalues });
    }
    Ok(Eigenbasis {
        eigenvalues,
        s,
        s_inv,
    })
}

/// `g_i(z) = Σ_k (S⁻¹)_{ik} f_k(S z)`; the linear part is checked against
/// `λ_i z_i` and then set to it exactly.
pub fn transform_system(sys: &PolySystem, basis: Eigenbasis) -> Result<SpectralData> {
    let n = sys.dim();
    if basis.eigenvalues.len() != n {
        return Err(SpectralError::InvalidSystem(format!(
            "eigenbasis has dimension {}, system has {n}",
            basis.eigenvalues.len()
        )));
    }
    let composed: Vec<Poly> = sys
        .components()
        .iter()
        .map(|f| f.compose_linear(&basis.s, f.degree()))
        .collect::<std::result::Result<_, _>>()?;
    let scale = basis
        .eigenvalues
        .iter()
        .map(|l| l.norm())
        .fold(1.0, f64::max);
    let mut g = Vec::with_capacity(n);
    let mut deviation: f64 = 0.0;
    for i in 0..n {
        let mut gi = Poly::zero(n);
        for (k, fk) in composed.iter().enumerate() {
            let w = basis.s_inv[(i, k)];
            if w == Complex64::default() {
                continue;
            }
            gi = gi.add(&fk.scale(w))?;
        }
        let mut snapped = Poly::zero(n);
        for (idx, &c) in gi.terms() {
            if idx.degree() == 1 {
                let m = (0..n).find(|&m| idx.get(m) == 1).expect("degree-1 index");
                let target = if m == i {
                    basis.eigenvalues[i]
                } else {
                    Complex64::default()
                };
                deviation = deviation.max((c - target).norm());
            } else {
                snapped.accumulate(idx.clone(), c);
            }
        }
        let lin = gi.coeff(&MultiIndex::unit(n, i));
        if lin == Complex64::default() {
            deviation = deviation.max(basis.eigenvalues[i].norm());
        }
        snapped.accumulate(MultiIndex::unit(n, i), basis.eigenvalues[i]);
        g.push(snapped);
    }
    if deviation > 1e-10 * scale {
        return Err(SpectralError::LinearPartMismatch { deviation });
    }
    Ok(SpectralData {
        eigenvalues: basis.eigenvalues,
        s: basis.s,
        s_inv: basis.s_inv,
        g,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vdp() -> PolySystem {
        PolySystem::from_real_terms(&[
            vec![(vec![0, 1], -1.0)],
            vec![(vec![1, 0], 1.0), (vec![0, 1], -1.0), (vec![2, 1], 1.0)],
        ])
        .unwrap()
    }

    #[test]
    fn vdp_jacobian() {
        let a = vdp().jacobian_at_origin();
        assert_eq!(a, RMatrix::from_rows(&[vec![0.0, -1.0], vec![1.0, -1.0]]));
    }

    #[test]
    fn one_dimensional_jacobian() {
        let sys = PolySystem::from_real_terms(&[vec![(vec![1], -3.0)]]).unwrap();
        assert_eq!(sys.jacobian_at_origin(), RMatrix::from_rows(&[vec![-3.0]]));
    }

    #[test]
    fn constant_term_rejected() {
        let err = PolySystem::from_real_terms(&[vec![(vec![0], 1.0), (vec![1], -1.0)]]);
        assert!(matches!(err, Err(SpectralError::InvalidSystem(_))));
    }

    #[test]
    fn characteristic_polynomial_of_vdp() {
        let cp = characteristic_polynomial(&vdp().jacobian_at_origin());
        // λ² + λ + 1
        assert_eq!(cp, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn vdp_eigenvalues_from_trace_and_determinant() {
        // roots of λ² - tr·λ + det with tr = -1, det = 1
        let basis = diagonalize(&vdp().jacobian_at_origin()).unwrap();
        let r3 = 3f64.sqrt() / 2.0;
        let expected = [Complex64::new(-0.5, r3), Complex64::new(-0.5, -r3)];
        for (l, e) in basis.eigenvalues.iter().zip(expected) {
            assert!((l - e).norm() < 1e-14, "{l} vs {e}");
        }
        // conjugate columns
        for i in 0..2 {
            assert_eq!(basis.s[(i, 1)], basis.s[(i, 0)].conj());
        }
    }

    #[test]
    fn minus_identity_keeps_standard_basis() {
        let a = RMatrix::from_rows(&[vec![-1.0, 0.0], vec![0.0, -1.0]]);
        let basis = diagonalize(&a).unwrap();
        assert_eq!(basis.eigenvalues, vec![Complex64::new(-1.0, 0.0); 2]);
        assert!(basis.s.max_abs_diff(&CMatrix::identity(2)) < 1e-12);
    }

    #[test]
    fn unstable_is_rejected() {
        let a = RMatrix::from_rows(&[vec![1.0]]);
        assert!(matches!(diagonalize(&a), Err(SpectralError::NotHurwitz { .. })));
        let a = RMatrix::from_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]]);
        assert!(matches!(diagonalize(&a), Err(SpectralError::NotHurwitz { .. })));
    }

    #[test]
    fn jordan_block_is_rejected() {
        let a = RMatrix::from_rows(&[vec![-1.0, 1.0], vec![0.0, -1.0]]);
        assert!(matches!(
            diagonalize(&a),
            Err(SpectralError::NotDiagonalizable { .. })
        ));
    }

    #[test]
    fn too_large_is_rejected() {
        let a = RMatrix::identity(7).scale(-1.0);
        assert_eq!(diagonalize(&a), Err(SpectralError::TooLarge(7)));
    }

    #[test]
    fn radial_example_transform_is_identity() {
        let sys = PolySystem::from_real_terms(&[
            vec![(vec![1, 0], -1.0), (vec![1, 1], -1.0)],
            vec![(vec![0, 1], -1.0), (vec![1, 1], 1.0)],
        ])
        .unwrap();
        let spec = SpectralData::analyze(&sys).unwrap();
        assert_eq!(spec.g[0].coeff_of(&[1, 1]), Complex64::new(-1.0, 0.0));
        assert_eq!(spec.g[1].coeff_of(&[1, 1]), Complex64::new(1.0, 0.0));
        for (gi, fi) in spec.g.iter().zip(sys.components()) {
            assert!(gi.sub(fi).unwrap().max_coeff_modulus() < 1e-15);
        }
    }

    #[test]
    fn linear_system_transforms_to_diagonal() {
        let sys = PolySystem::from_real_terms(&[
            vec![(vec![1, 0], -2.0), (vec![0, 1], 1.0)],
            vec![(vec![1, 0], 1.0), (vec![0, 1], -3.0)],
        ])
        .unwrap();
        let spec = SpectralData::analyze(&sys).unwrap();
        for (i, gi) in spec.g.iter().enumerate() {
            assert_eq!(gi.len(), 1);
            assert_eq!(gi.coeff(&MultiIndex::unit(2, i)), spec.eigenvalues[i]);
        }
    }
}
