//! One-dimensional domain-of-convergence estimates and continuation of the
//! Lyapunov series by recentering.

use serde::Serialize;
use thiserror::Error;

use crate::lyap::LyapunovPoly;
use crate::spectral::PolySystem;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConvergenceError {
    #[error("series continuation is one-dimensional, got dimension {0}")]
    NotOneDimensional(usize),
    #[error("center {center} lies outside the current interval ({lo}, {hi})")]
    CenterOutsideInterval { center: f64, lo: f64, hi: f64 },
    #[error("center {0} is an equilibrium of the system")]
    EquilibriumCenter(f64),
    #[error("series has no coefficients beyond the constant term")]
    Empty,
    #[error(transparent)]
    Lyap(#[from] crate::lyap::LyapError),
}

pub type Result<T> = std::result::Result<T, ConvergenceError>;

/// Cauchy-Hadamard radius estimate from a finite coefficient sequence.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RadiusEstimate {
    /// Reciprocal of the largest `|A_n|^{1/n}` over the last third.
    pub radius: f64,
    /// From a least-squares fit `ln|A_n| = a - n ln R - b ln n` on the same tail.
    pub secondary: Option<f64>,
    /// Fewer than ten nonzero tail coefficients.
    pub indeterminate: bool,
}

impl RadiusEstimate {
    /// The smaller of the two estimates.
    pub fn conservative(&self) -> f64 {
        match self.secondary {
            Some(s) if s.is_finite() && s > 0.0 => self.radius.min(s),
            _ => self.radius,
        }
    }
}

/// Root-test radius for `Σ coeffs[n] yⁿ` (index = power).
pub fn radius_root_test(coeffs: &[f64]) -> RadiusEstimate {
    let p = coeffs.len().saturating_sub(1);
    let first = p - p.div_ceil(3) + 1;
    let tail: Vec<(f64, f64)> = (first.max(1)..=p)
        .filter(|&n| coeffs[n] != 0.0)
        .map(|n| (n as f64, coeffs[n].abs()))
        .collect();
    if tail.is_empty() {
        return RadiusEstimate {
            radius: f64::INFINITY,
            secondary: None,
            indeterminate: false,
        };
    }
    let limsup = tail
        .iter()
        .map(|&(n, a)| a.powf(1.0 / n))
        .fold(0.0, f64::max);
    RadiusEstimate {
        radius: 1.0 / limsup,
        secondary: log_linear_radius(&tail),
        indeterminate: tail.len() < 10,
    }
}

fn log_linear_radius(tail: &[(f64, f64)]) -> Option<f64> {
    if tail.len() < 3 {
        return None;
    }
    // normal equations for [1, n, ln n]
    let mut m = [[0.0; 3]; 3];
    let mut rhs = [0.0; 3];
    for &(n, a) in tail {
        let row = [1.0, n, n.ln()];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += row[i] * row[j];
            }
            rhs[i] += row[i] * a.ln();
        }
    }
    let rows: Vec<Vec<f64>> = m.iter().map(|r| r.to_vec()).collect();
    let m = crate::linalg::RMatrix::from_rows(&rows);
    let sol = m.solve(&rhs)?;
    let r = (-sol[1]).exp();
    r.is_finite().then_some(r)
}

/// A truncated expansion of `V` about `center`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesEstimate {
    pub center: f64,
    /// `coeffs[n]` multiplies `(x - center)ⁿ`.
    pub coeffs: Vec<f64>,
    pub radius: RadiusEstimate,
    pub interval: (f64, f64),
}

impl SeriesEstimate {
    pub fn new(center: f64, coeffs: Vec<f64>) -> Self {
        let radius = radius_root_test(&coeffs);
        let r = radius.conservative();
        Self {
            center,
            coeffs,
            radius,
            interval: (center - r, center + r),
        }
    }

    /// The origin expansion `V_p`.
    pub fn from_lyapunov(l: &LyapunovPoly) -> Result<Self> {
        if l.dim() != 1 {
            return Err(ConvergenceError::NotOneDimensional(l.dim()));
        }
        let coeffs = (0..=l.degree).map(|n| l.v.coeff_of(&[n]).re).collect();
        Ok(Self::new(0.0, coeffs))
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Partial sum through degree `m` at `x`.
    pub fn partial_sum(&self, x: f64, m: usize) -> f64 {
        let y = x - self.center;
        self.coeffs[..=m.min(self.degree())]
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * y + c)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.partial_sum(x, self.degree())
    }

    pub fn contains(&self, x: f64) -> bool {
        x > self.interval.0 && x < self.interval.1
    }
}

/// Real coefficients of the single component of a 1D system, index = power.
fn field_coeffs(sys: &PolySystem) -> Result<Vec<f64>> {
    if sys.dim() != 1 {
        return Err(ConvergenceError::NotOneDimensional(sys.dim()));
    }
    let f = &sys.components()[0];
    Ok((0..=f.degree()).map(|k| f.coeff_of(&[k]).re).collect())
}

/// Re-expands `V` about `center` from `V' = -x / h(x)`, `h = f/x`, keeping
/// degree `prev.degree()`. The constant term is `prev` evaluated at `center`.
pub fn recenter_series(sys: &PolySystem, prev: &SeriesEstimate, center: f64) -> Result<SeriesEstimate> {
    let f = field_coeffs(sys)?;
    if !prev.contains(center) {
        return Err(ConvergenceError::CenterOutsideInterval {
            center,
            lo: prev.interval.0,
            hi: prev.interval.1,
        });
    }
    if center == prev.center {
        return Ok(prev.clone());
    }
    let p = prev.degree();
    if p < 1 {
        return Err(ConvergenceError::Empty);
    }
    // h(center + y) by Taylor shift of the coefficients of f/x
    let h: Vec<f64> = f[1..].to_vec();
    let mut hs = vec![0.0; h.len()];
    for (k, &hk) in h.iter().enumerate() {
        let mut binom = 1.0;
        for i in 0..=k {
            hs[i] += hk * binom * center.powi((k - i) as i32);
            binom = binom * (k - i) as f64 / (i + 1) as f64;
        }
    }
    if hs[0].abs() < 1e-14 {
        return Err(ConvergenceError::EquilibriumCenter(center));
    }
    // q = -(center + y) / h(center + y) through degree p - 1
    let mut q = vec![0.0; p];
    for k in 0..p {
        let mut num = match k {
            0 => -center,
            1 => -1.0,
            _ => 0.0,
        };
        for i in 1..=k.min(hs.len() - 1) {
            num -= hs[i] * q[k - i];
        }
        q[k] = num / hs[0];
    }
    let mut coeffs = vec![prev.eval(center)];
    coeffs.extend(q.iter().enumerate().map(|(k, qk)| qk / (k + 1) as f64));
    Ok(SeriesEstimate::new(center, coeffs))
}

/// Binomial re-expansion of the truncated polynomial itself. Only the terms
/// already present contribute, so high-order coefficients are poor far from
/// the original center.
pub fn recenter_truncated(prev: &SeriesEstimate, center: f64) -> SeriesEstimate {
    let poly = crate::series::Poly::from_real_terms(
        1,
        prev.coeffs
            .iter()
            .enumerate()
            .map(|(n, &c)| (vec![n as u32], c)),
    )
    .expect("one-dimensional terms");
    let shifted = poly
        .recenter_real(&[center - prev.center])
        .expect("matching dimension");
    let coeffs = (0..=prev.degree() as u32)
        .map(|n| shifted.coeff_of(&[n]).re)
        .collect();
    SeriesEstimate::new(center, coeffs)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EndpointVerdict {
    Bounded,
    UnboundedLikely,
    /// Infinite radius: the endpoint is the sweep window edge.
    NotApplicable,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ContinuationStatus {
    Complete,
    Partial,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContinueConfig {
    pub degree: u32,
    pub max_steps: usize,
    /// Clip for infinite radii.
    pub window: (f64, f64),
    pub divergence_threshold: f64,
    /// Allowed relative growth of partial sums from degree p/2 to p.
    pub growth_tolerance: f64,
    pub mesh_points: usize,
}

impl Default for ContinueConfig {
    fn default() -> Self {
        Self {
            degree: 200,
            max_steps: 4,
            window: (-10.0, 10.0),
            divergence_threshold: 1e6,
            growth_tolerance: 0.1,
            mesh_points: 12,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContinuationStep {
    pub center: f64,
    pub radius: f64,
    pub radius_secondary: Option<f64>,
    pub interval: (f64, f64),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContinuationReport {
    pub steps: Vec<ContinuationStep>,
    pub union: (f64, f64),
    pub left: EndpointVerdict,
    pub right: EndpointVerdict,
    pub status: ContinuationStatus,
}

/// Whether the truncated series stays bounded while approaching `endpoint`
/// on the mesh `center + (endpoint - center)(1 - 2^{-k})`.
pub fn endpoint_bounded(est: &SeriesEstimate, endpoint: f64, cfg: &ContinueConfig) -> bool {
    let p = est.degree();
    let (half, three_q) = (p / 2, 3 * p / 4);
    (1..=cfg.mesh_points).all(|k| {
        let x = est.center + (endpoint - est.center) * (1.0 - 0.5f64.powi(k as i32));
        let s = [
            est.partial_sum(x, half),
            est.partial_sum(x, three_q),
            est.partial_sum(x, p),
        ];
        let base = s[0].abs().max(1e-300);
        s.iter().all(|v| v.is_finite() && v.abs() < cfg.divergence_threshold)
            && s[1].abs() <= (1.0 + cfg.growth_tolerance) * base
            && s[2].abs() <= (1.0 + cfg.growth_tolerance) * base
    })
}

fn step_of(est: &SeriesEstimate) -> ContinuationStep {
    ContinuationStep {
        center: est.center,
        radius: est.radius.radius,
        radius_secondary: est.radius.secondary,
        interval: est.interval,
    }
}

/// Extends the convergence interval of the origin series by recentering
/// toward every endpoint where the series looks bounded.
pub fn continue_1d(sys: &PolySystem, cfg: &ContinueConfig) -> Result<ContinuationReport> {
    if sys.dim() != 1 {
        return Err(ConvergenceError::NotOneDimensional(sys.dim()));
    }
    let l = LyapunovPoly::compute(sys, cfg.degree)?;
    let origin = SeriesEstimate::from_lyapunov(&l)?;
    let mut steps = vec![step_of(&origin)];
    if origin.radius.radius.is_infinite() {
        return Ok(ContinuationReport {
            steps,
            union: cfg.window,
            left: EndpointVerdict::NotApplicable,
            right: EndpointVerdict::NotApplicable,
            status: ContinuationStatus::Complete,
        });
    }

    let mut union = origin.interval;
    // frontier[0] owns the left end of the union, frontier[1] the right
    let mut frontier = [origin.clone(), origin];
    let mut verdict: [Option<EndpointVerdict>; 2] = [None, None];
    let mut recenters = 0;
    while verdict.iter().any(Option::is_none) && recenters < cfg.max_steps {
        let mut progressed = false;
        for side in 0..2 {
            if verdict[side].is_some() || recenters >= cfg.max_steps {
                continue;
            }
            let est = &frontier[side];
            let end = if side == 0 { est.interval.0 } else { est.interval.1 };
            if !endpoint_bounded(est, end, cfg) {
                verdict[side] = Some(EndpointVerdict::UnboundedLikely);
                continue;
            }
            let center = est.center + 0.9 * (end - est.center);
            let next = recenter_series(sys, est, center)?;
            recenters += 1;
            steps.push(step_of(&next));
            let extends = if side == 0 {
                next.interval.0 < union.0
            } else {
                next.interval.1 > union.1
            };
            if next.interval.0 < union.0 {
                union.0 = next.interval.0;
                frontier[0] = next.clone();
            }
            if next.interval.1 > union.1 {
                union.1 = next.interval.1;
                frontier[1] = next.clone();
            }
            if extends {
                progressed = true;
            } else {
                verdict[side] = Some(EndpointVerdict::Bounded);
            }
        }
        if !progressed && verdict.iter().any(Option::is_none) && recenters >= cfg.max_steps {
            break;
        }
    }
    let done = verdict
        .iter()
        .all(|v| *v == Some(EndpointVerdict::UnboundedLikely));
    Ok(ContinuationReport {
        steps,
        union,
        left: verdict[0].unwrap_or(EndpointVerdict::Bounded),
        right: verdict[1].unwrap_or(EndpointVerdict::Bounded),
        status: if done {
            ContinuationStatus::Complete
        } else {
            ContinuationStatus::Partial
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_series_radius() {
        let c: Vec<f64> = (0..=200).map(|n| 0.5f64.powi(n)).collect();
        let r = radius_root_test(&c);
        assert!((r.radius - 2.0).abs() < 1e-9);
        assert!((r.secondary.unwrap() - 2.0).abs() < 1e-6);
        assert!(!r.indeterminate);
    }

    #[test]
    fn polynomial_has_infinite_radius() {
        let r = radius_root_test(&[0.0, 0.0, 0.5, 0.0, 0.0, 0.0]);
        assert!(r.radius.is_infinite());
    }

    #[test]
    fn zero_shift_is_identity() {
        let est = SeriesEstimate::new(0.0, (0..40).map(|n| 1.0 / (n as f64 + 1.0)).collect());
        let sys = crate::systems::cubic_1d();
        assert_eq!(recenter_series(&sys, &est, 0.0).unwrap(), est);
        assert_eq!(recenter_truncated(&est, 0.0).coeffs, est.coeffs);
    }

    #[test]
    fn center_must_be_inside() {
        let sys = crate::systems::cubic_1d();
        let l = LyapunovPoly::compute(&sys, 40).unwrap();
        let est = SeriesEstimate::from_lyapunov(&l).unwrap();
        assert!(matches!(
            recenter_series(&sys, &est, -1.5),
            Err(ConvergenceError::CenterOutsideInterval { .. })
        ));
    }
}
