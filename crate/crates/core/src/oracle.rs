//! Trajectory integration as ground truth for basin membership.
//!
//! Everything certified elsewhere in the crate is checked against these
//! verdicts, so the integrators here deliberately share no code with the
//! series machinery beyond evaluating `f`.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::lyap::format_sci17;
use crate::series::CompiledPoly;
use crate::spectral::PolySystem;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("invalid integrator config: {0}")]
    InvalidConfig(String),
    #[error("boundary tracing needs a planar system, got dimension {0}")]
    NotPlanar(usize),
    #[error("no limit cycle detected: {0}")]
    NoCycle(String),
}

pub type Result<T> = std::result::Result<T, OracleError>;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Method {
    Rk4 { step: f64 },
    Rk45 { rtol: f64, atol: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorConfig {
    pub method: Method,
    pub t_max: f64,
    pub converge_radius: f64,
    pub escape_radius: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            method: Method::Rk45 {
                rtol: 1e-9,
                atol: 1e-12,
            },
            t_max: 200.0,
            converge_radius: 1e-6,
            escape_radius: 1e3,
        }
    }
}

impl IntegratorConfig {
    pub fn rk4(step: f64) -> Self {
        Self {
            method: Method::Rk4 { step },
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(OracleError::InvalidConfig(m.to_string()));
        if !(self.converge_radius > 0.0 && self.converge_radius < self.escape_radius) {
            return bad("need 0 < converge_radius < escape_radius");
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return bad("t_max must be positive and finite");
        }
        match self.method {
            Method::Rk4 { step } if !(step > 0.0) => bad("RK4 step must be positive"),
            Method::Rk45 { rtol, atol } if !(rtol > 0.0 && atol > 0.0) => {
                bad("tolerances must be positive")
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Converges,
    Escapes,
    Undecided,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Converges => "CONVERGES",
            Verdict::Escapes => "ESCAPES",
            Verdict::Undecided => "UNDECIDED",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BasinVerdict {
    pub verdict: Verdict,
    /// Time at which the run stopped.
    pub exit_time: f64,
    pub final_norm: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub verdict: BasinVerdict,
}

impl Trajectory {
    /// `t,x1,...,xn` rows.
    pub fn to_csv(&self) -> String {
        let n = self.states.first().map_or(0, Vec::len);
        let mut out = String::from("t");
        for i in 1..=n {
            out.push_str(&format!(",x{i}"));
        }
        out.push('\n');
        for (t, x) in self.times.iter().zip(&self.states) {
            out.push_str(&format_sci17(*t));
            for v in x {
                out.push(',');
                out.push_str(&format_sci17(*v));
            }
            out.push('\n');
        }
        out
    }
}

/// `f` compiled for fast real evaluation, optionally time-reversed.
#[derive(Clone, Debug)]
pub struct VectorField {
    components: Vec<CompiledPoly>,
    sign: f64,
}

impl VectorField {
    pub fn new(sys: &PolySystem) -> Self {
        Self {
            components: sys.components().iter().map(CompiledPoly::new).collect(),
            sign: 1.0,
        }
    }

    pub fn reversed(&self) -> Self {
        Self {
            components: self.components.clone(),
            sign: -self.sign,
        }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, c) in out.iter_mut().zip(&self.components) {
            *o = self.sign * c.eval(x);
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.eval_into(x, &mut out);
        out
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Classical RK4 step of size `h`.
pub fn rk4_step(field: &VectorField, x: &[f64], h: f64) -> Vec<f64> {
    let n = x.len();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut tmp = x.to_vec();
    field.eval_into(x, &mut k1);
    axpy(&mut tmp, 0.5 * h, &k1);
    field.eval_into(&tmp, &mut k2);
    tmp.copy_from_slice(x);
    axpy(&mut tmp, 0.5 * h, &k2);
    field.eval_into(&tmp, &mut k3);
    tmp.copy_from_slice(x);
    axpy(&mut tmp, h, &k3);
    field.eval_into(&tmp, &mut k4);
    (0..n)
        .map(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

// Dormand-Prince 5(4) tableau; the system is autonomous so the nodes are unused.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Adaptive Dormand-Prince stepper with PI step-size control.
struct Dopri<'a> {
    field: &'a VectorField,
    rtol: f64,
    atol: f64,
    k: Vec<Vec<f64>>,
    h: f64,
    err_prev: f64,
}

impl<'a> Dopri<'a> {
    fn new(field: &'a VectorField, rtol: f64, atol: f64, x: &[f64]) -> Self {
        let n = x.len();
        let mut k = vec![vec![0.0; n]; 7];
        field.eval_into(x, &mut k[0]);
        // initial step from the scale of x and f(x)
        let sc: Vec<f64> = x.iter().map(|v| atol + rtol * v.abs()).collect();
        let d0 = (x.iter().zip(&sc).map(|(v, s)| (v / s).powi(2)).sum::<f64>() / n as f64).sqrt();
        let d1 = (k[0].iter().zip(&sc).map(|(v, s)| (v / s).powi(2)).sum::<f64>() / n as f64).sqrt();
        let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        Self {
            field,
            rtol,
            atol,
            k,
            h: h.min(0.1),
            err_prev: 1e-4,
        }
    }

    /// Advances `x` by one accepted step and returns its size, or `None`
    /// when the step size underflows.
    fn step(&mut self, t: f64, x: &mut Vec<f64>, h_cap: f64) -> Option<f64> {
        let n = x.len();
        let mut tmp = vec![0.0; n];
        loop {
            let h = self.h.min(h_cap);
            if h < 1e-14 * t.abs().max(1.0) {
                return None;
            }
            for s in 1..7 {
                tmp.copy_from_slice(x);
                for (j, a) in A[s].iter().enumerate().take(s) {
                    if *a != 0.0 {
                        axpy(&mut tmp, h * a, &self.k[j]);
                    }
                }
                self.field.eval_into(&tmp, &mut self.k[s]);
            }
            // tmp holds the 5th-order solution (stage 7 is evaluated there)
            let mut err = 0.0;
            for i in 0..n {
                let mut e = 0.0;
                for s in 0..7 {
                    e += (B5[s] - B4[s]) * self.k[s][i];
                }
                let sc = self.atol + self.rtol * x[i].abs().max(tmp[i].abs());
                err += (h * e / sc).powi(2);
            }
            let err = (err / n as f64).sqrt();
            if err.is_finite() && err <= 1.0 {
                x.copy_from_slice(&tmp);
                self.k.swap(0, 6);
                let err = err.max(1e-10);
                let fac = 0.9 * err.powf(-0.7 / 5.0) * self.err_prev.powf(0.4 / 5.0);
                self.err_prev = err;
                if h == self.h {
                    self.h = h * fac.clamp(0.2, 5.0);
                }
                return Some(h);
            }
            let fac = if err.is_finite() {
                (0.9 * err.powf(-0.2)).max(0.1)
            } else {
                0.1
            };
            self.h = h * fac;
        }
    }
}

/// Drives an integration, calling `observe(t, x)` after every accepted step
/// (and once at t = 0). Stops at convergence, escape, `t_max`, or when
/// `observe` returns false.
fn drive(
    field: &VectorField,
    x0: &[f64],
    cfg: &IntegratorConfig,
    mut observe: impl FnMut(f64, &[f64]) -> bool,
) -> BasinVerdict {
    let mut x = x0.to_vec();
    let mut t = 0.0;
    let finish = |verdict, t, x: &[f64]| BasinVerdict {
        verdict,
        exit_time: t,
        final_norm: norm(x),
    };
    let check = |x: &[f64]| {
        let r = norm(x);
        if !r.is_finite() || r > cfg.escape_radius {
            Some(Verdict::Escapes)
        } else if r < cfg.converge_radius {
            Some(Verdict::Converges)
        } else {
            None
        }
    };
    if !observe(t, &x) {
        return finish(Verdict::Undecided, t, &x);
    }
    if let Some(v) = check(&x) {
        return finish(v, t, &x);
    }
    match cfg.method {
        Method::Rk4 { step } => {
            let steps = (cfg.t_max / step).ceil() as u64;
            for s in 1..=steps {
                let h = step.min(cfg.t_max - t);
                x = rk4_step(field, &x, h);
                t = if s == steps { cfg.t_max } else { s as f64 * step };
                if !observe(t, &x) {
                    return finish(Verdict::Undecided, t, &x);
                }
                if let Some(v) = check(&x) {
                    return finish(v, t, &x);
                }
            }
        }
        Method::Rk45 { rtol, atol } => {
            let mut stepper = Dopri::new(field, rtol, atol, &x);
            while t < cfg.t_max {
                match stepper.step(t, &mut x, cfg.t_max - t) {
                    Some(h) => t += h,
                    None => return finish(Verdict::Undecided, t, &x),
                }
                if !observe(t, &x) {
                    return finish(Verdict::Undecided, t, &x);
                }
                if let Some(v) = check(&x) {
                    return finish(v, t, &x);
                }
            }
        }
    }
    finish(Verdict::Undecided, t, &x)
}

pub fn integrate(sys: &PolySystem, x0: &[f64], cfg: &IntegratorConfig) -> Result<Trajectory> {
    integrate_field(&VectorField::new(sys), x0, cfg)
}

pub fn integrate_field(
    field: &VectorField,
    x0: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    let mut times = Vec::new();
    let mut states = Vec::new();
    let verdict = drive(field, x0, cfg, |t, x| {
        times.push(t);
        states.push(x.to_vec());
        true
    });
    Ok(Trajectory {
        times,
        states,
        verdict,
    })
}

pub fn classify(sys: &PolySystem, x0: &[f64], cfg: &IntegratorConfig) -> Result<BasinVerdict> {
    cfg.validate()?;
    Ok(drive(&VectorField::new(sys), x0, cfg, |_, _| true))
}

/// Parallel [`classify`] over a batch of initial states; order is preserved.
pub fn classify_batch(
    sys: &PolySystem,
    points: &[Vec<f64>],
    cfg: &IntegratorConfig,
) -> Result<Vec<BasinVerdict>> {
    cfg.validate()?;
    let field = VectorField::new(sys);
    Ok(points
        .par_iter()
        .map(|x| drive(&field, x, cfg, |_, _| true))
        .collect())
}

/// Seed and acceptance settings for [`trace_boundary_2d`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceConfig {
    pub seed: [f64; 2],
    pub tolerance: f64,
    pub max_loops: usize,
}

impl Default for TraceConfig {
    fn default() -> Self {
        Self {
            seed: [0.5, 0.0],
            tolerance: 1e-6,
            max_loops: 200,
        }
    }
}

/// Lands exactly on `x2 = 0` from `x` by integrating with `x2` as the
/// independent variable (Hénon's trick).
fn henon_to_section(field: &VectorField, x: &[f64]) -> Vec<f64> {
    // state (x1, t) as a function of x2; dx1/dx2 = f1/f2
    let g = |y: &[f64]| {
        let f = field.eval(&[y[0], y[1]]);
        vec![f[0] / f[1], 1.0]
    };
    let mut y = vec![x[0], x[1]];
    let substeps = 8;
    let h = -x[1] / substeps as f64;
    for _ in 0..substeps {
        let k1 = g(&y);
        let k2 = g(&[y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h]);
        let k3 = g(&[y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h]);
        let k4 = g(&[y[0] + h * k3[0], y[1] + h]);
        y[0] += h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
        y[1] += h;
    }
    vec![y[0], 0.0]
}

/// Traces the basin boundary of a planar system whose boundary is an
/// unstable limit cycle: the reversed flow is integrated from a point inside
/// the basin until successive returns to the half-line `{x2 = 0, x1 > 0}`
/// agree, and one full loop is recorded.
pub fn trace_boundary_2d(
    sys: &PolySystem,
    cfg: &IntegratorConfig,
    trace: &TraceConfig,
) -> Result<Vec<[f64; 2]>> {
    if sys.dim() != 2 {
        return Err(OracleError::NotPlanar(sys.dim()));
    }
    cfg.validate()?;
    let field = VectorField::new(sys).reversed();
    let (rtol, atol) = match cfg.method {
        Method::Rk45 { rtol, atol } => (rtol, atol),
        Method::Rk4 { .. } => (1e-10, 1e-12),
    };

    let mut x = trace.seed.to_vec();
    let mut t = 0.0;
    let mut stepper = Dopri::new(&field, rtol, atol, &x);
    let mut crossings: Vec<f64> = Vec::new();
    let mut direction = 0.0;
    let mut loop_pts: Option<Vec<[f64; 2]>> = None;

    while t < cfg.t_max {
        let prev = x.clone();
        match stepper.step(t, &mut x, cfg.t_max - t) {
            Some(h) => t += h,
            None => return Err(OracleError::NoCycle("step size underflow".into())),
        }
        let r = norm(&x);
        if !r.is_finite() || r > cfg.escape_radius {
            return Err(OracleError::NoCycle(
                "reversed trajectory escapes to infinity".into(),
            ));
        }
        if r < cfg.converge_radius {
            return Err(OracleError::NoCycle(
                "reversed trajectory collapses onto the equilibrium".into(),
            ));
        }
        if let Some(pts) = loop_pts.as_mut() {
            pts.push([x[0], x[1]]);
        }
        let crossed = prev[1] != 0.0 && prev[1].signum() != x[1].signum() && x[1] != prev[1];
        if !(crossed && prev[0] > 0.0 && x[0] > 0.0) {
            continue;
        }
        let dir = (x[1] - prev[1]).signum();
        if direction == 0.0 {
            direction = dir;
        }
        if dir != direction {
            continue;
        }
        let hit = henon_to_section(&field, &prev);
        if let Some(mut pts) = loop_pts.take() {
            pts.pop();
            pts.push([hit[0], 0.0]);
            return Ok(pts);
        }
        if let Some(&last) = crossings.last() {
            if (hit[0] - last).abs() < trace.tolerance {
                loop_pts = Some(vec![[hit[0], 0.0], [x[0], x[1]]]);
            }
        }
        crossings.push(hit[0]);
        if crossings.len() > trace.max_loops {
            return Err(OracleError::NoCycle(format!(
                "section returns did not settle after {} loops",
                trace.max_loops
            )));
        }
    }
    Err(OracleError::NoCycle(format!(
        "no settled cycle before t = {}",
        cfg.t_max
    )))
}

/// `x1,x2` rows.
pub fn boundary_csv(poly: &[[f64; 2]]) -> String {
    let mut out = String::from("x1,x2\n");
    for p in poly {
        out.push_str(&format!("{},{}\n", format_sci17(p[0]), format_sci17(p[1])));
    }
    out
}

/// Even-odd point-in-polygon test for a closed polyline.
pub fn point_in_polygon(poly: &[[f64; 2]], x: &[f64]) -> bool {
    let mut inside = false;
    let n = poly.len();
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a[1] > x[1]) != (b[1] > x[1]) {
            let cross = (b[0] - a[0]) * (x[1] - a[1]) / (b[1] - a[1]) + a[0];
            if x[0] < cross {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems;

    #[test]
    fn exponential_decay_is_accurate() {
        let sys = systems::linear_1d(1.0);
        let cfg = IntegratorConfig {
            t_max: 10.0,
            converge_radius: 1e-12,
            ..IntegratorConfig::default()
        };
        let tr = integrate(&sys, &[1.0], &cfg).unwrap();
        let worst = tr
            .times
            .iter()
            .zip(&tr.states)
            .map(|(t, x)| (x[0] - (-t).exp()).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-8, "{worst:e}");
        assert_eq!(tr.verdict.verdict, Verdict::Undecided);
    }

    #[test]
    fn rk4_matches_exponential() {
        let sys = systems::linear_1d(1.0);
        let cfg = IntegratorConfig {
            t_max: 2.0,
            ..IntegratorConfig::rk4(1e-3)
        };
        let tr = integrate(&sys, &[1.0], &cfg).unwrap();
        let (t, x) = (tr.times.last().unwrap(), tr.states.last().unwrap());
        assert!((t - 2.0).abs() < 1e-12);
        assert!((x[0] - (-2f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        let mut cfg = IntegratorConfig::default();
        cfg.converge_radius = 2e3;
        assert!(cfg.validate().is_err());
        assert!(IntegratorConfig::rk4(0.0).validate().is_err());
    }

    #[test]
    fn cubic_1d_verdicts() {
        let sys = systems::cubic_1d();
        let cfg = IntegratorConfig::default();
        let v = |x: f64| classify(&sys, &[x], &cfg).unwrap().verdict;
        assert_eq!(v(-1.9), Verdict::Converges);
        assert_eq!(v(-2.1), Verdict::Escapes);
        assert_eq!(v(0.9), Verdict::Converges);
    }

    #[test]
    fn polygon_membership() {
        let sq = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        assert!(point_in_polygon(&sq, &[0.5, 0.5]));
        assert!(!point_in_polygon(&sq, &[1.5, 0.5]));
    }
}
