//! JSON system definitions.

use std::path::Path;

use basinscope::lyap::degree_cap;
use basinscope::oracle::{IntegratorConfig, Method};
use basinscope::region::Window;
use basinscope::spectral::PolySystem;
use serde::Deserialize;

use crate::error::CliError;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub coeff: f64,
    pub exps: Vec<u32>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleBlock {
    /// `"rk45"` (default) or `"rk4"`.
    pub method: Option<String>,
    pub step: Option<f64>,
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub t_max: Option<f64>,
    pub converge_radius: Option<f64>,
    pub escape_radius: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpecFile {
    pub dim: usize,
    pub equations: Vec<Vec<Term>>,
    /// Flat `[x1min, x1max, x2min, x2max, ...]`.
    pub window: Option<Vec<f64>>,
    pub resolution: Option<usize>,
    pub degree: Option<u32>,
    pub oracle: Option<OracleBlock>,
}

impl SystemSpecFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::parse(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let spec: Self = serde_json::from_str(text)
            .map_err(|e| CliError::parse(format!("invalid system file: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.dim == 0 {
            return Err(CliError::parse("dim must be at least 1"));
        }
        if self.equations.len() != self.dim {
            return Err(CliError::parse(format!(
                "expected {} equations, found {}",
                self.dim,
                self.equations.len()
            )));
        }
        for (i, eq) in self.equations.iter().enumerate() {
            for t in eq {
                if t.exps.len() != self.dim {
                    return Err(CliError::parse(format!(
                        "equation {}: exponent vector {:?} has length {}, expected {}",
                        i + 1,
                        t.exps,
                        t.exps.len(),
                        self.dim
                    )));
                }
                if t.exps.iter().all(|&e| e == 0) {
                    return Err(CliError::parse(format!(
                        "equation {}: constant term violates f(0) = 0",
                        i + 1
                    )));
                }
                if !t.coeff.is_finite() {
                    return Err(CliError::parse(format!("equation {}: non-finite coefficient", i + 1)));
                }
            }
        }
        if let Some(p) = self.degree {
            check_degree(p, self.dim)?;
        }
        if let Some(w) = &self.window {
            parse_window_values(w, self.dim)?;
        }
        Ok(())
    }

    pub fn system(&self) -> Result<PolySystem, CliError> {
        let eqs: Vec<Vec<(Vec<u32>, f64)>> = self
            .equations
            .iter()
            .map(|eq| eq.iter().map(|t| (t.exps.clone(), t.coeff)).collect())
            .collect();
        PolySystem::from_real_terms(&eqs).map_err(|e| CliError::parse(e.to_string()))
    }

    pub fn integrator(&self) -> Result<IntegratorConfig, CliError> {
        let mut cfg = IntegratorConfig::default();
        let Some(o) = &self.oracle else {
            return Ok(cfg);
        };
        let (rtol, atol) = match cfg.method {
            Method::Rk45 { rtol, atol } => (rtol, atol),
            Method::Rk4 { .. } => unreachable!("default is adaptive"),
        };
        cfg.method = match o.method.as_deref().unwrap_or("rk45") {
            "rk45" => Method::Rk45 {
                rtol: o.rtol.unwrap_or(rtol),
                atol: o.atol.unwrap_or(atol),
            },
            "rk4" => Method::Rk4 {
                step: o.step.unwrap_or(1e-2),
            },
            other => return Err(CliError::parse(format!("unknown oracle method {other:?}"))),
        };
        if let Some(t) = o.t_max {
            cfg.t_max = t;
        }
        if let Some(r) = o.converge_radius {
            cfg.converge_radius = r;
        }
        if let Some(r) = o.escape_radius {
            cfg.escape_radius = r;
        }
        cfg.validate().map_err(|e| CliError::parse(e.to_string()))?;
        Ok(cfg)
    }
}

pub fn check_degree(p: u32, dim: usize) -> Result<(), CliError> {
    let cap = degree_cap(dim);
    if p < 2 || p > cap {
        return Err(CliError::parse(format!("degree {p} outside [2, {cap}]")));
    }
    Ok(())
}

/// Parses `x1min,x1max,x2min,x2max,...`.
pub fn parse_window_flag(text: &str, dim: usize) -> Result<Vec<f64>, CliError> {
    let vals = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::parse(format!("bad --window {text:?}: {e}")))?;
    parse_window_values(&vals, dim)?;
    Ok(vals)
}

fn parse_window_values(vals: &[f64], dim: usize) -> Result<(), CliError> {
    if vals.len() != 2 * dim {
        return Err(CliError::parse(format!(
            "window needs {} numbers (min,max per axis), got {}",
            2 * dim,
            vals.len()
        )));
    }
    Ok(())
}

pub fn build_window(bounds: &[f64], resolution: usize) -> Result<Window, CliError> {
    let lower = bounds.iter().step_by(2).copied().collect();
    let upper = bounds.iter().skip(1).step_by(2).copied().collect();
    Window::new(lower, upper, resolution).map_err(|e| CliError::parse(e.to_string()))
}
