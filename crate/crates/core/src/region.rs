//! Grid estimates of the Lyapunov region `G_p` and the certified sublevel set
//! `N_p^c`.
//!
//! Every decision is taken at cell centers in double precision: this is an
//! estimator, not an interval-arithmetic verifier. `G_p` is the 2n-connected
//! component of cells where `V_p > 0` and `⟨∇V_p, f⟩ < 0`, grown from the cell
//! that contains the origin. `N_p^c` is the origin component of
//! `{V_p < c}`; the level `c` is feasible when that component stays inside
//! `G_p` and away from the window edge (the compactness proxy).

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::lyap::{format_sci17, LyapunovPoly};
use crate::series::{CompiledPoly, Poly};
use crate::spectral::PolySystem;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegionError {
    #[error("invalid window: {0}")]
    InvalidWindow(String),
    #[error("no feasible level above the smallest positive grid value {min_positive:e}; refine the window or resolution")]
    NoFeasibleLevel { min_positive: f64 },
    #[error("level {c} outside (0, {c_star}]")]
    LevelOutOfRange { c: f64, c_star: f64 },
    #[error("sublevel set has not been computed")]
    NotCertified,
    #[error("zero direction")]
    ZeroDirection,
}

pub type Result<T> = std::result::Result<T, RegionError>;

/// Axis-aligned box `[lower, upper]` split into `resolution` cells per axis.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Window {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub resolution: usize,
}

impl Window {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, resolution: usize) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(RegionError::InvalidWindow(
                "bounds must be non-empty and of equal length".into(),
            ));
        }
        if lower.len() > 3 {
            return Err(RegionError::InvalidWindow(format!(
                "grids are limited to dimension 3, got {}",
                lower.len()
            )));
        }
        if resolution < 16 {
            return Err(RegionError::InvalidWindow(format!(
                "resolution {resolution} below 16"
            )));
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo < hi) {
                return Err(RegionError::InvalidWindow(format!(
                    "axis {} has min {lo} >= max {hi}",
                    i + 1
                )));
            }
            if !(*lo < 0.0 && 0.0 < *hi) {
                return Err(RegionError::InvalidWindow(format!(
                    "origin not strictly inside axis {} range [{lo}, {hi}]",
                    i + 1
                )));
            }
        }
        Ok(Self {
            lower,
            upper,
            resolution,
        })
    }

    /// `[-half, half]^dim`.
    pub fn cube(dim: usize, half: f64, resolution: usize) -> Result<Self> {
        Self::new(vec![-half; dim], vec![half; dim], resolution)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn cell_count(&self) -> usize {
        self.resolution.pow(self.dim() as u32)
    }

    pub fn cell_width(&self, axis: usize) -> f64 {
        (self.upper[axis] - self.lower[axis]) / self.resolution as f64
    }

    /// Per-axis cell coordinates of a flat index; axis 0 varies fastest.
    pub fn coords(&self, mut index: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.dim());
        for _ in 0..self.dim() {
            out.push(index % self.resolution);
            index /= self.resolution;
        }
        out
    }

    pub fn flat_index(&self, coords: &[usize]) -> usize {
        coords
            .iter()
            .rev()
            .fold(0, |acc, &c| acc * self.resolution + c)
    }

    pub fn center(&self, index: usize) -> Vec<f64> {
        self.coords(index)
            .iter()
            .enumerate()
            .map(|(a, &c)| self.lower[a] + (c as f64 + 0.5) * self.cell_width(a))
            .collect()
    }

    /// Cell containing `x`, or `None` outside the window.
    pub fn cell_of(&self, x: &[f64]) -> Option<usize> {
        let mut coords = Vec::with_capacity(self.dim());
        for (a, &v) in x.iter().enumerate() {
            let t = ((v - self.lower[a]) / self.cell_width(a)).floor();
            if !(t >= 0.0 && t < self.resolution as f64) {
                return None;
            }
            coords.push(t as usize);
        }
        Some(self.flat_index(&coords))
    }

    pub fn origin_cell(&self) -> usize {
        self.cell_of(&vec![0.0; self.dim()])
            .expect("origin strictly inside window")
    }

    pub fn on_edge(&self, index: usize) -> bool {
        self.coords(index)
            .iter()
            .any(|&c| c == 0 || c + 1 == self.resolution)
    }

    /// Face neighbors (2n-neighborhood).
    pub fn neighbors(&self, index: usize) -> impl Iterator<Item = usize> + '_ {
        let res = self.resolution;
        let coords = self.coords(index);
        (0..self.dim()).flat_map(move |a| {
            let stride = res.pow(a as u32);
            let c = coords[a];
            let down = (c > 0).then(|| index - stride);
            let up = (c + 1 < res).then(|| index + stride);
            down.into_iter().chain(up)
        })
    }
}

/// Outcome of the pointwise Lyapunov test.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LyapStatus {
    Ok,
    FailPositivity,
    FailDecrease,
}

/// Per-cell tag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CellStatus {
    #[serde(rename = "LYAP_OK")]
    LyapOk,
    #[serde(rename = "LYAP_FAIL")]
    LyapFail,
    #[serde(rename = "ORIGIN")]
    Origin,
}

impl CellStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            CellStatus::LyapOk => "LYAP_OK",
            CellStatus::LyapFail => "LYAP_FAIL",
            CellStatus::Origin => "ORIGIN",
        }
    }
}

/// `V_p` and its orbital derivative `⟨∇V_p, f⟩`, compiled for fast evaluation.
#[derive(Clone, Debug)]
pub struct LyapEvaluator {
    v: CompiledPoly,
    vdot: CompiledPoly,
}

impl LyapEvaluator {
    pub fn new(sys: &PolySystem, l: &LyapunovPoly) -> Self {
        Self {
            v: CompiledPoly::new(&l.v),
            vdot: CompiledPoly::new(&orbital_derivative(sys, &l.v)),
        }
    }

    pub fn dim(&self) -> usize {
        self.v.dim()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.v.eval(x)
    }

    pub fn derivative(&self, x: &[f64]) -> f64 {
        self.vdot.eval(x)
    }

    /// `Ok` iff `V_p(x) > 0` and `⟨∇V_p(x), f(x)⟩ < 0`.
    pub fn status(&self, x: &[f64]) -> LyapStatus {
        classify_values(self.value(x), self.derivative(x))
    }
}

fn classify_values(v: f64, vdot: f64) -> LyapStatus {
    if !(v > 0.0) {
        LyapStatus::FailPositivity
    } else if !(vdot < 0.0) {
        LyapStatus::FailDecrease
    } else {
        LyapStatus::Ok
    }
}

/// `⟨∇V, f⟩` as an untruncated polynomial.
pub fn orbital_derivative(sys: &PolySystem, v: &Poly) -> Poly {
    let mut out = Poly::zero(sys.dim());
    for (g, f) in v.gradient().iter().zip(sys.components()) {
        out = out
            .add(&g.multiply(f, u32::MAX).expect("same dimension"))
            .expect("same dimension");
    }
    out.real_part()
}

/// Pointwise Lyapunov test at `x ≠ 0`.
pub fn lyap_status(sys: &PolySystem, l: &LyapunovPoly, x: &[f64]) -> LyapStatus {
    LyapEvaluator::new(sys, l).status(x)
}

/// Cell-level picture of `G_p` and `N_p^c`.
#[derive(Clone, Debug)]
pub struct RegionGrid {
    pub window: Window,
    pub status: Vec<CellStatus>,
    pub v: Vec<f64>,
    pub vdot: Vec<f64>,
    pub in_gp: Vec<bool>,
    pub in_npc: Vec<bool>,
    /// Certified level `c_p`; `None` until [`compute_cp`] has run.
    pub c_star: Option<f64>,
    /// Certified ball radius, if estimated.
    pub r_p: Option<f64>,
    pub origin_cell: usize,
    /// Set when `G_p` reaches the window edge; the window is probably too small.
    pub gp_touches_edge: bool,
}

/// Evaluates every cell and flood-fills `G_p` from the origin cell.
pub fn estimate_gp(sys: &PolySystem, l: &LyapunovPoly, window: &Window) -> RegionGrid {
    let eval = LyapEvaluator::new(sys, l);
    estimate_gp_with(&eval, window)
}

pub fn estimate_gp_with(eval: &LyapEvaluator, window: &Window) -> RegionGrid {
    assert_eq!(eval.dim(), window.dim(), "window dimension mismatch");
    let origin_cell = window.origin_cell();
    let values: Vec<(f64, f64)> = (0..window.cell_count())
        .into_par_iter()
        .map(|i| {
            let x = window.center(i);
            (eval.value(&x), eval.derivative(&x))
        })
        .collect();
    let (v, vdot): (Vec<f64>, Vec<f64>) = values.into_iter().unzip();
    let status: Vec<CellStatus> = v
        .iter()
        .zip(&vdot)
        .enumerate()
        .map(|(i, (&vv, &dv))| {
            if i == origin_cell {
                CellStatus::Origin
            } else if classify_values(vv, dv) == LyapStatus::Ok {
                CellStatus::LyapOk
            } else {
                CellStatus::LyapFail
            }
        })
        .collect();
    let in_gp = flood_fill(window, origin_cell, |i| status[i] != CellStatus::LyapFail);
    let gp_touches_edge = in_gp
        .iter()
        .enumerate()
        .any(|(i, &inside)| inside && window.on_edge(i));
    RegionGrid {
        window: window.clone(),
        in_npc: vec![false; status.len()],
        status,
        v,
        vdot,
        in_gp,
        c_star: None,
        r_p: None,
        origin_cell,
        gp_touches_edge,
    }
}

/// Cells reachable from `seed` through cells satisfying `admit`; the seed is
/// always included.
pub fn flood_fill(window: &Window, seed: usize, admit: impl Fn(usize) -> bool) -> Vec<bool> {
    let mut seen = vec![false; window.cell_count()];
    let mut queue = VecDeque::new();
    seen[seed] = true;
    queue.push_back(seed);
    while let Some(i) = queue.pop_front() {
        for nb in window.neighbors(i) {
            if !seen[nb] && admit(nb) {
                seen[nb] = true;
                queue.push_back(nb);
            }
        }
    }
    seen
}

impl RegionGrid {
    /// Origin component of `{V_p < c}` over the whole window (no `G_p`
    /// restriction).
    pub fn level_component(&self, c: f64) -> Vec<bool> {
        flood_fill(&self.window, self.origin_cell, |i| self.v[i] < c)
    }

    /// Whether the level-`c` component stays in `G_p` and off the window edge.
    pub fn level_feasible(&self, c: f64) -> bool {
        let comp = self.level_component(c);
        comp.iter()
            .enumerate()
            .all(|(i, &inside)| !inside || (self.in_gp[i] && !self.window.on_edge(i)))
    }

    /// Cells of the certified set, in index order.
    pub fn npc_cells(&self) -> Vec<usize> {
        indices(&self.in_npc)
    }

    pub fn gp_cells(&self) -> Vec<usize> {
        indices(&self.in_gp)
    }

    /// Cells of `in_npc` with a face neighbor outside it (or on the window edge).
    pub fn npc_boundary_cells(&self) -> Vec<usize> {
        self.npc_cells()
            .into_iter()
            .filter(|&i| {
                self.window.on_edge(i) || self.window.neighbors(i).any(|nb| !self.in_npc[nb])
            })
            .collect()
    }

    /// Whether `x` lies in an `in_npc` cell, or (with `tolerance`) next to one.
    pub fn npc_contains(&self, x: &[f64], tolerance: bool) -> bool {
        match self.window.cell_of(x) {
            Some(i) => {
                self.in_npc[i] || (tolerance && self.window.neighbors(i).any(|nb| self.in_npc[nb]))
            }
            None => false,
        }
    }

    pub fn summary(&self) -> RegionSummary {
        RegionSummary {
            c_star: self.c_star,
            r_p: self.r_p,
            dim: self.window.dim(),
            window_lower: self.window.lower.clone(),
            window_upper: self.window.upper.clone(),
            resolution: self.window.resolution,
            cells_total: self.status.len(),
            cells_lyap_ok: self
                .status
                .iter()
                .filter(|s| **s == CellStatus::LyapOk)
                .count(),
            cells_in_gp: self.in_gp.iter().filter(|b| **b).count(),
            cells_in_npc: self.in_npc.iter().filter(|b| **b).count(),
            gp_touches_window_edge: self.gp_touches_edge,
        }
    }

    /// CSV with header `x1,...,xn,Vp,Vdot,status,in_Gp,in_Npc`.
    pub fn to_csv(&self) -> String {
        let n = self.window.dim();
        let mut out = String::with_capacity(self.status.len() * 120);
        let header: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
        out.push_str(&header.join(","));
        out.push_str(",Vp,Vdot,status,in_Gp,in_Npc\n");
        for i in 0..self.status.len() {
            for x in self.window.center(i) {
                out.push_str(&format_sci17(x));
                out.push(',');
            }
            out.push_str(&format_sci17(self.v[i]));
            out.push(',');
            out.push_str(&format_sci17(self.vdot[i]));
            out.push(',');
            out.push_str(self.status[i].as_str());
            out.push(',');
            out.push(if self.in_gp[i] { '1' } else { '0' });
            out.push(',');
            out.push(if self.in_npc[i] { '1' } else { '0' });
            out.push('\n');
        }
        out
    }
}

fn indices(flags: &[bool]) -> Vec<usize> {
    flags
        .iter()
        .enumerate()
        .filter_map(|(i, &b)| b.then_some(i))
        .collect()
}

/// Machine-readable region report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegionSummary {
    pub c_star: Option<f64>,
    pub r_p: Option<f64>,
    pub dim: usize,
    pub window_lower: Vec<f64>,
    pub window_upper: Vec<f64>,
    pub resolution: usize,
    pub cells_total: usize,
    pub cells_lyap_ok: usize,
    pub cells_in_gp: usize,
    pub cells_in_npc: usize,
    pub gp_touches_window_edge: bool,
}

/// Largest feasible level by bisection, to 4 significant digits or 40 steps.
///
/// Fills `c_star` and `in_npc` on success.
pub fn compute_cp(grid: &mut RegionGrid) -> Result<f64> {
    let hi_start = grid
        .in_gp
        .iter()
        .zip(&grid.v)
        .filter_map(|(&inside, &v)| inside.then_some(v))
        .fold(0.0, f64::max);
    let min_positive = grid
        .v
        .iter()
        .enumerate()
        .filter(|(i, v)| *i != grid.origin_cell && **v > 0.0)
        .map(|(_, &v)| v)
        .fold(f64::INFINITY, f64::min);

    let (mut lo, mut hi) = (0.0, hi_start);
    if grid.level_feasible(hi) {
        lo = hi;
    } else if min_positive.is_finite() && grid.level_feasible(min_positive * (1.0 + 1e-12)) {
        lo = min_positive;
        for _ in 0..40 {
            if hi - lo <= 5e-5 * lo {
                break;
            }
            // far-field values of a high-degree V_p can be enormous
            let mid = if hi > 2.0 * lo { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
            if grid.level_feasible(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    if !(lo > min_positive) || !grid.level_feasible(lo) {
        return Err(RegionError::NoFeasibleLevel { min_positive });
    }
    grid.in_npc = grid.level_component(lo);
    grid.c_star = Some(lo);
    Ok(lo)
}

/// Origin component of `{V_p < c}` inside the certified set.
pub fn sublevel(grid: &RegionGrid, c: f64) -> Result<Vec<bool>> {
    let c_star = grid.c_star.ok_or(RegionError::NotCertified)?;
    if !(c > 0.0 && c <= c_star) {
        return Err(RegionError::LevelOutOfRange { c, c_star });
    }
    Ok(flood_fill(&grid.window, grid.origin_cell, |i| {
        grid.in_npc[i] && grid.v[i] < c
    }))
}

/// Sweep settings for [`estimate_rp`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadiusSweep {
    pub r0: f64,
    pub cap: f64,
}

impl Default for RadiusSweep {
    fn default() -> Self {
        Self {
            r0: 1e-3,
            cap: 1e3,
        }
    }
}

/// Unit directions used to probe spheres: both signs in 1D, 256 equally
/// spaced angles in 2D, a 1024-point Fibonacci sphere in 3D, seeded Gaussian
/// samples beyond.
pub fn sphere_directions(dim: usize) -> Vec<Vec<f64>> {
    match dim {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..256)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / 256.0;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        3 => {
            let m = 1024;
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..m)
                .map(|k| {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / m as f64;
                    let r = (1.0 - z * z).sqrt();
                    let t = golden * k as f64;
                    vec![r * t.cos(), r * t.sin(), z]
                })
                .collect()
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
            (0..4096)
                .map(|_| {
                    let v: Vec<f64> = (0..dim)
                        .map(|_| {
                            // Box-Muller
                            let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
                            let u2: f64 = rng.gen();
                            (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
                        })
                        .collect();
                    let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
                    v.into_iter().map(|a| a / n).collect()
                })
                .collect()
        }
    }
}

/// Largest radius `r` such that every probed sphere of radius `<= r` passes
/// the Lyapunov test; geometric sweep `r0·2^{k/8}` then bisection to three
/// significant digits. Returns `cap` if nothing fails.
pub fn estimate_rp(sys: &PolySystem, l: &LyapunovPoly, sweep: RadiusSweep) -> f64 {
    estimate_rp_with(&LyapEvaluator::new(sys, l), sweep)
}

pub fn estimate_rp_with(eval: &LyapEvaluator, sweep: RadiusSweep) -> f64 {
    let dirs = sphere_directions(eval.dim());
    let sphere_ok = |r: f64| {
        dirs.par_iter().all(|d| {
            let x: Vec<f64> = d.iter().map(|a| a * r).collect();
            eval.status(&x) == LyapStatus::Ok
        })
    };
    let mut lo = 0.0;
    let mut hi = None;
    let mut k = 0;
    loop {
        let r = sweep.r0 * 2f64.powf(k as f64 / 8.0);
        if r > sweep.cap {
            break;
        }
        if sphere_ok(r) {
            lo = r;
        } else {
            hi = Some(r);
            break;
        }
        k += 1;
    }
    let Some(mut hi) = hi else {
        return sweep.cap;
    };
    if lo == 0.0 {
        // failure already at r0: shrink until a sphere passes
        let mut r = hi;
        for _ in 0..60 {
            r *= 0.5;
            if sphere_ok(r) {
                lo = r;
                break;
            }
            hi = r;
        }
        if lo == 0.0 {
            return 0.0;
        }
    }
    while (hi - lo) > 5e-4 * lo {
        let mid = 0.5 * (lo + hi);
        if sphere_ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Samples of `t ↦ V_p(t·d)` for a unit direction `d`, with the strict
/// interior local maxima located by parabolic refinement.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialProfile {
    pub samples: Vec<(f64, f64)>,
    pub local_maxima: Vec<f64>,
}

impl RadialProfile {
    pub fn is_increasing(&self) -> bool {
        self.samples.windows(2).all(|w| w[1].1 > w[0].1)
    }
}

pub fn radial_profile(
    l: &LyapunovPoly,
    direction: &[f64],
    lam_max: f64,
    samples: usize,
) -> Result<RadialProfile> {
    let norm = direction.iter().map(|a| a * a).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(RegionError::ZeroDirection);
    }
    let unit: Vec<f64> = direction.iter().map(|a| a / norm).collect();
    let v = CompiledPoly::new(&l.v);
    let samples = samples.max(3);
    let pts: Vec<(f64, f64)> = (0..samples)
        .map(|k| {
            let t = lam_max * k as f64 / (samples - 1) as f64;
            let x: Vec<f64> = unit.iter().map(|a| a * t).collect();
            (t, v.eval(&x))
        })
        .collect();
    let h = lam_max / (samples - 1) as f64;
    let local_maxima = pts
        .windows(3)
        .filter(|w| w[1].1 > w[0].1 && w[1].1 > w[2].1)
        .map(|w| {
            let (a, b, c) = (w[0].1, w[1].1, w[2].1);
            let denom = a - 2.0 * b + c;
            let shift = if denom != 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
            w[1].0 + shift * h
        })
        .collect();
    Ok(RadialProfile {
        samples: pts,
        local_maxima,
    })
}

/// Result of [`star_check`].
#[derive(Clone, Debug, PartialEq)]
pub struct StarCheck {
    pub passed: bool,
    pub tested: usize,
    /// `(boundary cell center, λ)` pairs whose scaled point left the set.
    pub witnesses: Vec<(Vec<f64>, f64)>,
}

/// Samples boundary cells `x` of `N_p^c` and `λ ∈ [0, 1)` and checks that
/// `λx` falls in the set. A one-cell tolerance absorbs staircase effects of
/// the discretized boundary.
pub fn star_check(grid: &RegionGrid, samples: usize, seed: u64) -> Result<StarCheck> {
    if grid.c_star.is_none() {
        return Err(RegionError::NotCertified);
    }
    let boundary = grid.npc_boundary_cells();
    if boundary.is_empty() {
        return Ok(StarCheck {
            passed: true,
            tested: 0,
            witnesses: Vec::new(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut witnesses = Vec::new();
    for _ in 0..samples {
        let cell = boundary[rng.gen_range(0..boundary.len())];
        let lam: f64 = rng.gen_range(0.0..1.0);
        let x = grid.window.center(cell);
        let y: Vec<f64> = x.iter().map(|a| a * lam).collect();
        if !grid.npc_contains(&y, true) {
            witnesses.push((x, lam));
        }
    }
    Ok(StarCheck {
        passed: witnesses.is_empty(),
        tested: samples,
        witnesses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems;

    #[test]
    fn window_validation() {
        assert!(Window::new(vec![-1.0], vec![1.0], 16).is_ok());
        assert!(Window::new(vec![-1.0], vec![1.0], 15).is_err());
        assert!(Window::new(vec![0.0], vec![1.0], 32).is_err());
        assert!(Window::new(vec![1.0], vec![-1.0], 32).is_err());
        assert!(Window::new(vec![-1.0; 4], vec![1.0; 4], 16).is_err());
    }

    #[test]
    fn window_indexing_round_trip() {
        let w = Window::new(vec![-1.0, -2.0, -3.0], vec![1.0, 2.0, 3.0], 16).unwrap();
        for i in [0, 17, 300, 4095] {
            assert_eq!(w.flat_index(&w.coords(i)), i);
            assert_eq!(w.cell_of(&w.center(i)), Some(i));
        }
        assert_eq!(w.neighbors(0).count(), 3);
        assert_eq!(w.neighbors(w.flat_index(&[5, 5, 5])).count(), 6);
        assert!(w.cell_of(&[1.5, 0.0, 0.0]).is_none());
    }

    #[test]
    fn linear_1d_whole_window_is_gp() {
        let sys = systems::linear_1d(1.0);
        let l = LyapunovPoly::compute(&sys, 6).unwrap();
        let w = Window::new(vec![-1.0], vec![1.0], 64).unwrap();
        let grid = estimate_gp(&sys, &l, &w);
        assert!(grid.in_gp.iter().all(|&b| b));
        assert!(grid.gp_touches_edge);
        assert_eq!(lyap_status(&sys, &l, &[0.3]), LyapStatus::Ok);
        assert_eq!(lyap_status(&sys, &l, &[-7.0]), LyapStatus::Ok);
    }

    #[test]
    fn linear_1d_radius_hits_cap() {
        let sys = systems::linear_1d(1.0);
        let l = LyapunovPoly::compute(&sys, 4).unwrap();
        let sweep = RadiusSweep { r0: 1e-3, cap: 50.0 };
        assert_eq!(estimate_rp(&sys, &l, sweep), 50.0);
    }

    #[test]
    fn quadratic_profile_is_increasing() {
        let sys = systems::van_der_pol();
        let l = LyapunovPoly::compute(&sys, 2).unwrap();
        for d in sphere_directions(2).iter().step_by(16) {
            let prof = radial_profile(&l, d, 10.0, 200).unwrap();
            assert!(prof.is_increasing());
            assert!(prof.local_maxima.is_empty());
        }
        assert_eq!(
            radial_profile(&l, &[0.0, 0.0], 1.0, 10),
            Err(RegionError::ZeroDirection)
        );
    }

    #[test]
    fn sublevel_requires_certification() {
        let sys = systems::linear_1d(1.0);
        let l = LyapunovPoly::compute(&sys, 2).unwrap();
        let w = Window::new(vec![-1.0], vec![1.0], 64).unwrap();
        let grid = estimate_gp(&sys, &l, &w);
        assert_eq!(sublevel(&grid, 0.1), Err(RegionError::NotCertified));
        assert_eq!(star_check(&grid, 10, 1), Err(RegionError::NotCertified));
    }

    #[test]
    fn single_cell_region_is_vacuously_star_shaped() {
        let w = Window::new(vec![-1.0, -1.0], vec![1.0, 1.0], 16).unwrap();
        let n = w.cell_count();
        let origin_cell = w.origin_cell();
        let mut in_npc = vec![false; n];
        in_npc[origin_cell] = true;
        let grid = RegionGrid {
            window: w,
            status: vec![CellStatus::LyapOk; n],
            v: vec![1.0; n],
            vdot: vec![-1.0; n],
            in_gp: vec![true; n],
            in_npc,
            c_star: Some(1e-3),
            r_p: None,
            origin_cell,
            gp_touches_edge: false,
        };
        let res = star_check(&grid, 50, 3).unwrap();
        assert!(res.passed);
    }
}
