use std::path::{Path, PathBuf};
use std::time::Instant;

use basinscope::convergence::{continue_1d, ContinueConfig};
use basinscope::lyap::{coefficient_dump, residual_max, LyapunovPoly};
use basinscope::oracle::{classify_batch, boundary_csv, trace_boundary_2d, TraceConfig, Verdict};
use basinscope::region::{
    compute_cp, estimate_gp_with, estimate_rp_with, flood_fill, star_check, LyapEvaluator,
    RadiusSweep, RegionGrid,
};
use basinscope::spectral::PolySystem;
use clap::Args;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::error::{CliError, EXIT_CONTRADICTION};
use crate::spec_file::{build_window, check_degree, parse_window_flag, SystemSpecFile};
use crate::svg;

pub const DEFAULT_SEED: u64 = 42;

#[derive(Args, Clone, Debug)]
pub struct CommonArgs {
    /// JSON system file.
    pub spec: PathBuf,
    /// Truncation degree p of the Lyapunov series.
    #[arg(long)]
    pub degree: Option<u32>,
    /// x1min,x1max,x2min,x2max,...
    #[arg(long, allow_hyphen_values = true)]
    pub window: Option<String>,
    /// Cells per axis.
    #[arg(long)]
    pub resolution: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Output file (coeffs, continue1d) or directory (region, verify).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Resolved inputs shared by every command.
pub struct Context {
    pub spec: SystemSpecFile,
    pub sys: PolySystem,
    pub degree: u32,
    pub seed: u64,
    pub out: Option<PathBuf>,
    window: Option<String>,
    resolution: Option<usize>,
}

impl Context {
    pub fn load(args: &CommonArgs, default_degree: u32) -> Result<Self, CliError> {
        let spec = SystemSpecFile::load(&args.spec)?;
        let sys = spec.system()?;
        let degree = args.degree.or(spec.degree).unwrap_or(default_degree);
        check_degree(degree, spec.dim)?;
        Ok(Self {
            sys,
            degree,
            seed: args.seed,
            out: args.out.clone(),
            window: args.window.clone(),
            resolution: args.resolution,
            spec,
        })
    }

    pub fn window_bounds(&self) -> Result<Vec<f64>, CliError> {
        let dim = self.spec.dim;
        match (&self.window, &self.spec.window) {
            (Some(flag), _) => parse_window_flag(flag, dim),
            (None, Some(w)) => Ok(w.clone()),
            (None, None) => Ok([-3.0, 3.0].repeat(dim)),
        }
    }

    pub fn resolution(&self) -> usize {
        self.resolution
            .or(self.spec.resolution)
            .unwrap_or(match self.spec.dim {
                1 => 2000,
                2 => 600,
                _ => 64,
            })
    }

    fn lyapunov(&self) -> Result<LyapunovPoly, CliError> {
        Ok(LyapunovPoly::compute(&self.sys, self.degree)?)
    }
}

fn eigen_json(l: &LyapunovPoly) -> Value {
    Value::Array(
        l.spec
            .eigenvalues
            .iter()
            .map(|z| json!([z.re, z.im]))
            .collect(),
    )
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn out_dir(ctx: &Context) -> Result<Option<PathBuf>, CliError> {
    match &ctx.out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
            Ok(Some(dir.clone()))
        }
        None => Ok(None),
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

/// Coefficient dump plus a summary on stdout (stderr when the dump itself
/// goes to stdout).
pub fn coeffs(args: &CommonArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let ctx = Context::load(args, 20)?;
    let l = ctx.lyapunov()?;
    let residual = residual_max(&ctx.sys, &l)?;
    let dump = coefficient_dump(&l.v, ctx.degree);
    let summary = json!({
        "dim": ctx.spec.dim,
        "degree": ctx.degree,
        "eigenvalues": eigen_json(&l),
        "residual_max": residual,
        "coefficient_lines": dump.lines().count(),
        "elapsed_ms": start.elapsed().as_secs_f64() * 1e3,
    });
    match &ctx.out {
        Some(path) => {
            write_file(path, &dump)?;
            print!("{}", pretty(&summary));
        }
        None => {
            print!("{dump}");
            eprint!("{}", pretty(&summary));
        }
    }
    Ok(())
}

/// Grid, certified level and star diagnostics for one system.
pub struct RegionRun {
    pub l: LyapunovPoly,
    pub grid: RegionGrid,
    pub residual: f64,
}

pub fn run_region(ctx: &Context) -> Result<RegionRun, CliError> {
    let l = ctx.lyapunov()?;
    let residual = residual_max(&ctx.sys, &l)?;
    let window = build_window(&ctx.window_bounds()?, ctx.resolution())?;
    let eval = LyapEvaluator::new(&ctx.sys, &l);
    let mut grid = estimate_gp_with(&eval, &window);
    compute_cp(&mut grid)?;
    grid.r_p = Some(estimate_rp_with(&eval, RadiusSweep::default()));
    Ok(RegionRun { l, grid, residual })
}

pub fn region(args: &CommonArgs, oracle_boundary: bool) -> Result<(), CliError> {
    let ctx = Context::load(args, 20)?;
    let run = run_region(&ctx)?;
    let star = star_check(&run.grid, 500, ctx.seed)?;
    let boundary = if oracle_boundary {
        let cfg = ctx.spec.integrator()?;
        Some(trace_boundary_2d(&ctx.sys, &cfg, &TraceConfig::default())?)
    } else {
        None
    };
    let mut summary = serde_json::to_value(run.grid.summary()).expect("serializable");
    let extra = json!({
        "degree": ctx.degree,
        "seed": ctx.seed,
        "eigenvalues": eigen_json(&run.l),
        "residual_max": run.residual,
        "star_check": {
            "passed": star.passed,
            "tested": star.tested,
            "violations": star.witnesses.len(),
        },
        "oracle_boundary_points": boundary.as_ref().map(Vec::len),
    });
    if let (Value::Object(a), Value::Object(b)) = (&mut summary, extra) {
        a.extend(b);
    }
    if let Some(dir) = out_dir(&ctx)? {
        write_file(&dir.join("grid.csv"), &run.grid.to_csv())?;
        write_file(&dir.join("summary.json"), &pretty(&summary))?;
        if ctx.spec.dim == 2 {
            write_file(&dir.join("region.svg"), &svg::render(&run.grid, boundary.as_deref()))?;
        }
        if let Some(b) = &boundary {
            write_file(&dir.join("boundary.csv"), &boundary_csv(b))?;
        }
    }
    print!("{}", pretty(&summary));
    Ok(())
}

pub struct VerifyOptions {
    pub samples: usize,
    /// Debug: certify `{V < factor · c_star}` instead of `N_p^c`.
    pub inflate: f64,
}

pub fn verify(args: &CommonArgs, opts: &VerifyOptions) -> Result<(), CliError> {
    let ctx = Context::load(args, 20)?;
    let cfg = ctx.spec.integrator()?;
    let run = run_region(&ctx)?;
    let grid = &run.grid;
    let c_star = grid.c_star.expect("computed by run_region");
    let c_used = opts.inflate * c_star;
    let cells: Vec<usize> = if opts.inflate == 1.0 {
        grid.npc_cells()
    } else {
        let set = flood_fill(&grid.window, grid.origin_cell, |i| grid.v[i] < c_used);
        (0..set.len()).filter(|&i| set[i]).collect()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let k = opts.samples.min(cells.len());
    let mut picks = rand::seq::index::sample(&mut rng, cells.len(), k).into_vec();
    picks.sort_unstable();
    let points: Vec<Vec<f64>> = picks
        .iter()
        .map(|&i| grid.window.center(cells[i]))
        .collect();
    let verdicts = classify_batch(&ctx.sys, &points, &cfg)?;
    let count = |v: Verdict| verdicts.iter().filter(|b| b.verdict == v).count();
    let escapes = count(Verdict::Escapes);
    let escaping: Vec<&Vec<f64>> = points
        .iter()
        .zip(&verdicts)
        .filter(|(_, v)| v.verdict == Verdict::Escapes)
        .map(|(p, _)| p)
        .take(10)
        .collect();
    let report = json!({
        "degree": ctx.degree,
        "seed": ctx.seed,
        "c_star": c_star,
        "c_used": c_used,
        "inflation": opts.inflate,
        "candidate_cells": cells.len(),
        "samples": k,
        "counts": {
            "CONVERGES": count(Verdict::Converges),
            "ESCAPES": escapes,
            "UNDECIDED": count(Verdict::Undecided),
        },
        "escaping_points": escaping,
    });
    if let Some(dir) = out_dir(&ctx)? {
        write_file(&dir.join("verify.json"), &pretty(&report))?;
    }
    print!("{}", pretty(&report));
    if escapes > 0 {
        return Err(CliError::new(
            EXIT_CONTRADICTION,
            format!("certification contradiction: {escapes} of {k} sampled cells escape"),
        ));
    }
    Ok(())
}

pub fn continue1d(args: &CommonArgs, max_steps: usize) -> Result<(), CliError> {
    let ctx = Context::load(args, 200)?;
    let bounds = ctx.window_bounds()?;
    let cfg = ContinueConfig {
        degree: ctx.degree,
        max_steps,
        window: (bounds[0], bounds[1]),
        ..ContinueConfig::default()
    };
    let report = continue_1d(&ctx.sys, &cfg)?;
    let mut v = serde_json::to_value(&report).expect("serializable");
    if let Value::Object(m) = &mut v {
        m.insert("degree".into(), json!(ctx.degree));
    }
    let text = pretty(&v);
    if let Some(path) = &ctx.out {
        write_file(path, &text)?;
    }
    print!("{text}");
    Ok(())
}

/// Wall-clock timings of the pipeline stages.
pub fn bench(args: &CommonArgs, samples: usize) -> Result<(), CliError> {
    let ctx = Context::load(args, 20)?;
    let ms = |t: Instant| t.elapsed().as_secs_f64() * 1e3;
    let t = Instant::now();
    let l = ctx.lyapunov()?;
    let lyap_ms = ms(t);
    let t = Instant::now();
    let residual = residual_max(&ctx.sys, &l)?;
    let residual_ms = ms(t);
    let mut report = json!({
        "degree": ctx.degree,
        "threads": rayon::current_num_threads(),
        "lyapunov_ms": lyap_ms,
        "residual_ms": residual_ms,
        "residual_max": residual,
    });
    if ctx.spec.dim <= 3 {
        let window = build_window(&ctx.window_bounds()?, ctx.resolution())?;
        let eval = LyapEvaluator::new(&ctx.sys, &l);
        let t = Instant::now();
        let mut grid = estimate_gp_with(&eval, &window);
        let grid_ms = ms(t);
        let t = Instant::now();
        let c = compute_cp(&mut grid)?;
        let cp_ms = ms(t);
        let cells = grid.npc_cells();
        let step = (cells.len() / samples.max(1)).max(1);
        let points: Vec<Vec<f64>> = cells
            .iter()
            .step_by(step)
            .take(samples)
            .map(|&i| grid.window.center(i))
            .collect();
        let t = Instant::now();
        classify_batch(&ctx.sys, &points, &ctx.spec.integrator()?)?;
        let classify_ms = ms(t);
        if let Value::Object(m) = &mut report {
            m.insert("resolution".into(), json!(window.resolution));
            m.insert("grid_ms".into(), json!(grid_ms));
            m.insert("c_star_ms".into(), json!(cp_ms));
            m.insert("c_star".into(), json!(c));
            m.insert("classify_points".into(), json!(points.len()));
            m.insert("classify_ms".into(), json!(classify_ms));
        }
    }
    print!("{}", pretty(&report));
    Ok(())
}
