//! Monte Carlo benchmark grids.
//!
//! A grid is the cross product of correspondence counts, outlier ratios,
//! and trial seeds; every method sees the identical instance for a given
//! (N, ρ, seed) cell, so per-trial rows are directly comparable. Trials run
//! concurrently; rows are sorted by (method, N, rho, seed) before emission
//! so the CSV is deterministic regardless of scheduling.

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use rigidreg::eval::{inlier_metrics, ransac_baseline, rotation_error, success, translation_error};
use rigidreg::synth::{generate, SynthConfig, SynthInstance};
use rigidreg::{register, PipelineConfig};
use std::io::Write;
use std::time::Instant;

/// One benchmarked estimator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Method {
    /// The staged search pipeline with default hyperparameters.
    Staged,
    /// Plain RANSAC with a fixed iteration budget; keeps the token it was
    /// parsed from so CSV rows echo the user's spelling.
    Ransac { label: String, iterations: usize },
}

impl Method {
    /// Accepts `staged` or `ransac-<count>`, where `<count>` may carry a
    /// `k` suffix meaning thousands (`ransac-1k` = 1000 iterations).
    pub fn parse(token: &str) -> Result<Self> {
        if token == "staged" {
            return Ok(Method::Staged);
        }
        if let Some(rest) = token.strip_prefix("ransac-") {
            let (digits, mult) = match rest.strip_suffix('k') {
                Some(d) => (d, 1000usize),
                None => (rest, 1),
            };
            let base: usize = digits
                .parse()
                .with_context(|| format!("method '{token}': bad iteration count '{rest}'"))?;
            if base == 0 {
                bail!("method '{token}': iteration count must be positive");
            }
            return Ok(Method::Ransac {
                label: token.to_string(),
                iterations: base * mult,
            });
        }
        bail!("unknown method '{token}' (expected 'staged' or 'ransac-<count>[k]')")
    }

    pub fn label(&self) -> &str {
        match self {
            Method::Staged => "staged",
            Method::Ransac { label, .. } => label,
        }
    }
}

/// Everything a grid run needs.
#[derive(Debug, Clone)]
pub struct BenchSpec {
    pub grid_n: Vec<usize>,
    pub grid_rho: Vec<f64>,
    pub trials: usize,
    pub methods: Vec<Method>,
    /// Inlier threshold handed to every method.
    pub xi: f64,
    /// Noise ball radius of the synthetic instances.
    pub noise: f64,
    /// Success bound on the rotation error, degrees.
    pub success_er: f64,
    /// Success bound on the translation error.
    pub success_et: f64,
    /// Base seed; trial seeds count up from it within each grid cell.
    pub seed: u64,
}

/// One CSV row: one method on one instance.
#[derive(Debug, Clone)]
pub struct TrialRow {
    pub method: String,
    pub n: usize,
    pub rho: f64,
    pub seed: u64,
    pub er_deg: f64,
    pub et: f64,
    pub consensus: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub time_ms: f64,
}

/// Runs the full grid and returns the rows sorted by (method, N, rho, seed).
pub fn run_grid(spec: &BenchSpec) -> Vec<TrialRow> {
    let mut cells: Vec<(usize, f64, u64)> = Vec::new();
    for &n in &spec.grid_n {
        for &rho in &spec.grid_rho {
            for trial in 0..spec.trials {
                cells.push((n, rho, spec.seed + trial as u64));
            }
        }
    }

    let mut rows: Vec<TrialRow> = cells
        .par_iter()
        .flat_map_iter(|&(n, rho, seed)| {
            let mut synth = SynthConfig::new(n, rho, seed);
            synth.noise_radius = spec.noise;
            let inst = generate(&synth);
            let rows: Vec<TrialRow> = spec
                .methods
                .iter()
                .map(|method| run_trial(spec, method, &inst, n, rho, seed))
                .collect();
            rows.into_iter()
        })
        .collect();

    rows.sort_by(|a, b| {
        a.method
            .cmp(&b.method)
            .then(a.n.cmp(&b.n))
            .then(a.rho.total_cmp(&b.rho))
            .then(a.seed.cmp(&b.seed))
    });
    rows
}

fn run_trial(
    spec: &BenchSpec,
    method: &Method,
    inst: &SynthInstance,
    n: usize,
    rho: f64,
    seed: u64,
) -> TrialRow {
    let start = Instant::now();
    let outcome = match method {
        Method::Staged => {
            let mut cfg = PipelineConfig::new(spec.xi);
            cfg.seed = seed;
            register(&inst.set, &cfg).map(|report| (report.transform, report.consensus))
        }
        Method::Ransac { iterations, .. } => ransac_baseline(&inst.set, spec.xi, *iterations, seed),
    };
    let time_ms = start.elapsed().as_secs_f64() * 1e3;

    let (er_deg, et, kept) = match &outcome {
        Ok((tf, cons)) => (
            rotation_error(&tf.rotation, &inst.truth.rotation),
            translation_error(&tf.translation, &inst.truth.translation),
            cons.as_slice(),
        ),
        // A failed estimator scores as a miss but still yields a row.
        Err(_) => (f64::INFINITY, f64::INFINITY, &[][..]),
    };
    let m = inlier_metrics(kept, &inst.inlier_mask);
    TrialRow {
        method: method.label().to_string(),
        n,
        rho,
        seed,
        er_deg,
        et,
        consensus: kept.len(),
        precision: m.precision,
        recall: m.recall,
        f1: m.f1,
        time_ms,
    }
}

pub const CSV_HEADER: &str = "method,N,rho,seed,E_R_deg,E_t,|I_final|,IP,IR,F1,time_ms";

/// Writes the header and one line per row. Only `time_ms` is rounded
/// (to microseconds); every other number keeps full round-trip precision.
pub fn write_csv<W: Write>(mut w: W, rows: &[TrialRow]) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{:.3}",
            r.method, r.n, r.rho, r.seed, r.er_deg, r.et, r.consensus, r.precision, r.recall, r.f1,
            r.time_ms
        )?;
    }
    Ok(())
}

/// Per-cell aggregate of a finished grid.
#[derive(Debug, Clone)]
pub struct CellSummary {
    pub method: String,
    pub n: usize,
    pub rho: f64,
    pub trials: usize,
    pub success_rate: f64,
    pub median_er: f64,
    pub median_et: f64,
    pub median_ms: f64,
}

/// Groups sorted rows by (method, N, rho) and aggregates each cell.
pub fn summarize(rows: &[TrialRow], success_er: f64, success_et: f64) -> Vec<CellSummary> {
    let mut cells = Vec::new();
    let mut i = 0;
    while i < rows.len() {
        let j = rows[i..]
            .iter()
            .position(|r| (r.method.as_str(), r.n, r.rho) != (rows[i].method.as_str(), rows[i].n, rows[i].rho))
            .map_or(rows.len(), |p| i + p);
        let cell = &rows[i..j];
        let hits = cell
            .iter()
            .filter(|r| success(r.er_deg, r.et, success_er, success_et))
            .count();
        cells.push(CellSummary {
            method: rows[i].method.clone(),
            n: rows[i].n,
            rho: rows[i].rho,
            trials: cell.len(),
            success_rate: hits as f64 / cell.len() as f64,
            median_er: median(cell.iter().map(|r| r.er_deg)),
            median_et: median(cell.iter().map(|r| r.et)),
            median_ms: median(cell.iter().map(|r| r.time_ms)),
        });
        i = j;
    }
    cells
}

/// Median with the even-length convention of averaging the middle pair.
pub fn median(values: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.collect();
    assert!(!v.is_empty(), "median of an empty sequence");
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

pub fn write_summary<W: Write>(mut w: W, cells: &[CellSummary]) -> std::io::Result<()> {
    writeln!(
        w,
        "{:<12} {:>6} {:>5} {:>7} {:>9} {:>10} {:>10} {:>10}",
        "method", "N", "rho", "trials", "success", "med_E_R", "med_E_t", "med_ms"
    )?;
    for c in cells {
        writeln!(
            w,
            "{:<12} {:>6} {:>5} {:>7} {:>9.3} {:>10.4} {:>10.4} {:>10.3}",
            c.method, c.n, c.rho, c.trials, c.success_rate, c.median_er, c.median_et, c.median_ms
        )?;
    }
    Ok(())
}
