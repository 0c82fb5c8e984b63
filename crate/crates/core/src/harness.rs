//! Replication study comparing the adaptive and fixed designs, the metrics it
//! reports, and the CSV formats for traces, posterior curves and reports.
//!
//! Every replication owns a private stream `substream(master_seed, 2·i + d)`
//! where `i` is the replication index and `d` is 0 for adaptive, 1 for fixed.
//! Replications are evaluated on a rayon pool and reassembled in index order,
//! so the report does not depend on the worker count.

use std::io::{self, Write};

use rayon::prelude::*;
use thiserror::Error;

use crate::acquisition::{argmax_on_grid, utility_u12, utility_u3, AcquisitionError, EvaluationGrid, UtilityWeights};
use crate::gp::{GpError, PosteriorModel};
use crate::rng;
use crate::trial::{
    run_adaptive, run_fixed, AcquisitionRecord, DesignKind, GroundTruth, ScenarioConfig, TraceStep, TrialError,
    TrialTrace,
};

/// Default metric region around the optimum, in hours.
pub const DEFAULT_REGION: (f64, f64) = (4.0, 8.0);

pub const TRACE_HEADER: &str = "t,x,y,acq_argmax,acq_value";
pub const POSTERIOR_HEADER: &str = "x,mu,sigma,dmu_dx,u3";
pub const COMPARISON_HEADER: &str = "seed,design,checkpoint,rmse,mean_sigma,est_opt,opt_err";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Trial(#[from] TrialError),

    #[error(transparent)]
    Gp(#[from] GpError),

    #[error(transparent)]
    Acquisition(#[from] AcquisitionError),

    #[error("no grid point falls inside region [{lo}, {hi}]")]
    EmptyRegion { lo: f64, hi: f64 },

    #[error("invalid study request: {0}")]
    InvalidRequest(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Argmax over the grid of `θ(x) + λ₁ θ′(x)` for the true curve.
pub fn true_optimum(truth: &GroundTruth, lambda1: f64, grid: &EvaluationGrid) -> f64 {
    // θ and θ′ are finite everywhere, so the search cannot fail.
    argmax_on_grid(|x| truth.performance(x) + lambda1 * truth.slope(x), grid)
        .expect("logistic utility is finite")
        .0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialMetrics {
    /// RMSE of the posterior mean against the truth over the region.
    pub rmse_opt_region: f64,
    /// Mean posterior standard deviation over the region.
    pub mean_sigma_opt_region: f64,
    /// Grid argmax of `μ + λ₁ μ′`.
    pub est_optimum: f64,
    pub opt_error: f64,
}

fn region_points(grid: &EvaluationGrid, region: (f64, f64)) -> Result<Vec<f64>, HarnessError> {
    let (lo, hi) = region;
    let eps = 1e-9 * grid.step();
    let pts: Vec<f64> = grid.points().filter(|&x| x >= lo - eps && x <= hi + eps).collect();
    if pts.is_empty() {
        Err(HarnessError::EmptyRegion { lo, hi })
    } else {
        Ok(pts)
    }
}

pub fn compute_metrics(
    model: &PosteriorModel,
    truth: &GroundTruth,
    lambda1: f64,
    grid: &EvaluationGrid,
    region: (f64, f64),
) -> Result<TrialMetrics, HarnessError> {
    let pts = region_points(grid, region)?;
    let n = pts.len() as f64;
    let sq_err: f64 = pts
        .iter()
        .map(|&x| {
            let e = model.mean(x) - truth.performance(x);
            e * e
        })
        .sum();
    let sigma_sum: f64 = pts.iter().map(|&x| model.std(x)).sum();
    let (est_optimum, _) = argmax_on_grid(|x| utility_u12(model, x, lambda1), grid)?;
    let target = true_optimum(truth, lambda1, grid);
    Ok(TrialMetrics {
        rmse_opt_region: (sq_err / n).sqrt(),
        mean_sigma_opt_region: sigma_sum / n,
        est_optimum,
        opt_error: (est_optimum - target).abs(),
    })
}

/// Metrics for which a lower value is better.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    Rmse,
    MeanSigma,
    OptError,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Rmse, Metric::MeanSigma, Metric::OptError];

    pub fn name(&self) -> &'static str {
        match self {
            Metric::Rmse => "rmse",
            Metric::MeanSigma => "mean_sigma",
            Metric::OptError => "opt_err",
        }
    }

    pub fn of(&self, m: &TrialMetrics) -> f64 {
        match self {
            Metric::Rmse => m.rmse_opt_region,
            Metric::MeanSigma => m.mean_sigma_opt_region,
            Metric::OptError => m.opt_error,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub seed: usize,
    pub design: DesignKind,
    pub checkpoint: usize,
    pub metrics: TrialMetrics,
}

/// Fraction of replications where the adaptive design at `adaptive_t` beats the
/// fixed design at `fixed_t`. Exact ties count one half.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WinRate {
    pub metric: Metric,
    pub adaptive_t: usize,
    pub fixed_t: usize,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub n_seeds: usize,
    pub master_seed: u64,
    pub checkpoints: Vec<usize>,
    pub region: (f64, f64),
    /// Ordered by seed, then design (adaptive first), then checkpoint.
    pub rows: Vec<ComparisonRow>,
    /// Every metric over every (adaptive checkpoint, fixed checkpoint) pair.
    pub win_rates: Vec<WinRate>,
}

impl ComparisonReport {
    /// Builds the report and its win-rates from per-replication rows.
    pub fn assemble(
        master_seed: u64,
        n_seeds: usize,
        checkpoints: Vec<usize>,
        region: (f64, f64),
        rows: Vec<ComparisonRow>,
    ) -> Self {
        let mut report = Self {
            n_seeds,
            master_seed,
            checkpoints,
            region,
            rows,
            win_rates: Vec::new(),
        };
        let mut rates = Vec::new();
        for metric in Metric::ALL {
            for &a in &report.checkpoints {
                for &f in &report.checkpoints {
                    if let Some(rate) = report.win_rate(metric, a, f) {
                        rates.push(WinRate {
                            metric,
                            adaptive_t: a,
                            fixed_t: f,
                            rate,
                        });
                    }
                }
            }
        }
        report.win_rates = rates;
        report
    }

    pub fn metrics(&self, seed: usize, design: DesignKind, checkpoint: usize) -> Option<&TrialMetrics> {
        self.rows
            .iter()
            .find(|r| r.seed == seed && r.design == design && r.checkpoint == checkpoint)
            .map(|r| &r.metrics)
    }

    pub fn win_rate(&self, metric: Metric, adaptive_t: usize, fixed_t: usize) -> Option<f64> {
        let mut score = 0.0;
        let mut count = 0usize;
        for seed in 0..self.n_seeds {
            let a = self.metrics(seed, DesignKind::Adaptive, adaptive_t)?;
            let f = self.metrics(seed, DesignKind::Fixed, fixed_t)?;
            let (va, vf) = (metric.of(a), metric.of(f));
            score += if va < vf {
                1.0
            } else if va == vf {
                0.5
            } else {
                0.0
            };
            count += 1;
        }
        (count > 0).then(|| score / count as f64)
    }
}

/// A comparison report together with the traces it was computed from.
#[derive(Debug, Clone)]
pub struct ComparisonRun {
    pub report: ComparisonReport,
    /// `(adaptive, fixed)` full-budget traces per replication.
    pub traces: Vec<(TrialTrace, TrialTrace)>,
}

fn stream_id(seed_index: usize, design: DesignKind) -> u64 {
    let d = match design {
        DesignKind::Adaptive => 0,
        DesignKind::Fixed => 1,
    };
    2 * seed_index as u64 + d
}

pub fn replication_stream(master_seed: u64, seed_index: usize, design: DesignKind) -> rng::TrialRng {
    rng::substream(master_seed, stream_id(seed_index, design))
}

fn validate_request(config: &ScenarioConfig, n_seeds: usize, checkpoints: &[usize]) -> Result<(), HarnessError> {
    if n_seeds == 0 {
        return Err(HarnessError::InvalidRequest("n_seeds must be >= 1".into()));
    }
    if checkpoints.is_empty() {
        return Err(HarnessError::InvalidRequest("at least one checkpoint is required".into()));
    }
    if let Some(&c) = checkpoints.iter().find(|&&c| c == 0 || c > config.budget) {
        return Err(HarnessError::InvalidRequest(format!(
            "checkpoint {c} outside 1..={}",
            config.budget
        )));
    }
    Ok(())
}

type Replication = (Vec<ComparisonRow>, (TrialTrace, TrialTrace));

fn replicate(
    config: &ScenarioConfig,
    seed_index: usize,
    checkpoints: &[usize],
    region: (f64, f64),
    grid: &EvaluationGrid,
) -> Result<Replication, HarnessError> {
    let lambda1 = config.weights.lambda1;
    let mut rows = Vec::with_capacity(2 * checkpoints.len());

    let adaptive = run_adaptive(config, &mut replication_stream(config.seed, seed_index, DesignKind::Adaptive))?;
    for &t in checkpoints {
        let model = adaptive.posterior_at(t)?;
        rows.push(ComparisonRow {
            seed: seed_index,
            design: DesignKind::Adaptive,
            checkpoint: t,
            metrics: compute_metrics(&model, &config.truth, lambda1, grid, region)?,
        });
    }

    // The fixed design at checkpoint t is the t-point equally spaced design,
    // replaying the replication's fixed stream from its start.
    let fixed = run_fixed(config, &mut replication_stream(config.seed, seed_index, DesignKind::Fixed))?;
    for &t in checkpoints {
        let model = if t == config.budget {
            fixed.final_posterior()?
        } else {
            let short = ScenarioConfig {
                budget: t,
                ..config.clone()
            };
            run_fixed(&short, &mut replication_stream(config.seed, seed_index, DesignKind::Fixed))?
                .final_posterior()?
        };
        rows.push(ComparisonRow {
            seed: seed_index,
            design: DesignKind::Fixed,
            checkpoint: t,
            metrics: compute_metrics(&model, &config.truth, lambda1, grid, region)?,
        });
    }
    Ok((rows, (adaptive, fixed)))
}

/// Runs the replication study on `threads` workers (0 = rayon default).
pub fn compare_detailed(
    config: &ScenarioConfig,
    n_seeds: usize,
    checkpoints: &[usize],
    region: (f64, f64),
    threads: usize,
) -> Result<ComparisonRun, HarnessError> {
    config.validate().map_err(TrialError::from)?;
    validate_request(config, n_seeds, checkpoints)?;
    let grid = config.grid()?;
    region_points(&grid, region)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| HarnessError::InvalidRequest(e.to_string()))?;
    let replications: Vec<Replication> = pool.install(|| {
        (0..n_seeds)
            .into_par_iter()
            .map(|i| replicate(config, i, checkpoints, region, &grid))
            .collect::<Result<_, _>>()
    })?;

    let mut rows = Vec::with_capacity(n_seeds * 2 * checkpoints.len());
    let mut traces = Vec::with_capacity(n_seeds);
    for (r, t) in replications {
        rows.extend(r);
        traces.push(t);
    }
    Ok(ComparisonRun {
        report: ComparisonReport::assemble(config.seed, n_seeds, checkpoints.to_vec(), region, rows),
        traces,
    })
}

pub fn compare(config: &ScenarioConfig, n_seeds: usize, checkpoints: &[usize]) -> Result<ComparisonReport, HarnessError> {
    Ok(compare_detailed(config, n_seeds, checkpoints, DEFAULT_REGION, 0)?.report)
}

/// Median of `|acq_argmax − target|` over adaptive steps `t >= from_t`, pooled
/// across replications.
pub fn acquisition_localization(traces: &[TrialTrace], from_t: usize, target: f64) -> Option<f64> {
    let mut devs: Vec<f64> = traces
        .iter()
        .flat_map(|tr| tr.steps.iter())
        .filter(|s| s.t >= from_t)
        .filter_map(|s| s.acquisition.map(|a| (a.argmax - target).abs()))
        .collect();
    median(&mut devs)
}

pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    })
}

/// Region averages of the standard predictive std and its diagonal-only variant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaSensitivity {
    pub mean_standard: f64,
    pub mean_diagonal_form: f64,
    pub max_abs_diff: f64,
}

pub fn sigma_sensitivity(
    model: &PosteriorModel,
    grid: &EvaluationGrid,
    region: (f64, f64),
) -> Result<SigmaSensitivity, HarnessError> {
    let pts = region_points(grid, region)?;
    let n = pts.len() as f64;
    let (mut s, mut d, mut max) = (0.0, 0.0, 0.0f64);
    for &x in &pts {
        let a = model.std(x);
        let b = model.std_diagonal_form(x);
        s += a;
        d += b;
        max = max.max((a - b).abs());
    }
    Ok(SigmaSensitivity {
        mean_standard: s / n,
        mean_diagonal_form: d / n,
        max_abs_diff: max,
    })
}

// ---------------------------------------------------------------------------
// CSV

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_trace_csv<W: Write>(trace: &TrialTrace, sink: &mut W) -> io::Result<()> {
    writeln!(sink, "{TRACE_HEADER}")?;
    for s in &trace.steps {
        writeln!(
            sink,
            "{},{},{},{},{}",
            s.t,
            s.x,
            s.y,
            opt(s.acquisition.map(|a| a.argmax)),
            opt(s.acquisition.map(|a| a.value)),
        )?;
    }
    Ok(())
}

fn parse_err(line: usize, message: impl Into<String>) -> HarnessError {
    HarnessError::Parse {
        line,
        message: message.into(),
    }
}

fn parse_f64(field: &str, line: usize, name: &str) -> Result<f64, HarnessError> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| parse_err(line, format!("{name}: `{field}` is not a number")))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(parse_err(line, format!("{name}: `{field}` is not finite")))
    }
}

fn data_lines<'a>(
    text: &'a str,
    header: &str,
) -> Result<impl Iterator<Item = (usize, &'a str)>, HarnessError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, h)) if h.trim() == header => {}
        Some((n, h)) => return Err(parse_err(n, format!("expected header `{header}`, found `{h}`"))),
        None => return Err(parse_err(1, "empty file")),
    }
    Ok(lines.filter(|(_, l)| !l.trim().is_empty()))
}

pub fn parse_trace_csv(text: &str) -> Result<Vec<TraceStep>, HarnessError> {
    let mut steps = Vec::new();
    for (n, line) in data_lines(text, TRACE_HEADER)? {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(parse_err(n, format!("expected 5 fields, found {}", f.len())));
        }
        let t: usize = f[0]
            .trim()
            .parse()
            .map_err(|_| parse_err(n, format!("t: `{}` is not an integer", f[0])))?;
        let acquisition = match (f[3].trim().is_empty(), f[4].trim().is_empty()) {
            (true, true) => None,
            (false, false) => Some(AcquisitionRecord {
                argmax: parse_f64(f[3], n, "acq_argmax")?,
                value: parse_f64(f[4], n, "acq_value")?,
            }),
            _ => return Err(parse_err(n, "acq_argmax and acq_value must both be present or both empty")),
        };
        steps.push(TraceStep {
            t,
            x: parse_f64(f[1], n, "x")?,
            y: parse_f64(f[2], n, "y")?,
            acquisition,
        });
    }
    for (i, s) in steps.iter().enumerate() {
        if s.t != i + 1 {
            return Err(parse_err(i + 2, format!("step numbers must run 1..n, found {}", s.t)));
        }
    }
    Ok(steps)
}

/// One row of the posterior curve table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosteriorRow {
    pub x: f64,
    pub mu: f64,
    pub sigma: f64,
    pub dmu_dx: f64,
    pub u3: f64,
}

pub fn posterior_rows(model: &PosteriorModel, grid: &EvaluationGrid, weights: &UtilityWeights) -> Vec<PosteriorRow> {
    grid.points()
        .map(|x| PosteriorRow {
            x,
            mu: model.mean(x),
            sigma: model.std(x),
            dmu_dx: model.mean_deriv(x),
            u3: utility_u3(model, x, weights),
        })
        .collect()
}

pub fn write_posterior_csv<W: Write>(
    model: &PosteriorModel,
    grid: &EvaluationGrid,
    weights: &UtilityWeights,
    sink: &mut W,
) -> io::Result<()> {
    writeln!(sink, "{POSTERIOR_HEADER}")?;
    for r in posterior_rows(model, grid, weights) {
        writeln!(sink, "{},{},{},{},{}", r.x, r.mu, r.sigma, r.dmu_dx, r.u3)?;
    }
    Ok(())
}

pub fn parse_posterior_csv(text: &str) -> Result<Vec<PosteriorRow>, HarnessError> {
    let mut rows = Vec::new();
    for (n, line) in data_lines(text, POSTERIOR_HEADER)? {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(parse_err(n, format!("expected 5 fields, found {}", f.len())));
        }
        rows.push(PosteriorRow {
            x: parse_f64(f[0], n, "x")?,
            mu: parse_f64(f[1], n, "mu")?,
            sigma: parse_f64(f[2], n, "sigma")?,
            dmu_dx: parse_f64(f[3], n, "dmu_dx")?,
            u3: parse_f64(f[4], n, "u3")?,
        });
    }
    Ok(rows)
}

/// Per-row table followed by a `#`-prefixed aggregate block.
pub fn write_comparison_csv<W: Write>(report: &ComparisonReport, sink: &mut W) -> io::Result<()> {
    writeln!(sink, "{COMPARISON_HEADER}")?;
    for r in &report.rows {
        let m = &r.metrics;
        writeln!(
            sink,
            "{},{},{},{},{},{},{}",
            r.seed,
            r.design,
            r.checkpoint,
            m.rmse_opt_region,
            m.mean_sigma_opt_region,
            m.est_optimum,
            m.opt_error
        )?;
    }
    writeln!(sink, "# aggregate")?;
    writeln!(sink, "# n_seeds,{}", report.n_seeds)?;
    writeln!(sink, "# master_seed,{}", report.master_seed)?;
    writeln!(sink, "# region,{},{}", report.region.0, report.region.1)?;
    writeln!(sink, "# win_rate,metric,adaptive_checkpoint,fixed_checkpoint,rate")?;
    for w in &report.win_rates {
        writeln!(
            sink,
            "# win_rate,{},{},{},{}",
            w.metric.name(),
            w.adaptive_t,
            w.fixed_t,
            w.rate
        )?;
    }
    Ok(())
}
