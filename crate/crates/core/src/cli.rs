//! Command-line front end: `run`, `compare`, `plot` and `live`.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime error.

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::acquisition::{argmax_on_grid, utility_u12};
use crate::config::{load_config, parse_live_snapshot, to_live_snapshot};
use crate::gp::ObservationSet;
use crate::harness::{
    compare_detailed, parse_posterior_csv, parse_trace_csv, posterior_rows, true_optimum, write_comparison_csv,
    write_posterior_csv, write_trace_csv, DEFAULT_REGION,
};
use crate::rng;
use crate::svg::{render_svg_from_rows, PlotOptions, DEFAULT_BAND_MULTIPLIER};
use crate::trial::{live_begin, live_step, run_design, DesignKind, LiveState, ScenarioConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "adaptive-dose", version, about = "Adaptive vs fixed dose-finding trials on a GP surrogate")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Design {
    Adaptive,
    Fixed,
}

impl From<Design> for DesignKind {
    fn from(d: Design) -> Self {
        match d {
            Design::Adaptive => DesignKind::Adaptive,
            Design::Fixed => DesignKind::Fixed,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one trial and write trace.csv and posterior.csv (plus plot.svg with --svg).
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value = "adaptive")]
        design: Design,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long)]
        svg: bool,
        #[arg(long, default_value_t = DEFAULT_BAND_MULTIPLIER)]
        band_multiplier: f64,
    },
    /// Replicate both designs and write the comparison CSV.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 100)]
        seeds: usize,
        #[arg(long, value_delimiter = ',', default_value = "6,12")]
        checkpoints: Vec<usize>,
        /// Overrides the config seed used as the master seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-render plot.svg from the trace.csv and posterior.csv in --out-dir.
    Plot {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// SVG destination; defaults to <out-dir>/plot.svg.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_BAND_MULTIPLIER)]
        band_multiplier: f64,
    },
    /// Interactive trial: prints each recommended dose and reads its outcome.
    ///
    /// --config may also name a snapshot written by --out to resume a trial.
    Live {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Snapshot path, rewritten after every recorded outcome.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

type CliResult = Result<(), Box<dyn std::error::Error>>;

/// Parses `argv` (including the program name) and runs the command.
pub fn dispatch<I, S>(argv: I, input: &mut dyn BufRead, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    EXIT_USAGE
                }
            };
        }
    };

    let result = match cli.command {
        Command::Run {
            config,
            design,
            seed,
            out_dir,
            svg,
            band_multiplier,
        } => {
            if !(band_multiplier.is_finite() && band_multiplier >= 0.0) {
                let _ = writeln!(err, "error: --band-multiplier must be a non-negative number");
                return EXIT_USAGE;
            }
            cmd_run(&config, design.into(), seed, &out_dir, svg, band_multiplier, out)
        }
        Command::Compare {
            config,
            seeds,
            checkpoints,
            seed,
            out: path,
        } => cmd_compare(&config, seeds, &checkpoints, seed, &path, out),
        Command::Plot {
            config,
            out_dir,
            out: path,
            band_multiplier,
        } => {
            if !(band_multiplier.is_finite() && band_multiplier >= 0.0) {
                let _ = writeln!(err, "error: --band-multiplier must be a non-negative number");
                return EXIT_USAGE;
            }
            let path = path.unwrap_or_else(|| out_dir.join("plot.svg"));
            cmd_plot(&config, &out_dir, &path, band_multiplier, out)
        }
        Command::Live {
            config,
            seed,
            out: snapshot,
        } => cmd_live(&config, seed, snapshot.as_deref(), input, out, err),
    };

    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_RUNTIME
        }
    }
}

/// Writes via a temporary file in the destination directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

fn all_observations(config: &ScenarioConfig, trial: &ObservationSet) -> ObservationSet {
    let mut data = config.warm_observations();
    data.extend_from(trial);
    data
}

fn cmd_run(
    config_path: &Path,
    design: DesignKind,
    seed: Option<u64>,
    out_dir: &Path,
    svg: bool,
    band_multiplier: f64,
    out: &mut dyn Write,
) -> CliResult {
    let mut config = load_config(config_path)?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    let grid = config.grid()?;
    let trace = run_design(design, &config, &mut rng::stream(config.seed))?;
    let model = trace.final_posterior()?;

    let mut buf = Vec::new();
    write_trace_csv(&trace, &mut buf)?;
    write_atomic(&out_dir.join("trace.csv"), &buf)?;

    buf.clear();
    write_posterior_csv(&model, &grid, &config.weights, &mut buf)?;
    write_atomic(&out_dir.join("posterior.csv"), &buf)?;

    if svg {
        let rows = posterior_rows(&model, &grid, &config.weights);
        let data = all_observations(&config, &trace.observations());
        buf.clear();
        render_svg_from_rows(
            &rows,
            data.points(),
            &config.truth,
            config.weights.lambda1,
            &grid,
            &PlotOptions { band_multiplier },
            &mut buf,
        )?;
        write_atomic(&out_dir.join("plot.svg"), &buf)?;
    }

    let (est, _) = argmax_on_grid(|x| utility_u12(&model, x, config.weights.lambda1), &grid)?;
    writeln!(
        out,
        "{design} trial: {} steps, seed {}, rng {}",
        trace.steps.len(),
        config.seed,
        trace.rng_algorithm_id
    )?;
    writeln!(
        out,
        "estimated optimum x={est} (true optimum x={})",
        true_optimum(&config.truth, config.weights.lambda1, &grid)
    )?;
    writeln!(out, "wrote {}", out_dir.display())?;
    Ok(())
}

fn cmd_compare(
    config_path: &Path,
    seeds: usize,
    checkpoints: &[usize],
    seed: Option<u64>,
    path: &Path,
    out: &mut dyn Write,
) -> CliResult {
    let mut config = load_config(config_path)?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    let run = compare_detailed(&config, seeds, checkpoints, DEFAULT_REGION, 0)?;
    let mut buf = Vec::new();
    write_comparison_csv(&run.report, &mut buf)?;
    write_atomic(path, &buf)?;

    writeln!(out, "{} replications, master seed {}", seeds, config.seed)?;
    for w in &run.report.win_rates {
        writeln!(
            out,
            "adaptive@{} beats fixed@{} on {}: {:.2}",
            w.adaptive_t,
            w.fixed_t,
            w.metric.name(),
            w.rate
        )?;
    }
    writeln!(out, "wrote {}", path.display())?;
    Ok(())
}

fn cmd_plot(config_path: &Path, out_dir: &Path, svg_path: &Path, band_multiplier: f64, out: &mut dyn Write) -> CliResult {
    let config = load_config(config_path)?;
    let grid = config.grid()?;
    let read = |name: &str| -> Result<String, Box<dyn std::error::Error>> {
        let p = out_dir.join(name);
        std::fs::read_to_string(&p).map_err(|e| format!("cannot read {}: {e}", p.display()).into())
    };
    let steps = parse_trace_csv(&read("trace.csv")?)?;
    let rows = parse_posterior_csv(&read("posterior.csv")?)?;
    let trial = ObservationSet::from_pairs(steps.iter().map(|s| (s.x, s.y)))?;
    let data = all_observations(&config, &trial);

    let mut buf = Vec::new();
    render_svg_from_rows(
        &rows,
        data.points(),
        &config.truth,
        config.weights.lambda1,
        &grid,
        &PlotOptions { band_multiplier },
        &mut buf,
    )?;
    write_atomic(svg_path, &buf)?;
    writeln!(out, "wrote {}", svg_path.display())?;
    Ok(())
}

fn cmd_live(
    config_path: &Path,
    seed: Option<u64>,
    snapshot: Option<&Path>,
    input: &mut dyn BufRead,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> CliResult {
    let text = std::fs::read_to_string(config_path)
        .map_err(|e| format!("cannot read {}: {e}", config_path.display()))?;

    let mut state: LiveState = if text.contains("[observations]") {
        parse_live_snapshot(&text)?
    } else {
        let mut config = load_config(config_path)?;
        if let Some(seed) = seed {
            config.seed = seed;
        }
        live_begin(&config, &mut rng::stream(config.seed))?.0
    };

    let mut line = String::new();
    while let Some(x) = state.pending_x {
        writeln!(out, "t={} recommend x={x}", state.next_t())?;
        out.flush()?;
        line.clear();
        if input.read_line(&mut line)? == 0 {
            writeln!(out, "input closed; trial suspended at t={}", state.next_t())?;
            return Ok(());
        }
        let y = match line.trim().parse::<f64>() {
            Ok(y) if y.is_finite() => y,
            _ => {
                writeln!(err, "not a finite number: `{}`", line.trim())?;
                continue;
            }
        };
        live_step(&mut state, y)?;
        writeln!(out, "recorded y={y}")?;
        if let Some(path) = snapshot {
            write_atomic(path, to_live_snapshot(&state).as_bytes())?;
        }
    }

    let config = &state.config;
    let grid = config.grid()?;
    let model = config.fit(&all_observations(config, &state.observations))?;
    let (est, _) = argmax_on_grid(|x| utility_u12(&model, x, config.weights.lambda1), &grid)?;
    writeln!(out, "trial complete after {} observations", state.observations.len())?;
    writeln!(out, "estimated optimum x={est}")?;
    Ok(())
}
