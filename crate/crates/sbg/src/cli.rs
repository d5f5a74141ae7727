//! Command-line front end. The binary is a thin wrapper over [`run`]; every
//! subcommand delegates to the library.
//!
//! Exit codes: 0 on success, 1 on configuration or I/O errors, 2 on
//! numerical failures.

use crate::error::{Result, SbgError};
use crate::estimators::{self, EstimateSet};
use crate::fisher::{self, GridSpec, ParametricModel};
use crate::harness::{self, ExperimentConfig};
use crate::simulate::{self, SamplingScheme};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "sbg",
    version,
    about = "Jump-activity index estimation for discretely observed semimartingales"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker-thread limit for parallel sections (default: SBG_JOBS, then
    /// all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one path and write its increments as a binary dump.
    Simulate {
        /// Experiment config (JSON); model, scheme and mode are used.
        #[arg(long)]
        config: PathBuf,
        /// Override the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output path for the increment dump.
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate the jump-activity indices from an increment dump.
    Estimate {
        /// Increment dump produced by `simulate`.
        #[arg(long)]
        input: PathBuf,
        /// Experiment config (JSON); the estimator sections are used.
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Output path (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the full Monte Carlo experiment described by a config.
    Montecarlo {
        #[arg(long)]
        config: PathBuf,
        /// Override the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Diagonal Fisher information over a ladder of observation meshes.
    Fisher(FisherArgs),
    /// Attainable-rate exponents and the contrast-vs-optimal comparison.
    Rates(RatesArgs),
}

#[derive(Args)]
struct FisherArgs {
    #[arg(long, default_value_t = 1.0)]
    beta1: f64,
    #[arg(long, default_value_t = 0.5)]
    a1: f64,
    #[arg(long, default_value_t = 0.75)]
    beta2: f64,
    #[arg(long, default_value_t = 0.2)]
    a2: f64,
    /// Brownian variance c = σ².
    #[arg(long, default_value_t = 0.1)]
    variance: f64,
    #[arg(long, default_value_t = 0.0)]
    drift: f64,
    /// Comma-separated observation meshes.
    #[arg(long, value_delimiter = ',', default_values_t = [1e-2, 1e-3, 1e-4, 1e-5])]
    deltas: Vec<f64>,
    /// Grid points (power of two).
    #[arg(long, default_value_t = 1 << 18)]
    points: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RatesArgs {
    #[arg(long)]
    beta1: f64,
    #[arg(long)]
    beta2: f64,
    /// Threshold-schedule exponent; defaults to the largest admissible one.
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parse `argv` and execute; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            // help/version are successful exits; anything else is a usage
            // (configuration) error
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return code;
        }
    };
    let jobs = cli
        .jobs
        .or_else(|| {
            std::env::var("SBG_JOBS")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .filter(|j| *j > 0);
    let body = || match cli.command {
        Command::Simulate { config, seed, out } => cmd_simulate(&config, seed, &out),
        Command::Estimate {
            input,
            config,
            format,
            out,
        } => cmd_estimate(&input, &config, format, out.as_deref()),
        Command::Montecarlo {
            config,
            seed,
            format,
            out,
        } => cmd_montecarlo(&config, seed, format, out.as_deref()),
        Command::Fisher(args) => cmd_fisher(&args),
        Command::Rates(args) => cmd_rates(&args),
    };
    let outcome = match jobs {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(body),
            Err(e) => Err(SbgError::InvalidConfig(format!("thread pool: {e}"))),
        },
        None => body(),
    };
    match outcome {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code(&err)
        }
    }
}

fn exit_code(err: &SbgError) -> i32 {
    match err {
        SbgError::InvalidConfig(_)
        | SbgError::ConfigParse { .. }
        | SbgError::Io(_)
        | SbgError::Domain(_) => 1,
        SbgError::NoBracket { .. }
        | SbgError::LossOfAccuracy(_)
        | SbgError::RankDeficient
        | SbgError::OptimizerFailed
        | SbgError::ThresholdBelowFloor { .. }
        | SbgError::PrelimFailed
        | SbgError::GridExpansion(_) => 2,
    }
}

fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| SbgError::InvalidConfig(format!("{}: {e}", path.display())))?;
    ExperimentConfig::from_json(&text)
}

fn open_sink(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(std::io::BufWriter::new(std::fs::File::create(path)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn cmd_simulate(config: &Path, seed: Option<u64>, out: &Path) -> Result<()> {
    let config = load_config(config)?;
    let scheme = config.scheme.scheme()?;
    let model = config.model.resolve(scheme.delta)?;
    let seed = seed.unwrap_or(config.master_seed);
    let series = simulate::simulate_path(&model, &scheme, config.mode, seed)?;
    simulate::write_increments(out, &series)?;
    eprintln!(
        "wrote {} increments at mesh {:.6e} to {}",
        series.increments.len(),
        series.delta,
        out.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct EstimateReport {
    preliminary: EstimateSet,
    estimated_index_count: usize,
    final_estimate: EstimateSet,
}

fn cmd_estimate(input: &Path, config: &Path, format: Format, out: Option<&Path>) -> Result<()> {
    let config = load_config(config)?;
    let series = simulate::read_increments(input)?;
    let scheme = SamplingScheme::new(
        series.increments.len() as f64 * series.delta,
        series.delta,
    )?;
    let (prelim, fin) =
        harness::estimate_series(&series, &scheme, &config.prelim, &config.contrast)?;
    let report = EstimateReport {
        estimated_index_count: estimators::stop_rule(&prelim, config.prelim.epsilon),
        preliminary: prelim,
        final_estimate: fin,
    };
    let mut sink = open_sink(out)?;
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut sink, &report)?;
            sink.write_all(b"\n")?;
        }
        Format::Csv => {
            write!(sink, "stage,index,beta,gamma,status\r\n")?;
            for (stage, set) in [
                ("preliminary", &report.preliminary),
                ("final", &report.final_estimate),
            ] {
                for (i, e) in set.entries.iter().enumerate() {
                    write!(
                        sink,
                        "{stage},{},{},{},{:?}\r\n",
                        i + 1,
                        e.beta.map(|v| v.to_string()).unwrap_or_default(),
                        e.gamma.map(|v| v.to_string()).unwrap_or_default(),
                        e.status
                    )?;
                }
            }
        }
    }
    Ok(())
}

fn cmd_montecarlo(
    config: &Path,
    seed: Option<u64>,
    format: Format,
    out: Option<&Path>,
) -> Result<()> {
    let mut config = load_config(config)?;
    if let Some(seed) = seed {
        config.master_seed = seed;
    }
    let table = harness::run_monte_carlo(&config)?;
    let mut sink = open_sink(out)?;
    match format {
        Format::Csv => harness::write_csv(&mut sink, &table, config.prelim.j)?,
        Format::Json => harness::write_json(&mut sink, &table)?,
    }
    Ok(())
}

#[derive(Serialize)]
struct FisherLadder {
    rows: Vec<fisher::FisherResult>,
    fitted: Vec<FittedSlope>,
}

#[derive(Serialize)]
struct FittedSlope {
    entry: String,
    /// Slope with the theory log-factor removed (reliable on short ladders).
    delta_exponent: f64,
    /// Joint-fit exponents, informative on longer ladders.
    joint_delta_exponent: f64,
    joint_log_exponent: f64,
    theory_delta_exponent: f64,
}

fn cmd_fisher(args: &FisherArgs) -> Result<()> {
    let model = ParametricModel::new(
        args.drift,
        args.variance,
        args.beta1,
        args.a1,
        args.beta2,
        args.a2,
    )?;
    let spec = GridSpec {
        points: args.points,
        ..GridSpec::default()
    };
    let mut deltas = args.deltas.clone();
    deltas.sort_by(f64::total_cmp);
    let rows: Result<Vec<_>> = deltas
        .iter()
        .map(|d| fisher::fisher_all(&model, *d, &spec))
        .collect();
    let rows = rows?;
    let mut fitted = Vec::new();
    if rows.len() >= 3 {
        let pick = |f: fn(&fisher::FisherResult) -> f64| -> Vec<f64> { rows.iter().map(f).collect() };
        #[allow(clippy::type_complexity)]
        // (entry, getter, theory Δ-exponent, theory log exponent)
        let entries: [(&str, fn(&fisher::FisherResult) -> f64, f64, f64); 4] = [
            (
                "beta1_beta1",
                |r| r.beta1_beta1.value,
                1.0 - model.beta1 / 2.0,
                2.0 - model.beta1 / 2.0,
            ),
            (
                "a1_a1",
                |r| r.a1_a1.value,
                1.0 - model.beta1 / 2.0,
                -model.beta1 / 2.0,
            ),
            (
                "beta2_beta2",
                |r| r.beta2_beta2.value,
                1.0 - model.beta2 + model.beta1 / 2.0,
                2.0 - model.beta2 + model.beta1 / 2.0,
            ),
            (
                "a2_a2",
                |r| r.a2_a2.value,
                1.0 - model.beta2 + model.beta1 / 2.0,
                -(model.beta2 - model.beta1 / 2.0),
            ),
        ];
        for (name, getter, theory, theory_kappa) in entries {
            let values = pick(getter);
            let joint = fisher::fit_rate_exponent(&deltas, &values)?;
            let removed = fisher::slope_with_log_factor_removed(&deltas, &values, theory_kappa)?;
            fitted.push(FittedSlope {
                entry: name.to_string(),
                delta_exponent: removed,
                joint_delta_exponent: joint.delta_exponent,
                joint_log_exponent: joint.log_exponent,
                theory_delta_exponent: theory,
            });
        }
    }
    let mut sink = open_sink(args.out.as_deref())?;
    match args.format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut sink, &FisherLadder { rows, fitted })?;
            sink.write_all(b"\n")?;
        }
        Format::Csv => {
            write!(
                sink,
                "delta,I_beta1beta1,I_a1a1,I_beta2beta2,I_a2a2,mass_captured,accuracy_ok\r\n"
            )?;
            for r in &rows {
                let ok = r.beta1_beta1.accuracy_ok
                    && r.a1_a1.accuracy_ok
                    && r.beta2_beta2.accuracy_ok
                    && r.a2_a2.accuracy_ok;
                write!(
                    sink,
                    "{},{},{},{},{},{},{}\r\n",
                    r.delta,
                    r.beta1_beta1.value,
                    r.a1_a1.value,
                    r.beta2_beta2.value,
                    r.a2_a2.value,
                    r.mass_captured,
                    ok
                )?;
            }
            if !fitted.is_empty() {
                write!(sink, "\r\nentry,fitted_delta_exponent,joint_delta_exponent,joint_log_exponent,theory_delta_exponent\r\n")?;
                for f in &fitted {
                    write!(
                        sink,
                        "{},{},{},{},{}\r\n",
                        f.entry,
                        f.delta_exponent,
                        f.joint_delta_exponent,
                        f.joint_log_exponent,
                        f.theory_delta_exponent
                    )?;
                }
            }
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct RatesReport {
    beta1: f64,
    beta2: f64,
    identifiability: Vec<estimators::Identifiability>,
    optimal: Vec<RateRow>,
    comparison: ComparisonRow,
}

#[derive(Serialize)]
struct RateRow {
    parameter: String,
    delta_exponent: Option<f64>,
    log_exponent: Option<f64>,
}

#[derive(Serialize)]
struct ComparisonRow {
    gamma: [f64; 2],
    gamma_prime_at_rho: [f64; 2],
    gamma_prime_optimal: [f64; 2],
    quality_ratio: f64,
    rho: f64,
    rho_max: f64,
    branch_point: f64,
}

fn cmd_rates(args: &RatesArgs) -> Result<()> {
    let (b1, b2) = (args.beta1, args.beta2);
    if !(b1 > 0.0 && b1 < 2.0 && b2 > 0.0 && b2 < b1) {
        return Err(SbgError::Domain(format!(
            "need 0 < beta2 < beta1 < 2, got beta1={b1}, beta2={b2}"
        )));
    }
    // rate formulas only involve the betas; placeholder scales
    let model = ParametricModel::new(0.0, 1.0, b1, 1.0, b2, 1.0)?;
    let optimal = fisher::optimal_rates(&model);
    let rho = args.rho.unwrap_or_else(|| fisher::rho_max(b1));
    let comparison = fisher::rate_comparison(&model, rho)?;
    let pack = |name: &str, r: Option<fisher::RateExponents>| RateRow {
        parameter: name.to_string(),
        delta_exponent: r.map(|v| v.delta_exponent),
        log_exponent: r.map(|v| v.log_exponent),
    };
    let report = RatesReport {
        beta1: b1,
        beta2: b2,
        identifiability: estimators::identifiable_indices(&[b1, b2])?,
        optimal: vec![
            pack("beta1", Some(optimal.beta1)),
            pack("a1", Some(optimal.a1)),
            pack("beta2", optimal.beta2),
            pack("a2", optimal.a2),
        ],
        comparison: ComparisonRow {
            gamma: comparison.gamma,
            gamma_prime_at_rho: comparison.gamma_prime_at_rho,
            gamma_prime_optimal: comparison.gamma_prime_optimal,
            quality_ratio: comparison.quality,
            rho: comparison.rho,
            rho_max: comparison.rho_max,
            branch_point: comparison.branch_point,
        },
    };
    let mut sink = open_sink(args.out.as_deref())?;
    match args.format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut sink, &report)?;
            sink.write_all(b"\n")?;
        }
        Format::Csv => {
            write!(sink, "parameter,delta_exponent,log_exponent\r\n")?;
            for row in &report.optimal {
                write!(
                    sink,
                    "{},{},{}\r\n",
                    row.parameter,
                    row.delta_exponent
                        .map(|v| v.to_string())
                        .unwrap_or_else(|| "not-identifiable".into()),
                    row.log_exponent
                        .map(|v| v.to_string())
                        .unwrap_or_else(|| "not-identifiable".into()),
                )?;
            }
            let c = &report.comparison;
            write!(sink, "\r\nquantity,index_1,index_2\r\n")?;
            write!(sink, "gamma_optimal,{},{}\r\n", c.gamma[0], c.gamma[1])?;
            write!(
                sink,
                "gamma_prime_at_rho,{},{}\r\n",
                c.gamma_prime_at_rho[0], c.gamma_prime_at_rho[1]
            )?;
            write!(
                sink,
                "gamma_prime_optimal,{},{}\r\n",
                c.gamma_prime_optimal[0], c.gamma_prime_optimal[1]
            )?;
            write!(sink, "quality_ratio,{},{}\r\n", c.quality_ratio, c.quality_ratio)?;
            write!(sink, "rho,{0},{0}\r\n", c.rho)?;
            write!(sink, "rho_max,{0},{0}\r\n", c.rho_max)?;
            write!(sink, "branch_point,{0},{0}\r\n", c.branch_point)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_config_exits_one() {
        let code = run(["sbg", "montecarlo", "--config", "/nonexistent/config.json"]);
        assert_eq!(code, 1);
    }

    #[test]
    fn bad_usage_exits_one() {
        assert_eq!(run(["sbg", "frobnicate"]), 1);
        assert_eq!(run(["sbg", "rates", "--beta1", "1.0"]), 1); // beta2 missing
    }

    #[test]
    fn help_exits_zero() {
        assert_eq!(run(["sbg", "--help"]), 0);
    }

    #[test]
    fn rates_rejects_bad_domain() {
        assert_eq!(run(["sbg", "rates", "--beta1", "1.0", "--beta2", "1.5"]), 1);
    }
}
