//! Command-line interface: `characteristics`, `sweep`, `samplesize`, `bf`
//! and `simulate`, driven by JSON design configurations.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure,
//! 4 unreachable sample size target.

pub mod config;
pub mod output;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::json;

use crate::bayesfactor::{bf01_t, bf01_z, AnalysisPriorSpec, BfError, InformedT, ZObservation};
use crate::design::{
    characteristics, equally_spaced, find_max_n, DesignError, DesignPrior, DesignReport,
    Hypothesis, SequentialDesign,
};
use crate::numerics::Tolerance;
use crate::simulate::{simulate, SimConfig};

pub use config::{ConfigError, DesignConfig};
use output::{bf_text, report_rows, text_report, write_csv, CsvRow};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_UNREACHABLE: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "seqbf",
    version,
    about = "Design calculations for sequential Bayes factor experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum HypothesisArg {
    H0,
    H1,
}

impl From<HypothesisArg> for Hypothesis {
    fn from(h: HypothesisArg) -> Self {
        match h {
            HypothesisArg::H0 => Hypothesis::H0,
            HypothesisArg::H1 => Hypothesis::H1,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Design configuration (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Write machine-readable output to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Overrides the seed of the configuration.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Absolute error tolerance of the probability integrals.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Stagewise stopping probabilities and sample size distribution.
    Characteristics(Common),
    /// Operating characteristics over a grid of maximum sample sizes and analyses.
    Sweep(Common),
    /// Smallest maximum sample size reaching a target probability.
    Samplesize {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        target: Option<f64>,
        #[arg(long, value_enum)]
        hypothesis: Option<HypothesisArg>,
        #[arg(long)]
        n_lo: Option<u64>,
        #[arg(long)]
        n_hi: Option<u64>,
    },
    /// Bayes factor for an observed statistic.
    Bf(BfArgs),
    /// Monte Carlo check of the analytic characteristics.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        reps: Option<u64>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct BfArgs {
    /// Take the analysis prior from a design configuration.
    #[arg(long, conflicts_with = "family")]
    pub config: Option<PathBuf>,
    /// directional_directional, point_point, point_two_sided, point_directional or informed_t.
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    /// Degrees of freedom of the informed t prior.
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Lower truncation of the informed t prior.
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<f64>,
    /// Upper truncation of the informed t prior.
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub z: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub t: Option<f64>,
    /// Sample size of a one-sample or paired t-test.
    #[arg(long, conflicts_with_all = ["n1", "n2"])]
    pub n: Option<f64>,
    #[arg(long, requires = "n2")]
    pub n1: Option<f64>,
    #[arg(long, requires = "n1")]
    pub n2: Option<f64>,
    /// Overrides the degrees of freedom implied by the sample sizes.
    #[arg(long)]
    pub df: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

/// Failure of a command, carrying its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn config(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::config(e.to_string())
    }
}

impl From<DesignError> for CliError {
    fn from(e: DesignError) -> Self {
        let code = match &e {
            DesignError::Unreachable { .. } => EXIT_UNREACHABLE,
            DesignError::Mvn(_) | DesignError::Numerics(_) => EXIT_NUMERICAL,
            DesignError::BayesFactor(BfError::Numerics { .. }) => EXIT_NUMERICAL,
            _ => EXIT_CONFIG,
        };
        let message = match &e {
            DesignError::Unreachable { .. } => format!("target unreachable: {e}"),
            _ => e.to_string(),
        };
        Self { code, message }
    }
}

impl From<BfError> for CliError {
    fn from(e: BfError) -> Self {
        CliError::from(DesignError::from(e))
    }
}

/// Output of a successful command.
#[derive(Debug, Default)]
pub struct Outcome {
    pub stdout: String,
    /// File name and contents to write.
    pub file: Option<(PathBuf, String)>,
}

struct Loaded {
    config: DesignConfig,
    design: SequentialDesign,
    tol: Tolerance,
    seed: u64,
}

fn load(common: &Common) -> Result<Loaded, CliError> {
    let config = DesignConfig::load(&common.config)?;
    let design = config.design()?;
    let mut tol = config.tolerance();
    if let Some(t) = common.tol {
        tol = Tolerance::new(t, tol.rel_tol, tol.max_iter)
            .map_err(|e| CliError::config(format!("--tol: {e}")))?;
    }
    let seed = common.seed.unwrap_or(config.seed);
    Ok(Loaded {
        config,
        design,
        tol,
        seed,
    })
}

/// Puts `machine` in the `--out` file, or on stdout in place of the text
/// report when only `--format` is given.
fn emit(
    common_out: &Option<PathBuf>,
    format: Option<Format>,
    text: String,
    machine: impl Fn(Format) -> String,
    default: Format,
) -> Outcome {
    match (common_out, format) {
        (Some(path), f) => Outcome {
            stdout: text,
            file: Some((path.clone(), machine(f.unwrap_or(default)))),
        },
        (None, Some(f)) => Outcome {
            stdout: machine(f),
            file: None,
        },
        (None, None) => Outcome {
            stdout: text,
            file: None,
        },
    }
}

fn to_json(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json value");
    s.push('\n');
    s
}

pub fn cmd_characteristics(common: &Common) -> Result<Outcome, CliError> {
    let l = load(common)?;
    let report = characteristics(&l.design, &l.tol, l.seed)?;
    let text = text_report(&l.design, &report);
    let name = l.config.name.clone();
    Ok(emit(
        &common.out,
        common.format,
        text,
        |f| match f {
            Format::Json => {
                to_json(&json!({ "design_id": name, "config": l.config, "report": report }))
            }
            Format::Csv => write_csv(&report_rows(&name, &report)),
        },
        Format::Json,
    ))
}

struct SweepPoint {
    m: usize,
    n_max: f64,
    prior: usize,
    report: DesignReport,
    n_last: Vec<f64>,
}

pub fn cmd_sweep(common: &Common) -> Result<Outcome, CliError> {
    let l = load(common)?;
    let spec = l.config.sweep.clone().ok_or_else(|| {
        CliError::config(format!("{}: no `sweep` section", common.config.display()))
    })?;
    let mut grid = Vec::new();
    for (pi, _) in spec.design_priors.iter().enumerate() {
        for &m in &spec.m {
            for &n_max in &spec.n_max {
                grid.push((pi, m, n_max));
            }
        }
    }
    if grid.is_empty() {
        return Err(CliError::config("empty sweep grid"));
    }
    let points: Vec<SweepPoint> = grid
        .par_iter()
        .map(|&(pi, m, n_max)| -> Result<SweepPoint, CliError> {
            let p = &spec.design_priors[pi];
            let n = equally_spaced(n_max, m, true);
            let design = l
                .design
                .rescheduled(&n)?
                .with_design_prior(DesignPrior::new(p.mu, p.sd)?)?;
            let report = characteristics(&design, &l.tol, l.seed)?;
            let n_last = design.schedule.stages()[m - 1].n_report.clone();
            Ok(SweepPoint {
                m,
                n_max,
                prior: pi,
                report,
                n_last,
            })
        })
        .collect::<Result<_, _>>()?;

    let mut rows = Vec::new();
    let mut text = String::new();
    let _ = writeln!(
        text,
        "{:<24} {:>3} {:>7} {:>11} {:>14} {:>10}",
        "design prior", "m", "n_max", "Pr(correct)", "Pr(misleading)", "E(n)"
    );
    for pt in &points {
        let p = &spec.design_priors[pt.prior];
        let id = format!(
            "{}|m={}|n_max={}|{}",
            l.config.name, pt.m, pt.n_max, p.label
        );
        let last = pt.report.stages.last().expect("non-empty report");
        let (correct, misleading) = match p.truth {
            Hypothesis::H1 => (last.h1, last.h0),
            Hypothesis::H0 => (last.h0, last.h1),
        };
        let row = |metric: &str, value: f64, err: Option<f64>| CsvRow {
            design_id: id.clone(),
            m: pt.m,
            stage: pt.m,
            n1: pt.n_last[0],
            n2: pt.n_last.get(1).copied(),
            metric: metric.to_string(),
            value,
            err_est: err,
        };
        rows.push(row("pr_h1", last.h1.value, Some(last.h1.err_est)));
        rows.push(row("pr_h0", last.h0.value, Some(last.h0.err_est)));
        rows.push(row(
            "pr_inconclusive",
            last.inconclusive.value,
            Some(last.inconclusive.err_est),
        ));
        rows.push(row("pr_correct", correct.value, Some(correct.err_est)));
        rows.push(row(
            "pr_misleading",
            misleading.value,
            Some(misleading.err_est),
        ));
        rows.push(row("expected_n_1", pt.report.expected_n[0], None));
        rows.push(row("sd_n_1", pt.report.sd_n[0], None));
        let _ = writeln!(
            text,
            "{:<24} {:>3} {:>7} {:>11.4} {:>14.4} {:>10.2}",
            p.label, pt.m, pt.n_max, correct.value, misleading.value, pt.report.expected_n[0]
        );
    }
    let csv = write_csv(&rows);
    Ok(match (&common.out, common.format) {
        (Some(path), Some(Format::Json)) => Outcome {
            stdout: text,
            file: Some((
                path.clone(),
                to_json(&serde_json::to_value(&rows).expect("rows")),
            )),
        },
        (Some(path), _) => Outcome {
            stdout: text,
            file: Some((path.clone(), csv)),
        },
        (None, Some(Format::Json)) => Outcome {
            stdout: to_json(&serde_json::to_value(&rows).expect("rows")),
            file: None,
        },
        (None, _) => Outcome {
            stdout: csv,
            file: None,
        },
    })
}

pub fn cmd_samplesize(
    common: &Common,
    target: Option<f64>,
    hypothesis: Option<Hypothesis>,
    n_lo: Option<u64>,
    n_hi: Option<u64>,
) -> Result<Outcome, CliError> {
    let l = load(common)?;
    let spec = l.config.samplesize;
    let target = target
        .or(spec.map(|s| s.target))
        .ok_or_else(|| CliError::config("no target given (--target or samplesize.target)"))?;
    let hypothesis = hypothesis.or(spec.map(|s| s.hypothesis)).ok_or_else(|| {
        CliError::config("no hypothesis given (--hypothesis or samplesize.hypothesis)")
    })?;
    let n_lo = n_lo
        .or(spec.map(|s| s.n_lo))
        .unwrap_or(l.design.m() as u64 + 1);
    let n_hi = n_hi.or(spec.map(|s| s.n_hi)).unwrap_or(1000);
    let r = find_max_n(&l.design, target, hypothesis, (n_lo, n_hi), &l.tol, l.seed)?;
    let design = l.design.rescheduled(&r.n_per_stage)?;
    let h = match hypothesis {
        Hypothesis::H0 => "H0",
        Hypothesis::H1 => "H1",
    };
    let sizes: Vec<String> = r.n_per_stage.iter().map(|n| output::fmt_num(*n)).collect();
    let mut text = String::new();
    let _ = writeln!(text, "Maximum sample size per arm: {}", r.n_max);
    let _ = writeln!(text, "Analyses at:                 {}", sizes.join(", "));
    let _ = writeln!(
        text,
        "Pr({h} stop by last analysis): {:.4} (target {})",
        r.probability.value,
        output::fmt_num(target)
    );
    let _ = writeln!(
        text,
        "Continuous root:             {:.3}",
        r.continuous_root
    );
    let _ = writeln!(text);
    text.push_str(&text_report(&design, &r.report));
    let name = l.config.name.clone();
    Ok(emit(
        &common.out,
        common.format,
        text,
        |f| match f {
            Format::Json => to_json(&json!({ "design_id": name, "result": r })),
            Format::Csv => {
                let mut rows = report_rows(&name, &r.report);
                let last = r.report.stages.last().expect("non-empty").n_report.clone();
                rows.push(CsvRow {
                    design_id: name.clone(),
                    m: r.report.m(),
                    stage: r.report.m(),
                    n1: last[0],
                    n2: last.get(1).copied(),
                    metric: "n_max".into(),
                    value: r.n_max as f64,
                    err_est: None,
                });
                write_csv(&rows)
            }
        },
        Format::Json,
    ))
}

fn bf_spec(args: &BfArgs) -> Result<AnalysisPriorSpec, CliError> {
    if let Some(path) = &args.config {
        return Ok(DesignConfig::load(path)?.analysis_prior);
    }
    let family = args
        .family
        .as_deref()
        .ok_or_else(|| CliError::config("give --family or --config"))?;
    let need = |name: &str, v: Option<f64>| {
        v.ok_or_else(|| CliError::config(format!("--{name} is required for {family}")))
    };
    let spec = match family {
        "directional_directional" => AnalysisPriorSpec::DirectionalDirectional {
            mu: need("mu", args.mu)?,
            tau: need("tau", args.tau)?,
        },
        "point_point" => AnalysisPriorSpec::PointPoint {
            mu: need("mu", args.mu)?,
        },
        "point_two_sided" => AnalysisPriorSpec::PointTwoSided {
            mu: need("mu", args.mu)?,
            tau: need("tau", args.tau)?,
        },
        "point_directional" => AnalysisPriorSpec::PointDirectional {
            mu: need("mu", args.mu)?,
            tau: need("tau", args.tau)?,
        },
        "informed_t" => {
            let d = InformedT::jzs();
            AnalysisPriorSpec::InformedT(InformedT {
                mu: args.mu.unwrap_or(d.mu),
                tau: args.tau.unwrap_or(d.tau),
                kappa: args.kappa.unwrap_or(d.kappa),
                a: args.a.unwrap_or(d.a),
                b: args.b.unwrap_or(d.b),
            })
        }
        other => return Err(CliError::config(format!("unknown family `{other}`"))),
    };
    spec.validate()?;
    Ok(spec)
}

pub fn cmd_bf(args: &BfArgs) -> Result<Outcome, CliError> {
    let spec = bf_spec(args)?;
    let (bf, inputs) = match spec {
        AnalysisPriorSpec::InformedT(t) => {
            let stat = args
                .t
                .ok_or_else(|| CliError::config("--t is required for informed_t"))?;
            let (n_eff, df) = match (args.n, args.n1, args.n2) {
                (Some(n), None, None) => (n, n - 1.0),
                (None, Some(n1), Some(n2)) => (n1 * n2 / (n1 + n2), n1 + n2 - 2.0),
                _ => return Err(CliError::config("give --n, or --n1 and --n2")),
            };
            let df = args.df.unwrap_or(df);
            (
                bf01_t(stat, n_eff, df, &t)?,
                json!({ "t": stat, "n_eff": n_eff, "df": df }),
            )
        }
        _ => {
            let z = args.z.ok_or_else(|| CliError::config("--z is required"))?;
            let sigma = args
                .sigma
                .ok_or_else(|| CliError::config("--sigma is required"))?;
            let obs = ZObservation::new(z, sigma)?;
            (bf01_z(&obs, &spec)?, json!({ "z": z, "sigma": sigma }))
        }
    };
    if !(bf.is_finite() && bf > 0.0) {
        return Err(CliError {
            code: EXIT_NUMERICAL,
            message: format!("BF01 = {bf} is outside the floating point range"),
        });
    }
    let text = format!("Analysis prior: {}\n{}", spec.describe(), bf_text(bf));
    let machine = |f: Format| match f {
        Format::Json => to_json(
            &json!({ "analysis_prior": spec, "inputs": inputs, "bf01": bf, "bf10": 1.0 / bf }),
        ),
        Format::Csv => format!("bf01,bf10\n{},{}\n", bf, 1.0 / bf),
    };
    Ok(emit(&args.out, args.format, text, machine, Format::Json))
}

pub fn cmd_simulate(common: &Common, reps: Option<u64>) -> Result<Outcome, CliError> {
    let l = load(common)?;
    let reps = reps
        .or(l.config.simulation.map(|s| s.reps))
        .unwrap_or(100_000);
    let cfg = SimConfig::new(reps, l.seed).map_err(|e| CliError::config(e.to_string()))?;
    let analytic = characteristics(&l.design, &l.tol, l.seed)?;
    let empirical = simulate(&l.design, &cfg)?;

    let mut text = text_report(&l.design, &empirical);
    let _ = writeln!(text);
    let _ = writeln!(
        text,
        "Analytic vs simulated (bound = 3 combined standard errors):"
    );
    let _ = writeln!(
        text,
        "{:>6} {:<16} {:>9} {:>9} {:>9} {:>9} {:>5}",
        "Stage", "Metric", "Analytic", "Simulated", "|Diff|", "Bound", "Check"
    );
    let mut all_pass = true;
    for (a, e) in analytic.stages.iter().zip(&empirical.stages) {
        for (metric, x, y) in [
            ("Pr(H1 stop)", a.h1, e.h1),
            ("Pr(H0 stop)", a.h0, e.h0),
            ("Pr(inconclusive)", a.inconclusive, e.inconclusive),
        ] {
            let diff = (x.value - y.value).abs();
            let bound = (x.err_est.powi(2) + y.err_est.powi(2)).sqrt();
            let pass = diff <= bound;
            all_pass &= pass;
            let _ = writeln!(
                text,
                "{:>6} {:<16} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>5}",
                a.stage,
                metric,
                x.value,
                y.value,
                diff,
                bound,
                if pass { "PASS" } else { "FAIL" }
            );
        }
    }
    let _ = writeln!(text, "Overall: {}", if all_pass { "PASS" } else { "FAIL" });
    let name = l.config.name.clone();
    Ok(emit(
        &common.out,
        common.format,
        text,
        |f| match f {
            Format::Json => to_json(&json!({
                "design_id": name,
                "replications": reps,
                "seed": l.seed,
                "analytic": analytic,
                "simulated": empirical,
            })),
            Format::Csv => {
                let mut rows = report_rows(&format!("{name}|analytic"), &analytic);
                rows.extend(report_rows(&format!("{name}|simulated"), &empirical));
                write_csv(&rows)
            }
        },
        Format::Csv,
    ))
}

pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Characteristics(c) => cmd_characteristics(c),
        Command::Sweep(c) => cmd_sweep(c),
        Command::Samplesize {
            common,
            target,
            hypothesis,
            n_lo,
            n_hi,
        } => cmd_samplesize(
            common,
            *target,
            hypothesis.map(Hypothesis::from),
            *n_lo,
            *n_hi,
        ),
        Command::Bf(args) => cmd_bf(args),
        Command::Simulate { common, reps } => cmd_simulate(common, *reps),
    }
}

/// Parses `args`, runs the command, prints and writes its output, and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(out) => {
            print!("{}", out.stdout);
            if let Some((path, contents)) = out.file {
                if let Err(e) = std::fs::write(&path, contents) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    return EXIT_CONFIG;
                }
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}
