//! Command-line front end.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use super::config::{parse_config, ExperimentConfig, ReportFormat};
use super::report::render_report;
use super::run::{build_schedules, run_convergence, RunOptions};
use super::validate::validation_suite;
use crate::error::{Error, Result};
use crate::norms::{
    gagliardo, kernel_admissibility, kernel_seminorm, lp_norm, weight_condition, weighted_gagliardo, Verdict,
};
use crate::partition::PartitionOfUnity;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_PRECONDITION: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "fracdense", version, about = "Whitney smoothing and fractional seminorm experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Jsonl,
}

#[derive(Debug, Default, Args)]
pub struct CommonArgs {
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<FormatArg>,
    /// Run even when a pre-check fails.
    #[arg(long, global = true)]
    pub override_precheck: bool,
    /// Gauss–Legendre points per panel.
    #[arg(long, global = true)]
    pub quad_order: Option<usize>,
    #[arg(long, global = true)]
    pub max_generation: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Dump the Whitney decomposition as CSV.
    Whitney,
    /// Build the η schedules and dump them as CSV.
    Smooth,
    /// Norms of the configured function itself.
    Seminorm,
    /// Weight integrability condition.
    CheckWeight,
    /// Kernel admissibility integral.
    CheckKernel,
    /// Convergence run with report.
    Converge,
    /// Structural validation suite (no config needed).
    Validate,
}

/// Output text and exit code of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub text: String,
    pub code: i32,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) => EXIT_IO,
        _ => EXIT_PRECONDITION,
    }
}

fn load(common: &CommonArgs) -> Result<ExperimentConfig> {
    let path = common.config.as_ref().ok_or_else(|| Error::Config(vec!["--config is required".into()]))?;
    let text = std::fs::read_to_string(path)?;
    let mut cfg = parse_config(&text)?;
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(o) = common.quad_order {
        cfg.quadrature.order = o;
    }
    if let Some(g) = common.max_generation {
        cfg.max_generation = g;
    }
    if let Some(f) = common.format {
        cfg.output.format = match f {
            FormatArg::Csv => ReportFormat::Csv,
            FormatArg::Jsonl => ReportFormat::Jsonl,
        };
    }
    cfg.validate()?;
    Ok(cfg)
}

fn header(cfg: &ExperimentConfig) -> String {
    format!("# config_sha256={}\n# seed={}\n", cfg.hash(), cfg.seed)
}

fn json_line(name: &str, v: &impl serde::Serialize) -> Result<String> {
    let mut m = serde_json::to_value(v)?;
    if let Some(o) = m.as_object_mut() {
        o.insert("name".into(), name.into());
    }
    Ok(serde_json::to_string(&m)? + "\n")
}

/// Runs one command without touching the process state; `out` is honoured.
pub fn execute(cmd: Command, common: &CommonArgs) -> Result<Outcome> {
    let ok = |text: String| Outcome { text, code: EXIT_OK };
    let outcome = match cmd {
        Command::Validate => {
            let seed = common.seed.unwrap_or(0);
            let reports = validation_suite(seed)?;
            let mut text = format!("# seed={seed}\n");
            for r in &reports {
                text.push_str(&r.to_json_line());
                text.push('\n');
            }
            let code = if reports.iter().all(|r| r.passed) { EXIT_OK } else { EXIT_VALIDATION };
            Outcome { text, code }
        }
        Command::Whitney => {
            let cfg = load(common)?;
            ok(header(&cfg) + &cfg.decomposition()?.to_csv())
        }
        Command::Smooth => {
            let cfg = load(common)?;
            let f = cfg.function()?;
            let pou = PartitionOfUnity::new(cfg.decomposition()?);
            let mut text = header(&cfg);
            for s in build_schedules(&cfg, &f, &pou)? {
                let _ = writeln!(text, "# schedule {}", serde_json::to_string(&s.mode)?);
                text.push_str(&s.to_csv());
            }
            ok(text)
        }
        Command::Seminorm => {
            let cfg = load(common)?;
            let f = cfg.function()?;
            let (spec, params, quad) = (&cfg.domain, cfg.params(), cfg.quad());
            let mut text = header(&cfg);
            for &kind in &cfg.errors {
                use super::config::NormKind::*;
                let e = match kind {
                    Lp => lp_norm(&f, spec, params.p, None, &quad)?,
                    WeightedLp => lp_norm(&f, spec, params.p, cfg.weight.as_ref(), &quad)?,
                    Seminorm => gagliardo(&f, spec, &params, &quad)?,
                    WeightedSeminorm => weighted_gagliardo(&f, spec, &params, cfg.weight.as_ref().expect("validated"), &quad)?,
                    Kernel | XNorm => kernel_seminorm(&f, spec, params.p, cfg.kernel.as_ref().expect("validated"), &quad)?,
                };
                text.push_str(&json_line(kind.name(), &e)?);
            }
            ok(text)
        }
        Command::CheckWeight => {
            let cfg = load(common)?;
            let w = cfg.weight.as_ref().ok_or_else(|| Error::Config(vec!["config has no weight".into()]))?;
            let e = weight_condition(w, &cfg.domain, &cfg.params(), &cfg.quad())?;
            let code = if e.verdict == Verdict::Finite { EXIT_OK } else { EXIT_VALIDATION };
            Outcome { text: header(&cfg) + &json_line("weight_condition", &e)?, code }
        }
        Command::CheckKernel => {
            let cfg = load(common)?;
            let k = cfg.kernel.as_ref().ok_or_else(|| Error::Config(vec!["config has no kernel".into()]))?;
            let e = kernel_admissibility(k, cfg.domain.dim(), cfg.p, &cfg.quad())?;
            let code = if e.verdict == Verdict::Finite { EXIT_OK } else { EXIT_VALIDATION };
            Outcome { text: header(&cfg) + &json_line("kernel_admissibility", &e)?, code }
        }
        Command::Converge => {
            let cfg = load(common)?;
            let report = run_convergence(&cfg, RunOptions { override_precheck: common.override_precheck })?;
            let text = render_report(&report, &cfg.tolerances, cfg.output.format)?;
            let code = if report.passed() { EXIT_OK } else { EXIT_VALIDATION };
            Outcome { text, code }
        }
    };
    Ok(outcome)
}

/// Parses `args`, runs, writes the output and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_PRECONDITION } else { EXIT_OK };
        }
    };
    match execute(cli.command, &cli.common) {
        Ok(o) => {
            let written = match &cli.common.out {
                Some(p) => std::fs::write(p, &o.text),
                None => {
                    print!("{}", o.text);
                    Ok(())
                }
            };
            match written {
                Ok(()) => o.code,
                Err(e) => {
                    eprintln!("error: {e}");
                    EXIT_IO
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
