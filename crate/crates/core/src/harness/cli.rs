//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 for usage or configuration errors, 1 for
//! failures at run time.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::harness::config::{resolve_workers, ExperimentConfig};
use crate::harness::output::emit_results;
use crate::harness::runner::run_monte_carlo;
use crate::problem::NormParam;
use crate::theory::{
    regret_bound_leading, sample_size, taylor_sweep, width_for, BoundFamily, SampleSizeFamily,
    TheoryInputs, FIXED_POINT_MAX_ITER, FIXED_POINT_TOL,
};

#[derive(Debug, Parser)]
#[command(name = "vucb", version, about = "Variance-UCB adaptive sampling experiments and bound calculators")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a Monte Carlo experiment described by a JSON config.
    Simulate(SimulateArgs),
    /// Evaluate regret bounds and the fixed-point machinery.
    #[command(subcommand)]
    Theory(TheoryCommand),
    /// Smallest horizon meeting a worst-case regret target.
    SampleSize(SampleSizeArgs),
    /// Numerical checks of analytical inequalities.
    #[command(subcommand)]
    Check(CheckCommand),
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    runs: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Defaults to the config value, then VUCB_WORKERS, then all cores.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Debug, Args)]
struct InstanceArgs {
    #[arg(long)]
    family: BoundFamily,
    #[arg(long, value_delimiter = ',', required = true)]
    sigma: Vec<f64>,
    #[arg(long, default_value = "inf")]
    p: NormParam,
    #[arg(long = "T")]
    horizon: f64,
    #[arg(long = "c-hat", value_delimiter = ',')]
    c_hat: Option<Vec<f64>>,
}

#[derive(Debug, Subcommand)]
enum TheoryCommand {
    /// Leading-term normalized-regret bound.
    Bound {
        #[command(flatten)]
        inst: InstanceArgs,
        /// Upper bound on the squared 2-norm of sigma (B-AS Gaussian only).
        #[arg(long = "sigma-hat-total")]
        sigma_hat_total: Option<f64>,
    },
    /// Initial rate, fixed point of the potential and decision error.
    FixedPoint {
        #[command(flatten)]
        inst: InstanceArgs,
        #[arg(long, default_value_t = FIXED_POINT_TOL)]
        tol: f64,
        #[arg(long = "max-iter", default_value_t = FIXED_POINT_MAX_ITER)]
        max_iter: usize,
    },
}

#[derive(Debug, Args)]
struct SampleSizeArgs {
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    groups: usize,
    #[arg(long, default_value = "vucb-gaussian")]
    family: SampleSizeFamily,
}

#[derive(Debug, Subcommand)]
enum CheckCommand {
    /// Second-order expansion of the objective on random admissible inputs.
    Taylor {
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn dispatch<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let stdout = std::io::stdout();
    match run(cli, &mut stdout.lock()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::MissingParameter(_)
        | Error::InvalidParameter(_)
        | Error::UnsupportedNorm(_)
        | Error::DegenerateGroup(_)
        | Error::HorizonTooSmall { .. } => 2,
        _ => 1,
    }
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Simulate(a) => simulate(a, out),
        Command::Theory(TheoryCommand::Bound { inst, sigma_hat_total }) => {
            let b = regret_bound_leading(
                inst.family,
                &inst.sigma,
                inst.c_hat.as_deref(),
                sigma_hat_total,
                inst.p,
                inst.horizon,
            )?;
            writeln!(out, "family: {}  p: {}  T: {}", inst.family, inst.p, inst.horizon)?;
            writeln!(out, "leading-term regret bound: {b:.6}")?;
            Ok(())
        }
        Command::Theory(TheoryCommand::FixedPoint { inst, tol, max_iter }) => {
            fixed_point(inst, tol, max_iter, out)
        }
        Command::SampleSize(a) => {
            let r = sample_size(a.eps, a.groups, a.family)?;
            writeln!(out, "family: {}  G: {}  eps: {}", r.family, r.groups, r.eps)?;
            writeln!(out, "bisection T: {}", r.bisection)?;
            match r.closed_form {
                Some(c) => writeln!(out, "closed-form T: {c}")?,
                None => writeln!(out, "closed-form T: n/a")?,
            }
            match r.published {
                Some(v) => writeln!(
                    out,
                    "reference table T: {v:.1e} (not reproduced by the bound above; shown for comparison)"
                )?,
                None => writeln!(out, "reference table T: n/a (off the G x eps grid)")?,
            }
            Ok(())
        }
        Command::Check(CheckCommand::Taylor { trials, seed }) => {
            let s = taylor_sweep(trials, seed)?;
            writeln!(out, "trials: {}", s.trials)?;
            writeln!(out, "violations of 6p^2 bound: {}", s.violations)?;
            writeln!(out, "worst lhs/rhs: {:.4e}", s.worst_ratio)?;
            writeln!(out, "violations of p^2 bound: {}", s.header_violations)?;
            writeln!(out, "worst lhs/rhs (p^2): {:.4e}", s.worst_header_ratio)?;
            if s.violations > 0 {
                return Err(Error::PreconditionViolated(format!(
                    "{} violations of the Taylor bound",
                    s.violations
                )));
            }
            Ok(())
        }
    }
}

fn simulate(a: SimulateArgs, out: &mut dyn Write) -> Result<()> {
    let mut cfg = ExperimentConfig::load(&a.config)?;
    if let Some(r) = a.runs {
        cfg.runs = r;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(o) = a.out {
        cfg.out_dir = Some(o);
    }
    let exp = cfg.validate()?;
    let workers = resolve_workers(a.workers.or(cfg.workers))?;
    let result = run_monte_carlo(&exp, workers)?;
    let dir = cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from("vucb-out"));
    let paths = emit_results(&cfg, &result, &dir)?;

    writeln!(
        out,
        "{:<8} {:>5} {:>10} {:>12} {:>11} {:>25} {:>11}",
        "policy", "p", "T", "mean_regret", "std_err", "95% CI", "bound"
    )?;
    for s in &result.summaries {
        let bound = s.vucb_bound_leading.map_or("-".to_string(), |b| format!("{b:.5}"));
        writeln!(
            out,
            "{:<8} {:>5} {:>10} {:>12.6} {:>11.6} {:>25} {:>11}",
            s.policy.to_string(),
            s.p.to_string(),
            s.horizon,
            s.mean_regret,
            s.std_error,
            format!("[{:.6}, {:.6}]", s.ci95_low, s.ci95_high),
            bound
        )?;
    }
    for p in paths {
        writeln!(out, "wrote {}", p.display())?;
    }
    Ok(())
}

fn fixed_point(inst: InstanceArgs, tol: f64, max_iter: usize, out: &mut dyn Write) -> Result<()> {
    let width = width_for(inst.family, &inst.sigma, inst.c_hat.as_deref(), inst.horizon)?;
    let th = TheoryInputs::new(&inst.sigma, width, inst.p, inst.horizon)?;
    let trace = match th.fixed_point(tol, max_iter) {
        Ok(t) => t,
        Err(Error::NotConverged(t)) => *t,
        Err(e) => return Err(e),
    };
    let g_t = inst.sigma.len() as f64 / inst.horizon;
    writeln!(out, "family: {}  p: {}  T: {}", inst.family, inst.p, inst.horizon)?;
    writeln!(out, "initial rate f0: {:.6e}", trace.f0)?;
    writeln!(out, "fixed point f_inf: {:.6e}", trace.f_inf)?;
    writeln!(out, "iterations: {}", trace.iterates.len() - 1)?;
    writeln!(out, "converged: {}", trace.converged)?;
    match th.decision_error() {
        Ok(d) => {
            writeln!(out, "w1: {:.6e}  w2: {:.6e}  w_bar: {:.6e}", d.w1, d.w2, d.w_bar)?;
            writeln!(out, "f_inf / (w1 + G/T): {:.6}", trace.f_inf / (d.w1 + g_t))?;
        }
        Err(e) => writeln!(out, "decision error: {e}")?,
    }
    if trace.converged {
        Ok(())
    } else {
        Err(Error::NotConverged(Box::new(trace)))
    }
}
