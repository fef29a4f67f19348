//! `cadherin`: stationary states, time evolution, Picard certificates and an
//! invariant suite for the free/bound exchange model.

mod commands;
mod output;
mod settings;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use cadherin_core::{PicardError, StationaryError, ValidationError};
use clap::{Args, Parser, Subcommand};

use output::{Manifest, OutputDir};
use settings::Settings;

/// Exit codes beyond the generic `1`.
mod exit {
    pub const INVALID_PARAMETERS: u8 = 3;
    pub const GREGARIOUS_VIOLATION: u8 = 4;
    pub const HYPOTHESIS_VIOLATED: u8 = 5;
    pub const NO_CONVERGENCE: u8 = 6;
    pub const CHECK_FAILED: u8 = 7;
}

#[derive(Parser, Debug)]
#[command(
    name = "cadherin",
    version,
    about = "Free/bound particle exchange on the unit square"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Roots of the stationary cubic and the admissible equilibrium.
    Stationary {
        #[command(flatten)]
        common: Common,
        /// Epsilon grid, `a:b:n` or a comma list.
        #[arg(long)]
        eps_sweep: Option<String>,
    },
    /// Time integration with snapshots and diagnostics.
    Evolve {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        run: RunArgs,
        /// Stop once all three errors to the equilibrium are below this.
        #[arg(long)]
        stop_threshold: Option<f64>,
        /// Write a snapshot every this many steps.
        #[arg(long)]
        snapshot_every: Option<usize>,
        /// Grow the step geometrically up to this value.
        #[arg(long)]
        dt_max: Option<f64>,
        #[arg(long)]
        dt_growth: Option<f64>,
        /// Rate-fit window `start,end`; defaults to the last 80% before the stop time.
        #[arg(long)]
        fit_window: Option<String>,
    },
    /// Successive approximations with Cauchy-norm certificates.
    Picard {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        n_max: Option<usize>,
        /// Stop when every Cauchy norm is below tol^2.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Run the invariant suite.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Smaller grids and samples.
        #[arg(long)]
        quick: bool,
        /// Inject a flux leak into the Laplacian (negative control).
        #[arg(long)]
        perturb_laplacian: bool,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    a0: Option<f64>,
    #[arg(long)]
    a1: Option<f64>,
    /// Unbinding rate.
    #[arg(long)]
    eps: Option<f64>,
    /// `NXxNY` or `N`.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    dt: Option<f64>,
    /// Time horizon.
    #[arg(long = "T")]
    t_end: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    /// Flat key=value file applied after the preset and before flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Every constant must lie in (0, 1).
    #[arg(long, conflicts_with = "lenient")]
    strict: bool,
    /// Constants >= 1 only warn.
    #[arg(long)]
    lenient: bool,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// `reference`, `stationary`, `constant:U,V` or `files:U.csv,V.csv`.
    #[arg(long)]
    init: Option<String>,
    /// `riccati-exact` or `explicit-euler`.
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    cg_tol: Option<f64>,
    #[arg(long)]
    cg_max_iter: Option<usize>,
}

fn layered(common: &Common, extra: &[(&str, Option<String>)]) -> Result<Settings> {
    let mut s = Settings::defaults();
    if let Some(p) = &common.preset {
        s.apply_preset(p)?;
    }
    if let Some(path) = &common.config {
        s.apply_file(path)?;
    }
    let flags: Vec<(&str, Option<String>)> = vec![
        ("rho", common.rho.map(|x| x.to_string())),
        ("sigma", common.sigma.map(|x| x.to_string())),
        ("a0", common.a0.map(|x| x.to_string())),
        ("a1", common.a1.map(|x| x.to_string())),
        ("eps", common.eps.map(|x| x.to_string())),
        ("grid", common.grid.clone()),
        ("dt", common.dt.map(|x| x.to_string())),
        ("T", common.t_end.map(|x| x.to_string())),
        ("out", common.out.as_ref().map(|p| p.display().to_string())),
        ("mode", common.strict.then(|| "strict".to_string())),
        ("mode", common.lenient.then(|| "lenient".to_string())),
    ];
    for (k, v) in flags.into_iter().chain(extra.iter().cloned()) {
        if let Some(v) = v {
            s.set(k, &v, "flag");
        }
    }
    Ok(s)
}

fn run_args(r: &RunArgs) -> Vec<(&'static str, Option<String>)> {
    vec![
        ("init", r.init.clone()),
        ("scheme", r.scheme.clone()),
        ("cg_tol", r.cg_tol.map(|x| x.to_string())),
        ("cg_max_iter", r.cg_max_iter.map(|x| x.to_string())),
    ]
}

fn verify(s: &Settings, quick: bool, perturb: bool) -> Result<bool> {
    let started = Instant::now();
    let params = s.raw_params()?.validate(s.mode()?)?.params;
    let opts = verify::VerifyOptions {
        quick,
        perturb_laplacian: perturb,
        seed: s.require("seed")?,
    };
    let checks = verify::run_suite(params, opts);
    for c in &checks {
        println!(
            "check={} status={} value={} limit={}",
            c.name,
            if c.pass { "pass" } else { "fail" },
            output::num(c.value),
            output::num(c.limit)
        );
    }
    let failed = checks.iter().filter(|c| !c.pass).count();
    let mut out = OutputDir::create(&s.out_dir())?;
    out.write_text("series/verify.csv", &verify::report_csv(&checks), "csv")?;
    let mut m = Manifest::new("verify", started);
    m.push("quick", quick);
    m.push("perturb_laplacian", perturb);
    m.push("seed", opts.seed);
    m.push("checks", checks.len());
    m.push("failed", failed);
    out.finish(m)?;
    println!(
        "verify: {} of {} checks passed",
        checks.len() - failed,
        checks.len()
    );
    Ok(failed == 0)
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Stationary { common, eps_sweep } => {
            let s = layered(&common, &[("eps_sweep", eps_sweep)])?;
            commands::stationary(&s)
        }
        Command::Evolve {
            common,
            run,
            stop_threshold,
            snapshot_every,
            dt_max,
            dt_growth,
            fit_window,
        } => {
            let mut extra = run_args(&run);
            extra.extend([
                ("stop_threshold", stop_threshold.map(|x| x.to_string())),
                ("snapshot_every", snapshot_every.map(|x| x.to_string())),
                ("dt_max", dt_max.map(|x| x.to_string())),
                ("dt_growth", dt_growth.map(|x| x.to_string())),
                ("fit_window", fit_window),
            ]);
            let s = layered(&common, &extra)?;
            commands::evolve(&s)
        }
        Command::Picard {
            common,
            run,
            n_max,
            tol,
        } => {
            let mut extra = run_args(&run);
            extra.extend([
                ("n_max", n_max.map(|x| x.to_string())),
                ("tol", tol.map(|x| x.to_string())),
            ]);
            let s = layered(&common, &extra)?;
            commands::picard(&s)
        }
        Command::Verify {
            common,
            quick,
            perturb_laplacian,
            seed,
        } => {
            let s = layered(&common, &[("seed", seed.map(|x| x.to_string()))])?;
            if verify(&s, quick, perturb_laplacian).context("running the invariant suite")? {
                Ok(())
            } else {
                Err(VerifyFailed.into())
            }
        }
    }
}

#[derive(Debug, thiserror::Error)]
#[error("one or more invariant checks failed")]
struct VerifyFailed;

fn exit_code(e: &anyhow::Error) -> u8 {
    let validation =
        e.downcast_ref::<ValidationError>()
            .or_else(|| match e.downcast_ref::<StationaryError>() {
                Some(StationaryError::InvalidParameters(v)) => Some(v),
                _ => None,
            });
    if let Some(v) = validation {
        return if v.has_gregarious_violation() {
            exit::GREGARIOUS_VIOLATION
        } else {
            exit::INVALID_PARAMETERS
        };
    }
    match e.downcast_ref::<PicardError>() {
        Some(PicardError::HypothesisViolated(_)) => return exit::HYPOTHESIS_VIOLATED,
        Some(PicardError::NoConvergence { .. }) => return exit::NO_CONVERGENCE,
        _ => {}
    }
    if e.is::<VerifyFailed>() || e.is::<commands::CertificateFailed>() {
        return exit::CHECK_FAILED;
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
