//! The `stationary`, `evolve` and `picard` subcommands.

use std::fmt::Write as _;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use cadherin_core::diagnostics::series_to_csv;
use cadherin_core::evolve::{DtRamp, RunConfig, VScheme};
use cadherin_core::grid::pgm_sidecar;
use cadherin_core::linalg::CgSettings;
use cadherin_core::picard::certificate_summary_csv;
use cadherin_core::*;

use crate::output::{num, Manifest, OutputDir};
use crate::settings::{parse_eps_sweep, parse_window, InitSpec, Settings};

/// Certificates were produced but the bound inequality failed somewhere.
#[derive(Debug, thiserror::Error)]
#[error("certificate inequality failed for iterations {0:?}")]
pub struct CertificateFailed(pub Vec<usize>);

fn echo_settings(m: &mut Manifest, s: &Settings) {
    for (k, v, src) in s.entries() {
        m.push(&format!("config.{k}"), v);
        m.push(&format!("config.{k}.source"), src);
    }
}

fn echo_constants(m: &mut Manifest, c: &DerivedConstants) {
    m.push_num("lambda", c.lambda);
    m.push_num("mu", c.mu);
    m.push_num("k", c.k);
    m.push_num("L", c.big_l);
}

fn validated(s: &Settings, m: &mut Manifest) -> Result<Params> {
    let v = s.raw_params()?.validate(s.mode()?)?;
    for (i, w) in v.warnings.iter().enumerate() {
        eprintln!("warning: {w}");
        m.push(&format!("param_warning.{i}"), w);
    }
    Ok(v.params)
}

fn report_line(r: &CubicRootReport) -> String {
    let roots: Vec<String> = r.roots.iter().map(|x| num(*x)).collect();
    format!(
        "{},{},{},{}",
        num(r.epsilon),
        roots.join(","),
        num(r.admissible),
        num(r.residual)
    )
}

pub fn stationary(s: &Settings) -> Result<()> {
    let started = Instant::now();
    let mut m = Manifest::new("stationary", started);
    echo_settings(&mut m, s);
    let raw = s.raw_params()?;
    let cubic = StationaryCubic::new(raw.rho, raw.a0, raw.a1, raw.epsilon)?;
    if s.mode()? == ValidationMode::Strict {
        let issues: Vec<ParamIssue> = [
            ("rho", raw.rho),
            ("a0", raw.a0),
            ("a1", raw.a1),
            ("epsilon", raw.epsilon),
        ]
        .into_iter()
        .filter(|&(_, v)| v >= 1.0)
        .map(|(name, value)| ParamIssue::StrictRangeViolated { name, value })
        .collect();
        if !issues.is_empty() {
            return Err(ValidationError(issues).into());
        }
    }
    let report = cubic.solve(1e-14)?;
    let roots: Vec<String> = report.roots.iter().map(|x| num(*x)).collect();
    println!("roots={}", roots.join(","));
    println!("admissible={}", num(report.admissible));
    println!("residual={}", num(report.residual));
    m.push("roots", roots.join(","));
    m.push_num("admissible", report.admissible);
    m.push_num("residual", report.residual);
    for w in &report.warnings {
        eprintln!("warning: {w:?}");
        m.push("root_warning", format!("{w:?}"));
    }

    let mut out = OutputDir::create(&s.out_dir())?;
    out.write_text(
        "series/stationary.csv",
        &format!(
            "epsilon,root_0,root_1,root_2,admissible,residual\n{}\n",
            report_line(&report)
        ),
        "csv",
    )?;
    if let Some(spec) = s.raw("eps_sweep") {
        let grid = parse_eps_sweep(spec)?;
        let reports = sweep_epsilon(&cubic, &grid, 1e-14)?;
        let mut csv = String::from("epsilon,root_0,root_1,root_2,admissible,residual\n");
        for r in &reports {
            csv.push_str(&report_line(r));
            csv.push('\n');
        }
        out.write_text("series/eps_sweep.csv", &csv, "csv")?;
        m.push("eps_sweep.points", reports.len());
    }
    out.finish(m)?;
    Ok(())
}

pub fn run_config(s: &Settings, params: Params) -> Result<RunConfig> {
    let grid = s.grid()?;
    let mut cfg = RunConfig::new(params, grid);
    if let Some(dt) = s.get::<f64>("dt")? {
        cfg.dt = dt;
    }
    cfg.t_end = s.require("T")?;
    cfg.scheme_v = s
        .require::<VScheme>("scheme")
        .context("reading the v-scheme")?;
    cfg.snapshot_every = s.require("snapshot_every")?;
    cfg.cg = CgSettings {
        rel_tol: s.require("cg_tol")?,
        max_iter: s.require("cg_max_iter")?,
    };
    match (s.get::<f64>("dt_max")?, s.get::<f64>("dt_growth")?) {
        (Some(dt_max), growth) => {
            cfg.dt_ramp = Some(DtRamp {
                dt_max,
                growth: growth.unwrap_or(1.05),
            })
        }
        (None, Some(_)) => bail!("dt_growth needs dt_max"),
        (None, None) => {}
    }
    Ok(cfg)
}

pub fn initial_data(
    s: &Settings,
    default: &str,
    params: &Params,
    grid: Grid,
) -> Result<(Field, Field)> {
    let spec: InitSpec = s
        .raw("init")
        .unwrap_or(default)
        .parse()
        .map_err(|e: String| anyhow!(e))?;
    Ok(match spec {
        InitSpec::Reference => (
            sample_initial(&InitialProfile::ReferenceU0, grid),
            sample_initial(&InitialProfile::ReferenceV0, grid),
        ),
        InitSpec::Stationary => {
            let v1 = normalized_stationary(params, 1e-15)?.admissible;
            (Field::constant(grid, 1.0 - v1), Field::constant(grid, v1))
        }
        InitSpec::Constant { u, v } => (Field::constant(grid, u), Field::constant(grid, v)),
        InitSpec::Files { u, v } => {
            let load = |p: &std::path::Path| -> Result<Field> {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading {}", p.display()))?;
                let (f, _) =
                    Field::from_csv(&text).with_context(|| format!("parsing {}", p.display()))?;
                if *f.grid() != grid {
                    bail!(
                        "{} is {}x{} but the run grid is {}x{}",
                        p.display(),
                        f.grid().nx(),
                        f.grid().ny(),
                        grid.nx(),
                        grid.ny()
                    );
                }
                Ok(f)
            };
            (load(&u)?, load(&v)?)
        }
    })
}

fn pgm_range(fields: impl Iterator<Item = (f64, f64)>) -> (f64, f64) {
    let (lo, hi) = fields.fold((f64::INFINITY, f64::NEG_INFINITY), |a, b| {
        (a.0.min(b.0), a.1.max(b.1))
    });
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, lo + 0.5)
    }
}

pub fn evolve(s: &Settings) -> Result<()> {
    let started = Instant::now();
    let mut m = Manifest::new("evolve", started);
    echo_settings(&mut m, s);
    let params = validated(s, &mut m)?;
    let mut cfg = run_config(s, params)?;
    let init = initial_data(s, "reference", &params, cfg.grid)?;
    let v1 = normalized_stationary(&params, 1e-15)?.admissible;
    let threshold = s.get::<f64>("stop_threshold")?;
    if let Some(threshold) = threshold {
        cfg.stop_rule = Some(StopRule {
            v_target: v1,
            threshold,
        });
    }
    let consts = derived_constants(&params, cfg.grid.domain_area());
    m.push("grid", format!("{}x{}", cfg.grid.nx(), cfg.grid.ny()));
    m.push_num("dt", cfg.dt);
    m.push_num("T", cfg.t_end);
    m.push("scheme_v", cfg.scheme_v);
    m.push_num("v_target", v1);
    echo_constants(&mut m, &consts);
    if cfg.dt * consts.k > 1.0 {
        eprintln!(
            "warning: dt * k = {} > 1; the invariant box is not guaranteed",
            cfg.dt * consts.k
        );
    }

    let out_run = run(&cfg, init)?;
    for (i, w) in out_run.warnings.iter().enumerate() {
        eprintln!("warning: initial data: {w}");
        m.push(&format!("hypothesis_warning.{i}"), w);
    }
    let mass0 = out_run.records[0].mass;
    if (mass0 - 1.0).abs() > 1e-9 {
        eprintln!(
            "note: initial mass {mass0} differs from 1; error columns use the unit-mass root"
        );
    }

    let mut out = OutputDir::create(&s.out_dir())?;
    let (ulo, uhi) = pgm_range(out_run.snapshots.iter().map(|st| (st.u.min(), st.u.max())));
    let (vlo, vhi) = pgm_range(out_run.snapshots.iter().map(|st| (st.v.min(), st.v.max())));
    for (i, st) in out_run.snapshots.iter().enumerate() {
        for (name, f, lo, hi) in [("u", &st.u, ulo, uhi), ("v", &st.v, vlo, vhi)] {
            out.write_text(&format!("fields/{name}_{i:04}.csv"), &f.to_csv(st.t), "csv")?;
            out.write(
                &format!("fields/{name}_{i:04}.pgm"),
                &f.to_pgm(lo, hi),
                "pgm",
            )?;
            out.write_text(
                &format!("fields/{name}_{i:04}.pgm.txt"),
                &pgm_sidecar(f.grid(), lo, hi, st.t),
                "pgm-sidecar",
            )?;
        }
    }
    let target = cfg.stop_rule.map(|r| r.v_target);
    out.write_text(
        "series/diagnostics.csv",
        &series_to_csv(&out_run.records, target),
        "csv",
    )?;

    let mass_dev = out_run
        .records
        .iter()
        .map(|r| (r.mass - mass0).abs())
        .fold(0.0, f64::max);
    m.push("steps", out_run.steps);
    m.push("cg_iterations", out_run.cg_iterations);
    m.push("snapshots", out_run.snapshots.len());
    m.push("stop_reason", out_run.stop_reason);
    m.push_num("t_final", out_run.final_state.t);
    m.push_num("mass_initial", mass0);
    m.push_num("mass_max_deviation", mass_dev);

    if let Some(threshold) = threshold {
        let (series, reached) = match convergence_study(&out_run.records, v1, threshold) {
            Ok(series) => (series, true),
            Err(DiagnosticsError::TargetNotReached { series, .. }) => (*series, false),
            Err(e) => return Err(e.into()),
        };
        out.write_text("series/convergence.csv", &series.to_csv(), "csv")?;
        m.push("convergence.reached", reached);
        if let Some(t) = series.stop_time {
            m.push_num("convergence.stop_time", t);
        }
        let window = match s.raw("fit_window") {
            Some(w) => Some(parse_window(w)?),
            None => series.default_window(),
        };
        if let Some((a, b)) = window {
            m.push("fit.window", format!("{},{}", num(a), num(b)));
            for (name, errs) in [
                ("err_max", &series.err_max),
                ("err_min", &series.err_min),
                ("err_mean", &series.err_mean),
            ] {
                match exponential_rate_fit(&series.times, errs, (a, b)) {
                    Ok(fit) => {
                        m.push_num(&format!("fit.{name}.slope"), fit.slope);
                        m.push_num(&format!("fit.{name}.intercept"), fit.intercept);
                        m.push_num(&format!("fit.{name}.residual_std"), fit.residual_std);
                        m.push(&format!("fit.{name}.samples"), fit.samples);
                    }
                    Err(e) => m.push(&format!("fit.{name}"), format!("unavailable: {e}")),
                }
            }
        }
    }
    let path = out.finish(m)?;
    println!("stop_reason={}", out_run.stop_reason);
    println!("t_final={}", num(out_run.final_state.t));
    println!("mass_max_deviation={}", num(mass_dev));
    println!("manifest={}", path.display());
    Ok(())
}

pub fn picard(s: &Settings) -> Result<()> {
    let started = Instant::now();
    let mut m = Manifest::new("picard", started);
    echo_settings(&mut m, s);
    let params = validated(s, &mut m)?;
    let cfg = run_config(s, params)?;
    let (f, g) = initial_data(s, "constant:0.6,0.4", &params, cfg.grid)?;
    let n_max: usize = s.require("n_max")?;
    let tol: f64 = s.require("tol")?;
    let consts = derived_constants(&params, cfg.grid.domain_area());
    m.push("grid", format!("{}x{}", cfg.grid.nx(), cfg.grid.ny()));
    m.push_num("dt", cfg.dt);
    m.push_num("T", cfg.t_end);
    m.push("scheme_v", cfg.scheme_v);
    m.push("n_max", n_max);
    m.push_num("tol", tol);
    echo_constants(&mut m, &consts);

    let mut out = OutputDir::create(&s.out_dir())?;
    let result = picard_solve(&cfg, &f, &g, n_max, tol);
    let certificates = match &result {
        Ok(o) => o.certificates.clone(),
        Err(PicardError::NoConvergence { certificates, .. }) => certificates.clone(),
        Err(_) => Vec::new(),
    };
    for c in &certificates {
        out.write_text(
            &format!("certificates/iteration_{:03}.csv", c.n),
            &c.to_csv(),
            "csv",
        )?;
    }
    if !certificates.is_empty() {
        out.write_text(
            "certificates/summary.csv",
            &certificate_summary_csv(&certificates),
            "csv",
        )?;
    }
    let failed: Vec<usize> = certificates
        .iter()
        .filter(|c| !c.passes)
        .map(|c| c.n)
        .collect();
    m.push("certificates.count", certificates.len());
    m.push("certificates.all_pass", failed.is_empty());

    let output = match result {
        Ok(o) => o,
        Err(e) => {
            m.push("status", format!("error: {e}"));
            out.finish(m)?;
            return Err(e.into());
        }
    };
    let mass = output.mass_series();
    let mut mass_csv = String::from("t,mass\n");
    for (t, mm) in output.u.times.iter().zip(&mass) {
        let _ = writeln!(mass_csv, "{},{}", num(*t), num(*mm));
    }
    let t_final = *output.u.times.last().unwrap();
    out.write_text("series/picard_mass.csv", &mass_csv, "csv")?;
    out.write_text(
        "fields/u_final.csv",
        &output.u.last().to_csv(t_final),
        "csv",
    )?;
    out.write_text(
        "fields/v_final.csv",
        &output.v.last().to_csv(t_final),
        "csv",
    )?;
    let mass_dev = mass.iter().map(|x| (x - mass[0]).abs()).fold(0.0, f64::max);
    let last_sup = output.certificates.last().map_or(0.0, |c| c.sup());
    m.push("iterations", output.iterations);
    m.push("converged", output.converged);
    m.push_num("final_sup", last_sup);
    m.push_num("mass_max_deviation", mass_dev);
    m.push(
        "status",
        if output.converged {
            "converged"
        } else {
            "n_max reached, still decreasing"
        },
    );
    let path = out.finish(m)?;
    println!("iterations={}", output.iterations);
    println!("converged={}", output.converged);
    println!("final_sup={}", num(last_sup));
    println!("certificates_pass={}", failed.is_empty());
    println!("manifest={}", path.display());
    if !failed.is_empty() {
        return Err(CertificateFailed(failed).into());
    }
    Ok(())
}
