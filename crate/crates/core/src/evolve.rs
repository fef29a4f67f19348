//! Time integration of the coupled free/bound system on the unit square.
//!
//! Both schemes are first-order Lie splittings with implicit diffusion and an
//! exact discrete mass balance:
//!
//! * [`VScheme::ExplicitEuler`]: `u` from the linearly implicit system
//!   `(I - dt sigma Lap + dt A(v)) u' = u + dt epsilon v` with
//!   `A(v) = (rho - v)(a0 + a1 v)`, then `v' = v + dt Q(u', v)`.
//! * [`VScheme::RiccatiExact`]: `v' = R_dt(u, v)`, the exact solution of the
//!   Riccati equation `dv/dt = Q(u, v)` with `u` frozen, then
//!   `(I - dt sigma Lap) u' = u - (v' - v)`.
//!
//! With `dt k <= 1` and initial data in `[0, lambda] x [0, mu]` both schemes keep
//! every cell in that box.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::diagnostics::DiagnosticsRecord;
use crate::grid::{Field, Grid};
use crate::linalg::{CgSettings, ImplicitDiffusion, LinearSolveError};
use crate::model::{DerivedConstants, Params};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvolveError {
    #[error("linear solve failed: {0}")]
    LinearSolveDiverged(#[from] LinearSolveError),
    #[error("non-finite state at t = {t}")]
    NonFiniteState { t: f64 },
    #[error("invalid run configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VScheme {
    ExplicitEuler,
    #[default]
    RiccatiExact,
}

impl VScheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            VScheme::ExplicitEuler => "explicit-euler",
            VScheme::RiccatiExact => "riccati-exact",
        }
    }
}

impl fmt::Display for VScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for VScheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "explicit-euler" => Ok(VScheme::ExplicitEuler),
            "riccati-exact" => Ok(VScheme::RiccatiExact),
            other => Err(format!(
                "unknown v-scheme `{other}` (expected explicit-euler or riccati-exact)"
            )),
        }
    }
}

/// Stop once `|v_target - max v|`, `|v_target - min v|` and `|v_target - v_m|` are
/// all below `threshold`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopRule {
    pub v_target: f64,
    pub threshold: f64,
}

impl StopRule {
    pub fn is_met(&self, rec: &DiagnosticsRecord) -> bool {
        let (a, b, c) = rec.errors_to(self.v_target);
        a.max(b).max(c) < self.threshold
    }
}

/// Geometric step-size growth from `dt` up to `dt_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DtRamp {
    pub dt_max: f64,
    pub growth: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: Params,
    pub grid: Grid,
    pub dt: f64,
    pub t_end: f64,
    pub scheme_v: VScheme,
    pub snapshot_every: usize,
    pub stop_rule: Option<StopRule>,
    pub dt_ramp: Option<DtRamp>,
    pub cg: CgSettings,
}

impl RunConfig {
    pub fn new(params: Params, grid: Grid) -> Self {
        RunConfig {
            params,
            grid,
            dt: Self::default_dt(&params, &grid),
            t_end: 1.0,
            scheme_v: VScheme::default(),
            snapshot_every: 100,
            stop_rule: None,
            dt_ramp: None,
            cg: CgSettings::default(),
        }
    }

    /// `min(1e-3, h^2 / (4 sigma))`.
    pub fn default_dt(params: &Params, grid: &Grid) -> f64 {
        let h = grid.hx().min(grid.hy());
        (h * h / (4.0 * params.sigma())).min(1e-3)
    }

    pub fn validate(&self) -> Result<(), EvolveError> {
        let bad = |m: String| Err(EvolveError::InvalidConfig(m));
        if !(self.dt > 0.0) || !(self.t_end > 0.0) || self.dt > self.t_end {
            return bad(format!(
                "need 0 < dt <= T, got dt = {}, T = {}",
                self.dt, self.t_end
            ));
        }
        if self.snapshot_every == 0 {
            return bad("snapshot_every must be at least 1".into());
        }
        if let Some(r) = self.dt_ramp {
            if !(r.growth >= 1.0) || !(r.dt_max >= self.dt) {
                return bad(format!(
                    "dt ramp needs growth >= 1 and dt_max >= dt, got {r:?}"
                ));
            }
        }
        if let Some(s) = self.stop_rule {
            if !(s.threshold > 0.0) {
                return bad("stop threshold must be positive".into());
            }
        }
        Ok(())
    }
}

/// `(u, v)` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub u: Field,
    pub v: Field,
    pub t: f64,
}

impl State {
    pub fn record(&self) -> DiagnosticsRecord {
        DiagnosticsRecord::of(self.t, &self.u, &self.v)
    }
}

/// Where initial data leave the invariant box `[0, lambda] x [0, mu)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HypothesisViolation {
    FreeNegative { min: f64 },
    FreeAboveLambda { max: f64, lambda: f64 },
    BoundNegative { min: f64 },
    BoundNotBelowMu { max: f64, mu: f64 },
}

impl fmt::Display for HypothesisViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HypothesisViolation::FreeNegative { min } => write!(f, "min u0 = {min} < 0"),
            HypothesisViolation::FreeAboveLambda { max, lambda } => {
                write!(f, "max u0 = {max} > lambda = {lambda}")
            }
            HypothesisViolation::BoundNegative { min } => write!(f, "min v0 = {min} < 0"),
            HypothesisViolation::BoundNotBelowMu { max, mu } => {
                write!(f, "max v0 = {max} >= mu = {mu}")
            }
        }
    }
}

pub fn check_hypotheses(f: &Field, g: &Field, c: &DerivedConstants) -> Vec<HypothesisViolation> {
    let mut out = Vec::new();
    let (fmin, fmax, gmin, gmax) = (f.min(), f.max(), g.min(), g.max());
    if fmin < 0.0 {
        out.push(HypothesisViolation::FreeNegative { min: fmin });
    }
    if fmax > c.lambda {
        out.push(HypothesisViolation::FreeAboveLambda {
            max: fmax,
            lambda: c.lambda,
        });
    }
    if gmin < 0.0 {
        out.push(HypothesisViolation::BoundNegative { min: gmin });
    }
    if gmax >= c.mu {
        out.push(HypothesisViolation::BoundNotBelowMu {
            max: gmax,
            mu: c.mu,
        });
    }
    out
}

/// Exact solution after `dt` of `dv/dt = Q(u, v)` with `u` frozen.
///
/// The right-hand side is the quadratic `alpha v^2 + beta v + gamma` with
/// discriminant `beta^2 + 4 u^2 a1 rho a0 > 0`. With `r` its root where the slope
/// is `-sqrt(disc)` (the attracting one for `u >= 0`),
/// `v(dt) = r + w e / (1 - alpha w (1 - e) / sqrt(disc))`, `w = v0 - r`,
/// `e = exp(-sqrt(disc) dt)`.
pub fn riccati_step(p: &Params, u: f64, v0: f64, dt: f64) -> f64 {
    let alpha = -u * p.a1();
    let beta = u * (p.rho() * p.a1() - p.a0()) - p.epsilon();
    let gamma = u * p.rho() * p.a0();
    let sqrt_d = (beta * beta - 4.0 * alpha * gamma).sqrt();
    // beta >= 0 forces u > 0, so alpha < 0 in the first branch
    let r = if beta >= 0.0 {
        (beta + sqrt_d) / (-2.0 * alpha)
    } else {
        2.0 * gamma / (sqrt_d - beta)
    };
    let e = (-sqrt_d * dt).exp();
    let one_minus_e = -(-sqrt_d * dt).exp_m1();
    let w = v0 - r;
    r + w * e / (1.0 - alpha * w * one_minus_e / sqrt_d)
}

#[inline]
pub fn euler_v_step(p: &Params, u: f64, v0: f64, dt: f64) -> f64 {
    v0 + dt * p.reaction(u, v0)
}

/// Pointwise v-update of `scheme`.
#[inline]
pub fn v_update(scheme: VScheme, p: &Params, u: f64, v0: f64, dt: f64) -> f64 {
    match scheme {
        VScheme::ExplicitEuler => euler_v_step(p, u, v0, dt),
        VScheme::RiccatiExact => riccati_step(p, u, v0, dt),
    }
}

/// Linear parabolic step `(I - dt sigma Lap + dt A(v_coef)) u_next = u_prev + dt epsilon v_coef`.
/// `u_next` is the initial guess on entry.
pub fn linear_u_step(
    grid: &Grid,
    p: &Params,
    dt: f64,
    u_prev: &[f64],
    v_coef: &[f64],
    u_next: &mut [f64],
    cg: &CgSettings,
) -> Result<usize, LinearSolveError> {
    let diag: Vec<f64> = v_coef
        .iter()
        .map(|&v| 1.0 + dt * p.binding_rate(v))
        .collect();
    let rhs: Vec<f64> = u_prev
        .iter()
        .zip(v_coef)
        .map(|(&u, &v)| u + dt * p.epsilon() * v)
        .collect();
    let op = ImplicitDiffusion {
        grid,
        dt_sigma: dt * p.sigma(),
        diag: Some(&diag),
    };
    Ok(op.solve(&rhs, u_next, cg)?.iterations)
}

/// Diffusion step with a prescribed pointwise sink:
/// `(I - dt sigma Lap) u_next = u_prev - sink`.
pub fn transfer_u_step(
    grid: &Grid,
    p: &Params,
    dt: f64,
    u_prev: &[f64],
    sink: &[f64],
    u_next: &mut [f64],
    cg: &CgSettings,
) -> Result<usize, LinearSolveError> {
    let rhs: Vec<f64> = u_prev.iter().zip(sink).map(|(u, s)| u - s).collect();
    let op = ImplicitDiffusion {
        grid,
        dt_sigma: dt * p.sigma(),
        diag: None,
    };
    Ok(op.solve(&rhs, u_next, cg)?.iterations)
}

/// Advances `s` in place by `dt`; returns the CG iteration count.
pub fn advance(s: &mut State, cfg: &RunConfig, dt: f64) -> Result<usize, EvolveError> {
    let p = &cfg.params;
    let grid = &cfg.grid;
    let iterations = match cfg.scheme_v {
        VScheme::ExplicitEuler => {
            let mut u_next = s.u.values().to_vec();
            let it = linear_u_step(
                grid,
                p,
                dt,
                s.u.values(),
                s.v.values(),
                &mut u_next,
                &cfg.cg,
            )?;
            for (v, &u) in s.v.values_mut().iter_mut().zip(&u_next) {
                *v = euler_v_step(p, u, *v, dt);
            }
            s.u.values_mut().copy_from_slice(&u_next);
            it
        }
        VScheme::RiccatiExact => {
            let mut increment = vec![0.0; grid.len()];
            for ((inc, v), &u) in increment
                .iter_mut()
                .zip(s.v.values_mut().iter_mut())
                .zip(s.u.values())
            {
                let v_next = riccati_step(p, u, *v, dt);
                *inc = v_next - *v;
                *v = v_next;
            }
            let mut u_next = s.u.values().to_vec();
            let it = transfer_u_step(grid, p, dt, s.u.values(), &increment, &mut u_next, &cfg.cg)?;
            s.u.values_mut().copy_from_slice(&u_next);
            it
        }
    };
    s.t += dt;
    if !(s.u.is_finite() && s.v.is_finite()) {
        return Err(EvolveError::NonFiniteState { t: s.t });
    }
    Ok(iterations)
}

/// One step of size `cfg.dt`.
pub fn step(s: &State, cfg: &RunConfig) -> Result<State, EvolveError> {
    let mut next = s.clone();
    advance(&mut next, cfg, cfg.dt)?;
    Ok(next)
}

/// Uniform step times `0, dt, 2 dt, ..., T`, the last step possibly shorter.
pub fn time_grid(dt: f64, t_end: f64) -> Vec<f64> {
    let n = ((t_end / dt) - 1e-9).ceil().max(1.0) as usize;
    let mut times: Vec<f64> = (0..n).map(|m| m as f64 * dt).collect();
    times.push(t_end);
    times
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopReason {
    HorizonReached,
    ThresholdReached { t: f64 },
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StopReason::HorizonReached => f.write_str("horizon-reached"),
            StopReason::ThresholdReached { t } => write!(f, "threshold-reached t={t:.16e}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    /// Initial state, every `snapshot_every`-th step, and the final state.
    pub snapshots: Vec<State>,
    /// One record per step, starting at `t = 0`.
    pub records: Vec<DiagnosticsRecord>,
    pub final_state: State,
    pub stop_reason: StopReason,
    pub warnings: Vec<HypothesisViolation>,
    pub steps: usize,
    pub cg_iterations: usize,
}

/// Steps from `init` until `cfg.t_end` or until the stop rule fires.
pub fn run(cfg: &RunConfig, init: (Field, Field)) -> Result<RunOutput, EvolveError> {
    cfg.validate()?;
    let (u0, v0) = init;
    if *u0.grid() != cfg.grid || *v0.grid() != cfg.grid {
        return Err(EvolveError::InvalidConfig(
            "initial data do not live on the configured grid".into(),
        ));
    }
    let consts = crate::model::derived_constants(&cfg.params, cfg.grid.domain_area());
    let warnings = check_hypotheses(&u0, &v0, &consts);

    let mut state = State {
        u: u0,
        v: v0,
        t: 0.0,
    };
    let mut records = vec![state.record()];
    let mut snapshots = vec![state.clone()];
    let mut steps = 0;
    let mut cg_iterations = 0;
    let mut stop_reason = StopReason::HorizonReached;

    let fixed_times = cfg.dt_ramp.is_none().then(|| time_grid(cfg.dt, cfg.t_end));
    let mut dt = cfg.dt;
    let already_met = cfg.stop_rule.is_some_and(|r| r.is_met(&records[0]));
    if already_met {
        stop_reason = StopReason::ThresholdReached { t: 0.0 };
    } else {
        loop {
            let t_next = match &fixed_times {
                Some(times) => times[steps + 1],
                None => (state.t + dt).min(cfg.t_end),
            };
            let h = t_next - state.t;
            cg_iterations += advance(&mut state, cfg, h)?;
            state.t = t_next;
            steps += 1;
            let rec = state.record();
            records.push(rec);
            if steps % cfg.snapshot_every == 0 {
                snapshots.push(state.clone());
            }
            if cfg.stop_rule.is_some_and(|r| r.is_met(&rec)) {
                stop_reason = StopReason::ThresholdReached { t: state.t };
                break;
            }
            if state.t >= cfg.t_end {
                break;
            }
            if let Some(r) = cfg.dt_ramp {
                dt = (dt * r.growth).min(r.dt_max);
            }
        }
    }
    if snapshots.last().map(|s| s.t) != Some(state.t) {
        snapshots.push(state.clone());
    }
    Ok(RunOutput {
        snapshots,
        records,
        final_state: state,
        stop_reason,
        warnings,
        steps,
        cg_iterations,
    })
}

/// Classical RK4 for the space-homogeneous reduction `u' = -Q(u, v)`,
/// `v' = Q(u, v)` on `[0, T]`, with `ceil(T / dt_fine)` equal steps.
pub fn homogeneous_ode_reference(
    u0: f64,
    v0: f64,
    p: &Params,
    t_end: f64,
    dt_fine: f64,
) -> Result<(f64, f64), EvolveError> {
    if !(t_end >= 0.0) || !(dt_fine > 0.0) {
        return Err(EvolveError::InvalidConfig(format!(
            "need T >= 0 and dt > 0, got T = {t_end}, dt = {dt_fine}"
        )));
    }
    if t_end == 0.0 {
        return Ok((u0, v0));
    }
    let n = (t_end / dt_fine).ceil().max(1.0) as usize;
    let h = t_end / n as f64;
    let (mut u, mut v) = (u0, v0);
    for _ in 0..n {
        let k1 = p.reaction(u, v);
        let k2 = p.reaction(u - 0.5 * h * k1, v + 0.5 * h * k1);
        let k3 = p.reaction(u - 0.5 * h * k2, v + 0.5 * h * k2);
        let k4 = p.reaction(u - h * k3, v + h * k3);
        let dq = h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        u -= dq;
        v += dq;
    }
    if !(u.is_finite() && v.is_finite()) {
        return Err(EvolveError::NonFiniteState { t: t_end });
    }
    Ok((u, v))
}
