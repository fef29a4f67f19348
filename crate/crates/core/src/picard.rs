//! Successive approximations over the whole space-time cylinder.
//!
//! Iterate `0` is `u_0 = f`, `v_0 = g`, held constant in time. Iterate `n + 1`
//! freezes iterate `n` as coefficient data and marches on the step sequence of
//! [`time_grid`]:
//!
//! * `v_{n+1}` integrates `dv/dt = Q(u_n, v)` cell by cell;
//! * `u_{n+1}` solves the linear parabolic problem with the exchange sink taken
//!   from the frozen `v_n`.
//!
//! Each v-scheme uses the time discretization of the matching [`evolve`] scheme,
//! so the discrete fixed point of the iteration is exactly the coupled run.
//!
//! [`evolve`]: crate::evolve

use std::fmt::Write as _;

use thiserror::Error;

use crate::evolve::{
    check_hypotheses, euler_v_step, linear_u_step, riccati_step, time_grid, transfer_u_step,
    EvolveError, HypothesisViolation, RunConfig, VScheme,
};
use crate::grid::{Field, Grid, GridError};
use crate::model::{derived_constants, DerivedConstants};

/// Relative slack allowed on the certificate inequality.
pub const CERTIFICATE_SLACK: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PicardError {
    #[error("initial data violate the invariant-box hypothesis: {}", list(.0))]
    HypothesisViolated(Vec<HypothesisViolation>),
    #[error("no convergence after {n_max} iterations; last suprema {last_sup:e} (previous {previous_sup:e})")]
    NoConvergence {
        n_max: usize,
        last_sup: f64,
        previous_sup: f64,
        certificates: Vec<PicardCertificate>,
    },
    #[error("trajectories are not aligned: {0}")]
    ShapeMismatch(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Evolve(#[from] EvolveError),
    #[error("n_max must be at least 1 and tol positive")]
    InvalidArguments,
}

fn list(v: &[HypothesisViolation]) -> String {
    v.iter()
        .map(|h| h.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

/// Space-time history of one component.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub grid: Grid,
    pub times: Vec<f64>,
    pub frames: Vec<Field>,
}

impl Trajectory {
    /// `field` at every time.
    pub fn constant_in_time(times: Vec<f64>, field: &Field) -> Self {
        let frames = vec![field.clone(); times.len()];
        Trajectory {
            grid: *field.grid(),
            times,
            frames,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> &Field {
        self.frames
            .last()
            .expect("trajectory has at least one frame")
    }

    pub fn min(&self) -> f64 {
        self.frames
            .iter()
            .map(Field::min)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.frames
            .iter()
            .map(Field::max)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Cauchy increments of iterate `n` and the theoretical envelope at every step time.
#[derive(Debug, Clone, PartialEq)]
pub struct PicardCertificate {
    pub n: usize,
    pub times: Vec<f64>,
    /// `U_n(t) = int (u_{n+1} - u_n)^2`.
    pub u_norms: Vec<f64>,
    /// `V_n(t) = int (v_{n+1} - v_n)^2`.
    pub v_norms: Vec<f64>,
    pub bound: Vec<f64>,
    pub sup_u: f64,
    pub sup_v: f64,
    pub sup_bound: f64,
    pub passes: bool,
}

impl PicardCertificate {
    fn new(
        n: usize,
        times: Vec<f64>,
        u_norms: Vec<f64>,
        v_norms: Vec<f64>,
        c: &DerivedConstants,
        t_end: f64,
    ) -> Self {
        let bound: Vec<f64> = times
            .iter()
            .map(|&t| theoretical_bound(n, t, c, t_end))
            .collect();
        let sup = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
        let passes = u_norms
            .iter()
            .zip(&v_norms)
            .zip(&bound)
            .all(|((&a, &b), &w)| {
                let cap = (1.0 + CERTIFICATE_SLACK) * w;
                a <= cap && b <= cap
            });
        PicardCertificate {
            n,
            sup_u: sup(&u_norms),
            sup_v: sup(&v_norms),
            sup_bound: sup(&bound),
            times,
            u_norms,
            v_norms,
            bound,
            passes,
        }
    }

    pub fn sup(&self) -> f64 {
        self.sup_u.max(self.sup_v)
    }

    /// `t,U_n,V_n,bound_n` rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,U_n,V_n,bound_n\n");
        for i in 0..self.times.len() {
            let _ = writeln!(
                s,
                "{:.16e},{:.16e},{:.16e},{:.16e}",
                self.times[i], self.u_norms[i], self.v_norms[i], self.bound[i]
            );
        }
        s
    }
}

/// One row per iteration: `n,sup_U,sup_V,sup_bound,pass`.
pub fn certificate_summary_csv(certs: &[PicardCertificate]) -> String {
    let mut s = String::from("n,sup_U,sup_V,sup_bound,pass\n");
    for c in certs {
        let _ = writeln!(
            s,
            "{},{:.16e},{:.16e},{:.16e},{}",
            c.n, c.sup_u, c.sup_v, c.sup_bound, c.passes
        );
    }
    s
}

/// Squared L2 distances `int (a - b)^2` at each stored time.
pub fn cauchy_norms(a: &Trajectory, b: &Trajectory) -> Result<Vec<f64>, PicardError> {
    if a.grid != b.grid || a.times != b.times || a.frames.len() != b.frames.len() {
        return Err(PicardError::ShapeMismatch(format!(
            "{} frames on {}x{} vs {} frames on {}x{}",
            a.frames.len(),
            a.grid.nx(),
            a.grid.ny(),
            b.frames.len(),
            b.grid.nx(),
            b.grid.ny()
        )));
    }
    Ok(a.frames
        .iter()
        .zip(&b.frames)
        .map(|(x, y)| squared_distance(x, y))
        .collect())
}

fn squared_distance(x: &Field, y: &Field) -> f64 {
    let s: f64 = x
        .values()
        .iter()
        .zip(y.values())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    s * x.grid().cell_area()
}

/// `ln n!`: exact summation up to 256, Stirling series beyond.
pub fn ln_factorial(n: usize) -> f64 {
    if n <= 256 {
        return (2..=n).map(|i| (i as f64).ln()).sum();
    }
    let x = n as f64;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    x * x.ln() - x
        + 0.5 * (2.0 * std::f64::consts::PI * x).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 / 1260.0))
}

/// `ln` of the Cauchy envelope `k L (k e^{3kT})^n t^n / n!`.
pub fn ln_theoretical_bound(n: usize, t: f64, c: &DerivedConstants, t_end: f64) -> f64 {
    let base = (c.k * c.big_l).ln();
    if n == 0 {
        return base;
    }
    if t <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let nf = n as f64;
    base + nf * (c.k.ln() + 3.0 * c.k * t_end + t.ln()) - ln_factorial(n)
}

/// `k L (k e^{3kT})^n t^n / n!`, equivalently `L k^{n+1} e^{3kTn} t^n / n!`.
/// Evaluated in log space; `+inf` once the exponent leaves the f64 range.
pub fn theoretical_bound(n: usize, t: f64, c: &DerivedConstants, t_end: f64) -> f64 {
    let l = ln_theoretical_bound(n, t, c, t_end);
    if l > f64::MAX.ln() {
        f64::INFINITY
    } else {
        l.exp()
    }
}

/// Smallest `n >= 1` with `bound(n, T) < target`.
pub fn first_n_below(
    target: f64,
    c: &DerivedConstants,
    t_end: f64,
    n_limit: usize,
) -> Option<usize> {
    let lt = target.ln();
    (1..=n_limit).find(|&n| ln_theoretical_bound(n, t_end, c, t_end) < lt)
}

#[derive(Debug, Clone)]
pub struct PicardOutput {
    pub u: Trajectory,
    pub v: Trajectory,
    /// Certificate `n` compares iterates `n` and `n + 1`.
    pub certificates: Vec<PicardCertificate>,
    /// Index of the returned iterate.
    pub iterations: usize,
    pub converged: bool,
    pub constants: DerivedConstants,
}

impl PicardOutput {
    /// `int (u + v)` of the returned iterate at each time.
    pub fn mass_series(&self) -> Vec<f64> {
        self.u
            .frames
            .iter()
            .zip(&self.v.frames)
            .map(|(u, v)| crate::grid::integrate(u) + crate::grid::integrate(v))
            .collect()
    }
}

/// Runs the iteration from `(f, g)` until `sup_t max(U_n, V_n) < tol^2` or
/// `n_max` iterates have been built.
///
/// Returns `NoConvergence` when `n_max` is reached and the last supremum did not
/// decrease; when it still decreases the unconverged output is returned with
/// `converged = false`.
pub fn picard_solve(
    cfg: &RunConfig,
    f: &Field,
    g: &Field,
    n_max: usize,
    tol: f64,
) -> Result<PicardOutput, PicardError> {
    if n_max == 0 || !(tol > 0.0) {
        return Err(PicardError::InvalidArguments);
    }
    cfg.validate()?;
    if *f.grid() != cfg.grid || *g.grid() != cfg.grid {
        return Err(PicardError::ShapeMismatch(
            "initial data do not live on the configured grid".into(),
        ));
    }
    let constants = derived_constants(&cfg.params, cfg.grid.domain_area());
    let violations = check_hypotheses(f, g, &constants);
    if !violations.is_empty() {
        return Err(PicardError::HypothesisViolated(violations));
    }

    let times = time_grid(cfg.dt, cfg.t_end);
    let mut u = Trajectory::constant_in_time(times.clone(), f);
    let mut v = Trajectory::constant_in_time(times.clone(), g);
    let mut certificates: Vec<PicardCertificate> = Vec::new();
    let target = tol * tol;

    for n in 0..n_max {
        let (u_next, v_next) = iterate(cfg, &u, &v)?;
        let cert = PicardCertificate::new(
            n,
            times.clone(),
            cauchy_norms(&u_next, &u)?,
            cauchy_norms(&v_next, &v)?,
            &constants,
            cfg.t_end,
        );
        let sup = cert.sup();
        certificates.push(cert);
        u = u_next;
        v = v_next;
        if sup < target {
            return Ok(PicardOutput {
                u,
                v,
                certificates,
                iterations: n + 1,
                converged: true,
                constants,
            });
        }
    }

    let sups: Vec<f64> = certificates.iter().map(PicardCertificate::sup).collect();
    if stalled(&sups) {
        let n = sups.len();
        return Err(PicardError::NoConvergence {
            n_max,
            last_sup: sups[n - 1],
            previous_sup: sups[n - 2],
            certificates,
        });
    }
    Ok(PicardOutput {
        u,
        v,
        certificates,
        iterations: n_max,
        converged: false,
        constants,
    })
}

/// The last supremum failed to drop below the one before it.
fn stalled(sups: &[f64]) -> bool {
    match sups {
        [.., prev, last] => !(last < prev),
        _ => false,
    }
}

/// Builds iterate `n + 1` from iterate `n`.
pub fn iterate(
    cfg: &RunConfig,
    u_n: &Trajectory,
    v_n: &Trajectory,
) -> Result<(Trajectory, Trajectory), PicardError> {
    let p = &cfg.params;
    let grid = cfg.grid;
    let times = &u_n.times;
    let mut u_frames = Vec::with_capacity(times.len());
    let mut v_frames = Vec::with_capacity(times.len());
    u_frames.push(u_n.frames[0].clone());
    v_frames.push(v_n.frames[0].clone());
    let mut sink = vec![0.0; grid.len()];

    for m in 0..times.len() - 1 {
        let dt = times[m + 1] - times[m];
        let v_prev = v_frames[m].values();
        let v_new: Vec<f64> = match cfg.scheme_v {
            VScheme::ExplicitEuler => v_prev
                .iter()
                .zip(u_n.frames[m + 1].values())
                .map(|(&v, &u)| euler_v_step(p, u, v, dt))
                .collect(),
            VScheme::RiccatiExact => v_prev
                .iter()
                .zip(u_n.frames[m].values())
                .map(|(&v, &u)| riccati_step(p, u, v, dt))
                .collect(),
        };

        let u_prev: &Field = &u_frames[m];
        let mut u_new = u_prev.values().to_vec();
        match cfg.scheme_v {
            VScheme::ExplicitEuler => {
                linear_u_step(
                    &grid,
                    p,
                    dt,
                    u_prev.values(),
                    v_n.frames[m].values(),
                    &mut u_new,
                    &cfg.cg,
                )
                .map_err(EvolveError::from)?;
            }
            VScheme::RiccatiExact => {
                for ((s, &u), &v) in sink
                    .iter_mut()
                    .zip(u_prev.values())
                    .zip(v_n.frames[m].values())
                {
                    *s = riccati_step(p, u, v, dt) - v;
                }
                transfer_u_step(&grid, p, dt, u_prev.values(), &sink, &mut u_new, &cfg.cg)
                    .map_err(EvolveError::from)?;
            }
        }
        let u_field = Field::new(grid, u_new)?;
        let v_field = Field::new(grid, v_new)?;
        u_frames.push(u_field);
        v_frames.push(v_field);
    }
    Ok((
        Trajectory {
            grid,
            times: times.clone(),
            frames: u_frames,
        },
        Trajectory {
            grid,
            times: times.clone(),
            frames: v_frames,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolve::{run, RunConfig};
    use crate::grid::integrate;
    use crate::model::Params;
    use crate::stationary::normalized_stationary;
    use astro_float::{BigFloat, Consts, RoundingMode};
    use rand::{rngs::StdRng, Rng, SeedableRng};

    fn cfg(n: usize, dt: f64, t_end: f64, scheme: VScheme) -> RunConfig {
        let mut c = RunConfig::new(Params::reference(), Grid::square(n).unwrap());
        c.dt = dt;
        c.t_end = t_end;
        c.scheme_v = scheme;
        c
    }

    fn consts() -> DerivedConstants {
        derived_constants(&Params::reference(), 1.0)
    }

    #[test]
    fn stationary_pair_converges_immediately() {
        let vh = normalized_stationary(&Params::reference(), 1e-15)
            .unwrap()
            .admissible;
        for scheme in [VScheme::ExplicitEuler, VScheme::RiccatiExact] {
            let c = cfg(8, 0.05, 1.0, scheme);
            let f = Field::constant(c.grid, 1.0 - vh);
            let g = Field::constant(c.grid, vh);
            let out = picard_solve(&c, &f, &g, 10, 1e-6).unwrap();
            assert!(out.converged);
            assert_eq!(out.iterations, 1);
            assert!(out.certificates[0].sup() < 1e-24);
        }
    }

    #[test]
    fn increments_vanish_at_start_and_decay_fast() {
        for scheme in [VScheme::ExplicitEuler, VScheme::RiccatiExact] {
            let c = cfg(6, 0.01, 1.0, scheme);
            let f = Field::constant(c.grid, 0.6);
            let g = Field::constant(c.grid, 0.4);
            let out = picard_solve(&c, &f, &g, 30, 1e-7).unwrap();
            assert!(out.converged);
            for cert in &out.certificates {
                assert_eq!(cert.u_norms[0], 0.0);
                assert_eq!(cert.v_norms[0], 0.0);
                assert!(cert.passes, "n = {}", cert.n);
            }
            let sups: Vec<f64> = out.certificates.iter().map(|c| c.sup()).collect();
            assert!(sups.windows(2).all(|w| w[1] < w[0]), "{sups:?}");
            // two-step contraction factors shrink: faster than any geometric rate
            let ratios: Vec<f64> = sups.windows(3).map(|w| w[2] / w[0]).collect();
            assert!(ratios.windows(2).all(|w| w[1] < w[0]), "{ratios:?}");
            let mass = out.mass_series();
            for m in &mass {
                assert!((m - 1.0).abs() < 1e-8, "{} {m}", scheme);
            }
        }
    }

    #[test]
    fn limit_matches_coupled_run() {
        let tol = 1e-6;
        for scheme in [VScheme::ExplicitEuler, VScheme::RiccatiExact] {
            let mut c = cfg(16, 0.02, 1.0, scheme);
            c.snapshot_every = 1;
            let f = Field::from_fn(c.grid, |x, y| {
                0.5 + 0.3 * (std::f64::consts::PI * x).cos() * y
            });
            let g = Field::from_fn(c.grid, |x, _| 0.2 + 0.1 * (3.0 * x).sin());
            let out = picard_solve(&c, &f, &g, 40, tol).unwrap();
            assert!(out.converged);
            assert!(out.u.min() >= -1e-8 && out.u.max() <= out.constants.lambda + 1e-8);
            assert!(out.v.min() >= -1e-8 && out.v.max() <= out.constants.mu + 1e-8);
            let coupled = run(&c, (f.clone(), g.clone())).unwrap();
            assert_eq!(coupled.snapshots.len(), out.u.len());
            for (i, s) in coupled.snapshots.iter().enumerate() {
                assert_eq!(s.t, out.u.times[i]);
                let du = squared_distance(&s.u, &out.u.frames[i]).sqrt();
                let dv = squared_distance(&s.v, &out.v.frames[i]).sqrt();
                assert!(
                    du < 10.0 * tol && dv < 10.0 * tol,
                    "{scheme} t={} {du} {dv}",
                    s.t
                );
            }
        }
    }

    #[test]
    fn hypotheses_are_enforced() {
        let c = cfg(4, 0.1, 1.0, VScheme::RiccatiExact);
        let f = Field::constant(c.grid, 0.5);
        let g = Field::constant(c.grid, 0.6);
        assert!(matches!(
            picard_solve(&c, &f, &g, 5, 1e-6),
            Err(PicardError::HypothesisViolated(v)) if v.len() == 1
        ));
        let f = Field::constant(c.grid, 4.0);
        let g = Field::constant(c.grid, -0.1);
        assert!(matches!(
            picard_solve(&c, &f, &g, 5, 1e-6),
            Err(PicardError::HypothesisViolated(v)) if v.len() == 2
        ));
    }

    #[test]
    fn stalled_iteration_is_reported() {
        assert!(stalled(&[1e-3, 2e-3]));
        assert!(stalled(&[1e-3, 1e-3]));
        assert!(stalled(&[1e-3, f64::NAN]));
        assert!(!stalled(&[1e-3, 1e-4]));
        assert!(!stalled(&[1e-3]));
        let c = cfg(4, 0.1, 1.0, VScheme::RiccatiExact);
        let f = Field::constant(c.grid, 0.6);
        let g = Field::constant(c.grid, 0.4);
        let out = picard_solve(&c, &f, &g, 2, 1e-6).unwrap();
        assert!(!out.converged);
        assert_eq!(out.iterations, 2);
        assert!(matches!(
            picard_solve(&c, &f, &g, 0, 1e-6),
            Err(PicardError::InvalidArguments)
        ));
    }

    #[test]
    fn cauchy_norm_examples() {
        let grid = Grid::new(7, 5).unwrap();
        let mut rng = StdRng::seed_from_u64(11);
        let times = vec![0.0, 0.5, 1.0];
        let random = |rng: &mut StdRng| Trajectory {
            grid,
            times: times.clone(),
            frames: (0..3)
                .map(|_| {
                    Field::new(grid, (0..35).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
                })
                .collect(),
        };
        let a = random(&mut rng);
        assert!(cauchy_norms(&a, &a).unwrap().iter().all(|&x| x == 0.0));
        let shifted = Trajectory {
            frames: a.frames.iter().map(|f| f.map(|x| x + 0.3)).collect(),
            ..a.clone()
        };
        for x in cauchy_norms(&a, &shifted).unwrap() {
            assert!((x - 0.09).abs() < 1e-14);
        }
        let b = random(&mut rng);
        let got = cauchy_norms(&a, &b).unwrap();
        for (k, g) in got.iter().enumerate() {
            let mut direct = 0.0;
            for j in 0..5 {
                for i in 0..7 {
                    let d = a.frames[k].get(i, j) - b.frames[k].get(i, j);
                    direct += d * d / 35.0;
                }
            }
            assert!((g - direct).abs() < 1e-12);
        }
        let short = Trajectory {
            times: vec![0.0, 1.0],
            frames: a.frames[..2].to_vec(),
            ..a.clone()
        };
        assert!(matches!(
            cauchy_norms(&a, &short),
            Err(PicardError::ShapeMismatch(_))
        ));
    }

    #[test]
    fn bound_substitution_and_ratio() {
        let c = consts();
        let t_end = 1.0;
        let direct = c.k * c.big_l * c.k * (3.0 * c.k * t_end).exp() * t_end;
        assert!((theoretical_bound(1, t_end, &c, t_end) / direct - 1.0).abs() < 1e-13);
        let q = c.k * (3.0 * c.k * t_end).exp() * t_end;
        for n in 1..2000 {
            let ratio = (ln_theoretical_bound(n + 1, t_end, &c, t_end)
                - ln_theoretical_bound(n, t_end, &c, t_end))
            .exp();
            assert!((ratio / (q / (n as f64 + 1.0)) - 1.0).abs() < 1e-9, "n={n}");
            assert_eq!(ratio < 1.0, (n + 1) as f64 > q);
        }
        assert!((theoretical_bound(0, 0.3, &c, t_end) / (c.k * c.big_l) - 1.0).abs() < 1e-14);
        assert_eq!(theoretical_bound(3, 0.0, &c, t_end), 0.0);
    }

    #[test]
    fn bound_overflows_to_infinity() {
        let c = DerivedConstants {
            lambda: 3.5,
            mu: 0.5,
            k: 50.0,
            big_l: 49.0,
        };
        assert_eq!(theoretical_bound(200, 1.0, &c, 1.0), f64::INFINITY);
        assert!(theoretical_bound(1, 0.001, &consts(), 1.0).is_finite());
    }

    #[test]
    fn stirling_matches_summation() {
        for n in [257usize, 300, 1000, 5000] {
            let direct: f64 = (2..=n).map(|i| (i as f64).ln()).sum();
            assert!((ln_factorial(n) - direct).abs() < 1e-9 * direct);
        }
    }

    /// Ratio of two big floats, read back through the decimal representation.
    fn big_ratio_to_f64(a: &BigFloat, b: &BigFloat, p: usize, cc: &mut Consts) -> f64 {
        let r = a.div(b, p, RoundingMode::ToEven);
        r.format(astro_float::Radix::Dec, RoundingMode::ToEven, cc)
            .unwrap()
            .parse()
            .unwrap()
    }

    #[test]
    fn first_crossing_matches_extended_precision() {
        let c = consts();
        let t_end = 1.0;
        let n_star = first_n_below(1e-6, &c, t_end, 100_000).unwrap();
        assert!(theoretical_bound(n_star, t_end, &c, t_end) < 1e-6);
        assert!(theoretical_bound(n_star - 1, t_end, &c, t_end) >= 1e-6);

        let p = 512;
        let rm = RoundingMode::ToEven;
        let mut cc = Consts::new().unwrap();
        let k = BigFloat::from_f64(c.k, p);
        let l = BigFloat::from_f64(c.big_l, p);
        let three_kt = BigFloat::from_f64(3.0 * c.k * t_end, p);
        let q = k.mul(&three_kt.exp(p, rm, &mut cc), p, rm);
        let mut value = k.mul(&l, p, rm).mul(&q.powi(n_star, p, rm), p, rm);
        for i in 2..=n_star {
            value = value.div(&BigFloat::from_u64(i as u64, p), p, rm);
        }
        for n in [n_star - 1, n_star] {
            let ours = theoretical_bound(n, t_end, &c, t_end);
            let mut oracle = value.clone();
            if n == n_star - 1 {
                oracle = oracle
                    .div(&q, p, rm)
                    .mul(&BigFloat::from_u64(n_star as u64, p), p, rm);
            }
            let rel = big_ratio_to_f64(&BigFloat::from_f64(ours, p), &oracle, p, &mut cc);
            assert!((rel - 1.0).abs() < 1e-9, "n={n}: {rel}");
        }
    }

    #[test]
    fn certificate_csv_layout() {
        let c = cfg(4, 0.25, 1.0, VScheme::RiccatiExact);
        let out = picard_solve(
            &c,
            &Field::constant(c.grid, 0.6),
            &Field::constant(c.grid, 0.4),
            30,
            1e-6,
        )
        .unwrap();
        let csv = out.certificates[1].to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,U_n,V_n,bound_n");
        assert_eq!(lines.len(), 1 + 5);
        assert!(lines[1].starts_with("0.0000000000000000e0,0.0000000000000000e0,"));
        let summary = certificate_summary_csv(&out.certificates);
        assert_eq!(summary.lines().count(), 1 + out.certificates.len());
        assert!(summary.lines().nth(1).unwrap().starts_with("0,"));
        let m0 = integrate(out.u.last()) + integrate(out.v.last());
        assert!((m0 - 1.0).abs() < 1e-8);
    }
}
