//! Cross-module invariant suite behind `cadherin verify`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use cadherin_core::evolve::{advance, homogeneous_ode_reference, State, VScheme};
use cadherin_core::grid::apply_laplacian;
use cadherin_core::*;
use rand::{rngs::StdRng, Rng, SeedableRng};

use crate::output::num;

#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    pub quick: bool,
    /// Adds a deliberate flux leak to the Laplacian; the conservativity checks must fail.
    pub perturb_laplacian: bool,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}

fn at_most(name: &'static str, value: f64, limit: f64) -> Check {
    Check {
        name,
        value,
        limit,
        pass: value <= limit,
    }
}

fn at_least(name: &'static str, value: f64, limit: f64) -> Check {
    Check {
        name,
        value,
        limit,
        pass: value >= limit,
    }
}

pub fn report_csv(checks: &[Check]) -> String {
    let mut s = String::from("check,value,limit,status\n");
    for c in checks {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            c.name,
            num(c.value),
            num(c.limit),
            if c.pass { "pass" } else { "fail" }
        );
    }
    s
}

struct Ctx {
    opts: VerifyOptions,
    rng: StdRng,
    params: Params,
    consts: DerivedConstants,
}

impl Ctx {
    fn lap(&self, grid: &Grid, src: &[f64], dst: &mut [f64]) {
        apply_laplacian(grid, self.params.sigma(), src, dst);
        if self.opts.perturb_laplacian {
            // drop the west flux of the first column
            for j in 0..grid.ny() {
                let k = grid.index(0, j);
                dst[k] += 1e-3 * src[k] / (grid.hx() * grid.hx());
            }
        }
    }

    fn random_field(&mut self, grid: Grid, lo: f64, hi: f64) -> Field {
        let v: Vec<f64> = (0..grid.len())
            .map(|_| self.rng.gen_range(lo..hi))
            .collect();
        Field::new(grid, v).expect("finite samples")
    }
}

fn laplacian_checks(ctx: &mut Ctx) -> Vec<Check> {
    let mut cons = 0.0f64;
    let mut adj = 0.0f64;
    for (nx, ny) in [(16usize, 16usize), (33, 20), (48, 48)] {
        let g = Grid::new(nx, ny).unwrap();
        let f = ctx.random_field(g, -1.0, 1.0);
        let h = ctx.random_field(g, -1.0, 1.0);
        let mut lf = vec![0.0; g.len()];
        let mut lh = vec![0.0; g.len()];
        ctx.lap(&g, f.values(), &mut lf);
        ctx.lap(&g, h.values(), &mut lh);
        let area = g.cell_area();
        cons = cons.max((lf.iter().sum::<f64>() * area).abs());
        let a: f64 = lf.iter().zip(h.values()).map(|(x, y)| x * y).sum::<f64>() * area;
        let b: f64 = f.values().iter().zip(&lh).map(|(x, y)| x * y).sum::<f64>() * area;
        adj = adj.max((a - b).abs() / a.abs().max(1.0));
    }
    let sizes: &[usize] = if ctx.opts.quick {
        &[16, 32, 64]
    } else {
        &[32, 64, 128]
    };
    let errs: Vec<f64> = sizes
        .iter()
        .map(|&n| {
            let g = Grid::square(n).unwrap();
            let phi: Vec<f64> = (0..g.len())
                .map(|k| {
                    let (x, y) = g.cell_center(k % n, k / n);
                    (PI * x).cos() * (PI * y).cos()
                })
                .collect();
            let mut out = vec![0.0; g.len()];
            apply_laplacian(&g, 1.0, &phi, &mut out);
            out.iter()
                .zip(&phi)
                .map(|(l, p)| (l + 2.0 * PI * PI * p).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    let order = errs
        .windows(2)
        .map(|w| (w[0] / w[1]).log2())
        .fold(f64::INFINITY, f64::min);
    vec![
        at_most("laplacian_conservative", cons, 1e-12),
        at_most("laplacian_self_adjoint", adj, 1e-12),
        at_least("laplacian_order", order, 1.9),
    ]
}

fn model_checks(ctx: &mut Ctx) -> Vec<Check> {
    let p = ctx.params;
    let c = ctx.consts;
    let n = if ctx.opts.quick { 401 } else { 2001 };
    let (rho, a0, a1, eps) = (p.rho(), p.a0(), p.a1(), p.epsilon());
    let mut scan = 1.0f64;
    for i in 0..n {
        let r = c.lambda * i as f64 / (n - 1) as f64;
        for j in 0..n {
            let s = c.mu * j as f64 / (n - 1) as f64;
            let dr = (rho - s) * (a0 + a1 * s);
            let ds = r * (a1 * rho - a0 - 2.0 * a1 * s) - eps;
            scan = scan.max(dr.abs()).max(ds.abs());
        }
    }
    let scan_tol = if ctx.opts.quick { 1e-4 } else { 1e-6 };
    let pairs = if ctx.opts.quick { 10_000 } else { 100_000 };
    let mut worst = 0.0f64;
    for _ in 0..pairs {
        let (r1, s1) = (
            ctx.rng.gen_range(0.0..=c.lambda),
            ctx.rng.gen_range(0.0..=c.mu),
        );
        let (r2, s2) = (
            ctx.rng.gen_range(0.0..=c.lambda),
            ctx.rng.gen_range(0.0..=c.mu),
        );
        let d = (r1 - r2).abs() + (s1 - s2).abs();
        if d > 0.0 {
            worst = worst.max((p.reaction(r1, s1) - p.reaction(r2, s2)).abs() / d);
        }
    }
    let mut id = 0.0f64;
    for _ in 0..1000 {
        let s = ctx.rng.gen_range(0.0..=c.mu);
        let lhs = c.lambda * p.binding_rate(s) - eps * s;
        let rhs = c.lambda * a1 * (c.mu * c.mu - s * s);
        id = id.max((lhs - rhs).abs());
    }
    vec![
        at_most("lipschitz_vs_scan", (c.k - scan).abs(), scan_tol),
        at_most("lipschitz_random_pairs", worst / c.k, 1.0 + 1e-12),
        at_most("box_identity", id, 1e-12),
    ]
}

fn stationary_checks(ctx: &mut Ctx) -> Vec<Check> {
    let p = ctx.params;
    let r = normalized_stationary(&p, 1e-14).expect("valid parameters");
    let f = |v: f64| (p.rho() - v) * (p.a0() + p.a1() * v) * (1.0 - v) - p.epsilon() * v;
    let (mut lo, mut hi) = (0.0, p.rho());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == (f(lo) > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let zero = StationaryCubic::new(p.rho(), p.a0(), p.a1(), 0.0)
        .map(|c| c.solve(1e-14).expect("solvable"))
        .expect("valid cubic");
    let want = [-p.a0() / p.a1(), p.rho(), 1.0];
    let mut want_sorted = want;
    want_sorted.sort_by(f64::total_cmp);
    let zero_err = zero
        .roots
        .iter()
        .zip(want_sorted)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    vec![
        at_most(
            "stationary_vs_bisection",
            (r.admissible - 0.5 * (lo + hi)).abs(),
            1e-12,
        ),
        at_most("stationary_residual", r.residual, 1e-12),
        at_most("stationary_eps0_roots", zero_err, 1e-12),
    ]
}

fn evolve_checks(ctx: &mut Ctx) -> Vec<Check> {
    let p = ctx.params;
    let c = ctx.consts;
    let grid = Grid::square(if ctx.opts.quick { 24 } else { 64 }).unwrap();
    let mut mass = 0.0f64;
    let mut lo = f64::INFINITY;
    let mut u_hi = f64::NEG_INFINITY;
    let mut v_hi = f64::NEG_INFINITY;
    for scheme in [VScheme::ExplicitEuler, VScheme::RiccatiExact] {
        let u = ctx.random_field(grid, 0.0, c.lambda);
        let v = ctx.random_field(grid, 0.0, c.mu);
        let mut cfg = RunConfig::new(p, grid);
        cfg.scheme_v = scheme;
        cfg.dt = 0.25 / c.k;
        let mut st = State { u, v, t: 0.0 };
        let m0 = integrate(&st.u) + integrate(&st.v);
        for _ in 0..40 {
            advance(&mut st, &cfg, cfg.dt).expect("step succeeds");
            mass = mass.max((integrate(&st.u) + integrate(&st.v) - m0).abs());
            if scheme == VScheme::RiccatiExact {
                lo = lo.min(st.u.min()).min(st.v.min());
                u_hi = u_hi.max(st.u.max());
                v_hi = v_hi.max(st.v.max());
            }
        }
    }
    let small = Grid::square(4).unwrap();
    let mut cfg = RunConfig::new(p, small);
    cfg.dt = if ctx.opts.quick { 1e-3 } else { 1e-4 };
    cfg.t_end = 1.0;
    let out = run(
        &cfg,
        (Field::constant(small, 0.6), Field::constant(small, 0.4)),
    )
    .expect("run succeeds");
    let (ur, vr) = homogeneous_ode_reference(0.6, 0.4, &p, 1.0, 1e-5).expect("oracle");
    let ode_err = (out.final_state.u.get(1, 2) - ur)
        .abs()
        .max((out.final_state.v.get(1, 2) - vr).abs());
    vec![
        at_most("evolve_mass", mass, 1e-10),
        at_least("evolve_box_lower", lo, -1e-8),
        at_most("evolve_box_u_upper", u_hi - c.lambda, 1e-8),
        at_most("evolve_box_v_upper", v_hi - c.mu, 1e-8),
        at_most("evolve_ode_oracle", ode_err, 1e-5),
    ]
}

fn picard_checks(ctx: &mut Ctx) -> Vec<Check> {
    let p = ctx.params;
    let grid = Grid::square(if ctx.opts.quick { 8 } else { 16 }).unwrap();
    let mut cfg = RunConfig::new(p, grid);
    cfg.dt = if ctx.opts.quick { 1e-2 } else { 2e-3 };
    cfg.t_end = 1.0;
    cfg.snapshot_every = 1;
    let f = ctx.random_field(grid, 0.2, 1.0);
    let g = ctx.random_field(grid, 0.1, 0.5);
    let tol = 1e-7;
    let out = match picard_solve(&cfg, &f, &g, 30, tol) {
        Ok(o) => o,
        Err(_) => return vec![at_most("picard_converged", 1.0, 0.0)],
    };
    let start = out
        .certificates
        .iter()
        .map(|c| c.u_norms[0].max(c.v_norms[0]))
        .fold(0.0, f64::max);
    let failing = out.certificates.iter().filter(|c| !c.passes).count();
    let mass = out.mass_series();
    let mass_dev = mass.iter().map(|m| (m - mass[0]).abs()).fold(0.0, f64::max);
    let coupled = run(&cfg, (f, g)).expect("run succeeds");
    let mut dist = 0.0f64;
    for (st, (u, v)) in coupled
        .snapshots
        .iter()
        .zip(out.u.frames.iter().zip(&out.v.frames))
    {
        let du = st.u.zip_map(u, |a, b| a - b);
        let dv = st.v.zip_map(v, |a, b| a - b);
        dist = dist.max(du.dot(&du).sqrt()).max(dv.dot(&dv).sqrt());
    }
    vec![
        at_most(
            "picard_converged",
            if out.converged { 0.0 } else { 1.0 },
            0.0,
        ),
        at_most("picard_zero_start", start, 0.0),
        at_most("picard_certificates_failing", failing as f64, 0.0),
        at_most("picard_mass", mass_dev, 1e-8),
        at_most("picard_vs_evolve", dist, 10.0 * tol),
    ]
}

pub fn run_suite(params: Params, opts: VerifyOptions) -> Vec<Check> {
    let mut ctx = Ctx {
        opts,
        rng: StdRng::seed_from_u64(opts.seed),
        params,
        consts: derived_constants(&params, 1.0),
    };
    let mut checks = laplacian_checks(&mut ctx);
    checks.extend(model_checks(&mut ctx));
    checks.extend(stationary_checks(&mut ctx));
    checks.extend(evolve_checks(&mut ctx));
    checks.extend(picard_checks(&mut ctx));
    checks
}
