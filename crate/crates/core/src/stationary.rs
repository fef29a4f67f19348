//! Spatially constant stationary states.
//!
//! On a normalized domain the only admissible equilibria are `(1 - v, v)` with
//! `v` a root of `(rho - v)(a0 + a1 v)(1 - v) - epsilon v = 0` in `(0, rho]`.
//! The cubic always has one real root in each of `(-inf, -a0/a1]`, `(0, rho]` and
//! `[1, inf)`; each is located inside its own bracket by safeguarded Newton.

use thiserror::Error;

use crate::model::{gregarious_issue, ParamIssue, Params, ValidationError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StationaryError {
    #[error("negative input: {0}")]
    NegativeInput(f64),
    #[error("no root of the stationary cubic in (0, rho] (rho = {rho})")]
    NoAdmissibleRoot { rho: f64 },
    #[error(transparent)]
    InvalidParameters(#[from] ValidationError),
    #[error("epsilon grid must be non-negative and ascending")]
    InvalidEpsilonGrid,
}

/// A constant equilibrium `(u, v)` with `Q(u, v) = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryPair {
    pub u_const: f64,
    pub v_const: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootWarning {
    /// More than one root landed in `(0, rho]`; the smallest was selected.
    DegenerateRootPattern,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CubicRootReport {
    pub epsilon: f64,
    /// Real roots, ascending, with multiplicity.
    pub roots: Vec<f64>,
    pub admissible: f64,
    /// `|P(admissible)|`.
    pub residual: f64,
    pub warnings: Vec<RootWarning>,
}

/// Family of constant states `u = C`. The plus branch of the quadratic in `v` is
/// the only non-negative one.
pub fn v_of_constant_u(c: f64, p: &Params) -> Result<StationaryPair, StationaryError> {
    if !(c >= 0.0) {
        return Err(StationaryError::NegativeInput(c));
    }
    if c == 0.0 {
        return Ok(StationaryPair {
            u_const: 0.0,
            v_const: 0.0,
        });
    }
    // C a1 v^2 - b v - C rho a0 = 0
    let b = c * p.a1() * p.rho() - c * p.a0() - p.epsilon();
    let disc = (b * b + 4.0 * c * c * p.rho() * p.a0() * p.a1()).sqrt();
    let v = if b >= 0.0 {
        (b + disc) / (2.0 * c * p.a1())
    } else {
        2.0 * c * p.rho() * p.a0() / (disc - b)
    };
    Ok(StationaryPair {
        u_const: c,
        v_const: v,
    })
}

/// The normalized stationary cubic `P(v) = (rho - v)(a0 + a1 v)(1 - v) - epsilon v`.
///
/// Unlike [`Params`], `epsilon = 0` is accepted here: it is the starting point of
/// the deformation in `epsilon` where the roots are `rho`, `-a0/a1` and `1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryCubic {
    rho: f64,
    a0: f64,
    a1: f64,
    epsilon: f64,
}

impl StationaryCubic {
    pub fn new(rho: f64, a0: f64, a1: f64, epsilon: f64) -> Result<Self, ValidationError> {
        let mut issues = Vec::new();
        for (name, value) in [("rho", rho), ("a0", a0), ("a1", a1)] {
            if !value.is_finite() {
                issues.push(ParamIssue::NonFiniteParameter { name, value });
            } else if value <= 0.0 {
                issues.push(ParamIssue::NonPositiveParameter { name, value });
            }
        }
        if !epsilon.is_finite() {
            issues.push(ParamIssue::NonFiniteParameter {
                name: "epsilon",
                value: epsilon,
            });
        } else if epsilon < 0.0 {
            issues.push(ParamIssue::NonPositiveParameter {
                name: "epsilon",
                value: epsilon,
            });
        }
        if rho.is_finite() && rho > 1.0 {
            issues.push(ParamIssue::RhoOutOfRange { rho });
        }
        issues.extend(gregarious_issue(rho, a0, a1));
        if issues.is_empty() {
            Ok(StationaryCubic {
                rho,
                a0,
                a1,
                epsilon,
            })
        } else {
            Err(ValidationError(issues))
        }
    }

    pub fn from_params(p: &Params) -> Self {
        StationaryCubic {
            rho: p.rho(),
            a0: p.a0(),
            a1: p.a1(),
            epsilon: p.epsilon(),
        }
    }

    pub fn with_epsilon(self, epsilon: f64) -> Result<Self, ValidationError> {
        StationaryCubic::new(self.rho, self.a0, self.a1, epsilon)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    #[inline]
    pub fn eval(&self, v: f64) -> f64 {
        (self.rho - v) * (self.a0 + self.a1 * v) * (1.0 - v) - self.epsilon * v
    }

    #[inline]
    pub fn derivative(&self, v: f64) -> f64 {
        let (g, h, w) = (self.rho - v, self.a0 + self.a1 * v, 1.0 - v);
        -h * w + g * self.a1 * w - g * h - self.epsilon
    }

    fn eval_with_derivative(&self, v: f64) -> (f64, f64) {
        (self.eval(v), self.derivative(v))
    }

    pub fn solve(&self, tol: f64) -> Result<CubicRootReport, StationaryError> {
        let tol = tol.max(f64::EPSILON);
        let mut roots = if self.epsilon == 0.0 {
            // P factors exactly.
            vec![-self.a0 / self.a1, self.rho, 1.0]
        } else {
            let f = |v: f64| self.eval_with_derivative(v);
            let pivot = -self.a0 / self.a1;
            let v2 = {
                let hi = nudge_to_sign(&f, pivot, 1.0, true);
                let lo = expand_to_sign(&f, hi, -1.0, false);
                safeguarded_newton(&f, lo, hi, tol)
            };
            let v1 = safeguarded_newton(&f, 0.0, self.rho, tol);
            let v3 = {
                let hi = expand_to_sign(&f, 1.0, 1.0, true);
                safeguarded_newton(&f, 1.0, hi, tol)
            };
            vec![v2, v1, v3]
        };
        roots.sort_by(f64::total_cmp);

        let mut warnings = Vec::new();
        let in_range: Vec<f64> = roots
            .iter()
            .copied()
            .filter(|&v| v > 0.0 && v <= self.rho)
            .collect();
        let admissible = match in_range.as_slice() {
            [] => return Err(StationaryError::NoAdmissibleRoot { rho: self.rho }),
            [v] => *v,
            [v, ..] => {
                warnings.push(RootWarning::DegenerateRootPattern);
                *v
            }
        };
        Ok(CubicRootReport {
            epsilon: self.epsilon,
            roots,
            admissible,
            residual: self.eval(admissible).abs(),
            warnings,
        })
    }
}

/// Admissible stationary root for the model constants on a unit-area domain.
pub fn normalized_stationary(p: &Params, tol: f64) -> Result<CubicRootReport, StationaryError> {
    StationaryCubic::from_params(p).solve(tol)
}

/// Root reports along an ascending grid of unbinding rates, other constants fixed.
pub fn sweep_epsilon(
    cubic: &StationaryCubic,
    eps_grid: &[f64],
    tol: f64,
) -> Result<Vec<CubicRootReport>, StationaryError> {
    let ascending = eps_grid.windows(2).all(|w| w[0] < w[1]);
    if !ascending || eps_grid.iter().any(|&e| !(e >= 0.0)) {
        return Err(StationaryError::InvalidEpsilonGrid);
    }
    eps_grid
        .iter()
        .map(|&eps| cubic.with_epsilon(eps)?.solve(tol))
        .collect()
}

/// Moves `x` by growing steps in `dir` until `f(x)` is positive (`want_positive`)
/// or negative. Used to open the unbounded outer brackets.
fn expand_to_sign<F>(f: &F, start: f64, dir: f64, want_positive: bool) -> f64
where
    F: Fn(f64) -> (f64, f64),
{
    let mut step = 1.0;
    let mut x = start;
    for _ in 0..2000 {
        let fx = f(x).0;
        if (want_positive && fx > 0.0) || (!want_positive && fx < 0.0) {
            return x;
        }
        x = start + dir * step;
        step *= 2.0;
    }
    x
}

/// Like [`expand_to_sign`] but with tiny steps; only corrects rounding at a
/// bracket endpoint whose exact value has the wanted sign.
fn nudge_to_sign<F>(f: &F, start: f64, dir: f64, want_positive: bool) -> f64
where
    F: Fn(f64) -> (f64, f64),
{
    let mut step = 1e-14 * start.abs().max(1.0);
    let mut x = start;
    for _ in 0..60 {
        let fx = f(x).0;
        if (want_positive && fx >= 0.0) || (!want_positive && fx <= 0.0) {
            return x;
        }
        x = start + dir * step;
        step *= 2.0;
    }
    x
}

/// Newton iteration kept inside a sign-change bracket, falling back to bisection
/// whenever the Newton step leaves the bracket or stalls.
fn safeguarded_newton<F>(f: &F, a: f64, b: f64, tol: f64) -> f64
where
    F: Fn(f64) -> (f64, f64),
{
    let (fa, _) = f(a);
    let (fb, _) = f(b);
    if fa == 0.0 {
        return a;
    }
    if fb == 0.0 {
        return b;
    }
    debug_assert!(fa.signum() != fb.signum(), "no sign change on [{a}, {b}]");
    // neg/pos: endpoints where f < 0 and f > 0
    let (mut neg, mut pos) = if fa < 0.0 { (a, b) } else { (b, a) };
    let mut x = 0.5 * (a + b);
    let mut dx_old = (b - a).abs();
    let mut dx = dx_old;
    let (mut fx, mut dfx) = f(x);
    for _ in 0..500 {
        if fx == 0.0 {
            return x;
        }
        let (lo, hi) = if neg < pos { (neg, pos) } else { (pos, neg) };
        let newton = x - fx / dfx;
        let newton_ok =
            dfx != 0.0 && newton > lo && newton < hi && (2.0 * fx).abs() <= (dx_old * dfx).abs();
        dx_old = dx;
        if newton_ok {
            dx = fx / dfx;
            x = newton;
        } else {
            dx = 0.5 * (pos - neg);
            x = neg + dx;
        }
        if dx.abs() <= tol * x.abs().max(1.0) || hi - lo <= f64::EPSILON * x.abs().max(1e-300) {
            return x;
        }
        let next = f(x);
        fx = next.0;
        dfx = next.1;
        if fx < 0.0 {
            neg = x;
        } else {
            pos = x;
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{RawParams, ValidationMode};
    use proptest::prelude::*;
    use rand::{rngs::StdRng, Rng, SeedableRng};

    const V1: f64 = 0.3107435;

    fn reference_cubic() -> StationaryCubic {
        StationaryCubic::from_params(&Params::reference())
    }

    /// Plain bisection on `[0, rho]`, independent of the Newton path.
    fn bisect(cubic: &StationaryCubic, mut lo: f64, mut hi: f64, iters: usize) -> f64 {
        let flo = cubic.eval(lo);
        for _ in 0..iters {
            let mid = 0.5 * (lo + hi);
            let fm = cubic.eval(mid);
            if fm == 0.0 {
                return mid;
            }
            if (fm > 0.0) == (flo > 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn reference_root() {
        let r = normalized_stationary(&Params::reference(), 1e-15).unwrap();
        assert!((r.admissible - V1).abs() < 1e-6, "{}", r.admissible);
        assert!(r.residual < 1e-12);
        assert_eq!(r.roots.len(), 3);
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn zero_epsilon_roots() {
        let r = reference_cubic()
            .with_epsilon(0.0)
            .unwrap()
            .solve(1e-15)
            .unwrap();
        let expected = [-0.5, 0.7, 1.0];
        for (got, want) in r.roots.iter().zip(expected) {
            assert!((got - want).abs() < 1e-12);
        }
        assert_eq!(r.admissible, 0.7);
    }

    #[test]
    fn agrees_with_bisection_oracle() {
        let cubic = reference_cubic();
        let oracle = bisect(&cubic, 0.0, 0.7, 200);
        let r = cubic.solve(1e-15).unwrap();
        assert!((r.admissible - oracle).abs() < 1e-12);
    }

    #[test]
    fn outer_roots_follow_deformation_limits() {
        let r = reference_cubic().solve(1e-15).unwrap();
        assert!(r.roots[0] < -0.5);
        assert!(r.roots[2] > 1.0);
        for v in &r.roots {
            assert!(reference_cubic().eval(*v).abs() < 1e-12);
        }
    }

    #[test]
    fn sweep_moves_admissible_root_down() {
        let reports = sweep_epsilon(&reference_cubic(), &[0.0, 0.35], 1e-15).unwrap();
        assert_eq!(reports[0].admissible, 0.7);
        assert!((reports[1].admissible - V1).abs() < 1e-6);
    }

    #[test]
    fn large_epsilon_pushes_root_to_zero() {
        let cubic = reference_cubic().with_epsilon(1e3).unwrap();
        let r = cubic.solve(1e-15).unwrap();
        let oracle = bisect(&cubic, 0.0, 0.7, 200);
        assert!(r.admissible < 1e-3);
        assert!((r.admissible - oracle).abs() < 1e-12);
    }

    #[test]
    fn sweep_rejects_unsorted_grid() {
        assert_eq!(
            sweep_epsilon(&reference_cubic(), &[0.3, 0.1], 1e-15),
            Err(StationaryError::InvalidEpsilonGrid)
        );
    }

    #[test]
    fn degenerate_unit_rho_at_zero_epsilon() {
        let cubic = StationaryCubic::new(1.0, 0.25, 0.5, 0.0).unwrap();
        let r = cubic.solve(1e-15).unwrap();
        assert_eq!(r.admissible, 1.0);
        assert_eq!(r.warnings, vec![RootWarning::DegenerateRootPattern]);
    }

    #[test]
    fn cubic_validation_uses_gregarious_condition() {
        let err = StationaryCubic::new(0.7, 0.4, 0.5, 0.35).unwrap_err();
        assert!(err.has_gregarious_violation());
        assert!(StationaryCubic::new(0.7, 0.25, 0.5, -1.0).is_err());
    }

    #[test]
    fn constant_u_family() {
        let p = Params::reference();
        assert_eq!(
            v_of_constant_u(0.0, &p).unwrap(),
            StationaryPair {
                u_const: 0.0,
                v_const: 0.0
            }
        );
        let pair = v_of_constant_u(1.0 - V1, &p).unwrap();
        assert!((pair.v_const - V1).abs() < 1e-5);
        for c in [1e-6, 0.01, 0.3, 0.69, 2.0, 3.5, 100.0] {
            let pair = v_of_constant_u(c, &p).unwrap();
            assert!(p.reaction(c, pair.v_const).abs() < 1e-12, "C = {c}");
            assert!(pair.v_const > 0.0 && pair.v_const < p.rho());
        }
        assert_eq!(
            v_of_constant_u(-1.0, &p),
            Err(StationaryError::NegativeInput(-1.0))
        );
    }

    #[test]
    fn exactly_one_root_in_admissible_interval() {
        let mut rng = StdRng::seed_from_u64(11);
        let mut tested = 0;
        while tested < 1000 {
            let rho = rng.gen_range(0.01..1.0);
            let a1 = rng.gen_range(0.01..1.0);
            let a0 = rho * a1 * rng.gen_range(0.01..0.99);
            let eps = rng.gen_range(1e-4..1.0);
            let sigma = rng.gen_range(0.01..1.0);
            let Ok(v) = (RawParams {
                rho,
                sigma,
                a0,
                a1,
                epsilon: eps,
            })
            .validate(ValidationMode::Strict) else {
                continue;
            };
            let r = normalized_stationary(&v.params, 1e-15).unwrap();
            let count = r.roots.iter().filter(|&&x| x > 0.0 && x <= rho).count();
            assert_eq!(count, 1, "{:?}", v.params);
            assert!(r.residual < 1e-12);
            let q = v.params.reaction(1.0 - r.admissible, r.admissible);
            assert!(q.abs() < 1e-12);
            tested += 1;
        }
    }

    proptest! {
        #[test]
        fn admissible_root_nonincreasing_in_epsilon(
            rho in 0.05f64..1.0,
            a1 in 0.01f64..1.0,
            frac in 0.01f64..0.99,
        ) {
            let a0 = rho * a1 * frac;
            let cubic = StationaryCubic::new(rho, a0, a1, 0.0).unwrap();
            let grid: Vec<f64> = (0..40).map(|i| 0.025 * i as f64).collect();
            let reports = sweep_epsilon(&cubic, &grid, 1e-15).unwrap();
            for w in reports.windows(2) {
                prop_assert!(w[1].admissible <= w[0].admissible + 1e-14);
            }
            for r in &reports {
                prop_assert!(r.admissible > 0.0 && r.admissible <= rho);
                prop_assert!(r.residual < 1e-12);
            }
        }
    }
}
