//! Model constants, the reaction term `Q` and the constants of the invariant box.
//!
//! The reaction is `Q(r, s) = (rho - s)(a0 + a1 s) r - epsilon s`: free particles
//! (density `r`) bind to free targets `rho - s` with the gregarious rate
//! `a0 + a1 s`, bound particles (density `s`) unbind at rate `epsilon`.

use std::fmt;

use thiserror::Error;

/// How strictly [`RawParams::validate`] enforces the unit range on each constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ValidationMode {
    /// Every constant must lie in `(0, 1)`.
    #[default]
    Strict,
    /// Constants `>= 1` produce warnings instead of errors.
    Lenient,
}

/// Unvalidated parameter tuple, as read from a config file or the command line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawParams {
    pub rho: f64,
    pub sigma: f64,
    pub a0: f64,
    pub a1: f64,
    pub epsilon: f64,
}

impl RawParams {
    /// Constants used throughout the reference experiment (sigma = 1).
    pub const REFERENCE: RawParams = RawParams {
        rho: 0.7,
        sigma: 1.0,
        a0: 0.25,
        a1: 0.5,
        epsilon: 0.35,
    };

    fn named(&self) -> [(&'static str, f64); 5] {
        [
            ("rho", self.rho),
            ("sigma", self.sigma),
            ("a0", self.a0),
            ("a1", self.a1),
            ("epsilon", self.epsilon),
        ]
    }

    pub fn validate(self, mode: ValidationMode) -> Result<Validated, ValidationError> {
        let mut issues = Vec::new();
        let mut warnings = Vec::new();

        for (name, value) in self.named() {
            if !value.is_finite() {
                issues.push(ParamIssue::NonFiniteParameter { name, value });
            } else if value <= 0.0 {
                issues.push(ParamIssue::NonPositiveParameter { name, value });
            } else if value >= 1.0 {
                // rho = 1 is allowed in both modes; rho > 1 is reported separately.
                if name == "rho" {
                    continue;
                }
                match mode {
                    ValidationMode::Strict => {
                        issues.push(ParamIssue::StrictRangeViolated { name, value })
                    }
                    ValidationMode::Lenient => {
                        warnings.push(ParamWarning::OutsideStrictRange { name, value })
                    }
                }
            }
        }
        if self.rho.is_finite() && self.rho > 1.0 {
            issues.push(ParamIssue::RhoOutOfRange { rho: self.rho });
        }
        if self.rho == 1.0 && mode == ValidationMode::Strict {
            issues.push(ParamIssue::StrictRangeViolated {
                name: "rho",
                value: self.rho,
            });
        }
        if let Some(issue) = gregarious_issue(self.rho, self.a0, self.a1) {
            issues.push(issue);
        }

        if issues.is_empty() {
            Ok(Validated {
                params: Params {
                    rho: self.rho,
                    sigma: self.sigma,
                    a0: self.a0,
                    a1: self.a1,
                    epsilon: self.epsilon,
                },
                warnings,
            })
        } else {
            Err(ValidationError(issues))
        }
    }
}

pub(crate) fn gregarious_issue(rho: f64, a0: f64, a1: f64) -> Option<ParamIssue> {
    let rho_a1 = rho * a1;
    (rho_a1.is_finite() && a0.is_finite() && a0 >= rho_a1)
        .then_some(ParamIssue::GregariousConditionViolated { a0, rho_a1 })
}

/// One violated constraint.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamIssue {
    #[error("{name} must be positive, got {value}")]
    NonPositiveParameter { name: &'static str, value: f64 },
    #[error("{name} must be finite, got {value}")]
    NonFiniteParameter { name: &'static str, value: f64 },
    #[error("gregarious condition a0 < rho*a1 violated: a0 = {a0} >= rho*a1 = {rho_a1}")]
    GregariousConditionViolated { a0: f64, rho_a1: f64 },
    #[error("rho must not exceed 1, got {rho}")]
    RhoOutOfRange { rho: f64 },
    #[error("{name} = {value} is outside (0, 1) (strict mode)")]
    StrictRangeViolated { name: &'static str, value: f64 },
}

/// Non-fatal findings of lenient validation.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamWarning {
    OutsideStrictRange { name: &'static str, value: f64 },
}

impl fmt::Display for ParamWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamWarning::OutsideStrictRange { name, value } => {
                write!(
                    f,
                    "{name} = {value} is outside (0, 1); accepted in lenient mode"
                )
            }
        }
    }
}

/// All constraint violations found in one parameter tuple.
#[derive(Debug, Clone, PartialEq, Error)]
pub struct ValidationError(pub Vec<ParamIssue>);

impl ValidationError {
    pub fn issues(&self) -> &[ParamIssue] {
        &self.0
    }

    pub fn has_gregarious_violation(&self) -> bool {
        self.0
            .iter()
            .any(|i| matches!(i, ParamIssue::GregariousConditionViolated { .. }))
    }
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid parameters: ")?;
        for (i, issue) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{issue}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Validated {
    pub params: Params,
    pub warnings: Vec<ParamWarning>,
}

/// Validated model constants. Only obtainable through [`RawParams::validate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    rho: f64,
    sigma: f64,
    a0: f64,
    a1: f64,
    epsilon: f64,
}

impl Params {
    /// The reference constants, validated leniently (sigma = 1).
    pub fn reference() -> Params {
        RawParams::REFERENCE
            .validate(ValidationMode::Lenient)
            .expect("reference constants are valid")
            .params
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    pub fn a0(&self) -> f64 {
        self.a0
    }
    pub fn a1(&self) -> f64 {
        self.a1
    }
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn raw(&self) -> RawParams {
        RawParams {
            rho: self.rho,
            sigma: self.sigma,
            a0: self.a0,
            a1: self.a1,
            epsilon: self.epsilon,
        }
    }

    /// Binding coefficient `(rho - s)(a0 + a1 s)`, i.e. `dQ/dr`. `Q` is linear in `r`
    /// with this slope, so `Q(r, s) = binding_rate(s) * r - epsilon * s`.
    #[inline]
    pub fn binding_rate(&self, s: f64) -> f64 {
        (self.rho - s) * (self.a0 + self.a1 * s)
    }

    /// `Q(r, s) = (rho - s)(a0 + a1 s) r - epsilon s`, evaluated for any real input.
    #[inline]
    pub fn reaction(&self, r: f64, s: f64) -> f64 {
        self.binding_rate(s) * r - self.epsilon * s
    }

    /// `(dQ/dr, dQ/ds)` in closed form.
    #[inline]
    pub fn reaction_jacobian(&self, r: f64, s: f64) -> (f64, f64) {
        let dr = self.binding_rate(s);
        let ds = r * (self.a1 * self.rho - self.a0 - 2.0 * self.a1 * s) - self.epsilon;
        (dr, ds)
    }

    /// Upper bound of the free density, `epsilon / (a1 rho - a0)`.
    pub fn lambda(&self) -> f64 {
        self.epsilon / (self.a1 * self.rho - self.a0)
    }

    /// Upper bound of the bound density, `sqrt(rho a0 / a1)`.
    pub fn mu(&self) -> f64 {
        (self.rho * self.a0 / self.a1).sqrt()
    }
}

/// Bounds of the invariant box and the constants of the Cauchy estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedConstants {
    pub lambda: f64,
    pub mu: f64,
    /// Lipschitz constant of `Q` on `[0, lambda] x [0, mu]`, clamped to `>= 1`.
    pub k: f64,
    /// Gronwall prefactor `4 max(lambda, mu)^2 |Omega|`.
    pub big_l: f64,
}

pub fn derived_constants(p: &Params, domain_area: f64) -> DerivedConstants {
    debug_assert!(domain_area > 0.0);
    let lambda = p.lambda();
    let mu = p.mu();
    let k = lipschitz_constant(p, lambda, mu);
    let m = lambda.max(mu);
    DerivedConstants {
        lambda,
        mu,
        k,
        big_l: 4.0 * m * m * domain_area,
    }
}

/// Maxima of `|dQ/dr|` and `|dQ/ds|` over a box `[0, r_max] x [0, s_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartialBounds {
    pub dr: f64,
    pub ds: f64,
}

/// Closed-form maxima of both partials over `[0, r_max] x [0, s_max]`.
///
/// `dQ/dr` depends on `s` only and is a concave quadratic with vertex
/// `(rho a1 - a0) / (2 a1)`; `dQ/ds` is bilinear in `(r, s)`, so its extrema sit
/// at the corners.
pub fn partial_bounds(p: &Params, r_max: f64, s_max: f64) -> PartialBounds {
    let vertex = (p.rho * p.a1 - p.a0) / (2.0 * p.a1);
    let mut dr = p.binding_rate(0.0).abs().max(p.binding_rate(s_max).abs());
    if (0.0..=s_max).contains(&vertex) {
        dr = dr.max(p.binding_rate(vertex).abs());
    }
    let ds = [(0.0, 0.0), (0.0, s_max), (r_max, 0.0), (r_max, s_max)]
        .into_iter()
        .map(|(r, s)| p.reaction_jacobian(r, s).1.abs())
        .fold(0.0, f64::max);
    PartialBounds { dr, ds }
}

/// Lipschitz constant of `Q` for the 1-norm increment on `[0, lambda] x [0, mu]`,
/// normalized to be at least 1.
pub fn lipschitz_constant(p: &Params, lambda: f64, mu: f64) -> f64 {
    let b = partial_bounds(p, lambda, mu);
    b.dr.max(b.ds).max(1.0)
}
