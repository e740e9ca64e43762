//! Distortion bounds and the equicontinuity modulus.
//!
//! The chain implemented here:
//!
//! 1. c_n = min{1, β·a_n / (ω_{n−1}·(ln √3)^{1−n})}.
//! 2. For one field Q: h(f(x), f(x₀)) ≤ ω_{n−1} / (c_n·Δ·I^{n−1}) with
//!    I = I(x₀, |x−x₀|, ε₀).
//! 3. The radial integral is bounded below through the normalized annulus
//!    mass M(ε) by (1/n)∫_{e·M(ε)}^{M(ε)/εⁿ} dτ/(τ·Φ⁻¹(τ)^{1/(n−1)}).
//! 4. Bounding M(ε) by λ_n·β_n(x₀)·M removes Q altogether and yields a
//!    modulus valid for every mapping of the class.
//!
//! β and a_n come from capacity estimates that are only known to exist; the
//! defaults are placeholders and every report says so.

use std::collections::BTreeMap;
use std::f64::consts::E;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::field::{QField, SphericalQuadratureSpec};
use crate::gauge::ConvexGauge;
use crate::geometry::{c_upper_bound, check_dim, dimension_constants, distance, norm, same_dim};
use crate::report::{json_f64, json_f64_opt};

/// Default β and a_n. Not certified values.
pub const PLACEHOLDER_CONSTANT: f64 = 0.1;

/// Relative slack under which M(ε) counts as equal to Φ(0).
const TAU0_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct DimensionOverride {
    pub beta: Option<f64>,
    pub a_n: Option<f64>,
    pub lambda: Option<f64>,
}

/// The capacity constants β (lower modulus estimate) and a_n (continuum
/// estimate c(F) ≥ a_n·h(F)), optionally per dimension, plus an optional
/// λ_n override.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantsConfig {
    pub beta: f64,
    pub a_n: f64,
    pub lambda: Option<f64>,
    pub per_dimension: BTreeMap<usize, DimensionOverride>,
    pub provenance: String,
    pub certified: bool,
}

impl Default for ConstantsConfig {
    fn default() -> Self {
        Self::placeholder()
    }
}

impl ConstantsConfig {
    pub fn placeholder() -> Self {
        ConstantsConfig {
            beta: PLACEHOLDER_CONSTANT,
            a_n: PLACEHOLDER_CONSTANT,
            lambda: None,
            per_dimension: BTreeMap::new(),
            provenance: "placeholder beta = a_n = 0.1; NOT certified capacity constants".into(),
            certified: false,
        }
    }

    pub fn uniform(beta: f64, a_n: f64) -> Result<Self> {
        let cfg = ConstantsConfig {
            beta,
            a_n,
            provenance: "user supplied".into(),
            ..Self::placeholder()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::arg(format!("{name} must be positive and finite, got {v}")))
            }
        };
        positive("beta", self.beta)?;
        positive("a_n", self.a_n)?;
        if let Some(l) = self.lambda {
            positive("lambda", l)?;
        }
        for (n, o) in &self.per_dimension {
            check_dim(*n)?;
            if let Some(v) = o.beta {
                positive("beta", v)?;
            }
            if let Some(v) = o.a_n {
                positive("a_n", v)?;
            }
            if let Some(v) = o.lambda {
                positive("lambda", v)?;
            }
        }
        Ok(())
    }

    pub fn beta_for(&self, n: usize) -> f64 {
        self.per_dimension.get(&n).and_then(|o| o.beta).unwrap_or(self.beta)
    }

    pub fn a_n_for(&self, n: usize) -> f64 {
        self.per_dimension.get(&n).and_then(|o| o.a_n).unwrap_or(self.a_n)
    }

    /// λ_n: the override if one is set, else 2e/Ω_n.
    pub fn lambda_for(&self, n: usize) -> Result<f64> {
        let overridden = self
            .per_dimension
            .get(&n)
            .and_then(|o| o.lambda)
            .or(self.lambda);
        match overridden {
            Some(l) => Ok(l),
            None => default_lambda(n),
        }
    }

    pub fn to_json(&self, n: usize) -> Result<Value> {
        Ok(json!({
            "beta": json_f64(self.beta_for(n)),
            "a_n": json_f64(self.a_n_for(n)),
            "lambda_n": json_f64(self.lambda_for(n)?),
            "c_n": json_f64(c_n_constant(self, n)?),
            "certified": self.certified,
            "provenance": self.provenance,
        }))
    }
}

/// λ_n = 2e/Ω_n: combines M(ε) ≤ 2β_n(x₀)M/Ω_n with the factor e in the
/// lower τ-limit.
pub fn default_lambda(n: usize) -> Result<f64> {
    Ok(2.0 * E / dimension_constants(n)?.ball_volume)
}

/// c_n = min{1, β·a_n / (ω_{n−1}·(ln √3)^{1−n})}.
pub fn c_n_constant(config: &ConstantsConfig, n: usize) -> Result<f64> {
    let ratio = config.beta_for(n) * config.a_n_for(n) / c_upper_bound(n)?;
    Ok(ratio.min(1.0))
}

/// Data shared by the single-field bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundInputs {
    pub n: usize,
    /// Lower bound Δ on c of the complement of the image.
    pub delta: f64,
    pub x0: Vec<f64>,
    /// ε₀, at most the distance from x₀ to the boundary of the domain.
    pub eps0: f64,
}

impl BoundInputs {
    pub fn new(n: usize, delta: f64, x0: Vec<f64>, eps0: f64) -> Result<Self> {
        check_dim(n)?;
        same_dim(n, x0.len())?;
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::arg(format!("delta must be positive, got {delta}")));
        }
        if !(eps0 > 0.0 && eps0.is_finite()) {
            return Err(Error::arg(format!("eps0 must be positive, got {eps0}")));
        }
        if x0.iter().any(|c| !c.is_finite()) {
            return Err(Error::arg("x0 must be finite"));
        }
        Ok(BoundInputs { n, delta, x0, eps0 })
    }
}

/// Checks a Δ derived from the continuum estimate against the universal cap
/// ω_{n−1}(ln √3)^{1−n} of the set function c.
pub fn check_delta_cap(delta: f64, n: usize) -> Result<()> {
    let cap = c_upper_bound(n)?;
    if delta > cap {
        Err(Error::arg(format!("delta {delta} exceeds the cap {cap} of c(E)")))
    } else {
        Ok(())
    }
}

/// ω_{n−1} / (c_n·Δ·I^{n−1}).
pub fn lemma1_bound(radial_integral: f64, inputs: &BoundInputs, config: &ConstantsConfig) -> Result<f64> {
    if !(radial_integral > 0.0) {
        return Err(Error::arg(format!(
            "radial integral must be positive, got {radial_integral}"
        )));
    }
    let n = inputs.n;
    let omega = dimension_constants(n)?.sphere_area;
    let c_n = c_n_constant(config, n)?;
    // Δ divides last so that bound(I, Δ) = bound(I, 1)/Δ holds bit for bit
    Ok(omega / (c_n * radial_integral.powi(n as i32 - 1)) / inputs.delta)
}

/// The bound with the bare integral in the denominator, ω_{n−1}/(c_n·Δ·I).
/// Coincides with [`lemma1_bound`] for n = 2; reported for comparison only.
pub fn lemma1_bound_unexponentiated(
    radial_integral: f64,
    inputs: &BoundInputs,
    config: &ConstantsConfig,
) -> Result<f64> {
    if !(radial_integral > 0.0) {
        return Err(Error::arg(format!(
            "radial integral must be positive, got {radial_integral}"
        )));
    }
    let omega = dimension_constants(inputs.n)?.sphere_area;
    let c_n = c_n_constant(config, inputs.n)?;
    Ok(omega / (c_n * inputs.delta * radial_integral))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistortionBound {
    pub radius: f64,
    pub radial_integral: f64,
    pub bound: f64,
    pub bound_unexponentiated: f64,
}

/// Bound on h(f(x), f(x₀)) for every mapping of the ring class with field Q.
pub fn distortion_bound(
    field: &QField,
    inputs: &BoundInputs,
    x: &[f64],
    config: &ConstantsConfig,
    spec: &SphericalQuadratureSpec,
) -> Result<DistortionBound> {
    same_dim(inputs.n, field.dim())?;
    same_dim(inputs.n, x.len())?;
    let radius = distance(x, &inputs.x0);
    if radius == 0.0 {
        return Err(Error::degenerate("x = x0: the distance is trivially zero"));
    }
    if radius >= inputs.eps0 {
        return Err(Error::degenerate(format!(
            "|x - x0| = {radius} is not below eps0 = {}",
            inputs.eps0
        )));
    }
    let integral = field.radial_integral(&inputs.x0, radius, inputs.eps0, spec)?;
    Ok(DistortionBound {
        radius,
        radial_integral: integral,
        bound: lemma1_bound(integral, inputs, config)?,
        bound_unexponentiated: lemma1_bound_unexponentiated(integral, inputs, config)?,
    })
}

/// M(ε) = (1/(Ω_n ρⁿ (1−εⁿ))) ∫_{ερ<|z−x₀|<ρ} Φ(Q(z)) dm(z).
pub fn m_epsilon(
    field: &QField,
    gauge: &ConvexGauge,
    x0: &[f64],
    rho: f64,
    eps: f64,
    spec: &SphericalQuadratureSpec,
) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::arg(format!("eps must lie in (0, 1), got {eps}")));
    }
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::arg(format!("rho must be positive, got {rho}")));
    }
    let n = field.dim();
    let mass = field.annulus_phi_mass(gauge, x0, eps * rho, rho, spec)?;
    let ball = dimension_constants(n)?.ball_volume;
    Ok(mass / (ball * rho.powi(n as i32) * (1.0 - eps.powi(n as i32))))
}

/// β_n(x₀) = (1 + (ρ + |x₀|)²)ⁿ / ρⁿ.
pub fn beta_n_factor(x0: &[f64], rho: f64, n: usize) -> Result<f64> {
    check_dim(n)?;
    same_dim(n, x0.len())?;
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::arg(format!("rho must be positive, got {rho}")));
    }
    let s = rho + norm(x0);
    Ok(((1.0 + s * s) / rho).powi(n as i32))
}

/// A τ-integral lower bound with its limits. `degenerate` marks an empty
/// interval, in which case `value` is zero and the inequality is vacuous.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TauBound {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub degenerate: bool,
}

/// Right side of the radial-integral estimate through M(ε):
/// (1/n)·∫_{e·M(ε)}^{M(ε)/εⁿ} dτ/(τ·Φ⁻¹(τ)^{1/(n−1)}).
///
/// Its left side is `field.radial_integral(x0, eps·rho, rho)`.
pub fn eq5_rhs(
    field: &QField,
    gauge: &ConvexGauge,
    x0: &[f64],
    rho: f64,
    eps: f64,
    spec: &SphericalQuadratureSpec,
) -> Result<(TauBound, f64)> {
    let n = field.dim();
    let m = m_epsilon(field, gauge, x0, rho, eps, spec)?;
    let lower = E * m;
    let upper = m / eps.powi(n as i32);
    let degenerate = !(m > gauge.tau0() * (1.0 + TAU0_SLACK) && m > 0.0) || !(upper > lower);
    let value = if degenerate {
        0.0
    } else {
        gauge.tau_integral(n, lower, upper)? / n as f64
    };
    Ok((
        TauBound {
            value,
            lower,
            upper,
            degenerate,
        },
        m,
    ))
}

/// Q-free lower bound for the radial integral at r = |x − x₀| < ρ/2:
/// (1/n)·∫_{λ_n β_n(x₀) M}^{Φ(0)ρⁿ/rⁿ} dτ/(τ·Φ⁻¹(τ)^{1/(n−1)}).
pub fn eq6_rhs(
    gauge: &ConvexGauge,
    x0: &[f64],
    rho: f64,
    big_m: f64,
    r: f64,
    n: usize,
    lambda: f64,
) -> Result<TauBound> {
    let beta = beta_n_factor(x0, rho, n)?;
    if !(big_m > 0.0 && big_m.is_finite()) {
        return Err(Error::arg(format!("M must be positive, got {big_m}")));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::arg(format!("lambda must be positive, got {lambda}")));
    }
    if !(r > 0.0) {
        return Err(Error::degenerate(format!("radius must be positive, got {r}")));
    }
    if r >= 0.5 * rho {
        return Err(Error::degenerate(format!(
            "outside proof regime: r = {r} is not below rho/2 = {}",
            0.5 * rho
        )));
    }
    let tau0 = gauge.tau0();
    let lower = lambda * beta * big_m;
    let upper = tau0 * (rho / r).powi(n as i32);
    if !(upper > lower) {
        return Ok(TauBound {
            value: 0.0,
            lower,
            upper,
            degenerate: true,
        });
    }
    if lower <= tau0 {
        return Err(Error::degenerate(format!(
            "lower limit {lower} is at or below Phi(0) = {tau0}; M is below the smallest mass of any admissible field"
        )));
    }
    Ok(TauBound {
        value: gauge.tau_integral(n, lower, upper)? / n as f64,
        lower,
        upper,
        degenerate: false,
    })
}

/// Parameters of the class-wide modulus.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassParams {
    pub gauge: ConvexGauge,
    pub big_m: f64,
    pub delta: f64,
    pub x0: Vec<f64>,
    pub rho: f64,
    pub n: usize,
}

impl ClassParams {
    pub fn new(gauge: ConvexGauge, big_m: f64, delta: f64, x0: Vec<f64>, rho: f64, n: usize) -> Result<Self> {
        check_dim(n)?;
        same_dim(n, x0.len())?;
        if !(big_m > 0.0 && big_m.is_finite()) {
            return Err(Error::arg(format!("M must be positive, got {big_m}")));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::arg(format!("delta must be positive, got {delta}")));
        }
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::arg(format!("rho must be positive, got {rho}")));
        }
        Ok(ClassParams {
            gauge,
            big_m,
            delta,
            x0,
            rho,
            n,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModulusDetail {
    pub modulus: f64,
    /// ω_{n−1}/(c_n Δ) · n/∫ without the exponent n−1; equals `modulus` for n = 2.
    pub modulus_unexponentiated: f64,
    pub tau: TauBound,
}

/// Uniform bound on h(f(x), f(x₀)) over the whole class at r = |x − x₀|.
pub fn theorem1_modulus(params: &ClassParams, r: f64, config: &ConstantsConfig) -> Result<f64> {
    Ok(theorem1_modulus_detail(params, r, config)?.modulus)
}

pub fn theorem1_modulus_detail(params: &ClassParams, r: f64, config: &ConstantsConfig) -> Result<ModulusDetail> {
    let n = params.n;
    let lambda = config.lambda_for(n)?;
    let tau = eq6_rhs(&params.gauge, &params.x0, params.rho, params.big_m, r, n, lambda)?;
    if tau.degenerate || !(tau.value > 0.0) {
        return Err(Error::degenerate(format!(
            "modulus unavailable at this radius (tau interval [{}, {}] is empty)",
            tau.lower, tau.upper
        )));
    }
    let omega = dimension_constants(n)?.sphere_area;
    let c_n = c_n_constant(config, n)?;
    let integral = n as f64 * tau.value;
    Ok(ModulusDetail {
        modulus: omega / (c_n * params.delta * integral.powi(n as i32 - 1)),
        modulus_unexponentiated: omega / (c_n * params.delta * integral),
        tau,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RowFlag {
    Ok,
    /// Empty τ-interval (e.g. Φ(0) = 0) or an inconsistent M.
    Degenerate,
    /// r ≥ ρ/2.
    OutsideRegime,
    Invalid,
}

impl RowFlag {
    pub fn as_str(&self) -> &'static str {
        match self {
            RowFlag::Ok => "ok",
            RowFlag::Degenerate => "degenerate",
            RowFlag::OutsideRegime => "outside_regime",
            RowFlag::Invalid => "invalid",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileRow {
    pub r: f64,
    pub modulus: Option<f64>,
    pub flag: RowFlag,
    pub message: Option<String>,
}

impl ProfileRow {
    pub fn to_json(&self) -> Value {
        json!({
            "r": json_f64(self.r),
            "modulus": json_f64_opt(self.modulus),
            "flag": self.flag.as_str(),
        })
    }
}

/// theorem1_modulus at each radius, rows in input order.
pub fn equicontinuity_profile(params: &ClassParams, radii: &[f64], config: &ConstantsConfig) -> Vec<ProfileRow> {
    radii
        .par_iter()
        .map(|&r| {
            if !(r > 0.0 && r.is_finite()) {
                return ProfileRow {
                    r,
                    modulus: None,
                    flag: RowFlag::Invalid,
                    message: Some(format!("radius must be positive, got {r}")),
                };
            }
            if r >= 0.5 * params.rho {
                return ProfileRow {
                    r,
                    modulus: None,
                    flag: RowFlag::OutsideRegime,
                    message: Some(format!("r = {r} is not below rho/2")),
                };
            }
            match theorem1_modulus(params, r, config) {
                Ok(m) => ProfileRow {
                    r,
                    modulus: Some(m),
                    flag: RowFlag::Ok,
                    message: None,
                },
                Err(e) => ProfileRow {
                    r,
                    modulus: None,
                    flag: if e.is_degenerate() {
                        RowFlag::Degenerate
                    } else {
                        RowFlag::Invalid
                    },
                    message: Some(e.to_string()),
                },
            }
        })
        .collect()
}
