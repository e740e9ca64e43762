//! Smooth example mappings of the ball B(0, R), a finite-difference
//! dilatation oracle, and the harness comparing empirical chordal distortion
//! against the bounds.

use std::fmt;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::bounds::{
    check_delta_cap, distortion_bound, theorem1_modulus, BoundInputs, ClassParams, ConstantsConfig,
};
use crate::error::{Error, Result};
use crate::field::sphere::random_directions;
use crate::field::{GridField, QField, SphericalQuadratureSpec};
use crate::gauge::ConvexGauge;
use crate::geometry::{
    check_dim, chordal_diameter, chordal_distance, continuum_c_lower_bound, norm, same_dim,
    ExtendedPoint,
};
use crate::report::{fmt_f64, json_f64, json_f64_opt, json_vec};

/// Rows with margin below this count as failures.
pub const MARGIN_TOLERANCE: f64 = 1e-10;

/// Boundary directions used to sample the image complement.
const COMPLEMENT_DIRECTIONS: usize = 256;

/// σ_min/σ_max below this is treated as a singular Jacobian.
const SINGULAR_RATIO: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum MapKind {
    Identity,
    /// x ↦ |x|^{α−1}·x, α ≥ 1.
    RadialStretch { alpha: f64 },
    /// x ↦ diag(d)·x, dᵢ > 0.
    LinearDiag { d: Vec<f64> },
    /// x ↦ (x−a)/|x−a|², with the pole a outside the closed ball.
    MoebiusUnit { shift: Vec<f64> },
}

/// A mapping of the ball B(0, R) ⊂ ℝⁿ.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothMapping {
    kind: MapKind,
    n: usize,
    radius: f64,
}

impl SmoothMapping {
    pub fn identity(n: usize, radius: f64) -> Result<Self> {
        Self::build(MapKind::Identity, n, radius)
    }

    pub fn radial_stretch(n: usize, alpha: f64, radius: f64) -> Result<Self> {
        if !(alpha >= 1.0 && alpha.is_finite()) {
            return Err(Error::arg(format!("radial stretch needs alpha >= 1, got {alpha}")));
        }
        Self::build(MapKind::RadialStretch { alpha }, n, radius)
    }

    pub fn linear_diag(d: Vec<f64>, radius: f64) -> Result<Self> {
        if let Some(v) = d.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::arg(format!("diagonal entries must be positive, got {v}")));
        }
        let n = d.len();
        Self::build(MapKind::LinearDiag { d }, n, radius)
    }

    pub fn moebius_unit(shift: Vec<f64>, radius: f64) -> Result<Self> {
        if shift.iter().any(|v| !v.is_finite()) {
            return Err(Error::arg("Moebius shift must be finite"));
        }
        if !(norm(&shift) > radius) {
            return Err(Error::arg(format!(
                "Moebius pole {shift:?} must lie outside the closed ball of radius {radius}"
            )));
        }
        let n = shift.len();
        Self::build(MapKind::MoebiusUnit { shift }, n, radius)
    }

    fn build(kind: MapKind, n: usize, radius: f64) -> Result<Self> {
        check_dim(n)?;
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::arg(format!("domain radius must be positive, got {radius}")));
        }
        Ok(SmoothMapping { kind, n, radius })
    }

    /// Parses `identity`, `radial_stretch:alpha=2` (or `radial_stretch:2`),
    /// `linear_diag:2,1` and `moebius_unit:1.5,0`. The dimension of the
    /// vector-valued families comes from the vector.
    pub fn parse(spec: &str, n: usize, radius: f64) -> Result<Self> {
        let spec = spec.trim();
        let (name, params) = spec.split_once(':').unwrap_or((spec, ""));
        let list = |s: &str| -> Result<Vec<f64>> {
            s.split(',')
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Parse(format!("bad number '{t}' in mapping '{spec}'")))
                })
                .collect()
        };
        let map = match name.to_ascii_lowercase().as_str() {
            "identity" | "id" => {
                if !params.is_empty() {
                    return Err(Error::Parse(format!("identity takes no parameters: '{spec}'")));
                }
                Self::identity(n, radius)?
            }
            "radial_stretch" | "radial" => {
                let value = params.strip_prefix("alpha=").unwrap_or(params);
                let alpha = value
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("bad alpha '{value}' in mapping '{spec}'")))?;
                Self::radial_stretch(n, alpha, radius)?
            }
            "linear_diag" | "diag" => Self::linear_diag(list(params.strip_prefix("d=").unwrap_or(params))?, radius)?,
            "moebius_unit" | "moebius" => {
                Self::moebius_unit(list(params.strip_prefix("a=").unwrap_or(params))?, radius)?
            }
            _ => return Err(Error::Parse(format!("unknown mapping '{name}'"))),
        };
        same_dim(n, map.n)?;
        Ok(map)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn kind(&self) -> &MapKind {
        &self.kind
    }

    /// f(x) for x in the closed ball.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        same_dim(self.n, x.len())?;
        if !(norm(x) <= self.radius) {
            return Err(Error::OutsideDomain(format!(
                "{x:?} is outside the ball of radius {}",
                self.radius
            )));
        }
        Ok(self.formula(x))
    }

    /// The analytic formula, extended past the ball where it makes sense.
    fn formula(&self, x: &[f64]) -> Vec<f64> {
        match &self.kind {
            MapKind::Identity => x.to_vec(),
            MapKind::RadialStretch { alpha } => {
                let r = norm(x);
                if r == 0.0 {
                    return vec![0.0; self.n];
                }
                let s = r.powf(alpha - 1.0);
                x.iter().map(|v| s * v).collect()
            }
            MapKind::LinearDiag { d } => x.iter().zip(d).map(|(v, d)| v * d).collect(),
            MapKind::MoebiusUnit { shift } => {
                let y: Vec<f64> = x.iter().zip(shift).map(|(v, a)| v - a).collect();
                let r = norm(&y);
                y.iter().map(|v| (v / r) / r).collect()
            }
        }
    }

    /// f(R·u) over `count` boundary directions plus the point at infinity.
    /// The image of the open ball is bounded by f(∂B), so these points lie
    /// in its closed complement and any subset underestimates the diameter.
    pub fn complement_sample(&self, count: usize, seed: u64) -> Result<Vec<ExtendedPoint>> {
        let mut dirs: Vec<Vec<f64>> = Vec::with_capacity(2 * self.n + count);
        for axis in 0..self.n {
            for sign in [1.0, -1.0] {
                let mut u = vec![0.0; self.n];
                u[axis] = sign;
                dirs.push(u);
            }
        }
        dirs.extend(random_directions(self.n, count, seed).chunks_exact(self.n).map(<[f64]>::to_vec));
        let mut out: Vec<ExtendedPoint> = dirs
            .iter()
            .map(|u| {
                let x: Vec<f64> = u.iter().map(|c| self.radius * c).collect();
                ExtendedPoint::Finite(self.formula(&x))
            })
            .collect();
        out.push(ExtendedPoint::infinity(self.n)?);
        Ok(out)
    }

    /// Δ = a_n · h(complement sample).
    pub fn auto_delta(&self, a_n: f64, seed: u64) -> Result<f64> {
        let diam = chordal_diameter(&self.complement_sample(COMPLEMENT_DIRECTIONS, seed)?)?;
        let delta = continuum_c_lower_bound(diam, a_n)?;
        check_delta_cap(delta, self.n)?;
        Ok(delta)
    }
}

impl fmt::Display for SmoothMapping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        match &self.kind {
            MapKind::Identity => write!(f, "identity"),
            MapKind::RadialStretch { alpha } => write!(f, "radial_stretch:alpha={alpha}"),
            MapKind::LinearDiag { d } => write!(f, "linear_diag:{}", join(d)),
            MapKind::MoebiusUnit { shift } => write!(f, "moebius_unit:{}", join(shift)),
        }
    }
}

/// Finite-difference dilatation data at one point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dilatation {
    pub jacobian: Vec<Vec<f64>>,
    /// Descending.
    pub singular_values: Vec<f64>,
    pub det: f64,
    /// σ_maxⁿ / |det|.
    pub k_outer: f64,
    /// |det| / σ_minⁿ.
    pub k_inner: f64,
}

/// Default step h = 1e−5·(1+|x|).
pub fn default_step(x: &[f64]) -> f64 {
    1e-5 * (1.0 + norm(x))
}

/// Central-difference Jacobian of `map` at an interior point `x`.
pub fn numeric_dilatation(map: &SmoothMapping, x: &[f64], h_step: Option<f64>) -> Result<Dilatation> {
    let n = map.n;
    same_dim(n, x.len())?;
    if !(norm(x) < map.radius) {
        return Err(Error::OutsideDomain(format!("{x:?} is not interior to the ball")));
    }
    if matches!(map.kind, MapKind::RadialStretch { alpha } if alpha != 1.0) && norm(x) == 0.0 {
        return Err(Error::arg("radial stretch has no Jacobian at the origin"));
    }
    let h = h_step.unwrap_or_else(|| default_step(x));
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::arg(format!("finite-difference step must be positive, got {h}")));
    }
    let mut jac = DMatrix::<f64>::zeros(n, n);
    let mut xp = x.to_vec();
    for j in 0..n {
        xp[j] = x[j] + h;
        let fp = map.formula(&xp);
        xp[j] = x[j] - h;
        let fm = map.formula(&xp);
        xp[j] = x[j];
        for i in 0..n {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    let det = jac.determinant();
    let mut sv: Vec<f64> = jac.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let (smax, smin) = (sv[0], sv[n - 1]);
    if !(smax > 0.0) || !(smin > SINGULAR_RATIO * smax) || det == 0.0 || !det.is_finite() {
        return Err(Error::SingularJacobian(x.to_vec()));
    }
    let adet = det.abs();
    Ok(Dilatation {
        jacobian: (0..n).map(|i| (0..n).map(|j| jac[(i, j)]).collect()).collect(),
        k_outer: smax.powi(n as i32) / adet,
        k_inner: adet / smin.powi(n as i32),
        singular_values: sv,
        det,
    })
}

/// How an analytic dilatation becomes the field Q of the ring inequality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum QConvention {
    /// K_I = |det| / σ_minⁿ.
    #[default]
    Inner,
    /// K_O = σ_maxⁿ / |det|.
    Outer,
    /// K_O^{n−1}.
    OuterPower,
}

impl QConvention {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inner" => Some(QConvention::Inner),
            "outer" => Some(QConvention::Outer),
            "outer_power" | "outer-power" => Some(QConvention::OuterPower),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            QConvention::Inner => "inner",
            QConvention::Outer => "outer",
            QConvention::OuterPower => "outer_power",
        }
    }

    pub fn select(&self, d: &Dilatation) -> f64 {
        let n = d.singular_values.len();
        match self {
            QConvention::Inner => d.k_inner,
            QConvention::Outer => d.k_outer,
            QConvention::OuterPower => d.k_outer.powi(n as i32 - 1),
        }
    }
}

/// Grid nodes per axis for [`dilatation_field`]; even, so no node sits at
/// the center of the box.
fn dilatation_grid_shape(n: usize) -> usize {
    match n {
        2 => 32,
        3 => 16,
        4 => 8,
        _ => 4,
    }
}

/// Q sampled from the finite-difference dilatation on a grid over the
/// bounding box of the ball. Nodes outside the ball take the value at their
/// radial projection slightly inside it. The field's domain is the box; the
/// ball is inside it, so every sphere in the ball is admissible.
pub fn dilatation_field(map: &SmoothMapping, convention: QConvention) -> Result<QField> {
    let n = map.n;
    let r = map.radius;
    let k = dilatation_grid_shape(n);
    let shape = vec![k; n];
    let spacing = 2.0 * r / (k - 1) as f64;
    let total: usize = shape.iter().product();
    let values: Vec<f64> = (0..total)
        .into_par_iter()
        .map(|flat| {
            let mut z = vec![0.0; n];
            let mut rem = flat;
            for axis in (0..n).rev() {
                z[axis] = -r + spacing * (rem % k) as f64;
                rem /= k;
            }
            let rz = norm(&z);
            let inner = r * (1.0 - 1e-3);
            if rz > inner {
                z.iter_mut().for_each(|c| *c *= inner / rz);
            }
            numeric_dilatation(map, &z, None).map(|d| convention.select(&d))
        })
        .collect::<Result<_>>()?;
    Ok(QField::grid(GridField::new(vec![-r; n], vec![r; n], shape, values)?))
}

/// One empirical measurement h(f(x), f(x₀)).
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionSample {
    pub x: Vec<f64>,
    pub h: f64,
}

/// h(f(x), f(x₀)) at x = x₀ + r·u for every radius and `directions_per_radius`
/// seeded unit directions u (the same directions at every radius).
pub fn empirical_distortion(
    map: &SmoothMapping,
    x0: &[f64],
    sample_radii: &[f64],
    directions_per_radius: usize,
    seed: u64,
) -> Result<Vec<DistortionSample>> {
    let n = map.n;
    let fx0 = ExtendedPoint::Finite(map.apply(x0)?);
    let dirs = random_directions(n, directions_per_radius, seed);
    let mut out = Vec::with_capacity(sample_radii.len() * directions_per_radius);
    for &r in sample_radii {
        for u in dirs.chunks_exact(n) {
            let x: Vec<f64> = x0.iter().zip(u).map(|(c, u)| c + r * u).collect();
            let fx = ExtendedPoint::Finite(map.apply(&x)?);
            out.push(DistortionSample {
                h: chordal_distance(&fx, &fx0)?,
                x,
            });
        }
    }
    Ok(out)
}

/// `count` points x₀ + r·u with r log-uniform in [4.5e−4·ε₀, 0.45·ε₀) and
/// u uniform on the sphere, so every point is inside both bound regimes
/// (|x−x₀| < ε₀ and |x−x₀| < ρ/2 with ρ = ε₀).
pub fn sample_points(x0: &[f64], eps0: f64, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let n = x0.len();
    let dirs = random_directions(n, count, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX);
    dirs.chunks_exact(n)
        .map(|u| {
            let r = 0.45 * eps0 * 10f64.powf(-3.0 * rng.random::<f64>());
            x0.iter().zip(u).map(|(c, u)| c + r * u).collect()
        })
        .collect()
}

/// Optional class data enabling the uniform modulus column.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassData {
    pub gauge: ConvexGauge,
    pub big_m: f64,
}

#[derive(Debug, Clone)]
pub struct VerifyInputs<'a> {
    pub map: &'a SmoothMapping,
    pub field: &'a QField,
    /// Human-readable origin of the field, copied into the metadata.
    pub field_label: String,
    pub class: Option<ClassData>,
    pub delta: f64,
    pub delta_source: String,
    pub x0: Vec<f64>,
    pub eps0: f64,
    pub config: &'a ConstantsConfig,
    pub spec: SphericalQuadratureSpec,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RowVerdict {
    Pass,
    Fail,
}

impl RowVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            RowVerdict::Pass => "pass",
            RowVerdict::Fail => "fail",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub x: Vec<f64>,
    pub h_emp: f64,
    pub h_bound_lemma1: f64,
    pub h_bound_thm1: Option<f64>,
    /// Smallest applicable bound minus h_emp.
    pub margin: f64,
    pub verdict: RowVerdict,
}

#[derive(Debug, Clone)]
pub struct DistortionReport {
    pub n: usize,
    pub metadata: Map<String, Value>,
    pub rows: Vec<ReportRow>,
}

impl DistortionReport {
    /// Vacuously true for an empty report.
    pub fn pass(&self) -> bool {
        self.rows.iter().all(|r| r.verdict == RowVerdict::Pass)
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.verdict == RowVerdict::Fail).count()
    }

    pub fn min_margin(&self) -> Option<f64> {
        self.rows.iter().map(|r| r.margin).min_by(f64::total_cmp)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for i in 1..=self.n {
            let _ = write!(out, "x{i},");
        }
        out.push_str("h_emp,h_bound_lemma1,h_bound_thm1,margin,verdict\n");
        for row in &self.rows {
            for c in &row.x {
                let _ = write!(out, "{},", fmt_f64(*c));
            }
            let thm1 = row.h_bound_thm1.map(fmt_f64).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                fmt_f64(row.h_emp),
                fmt_f64(row.h_bound_lemma1),
                thm1,
                fmt_f64(row.margin),
                row.verdict.as_str()
            );
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                json!({
                    "x": json_vec(&r.x),
                    "h_emp": json_f64(r.h_emp),
                    "h_bound_lemma1": json_f64(r.h_bound_lemma1),
                    "h_bound_thm1": json_f64_opt(r.h_bound_thm1),
                    "margin": json_f64(r.margin),
                    "verdict": r.verdict.as_str(),
                })
            })
            .collect();
        json!({
            "schema": crate::report::SCHEMA,
            "metadata": Value::Object(self.metadata.clone()),
            "aggregate": if self.pass() { "pass" } else { "fail" },
            "failures": self.failures(),
            "rows": rows,
        })
    }
}

/// Compares h(f(x), f(x₀)) with the single-field bound and, when class data
/// is given and the field belongs to the class, with the uniform modulus.
pub fn verify_bound(inputs: &VerifyInputs<'_>, samples: &[Vec<f64>]) -> Result<DistortionReport> {
    let map = inputs.map;
    let n = map.dim();
    same_dim(n, inputs.field.dim())?;
    same_dim(n, inputs.x0.len())?;
    for x in samples {
        same_dim(n, x.len())?;
    }
    let bound_inputs = BoundInputs::new(n, inputs.delta, inputs.x0.clone(), inputs.eps0)?;
    let rho = inputs.eps0;
    let (class, mass, member) = match &inputs.class {
        Some(c) => {
            let mass = inputs.field.weighted_phi_mass(&c.gauge, &inputs.spec)?;
            let params = ClassParams::new(c.gauge.clone(), c.big_m, inputs.delta, inputs.x0.clone(), rho, n)?;
            (Some(params), Some(mass), Some(mass <= c.big_m))
        }
        None => (None, None, None),
    };
    let fx0 = ExtendedPoint::Finite(map.apply(&inputs.x0)?);

    let rows = samples
        .par_iter()
        .map(|x| -> Result<ReportRow> {
            let fx = ExtendedPoint::Finite(map.apply(x)?);
            let h_emp = chordal_distance(&fx, &fx0)?;
            let lemma = distortion_bound(inputs.field, &bound_inputs, x, inputs.config, &inputs.spec)?.bound;
            let thm = match &class {
                Some(p) => theorem1_modulus(p, crate::geometry::distance(x, &inputs.x0), inputs.config).ok(),
                None => None,
            };
            let mut bound = lemma;
            if member == Some(true) {
                if let Some(t) = thm {
                    bound = bound.min(t);
                }
            }
            let margin = bound - h_emp;
            Ok(ReportRow {
                x: x.clone(),
                h_emp,
                h_bound_lemma1: lemma,
                h_bound_thm1: thm,
                margin,
                verdict: if margin >= -MARGIN_TOLERANCE {
                    RowVerdict::Pass
                } else {
                    RowVerdict::Fail
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut metadata = Map::new();
    metadata.insert("mapping".into(), json!(map.to_string()));
    metadata.insert("n".into(), json!(n));
    metadata.insert("domain_radius".into(), json_f64(map.radius()));
    metadata.insert("x0".into(), json_vec(&inputs.x0));
    metadata.insert("eps0".into(), json_f64(inputs.eps0));
    metadata.insert("rho".into(), json_f64(rho));
    metadata.insert("delta".into(), json_f64(inputs.delta));
    metadata.insert("delta_source".into(), json!(inputs.delta_source));
    metadata.insert("field".into(), json!(inputs.field_label));
    metadata.insert(
        "field_note".into(),
        json!("the field is assumed to dominate the mapping's dilatation; this is the caller's responsibility"),
    );
    metadata.insert("constants".into(), inputs.config.to_json(n)?);
    metadata.insert("spherical_quadrature".into(), serde_json::to_value(inputs.spec).map_err(|e| Error::arg(e.to_string()))?);
    metadata.insert("seed".into(), json!(inputs.seed));
    metadata.insert("samples".into(), json!(samples.len()));
    if let Some(c) = &inputs.class {
        metadata.insert("gauge".into(), json!(c.gauge.to_string()));
        metadata.insert("big_m".into(), json_f64(c.big_m));
        metadata.insert("field_phi_mass".into(), json_f64_opt(mass));
        metadata.insert("member".into(), json!(member));
    }
    metadata.insert("margin_tolerance".into(), json_f64(MARGIN_TOLERANCE));
    Ok(DistortionReport { n, metadata, rows })
}
