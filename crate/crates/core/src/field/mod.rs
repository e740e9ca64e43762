//! Dilatation fields Q: D → [0, ∞] and the integrals built from them:
//! spherical means q_{x₀}(r), the radial integral
//!
//! ```text
//!     I(x₀, ε, ε₀) = ∫_ε^{ε₀} dr / (r · q_{x₀}(r)^{1/(n−1)}),
//! ```
//!
//! the Φ-mass of an annulus and the spherically weighted Φ-mass
//! ∫_D Φ(Q) dm / (1+|x|²)ⁿ that defines class membership.
//!
//! All radial integrals run in u = ln r.

pub mod grid;
pub mod sphere;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use grid::GridField;
pub use sphere::{SphereAverage, SphereRule, SphericalQuadratureSpec};

use crate::error::{Error, Result};
use crate::gauge::ConvexGauge;
use crate::geometry::{check_dim, dimension_constants, distance, same_dim};
use crate::quadrature::{gauss_legendre, integrate_with_breaks, QuadOptions};

/// Relative tolerance of [`QField::radial_integral`].
pub const RADIAL_REL_TOL: f64 = 1e-8;
/// Relative tolerance of [`QField::annulus_phi_mass`] and the ball branch of
/// [`QField::weighted_phi_mass`].
pub const MASS_REL_TOL: f64 = 1e-7;

/// Relative slack when testing that a sphere lies in the closed domain.
const CONTAINMENT_SLACK: f64 = 1e-12;

/// Composite Gauss–Legendre layout for box domains (cells per axis, nodes per cell axis).
const BOX_CELLS: usize = 8;
const BOX_NODES: usize = 8;
const GRID_CELL_NODES: usize = 4;
const BOX_MC_SAMPLES: usize = 200_000;

#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

impl Domain {
    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        check_dim(center.len())?;
        if !(radius > 0.0 && radius.is_finite()) || center.iter().any(|c| !c.is_finite()) {
            return Err(Error::arg(format!("invalid ball B({center:?}, {radius})")));
        }
        Ok(Domain::Ball { center, radius })
    }

    pub fn cube(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        check_dim(lo.len())?;
        same_dim(lo.len(), hi.len())?;
        if lo.iter().zip(&hi).any(|(l, h)| !(l.is_finite() && h.is_finite() && h > l)) {
            return Err(Error::arg(format!("invalid box {lo:?}..{hi:?}")));
        }
        Ok(Domain::Box { lo, hi })
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Ball { center, .. } => center.len(),
            Domain::Box { lo, .. } => lo.len(),
        }
    }

    /// Whether S(x0, r) lies in the closed domain.
    pub fn contains_sphere(&self, x0: &[f64], r: f64) -> bool {
        match self {
            Domain::Ball { center, radius } => {
                distance(x0, center) + r <= radius * (1.0 + CONTAINMENT_SLACK)
            }
            Domain::Box { lo, hi } => x0.iter().zip(lo.iter().zip(hi)).all(|(x, (l, h))| {
                let slack = CONTAINMENT_SLACK * (h - l);
                x - r >= l - slack && x + r <= h + slack
            }),
        }
    }

    /// Largest r with S(x0, r) inside the domain (0 if x0 is outside).
    pub fn dist_to_boundary(&self, x0: &[f64]) -> f64 {
        match self {
            Domain::Ball { center, radius } => (radius - distance(x0, center)).max(0.0),
            Domain::Box { lo, hi } => x0
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(x, (l, h))| (x - l).min(h - x))
                .fold(f64::INFINITY, f64::min)
                .max(0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FieldKind {
    Constant(f64),
    /// Q(z) = |z − center|^exponent
    RadialPower { center: Vec<f64>, exponent: f64 },
    /// Q(z) = max(0, slope·z₁ + offset)
    CoordinateAffine { slope: f64, offset: f64 },
    Grid(GridField),
}

/// A dilatation field on a bounded domain.
#[derive(Debug, Clone, PartialEq)]
pub struct QField {
    domain: Domain,
    kind: FieldKind,
}

impl QField {
    pub fn constant(value: f64, domain: Domain) -> Result<Self> {
        if !(value >= 0.0) || value.is_infinite() {
            return Err(Error::arg(format!("constant field needs a finite value >= 0, got {value}")));
        }
        Ok(QField {
            domain,
            kind: FieldKind::Constant(value),
        })
    }

    pub fn radial_power(center: Vec<f64>, exponent: f64, domain: Domain) -> Result<Self> {
        same_dim(domain.dim(), center.len())?;
        if !exponent.is_finite() || center.iter().any(|c| !c.is_finite()) {
            return Err(Error::arg("radial power field needs finite center and exponent"));
        }
        Ok(QField {
            domain,
            kind: FieldKind::RadialPower { center, exponent },
        })
    }

    pub fn coordinate_affine(slope: f64, offset: f64, domain: Domain) -> Result<Self> {
        if !(slope.is_finite() && offset.is_finite()) {
            return Err(Error::arg("affine field needs finite coefficients"));
        }
        Ok(QField {
            domain,
            kind: FieldKind::CoordinateAffine { slope, offset },
        })
    }

    /// The grid's box is the domain.
    pub fn grid(grid: GridField) -> Self {
        let domain = Domain::Box {
            lo: grid.lo().to_vec(),
            hi: grid.hi().to_vec(),
        };
        QField {
            domain,
            kind: FieldKind::Grid(grid),
        }
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn kind(&self) -> &FieldKind {
        &self.kind
    }

    /// Same field on another domain. Grid fields keep their box.
    pub fn with_domain(&self, domain: Domain) -> Result<Self> {
        same_dim(self.dim(), domain.dim())?;
        match &self.kind {
            FieldKind::Grid(_) => Err(Error::arg("grid fields are tied to their sample box")),
            _ => Ok(QField {
                domain,
                kind: self.kind.clone(),
            }),
        }
    }

    /// Q(z) without any domain check.
    pub fn eval(&self, z: &[f64]) -> f64 {
        match &self.kind {
            FieldKind::Constant(c) => *c,
            FieldKind::RadialPower { center, exponent } => distance(z, center).powf(*exponent),
            FieldKind::CoordinateAffine { slope, offset } => (slope * z[0] + offset).max(0.0),
            FieldKind::Grid(g) => g.eval(z),
        }
    }

    /// Radii about `x0` where r ↦ q_{x0}(r) has a kink.
    fn radial_kinks(&self, x0: &[f64]) -> Vec<f64> {
        match &self.kind {
            FieldKind::RadialPower { center, .. } => vec![distance(x0, center)],
            FieldKind::CoordinateAffine { slope, offset } if *slope != 0.0 => {
                vec![(slope * x0[0] + offset).abs() / slope.abs()]
            }
            _ => Vec::new(),
        }
    }

    fn check_sphere(&self, x0: &[f64], r: f64) -> Result<()> {
        same_dim(self.dim(), x0.len())?;
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::arg(format!("sphere radius must be positive, got {r}")));
        }
        if !self.domain.contains_sphere(x0, r) {
            return Err(Error::OutsideDomain(format!(
                "sphere S({x0:?}, {r}) exits the field domain"
            )));
        }
        Ok(())
    }

    /// Averages g(Q(z), z) over S(x0, r). Infinite samples are errors.
    fn sphere_average<G>(&self, rule: &SphereRule, x0: &[f64], r: f64, mut g: G) -> Result<SphereAverage>
    where
        G: FnMut(f64, &[f64]) -> Result<f64>,
    {
        rule.average(x0, r, |z| {
            let q = self.eval(z);
            if q.is_infinite() {
                return Err(Error::InfiniteSample(z.to_vec()));
            }
            g(q, z)
        })
    }

    /// q_{x0}(r), the mean of Q over S(x0, r).
    pub fn spherical_mean(&self, x0: &[f64], r: f64, spec: &SphericalQuadratureSpec) -> Result<f64> {
        Ok(self.spherical_mean_with_error(x0, r, spec)?.mean)
    }

    /// q_{x0}(r) together with the Monte Carlo standard error (zero for
    /// deterministic rules).
    pub fn spherical_mean_with_error(
        &self,
        x0: &[f64],
        r: f64,
        spec: &SphericalQuadratureSpec,
    ) -> Result<SphereAverage> {
        self.check_sphere(x0, r)?;
        let rule = spec.rule(self.dim())?;
        self.sphere_average(&rule, x0, r, |q, _| Ok(q))
    }

    /// Mean of Φ∘Q over S(x0, r).
    pub fn spherical_phi_mean(
        &self,
        gauge: &ConvexGauge,
        x0: &[f64],
        r: f64,
        spec: &SphericalQuadratureSpec,
    ) -> Result<f64> {
        self.check_sphere(x0, r)?;
        let rule = spec.rule(self.dim())?;
        Ok(self
            .sphere_average(&rule, x0, r, |q, _| gauge.evaluate(q))?
            .mean)
    }

    fn log_breaks(&self, x0: &[f64], lo: f64, hi: f64) -> Vec<f64> {
        let (ul, uh) = (lo.ln(), hi.ln());
        let mut kinks: Vec<f64> = self
            .radial_kinks(x0)
            .into_iter()
            .filter(|&k| k > lo && k < hi)
            .map(f64::ln)
            .filter(|&u| u > ul && u < uh)
            .collect();
        kinks.sort_by(f64::total_cmp);
        let mut b = vec![ul];
        b.extend(kinks);
        b.push(uh);
        b
    }

    /// I(x0, ε, ε₀) = ∫_ε^{ε₀} dr / (r·q_{x0}(r)^{1/(n−1)}).
    ///
    /// Where q is infinite the integrand is zero; a vanishing q makes the
    /// integrand infinite and is reported as a degenerate annulus.
    pub fn radial_integral(
        &self,
        x0: &[f64],
        eps: f64,
        eps0: f64,
        spec: &SphericalQuadratureSpec,
    ) -> Result<f64> {
        if !(eps > 0.0 && eps < eps0) {
            return Err(Error::arg(format!(
                "radial integral needs 0 < eps < eps0, got eps={eps}, eps0={eps0}"
            )));
        }
        self.check_sphere(x0, eps0)?;
        let n = self.dim();
        let expo = 1.0 / (n as f64 - 1.0);
        let rule = spec.rule(n)?;
        let breaks = self.log_breaks(x0, eps, eps0);
        let integrand = |u: f64| -> Result<f64> {
            let q = self.sphere_average(&rule, x0, u.exp(), |q, _| Ok(q))?.mean;
            if q == 0.0 {
                Err(Error::degenerate(format!(
                    "degenerate annulus: infinite integrand (q = 0 at r = {})",
                    u.exp()
                )))
            } else if q.is_infinite() {
                Ok(0.0)
            } else {
                Ok(q.powf(-expo))
            }
        };
        Ok(integrate_with_breaks(integrand, &breaks, QuadOptions::relative(RADIAL_REL_TOL))?.value)
    }

    /// ∫_{r_in < |z−x0| < r_out} Φ(Q(z)) dm(z), as ∫ ω_{n−1} r^{n−1} ⟨Φ∘Q⟩_{S(x0,r)} dr.
    pub fn annulus_phi_mass(
        &self,
        gauge: &ConvexGauge,
        x0: &[f64],
        r_in: f64,
        r_out: f64,
        spec: &SphericalQuadratureSpec,
    ) -> Result<f64> {
        if !(r_in > 0.0 && r_in < r_out) {
            return Err(Error::arg(format!(
                "annulus needs 0 < r_in < r_out, got r_in={r_in}, r_out={r_out}"
            )));
        }
        self.check_sphere(x0, r_out)?;
        let n = self.dim();
        let omega = dimension_constants(n)?.sphere_area;
        let rule = spec.rule(n)?;
        let breaks = self.log_breaks(x0, r_in, r_out);
        let integrand = |u: f64| -> Result<f64> {
            let r = u.exp();
            let avg = self.sphere_average(&rule, x0, r, |q, _| gauge.evaluate(q))?.mean;
            Ok(omega * r.powi(n as i32) * avg)
        };
        Ok(integrate_with_breaks(integrand, &breaks, QuadOptions::relative(MASS_REL_TOL))?.value)
    }

    /// ∫_D Φ(Q(x)) dm(x) / (1+|x|²)ⁿ over the whole field domain.
    ///
    /// Balls are integrated in polar coordinates about their center with the
    /// spherical rule of `spec`; boxes by composite Gauss–Legendre for n ≤ 3
    /// (one cell per grid cell for grid fields) and by seeded Monte Carlo
    /// beyond.
    pub fn weighted_phi_mass(&self, gauge: &ConvexGauge, spec: &SphericalQuadratureSpec) -> Result<f64> {
        let n = self.dim();
        let density = |z: &[f64]| -> Result<f64> {
            let q = self.eval(z);
            if q.is_infinite() {
                return Err(Error::InfiniteSample(z.to_vec()));
            }
            let w = 1.0 + z.iter().map(|c| c * c).sum::<f64>();
            Ok(gauge.evaluate(q)? / w.powi(n as i32))
        };
        match &self.domain {
            Domain::Ball { center, radius } => {
                let omega = dimension_constants(n)?.sphere_area;
                let rule = spec.rule(n)?;
                let mut breaks = vec![0.0];
                let mut kinks: Vec<f64> = self
                    .radial_kinks(center)
                    .into_iter()
                    .filter(|&k| k > 0.0 && k < *radius)
                    .collect();
                kinks.sort_by(f64::total_cmp);
                breaks.extend(kinks);
                breaks.push(*radius);
                let integrand = |r: f64| -> Result<f64> {
                    let avg = rule.average(center, r, density)?.mean;
                    Ok(omega * r.powi(n as i32 - 1) * avg)
                };
                let opts = QuadOptions::relative(MASS_REL_TOL).with_abs_tol(1e-300);
                Ok(integrate_with_breaks(integrand, &breaks, opts)?.value)
            }
            Domain::Box { lo, hi } => {
                if n <= 3 {
                    let (cells, nodes) = match &self.kind {
                        FieldKind::Grid(g) => {
                            (g.shape().iter().map(|k| k - 1).collect(), GRID_CELL_NODES)
                        }
                        _ => (vec![BOX_CELLS; n], BOX_NODES),
                    };
                    composite_box_integral(lo, hi, &cells, nodes, density)
                } else {
                    let (samples, seed) = match *spec {
                        SphericalQuadratureSpec::MonteCarlo { samples, seed } => {
                            (samples.max(BOX_MC_SAMPLES), seed)
                        }
                        _ => (BOX_MC_SAMPLES, 0),
                    };
                    monte_carlo_box_integral(lo, hi, samples, seed, density)
                }
            }
        }
    }

    /// Whether ∫_D Φ(Q) dm/(1+|x|²)ⁿ ≤ M.
    pub fn is_member(&self, gauge: &ConvexGauge, big_m: f64, spec: &SphericalQuadratureSpec) -> Result<bool> {
        Ok(self.weighted_phi_mass(gauge, spec)? <= big_m)
    }
}

fn composite_box_integral<F>(lo: &[f64], hi: &[f64], cells: &[usize], nodes: usize, mut f: F) -> Result<f64>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let n = lo.len();
    let (t, w) = gauss_legendre(nodes);
    // 1-D node lists per axis
    let axes: Vec<Vec<(f64, f64)>> = (0..n)
        .map(|a| {
            let h = (hi[a] - lo[a]) / cells[a] as f64;
            (0..cells[a])
                .flat_map(|c| {
                    let left = lo[a] + c as f64 * h;
                    t.iter()
                        .zip(&w)
                        .map(move |(ti, wi)| (left + 0.5 * h * (ti + 1.0), 0.5 * h * wi))
                })
                .collect()
        })
        .collect();
    let mut idx = vec![0usize; n];
    let mut z = vec![0.0; n];
    let mut total = 0.0;
    'outer: loop {
        let mut weight = 1.0;
        for a in 0..n {
            let (x, wx) = axes[a][idx[a]];
            z[a] = x;
            weight *= wx;
        }
        total += weight * f(&z)?;
        for a in (0..n).rev() {
            idx[a] += 1;
            if idx[a] < axes[a].len() {
                continue 'outer;
            }
            idx[a] = 0;
        }
        break;
    }
    Ok(total)
}

fn monte_carlo_box_integral<F>(lo: &[f64], hi: &[f64], samples: usize, seed: u64, f: F) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    const CHUNK: usize = 4096;
    let n = lo.len();
    let volume: f64 = lo.iter().zip(hi).map(|(l, h)| h - l).product();
    let chunks = samples.div_ceil(CHUNK);
    let partial: Vec<Result<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let mut z = vec![0.0; n];
            let mut sum = 0.0;
            for _ in 0..CHUNK.min(samples - c * CHUNK) {
                for (a, zi) in z.iter_mut().enumerate() {
                    *zi = lo[a] + (hi[a] - lo[a]) * rng.random::<f64>();
                }
                sum += f(&z)?;
            }
            Ok(sum)
        })
        .collect();
    let mut sum = 0.0;
    for p in partial {
        sum += p?;
    }
    Ok(volume * sum / samples as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn ball(n: usize, r: f64) -> Domain {
        Domain::ball(vec![0.0; n], r).unwrap()
    }

    fn spec(n: usize) -> SphericalQuadratureSpec {
        SphericalQuadratureSpec::default_for(n)
    }

    #[test]
    fn spherical_mean_examples() {
        for n in 2..=4 {
            let q = QField::constant(3.5, ball(n, 10.0)).unwrap();
            let x0: Vec<f64> = (0..n).map(|i| 0.3 * i as f64).collect();
            let m = q.spherical_mean(&x0, 1.7, &spec(n)).unwrap();
            assert!((m - 3.5).abs() <= 1e-10 * 3.5, "n={n}: {m}");
        }
        let sq = QField::radial_power(vec![0.0; 3], 2.0, ball(3, 5.0)).unwrap();
        let m = sq.spherical_mean(&[0.0; 3], 1.3, &spec(3)).unwrap();
        assert!((m - 1.69).abs() < 1e-13);
        let aff = QField::coordinate_affine(1.0, 2.0, ball(2, 2.0)).unwrap();
        let m = aff.spherical_mean(&[0.0, 0.0], 1.0, &spec(2)).unwrap();
        assert!((m - 2.0).abs() < 1e-14);
    }

    #[test]
    fn spherical_mean_errors() {
        let q = QField::constant(1.0, ball(2, 1.0)).unwrap();
        assert!(matches!(
            q.spherical_mean(&[0.5, 0.0], 0.6, &spec(2)),
            Err(Error::OutsideDomain(_))
        ));
        assert!(matches!(
            q.spherical_mean(&[0.0, 0.0, 0.0], 0.5, &spec(3)),
            Err(Error::DimensionMismatch { .. })
        ));
        let g = GridField::parse("qfield v1 n=2 box=-1,-1,1,1 shape=3,3\n1 1 1 1 1 1 1 1 inf").unwrap();
        let q = QField::grid(g);
        assert!(matches!(
            q.spherical_mean(&[0.0, 0.0], 0.9, &spec(2)),
            Err(Error::InfiniteSample(_))
        ));
        assert!((q.spherical_mean(&[-0.5, -0.5], 0.4, &spec(2)).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn radial_integral_examples() {
        let one = QField::constant(1.0, ball(2, 1.0)).unwrap();
        let v = one.radial_integral(&[0.0, 0.0], 0.1, 0.9, &spec(2)).unwrap();
        assert!((v - 9f64.ln()).abs() < 1e-8 * 9f64.ln());

        let sixteen = QField::constant(16.0, ball(2, 1.0)).unwrap();
        let v = sixteen.radial_integral(&[0.0, 0.0], 0.1, 0.9, &spec(2)).unwrap();
        assert!((v - 9f64.ln() / 16.0).abs() < 1e-8 * v);

        // Q = |z − x0|, n = 2: ∫ dr/r² = 1/ε − 1/ε₀
        let x0 = vec![0.2, -0.1];
        let lin = QField::radial_power(x0.clone(), 1.0, ball(2, 2.0)).unwrap();
        let (e, e0) = (0.05, 1.2);
        let v = lin.radial_integral(&x0, e, e0, &spec(2)).unwrap();
        let exact = 1.0 / e - 1.0 / e0;
        assert!((v - exact).abs() < 1e-8 * exact, "{v} vs {exact}");
    }

    #[test]
    fn radial_integral_errors() {
        let one = QField::constant(1.0, ball(2, 1.0)).unwrap();
        assert!(one.radial_integral(&[0.0, 0.0], 0.5, 0.5, &spec(2)).is_err());
        assert!(matches!(
            one.radial_integral(&[0.0, 0.0], 0.5, 1.5, &spec(2)),
            Err(Error::OutsideDomain(_))
        ));
        let zero = QField::constant(0.0, ball(2, 1.0)).unwrap();
        let e = zero.radial_integral(&[0.0, 0.0], 0.1, 0.5, &spec(2)).unwrap_err();
        assert!(e.to_string().contains("degenerate annulus"), "{e}");
    }

    #[test]
    fn annulus_mass_examples() {
        let (ri, ro) = (0.3f64, 0.8f64);
        for n in 2..=3 {
            let dc = dimension_constants(n).unwrap();
            let vol = dc.ball_volume * (ro.powi(n as i32) - ri.powi(n as i32));
            let c = QField::constant(2.5, ball(n, 1.0)).unwrap();
            let lin = ConvexGauge::linear(1.0, 0.0).unwrap();
            let m = c.annulus_phi_mass(&lin, &vec![0.0; n], ri, ro, &spec(n)).unwrap();
            assert!((m - 2.5 * vol).abs() < 1e-7 * m);
            let zero = QField::constant(0.0, ball(n, 1.0)).unwrap();
            let ex = ConvexGauge::exp_scaled(1.0).unwrap();
            let m = zero.annulus_phi_mass(&ex, &vec![0.0; n], ri, ro, &spec(n)).unwrap();
            assert!((m - vol).abs() < 1e-7 * m);
        }
        let x0 = vec![0.1, 0.1];
        let radial = QField::radial_power(x0.clone(), 1.0, ball(2, 1.0)).unwrap();
        let lin = ConvexGauge::linear(1.0, 0.0).unwrap();
        let m = radial.annulus_phi_mass(&lin, &x0, ri, ro, &spec(2)).unwrap();
        let exact = 2.0 * PI * (ro.powi(3) - ri.powi(3)) / 3.0;
        assert!((m - exact).abs() < 1e-7 * exact);
    }

    #[test]
    fn weighted_mass_examples() {
        let zero = QField::constant(0.0, ball(2, 1.0)).unwrap();
        let lin = ConvexGauge::linear(1.0, 0.0).unwrap();
        assert_eq!(zero.weighted_phi_mass(&lin, &spec(2)).unwrap(), 0.0);
        let ex = ConvexGauge::exp_scaled(1.0).unwrap();
        let v = zero.weighted_phi_mass(&ex, &spec(2)).unwrap();
        assert!((v - PI / 2.0).abs() < 1e-7, "{v}");
        let one = QField::constant(1.0, ball(2, 1.0)).unwrap();
        let v = one.weighted_phi_mass(&lin, &spec(2)).unwrap();
        assert!((v - PI / 2.0).abs() < 1e-7);
        assert!(one.is_member(&lin, 1.6, &spec(2)).unwrap());
        assert!(!one.is_member(&lin, 1.5, &spec(2)).unwrap());
    }

    #[test]
    fn weighted_mass_on_boxes() {
        // analytic box rule against the per-cell grid rule
        let boxed = QField::constant(1.0, Domain::cube(vec![-1.0; 2], vec![1.0; 2]).unwrap()).unwrap();
        let lin = ConvexGauge::linear(1.0, 0.0).unwrap();
        let a = boxed.weighted_phi_mass(&lin, &spec(2)).unwrap();
        let g = GridField::from_fn(vec![-1.0; 2], vec![1.0; 2], vec![11, 11], |_| 1.0).unwrap();
        let b = QField::grid(g).weighted_phi_mass(&lin, &spec(2)).unwrap();
        assert!((a - b).abs() < 1e-10 * a);
        // sandwiched by the inscribed disc (π/2) and the circumscribed disc (2π/3)
        assert!(a > PI / 2.0 && a < 2.0 * PI / 3.0);

        // n = 4 uses Monte Carlo; compare with a composite Gauss–Legendre reference
        let cube4 = QField::constant(1.0, Domain::cube(vec![0.0; 4], vec![0.5; 4]).unwrap()).unwrap();
        let mc = cube4
            .weighted_phi_mass(&lin, &SphericalQuadratureSpec::MonteCarlo { samples: 200_000, seed: 3 })
            .unwrap();
        let gl = composite_box_integral(&[0.0; 4], &[0.5; 4], &[2; 4], 6, |z| {
            Ok((1.0 + z.iter().map(|c| c * c).sum::<f64>()).powi(-4))
        })
        .unwrap();
        assert!((mc - gl).abs() < 5e-3 * gl, "{mc} vs {gl}");
    }

    #[test]
    fn radial_integral_is_additive() {
        let x0 = vec![0.1, 0.0, -0.2];
        let q = QField::coordinate_affine(0.8, 1.1, ball(3, 2.0)).unwrap();
        let s = spec(3);
        let whole = q.radial_integral(&x0, 0.05, 1.2, &s).unwrap();
        let left = q.radial_integral(&x0, 0.05, 0.4, &s).unwrap();
        let right = q.radial_integral(&x0, 0.4, 1.2, &s).unwrap();
        assert!((whole - left - right).abs() < 1e-7 * whole);
    }
}
