//! One-dimensional quadrature: a globally adaptive 7/15-point Gauss–Kronrod
//! integrator and Gauss–Legendre rules for the fixed tensor-product
//! schemes used on spheres and boxes.
//!
//! Integrands are fallible (`FnMut(f64) -> Result<f64>`) because most of the
//! callers evaluate spherical means that can fail on domain or sentinel
//! violations; the first failure aborts the whole integration.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use crate::error::{Error, Result};

// Kronrod tables at full published precision
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the embedded 7-point rule (nodes XGK[1], XGK[3], XGK[5], XGK[7]).
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Tolerances for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl QuadOptions {
    pub fn relative(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            abs_tol: 0.0,
            max_intervals: 4000,
        }
    }

    pub fn with_abs_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self::relative(1e-10)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    /// Estimated absolute error.
    pub error: f64,
    pub intervals: usize,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F>(f: &mut F, a: f64, b: f64) -> Result<Segment>
where
    F: FnMut(f64) -> Result<f64>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut eval = |x: f64| -> Result<f64> {
        let y = f(x)?;
        if y.is_finite() {
            Ok(y)
        } else {
            Err(Error::Quadrature(format!("non-finite integrand {y} at {x}")))
        }
    };

    let fc = eval(center)?;
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    let mut abs = WGK[7] * fc.abs();
    let mut samples = [0.0f64; 15];
    samples[7] = fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = eval(center - dx)?;
        let f2 = eval(center + dx)?;
        samples[j] = f1;
        samples[14 - j] = f2;
        kron += WGK[j] * (f1 + f2);
        abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }

    let mean = 0.5 * kron;
    let mut asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        asc += WGK[j] * ((samples[j] - mean).abs() + (samples[14 - j] - mean).abs());
    }

    let value = kron * half;
    let resabs = abs * half.abs();
    let resasc = asc * half.abs();
    let mut error = ((kron - gauss) * half).abs();
    if resasc != 0.0 && error != 0.0 {
        error = resasc * (200.0 * error / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * resabs);
    }
    Ok(Segment { a, b, value, error })
}

/// Adaptive Gauss–Kronrod integration of `f` over `[a, b]`.
///
/// `a > b` integrates with the sign flipped; `a == b` returns zero without
/// evaluating `f`.
pub fn integrate<F>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<QuadResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    integrate_with_breaks(f, &[a, b], opts)
}

/// Like [`integrate`], but the interval is pre-split at the given
/// ascending breakpoints (the first and last entries are the limits).
/// Breakpoints should sit on known kinks of the integrand.
pub fn integrate_with_breaks<F>(mut f: F, points: &[f64], opts: QuadOptions) -> Result<QuadResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    if points.len() < 2 {
        return Err(Error::arg("integration needs at least two limits"));
    }
    if points.iter().any(|p| !p.is_finite()) {
        return Err(Error::arg("integration limits must be finite"));
    }
    let (a, b) = (points[0], points[points.len() - 1]);
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            error: 0.0,
            intervals: 0,
            evaluations: 0,
        });
    }
    if a > b {
        let reversed: Vec<f64> = points.iter().rev().copied().collect();
        let mut res = integrate_with_breaks(f, &reversed, opts)?;
        res.value = -res.value;
        return Ok(res);
    }

    let mut heap = BinaryHeap::new();
    let mut evaluations = 0;
    for w in points.windows(2) {
        if w[1] < w[0] {
            return Err(Error::arg("breakpoints must be ascending"));
        }
        if w[1] > w[0] {
            heap.push(kronrod(&mut f, w[0], w[1])?);
            evaluations += 15;
        }
    }

    loop {
        let (value, error) = heap
            .iter()
            .fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error));
        let target = opts.abs_tol.max(opts.rel_tol * value.abs());
        if error <= target {
            return Ok(QuadResult {
                value,
                error,
                intervals: heap.len(),
                evaluations,
            });
        }
        if heap.len() >= opts.max_intervals {
            return Err(Error::Quadrature(format!(
                "{} intervals exhausted on [{a}, {b}]: value {value:e}, error estimate {error:e}",
                heap.len()
            )));
        }
        let worst = heap.pop().expect("heap holds at least one segment");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            return Err(Error::Quadrature(format!(
                "interval [{}, {}] cannot be subdivided further",
                worst.a, worst.b
            )));
        }
        heap.push(kronrod(&mut f, worst.a, mid)?);
        heap.push(kronrod(&mut f, mid, worst.b)?);
        evaluations += 30;
    }
}

/// Infallible convenience wrapper around [`integrate`].
pub fn integrate_fn<F>(mut f: F, a: f64, b: f64, opts: QuadOptions) -> Result<QuadResult>
where
    F: FnMut(f64) -> f64,
{
    integrate(|x| Ok(f(x)), a, b, opts)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, by Newton iteration on
/// the Legendre recurrence. Nodes are returned ascending.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m > 0, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    let mf = m as f64;
    for i in 0..m.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (mf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=m {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let p = if m == 1 { x } else { p1 };
            let pm1 = if m == 1 { 1.0 } else { p0 };
            dp = mf * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    if m % 2 == 1 {
        nodes[m / 2] = 0.0;
    }
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_integrates_polynomials_exactly() {
        // 15-point Kronrod is exact through degree 22.
        let r = integrate_fn(|x| x.powi(10) - 3.0 * x.powi(3), -1.0, 2.0, QuadOptions::default())
            .unwrap();
        let exact = (2f64.powi(11) + 1.0) / 11.0 - 0.75 * (16.0 - 1.0);
        assert!((r.value - exact).abs() < 1e-12 * exact.abs());
        assert_eq!(r.intervals, 1);
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        // ∫₀¹ x^{-1/2} dx = 2
        let r = integrate_fn(|x| 1.0 / x.sqrt(), 0.0, 1.0, QuadOptions::relative(1e-10)).unwrap();
        assert!((r.value - 2.0).abs() < 1e-9, "{r:?}");
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let f = |x: f64| x.exp();
        let fwd = integrate_fn(f, 0.0, 1.0, QuadOptions::default()).unwrap().value;
        let back = integrate_fn(f, 1.0, 0.0, QuadOptions::default()).unwrap().value;
        assert_eq!(fwd, -back);
        assert!((fwd - (1f64.exp() - 1.0)).abs() < 1e-13);
    }

    #[test]
    fn breakpoints_at_kinks() {
        let r = integrate_with_breaks(
            |x: f64| Ok((x - 0.3).abs()),
            &[0.0, 0.3, 1.0],
            QuadOptions::relative(1e-12),
        )
        .unwrap();
        let exact = 0.5 * 0.09 + 0.5 * 0.49;
        assert!((r.value - exact).abs() < 1e-14);
        assert_eq!(r.intervals, 2);
    }

    #[test]
    fn integrand_errors_propagate() {
        let r = integrate(
            |x| if x > 0.5 { Err(Error::degenerate("boom")) } else { Ok(x) },
            0.0,
            1.0,
            QuadOptions::default(),
        );
        assert_eq!(r.unwrap_err(), Error::degenerate("boom"));
    }

    #[test]
    fn non_finite_integrand_is_rejected() {
        let r = integrate_fn(|_| f64::INFINITY, 0.0, 1.0, QuadOptions::default());
        assert!(matches!(r, Err(Error::Quadrature(_))));
    }

    #[test]
    fn gauss_legendre_weights_and_moments() {
        for m in [1, 2, 5, 16, 33] {
            let (x, w) = gauss_legendre(m);
            let total: f64 = w.iter().sum();
            assert!((total - 2.0).abs() < 1e-13, "m={m}");
            assert!(x.windows(2).all(|p| p[0] < p[1]));
            // exact for degree 2m-1
            let deg = 2 * m - 2;
            let moment: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
            assert!((moment - 2.0 / (deg as f64 + 1.0)).abs() < 1e-12, "m={m}");
        }
    }
}
