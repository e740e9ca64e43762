//! Points of the extended space ℝⁿ ∪ {∞}, the chordal metric, and the
//! dimensional constants that appear in every bound.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};

/// A point of ℝⁿ ∪ {∞}. The point at infinity keeps its dimension so that
/// inversion can map it back to the finite origin.
#[derive(Debug, Clone, PartialEq)]
pub enum ExtendedPoint {
    Finite(Vec<f64>),
    Infinity { dim: usize },
}

impl ExtendedPoint {
    pub fn finite(coords: Vec<f64>) -> Result<Self> {
        check_dim(coords.len())?;
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::arg(format!("non-finite coordinate in {coords:?}")));
        }
        Ok(ExtendedPoint::Finite(coords))
    }

    pub fn infinity(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(ExtendedPoint::Infinity { dim })
    }

    pub fn origin(dim: usize) -> Result<Self> {
        Self::finite(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        match self {
            ExtendedPoint::Finite(c) => c.len(),
            ExtendedPoint::Infinity { dim } => *dim,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, ExtendedPoint::Infinity { .. })
    }

    pub fn coords(&self) -> Option<&[f64]> {
        match self {
            ExtendedPoint::Finite(c) => Some(c),
            ExtendedPoint::Infinity { .. } => None,
        }
    }
}

pub(crate) fn check_dim(n: usize) -> Result<()> {
    if n < 2 {
        Err(Error::InvalidDimension(n))
    } else {
        Ok(())
    }
}

pub(crate) fn same_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Euclidean norm, overflow-safe.
pub fn norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |acc, c| acc.hypot(*c))
}

pub fn distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .fold(0.0f64, |acc, (a, b)| acc.hypot(a - b))
}

/// Chordal distance h(x, y) = |x−y| / (√(1+|x|²)·√(1+|y|²)), with
/// h(x, ∞) = 1/√(1+|x|²).
pub fn chordal_distance(x: &ExtendedPoint, y: &ExtendedPoint) -> Result<f64> {
    same_dim(x.dim(), y.dim())?;
    let h = match (x, y) {
        (ExtendedPoint::Infinity { .. }, ExtendedPoint::Infinity { .. }) => 0.0,
        (ExtendedPoint::Finite(p), ExtendedPoint::Infinity { .. })
        | (ExtendedPoint::Infinity { .. }, ExtendedPoint::Finite(p)) => 1.0 / 1f64.hypot(norm(p)),
        (ExtendedPoint::Finite(p), ExtendedPoint::Finite(q)) => {
            if p == q {
                0.0
            } else {
                // fixed division order keeps h exactly symmetric
                let (a, b) = (1f64.hypot(norm(p)), 1f64.hypot(norm(q)));
                distance(p, q) / a.max(b) / a.min(b)
            }
        }
    };
    Ok(h.min(1.0))
}

/// Largest pairwise chordal distance; brute force over all pairs.
pub fn chordal_diameter(points: &[ExtendedPoint]) -> Result<f64> {
    let first = points.first().ok_or(Error::EmptySet)?;
    let mut diam = 0.0f64;
    for (i, p) in points.iter().enumerate() {
        same_dim(first.dim(), p.dim())?;
        for q in &points[i + 1..] {
            diam = diam.max(chordal_distance(p, q)?);
        }
    }
    Ok(diam)
}

/// x̃ = −x/|x|², extended by 0 ↦ ∞ and ∞ ↦ 0.
pub fn inversion_point(x: &ExtendedPoint) -> ExtendedPoint {
    match x {
        ExtendedPoint::Infinity { dim } => ExtendedPoint::Finite(vec![0.0; *dim]),
        ExtendedPoint::Finite(c) => {
            let r = norm(c);
            if r == 0.0 {
                ExtendedPoint::Infinity { dim: c.len() }
            } else {
                // divide twice by r rather than once by r² to avoid under/overflow
                ExtendedPoint::Finite(c.iter().map(|v| -(v / r) / r).collect())
            }
        }
    }
}

/// Surface area of the unit sphere and volume of the unit ball in ℝⁿ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DimensionConstants {
    pub n: usize,
    /// ω_{n−1}, area of the unit sphere Sⁿ⁻¹.
    pub sphere_area: f64,
    /// Ω_n, volume of the unit ball Bⁿ.
    pub ball_volume: f64,
}

/// Closed forms via the recurrence Ω_n = (2π/n)·Ω_{n−2} from Ω₀ = 1, Ω₁ = 2,
/// and ω_{n−1} = n·Ω_n. No Gamma-function approximation is involved.
pub fn dimension_constants(n: usize) -> Result<DimensionConstants> {
    check_dim(n)?;
    let mut ball = if n.is_multiple_of(2) { 1.0 } else { 2.0 };
    let mut k = if n.is_multiple_of(2) { 2 } else { 3 };
    while k <= n {
        ball *= 2.0 * PI / k as f64;
        k += 2;
    }
    Ok(DimensionConstants {
        n,
        sphere_area: n as f64 * ball,
        ball_volume: ball,
    })
}

/// Upper bound ω_{n−1}·(ln √3)^{1−n} satisfied by the set function c(E) for
/// every E in the extended space.
pub fn c_upper_bound(n: usize) -> Result<f64> {
    let dc = dimension_constants(n)?;
    Ok(dc.sphere_area * 3f64.sqrt().ln().powi(1 - n as i32))
}

/// The continuum estimate c(F) ≥ a_n·h(F) for a connected set F of chordal
/// diameter `h_diam`.
pub fn continuum_c_lower_bound(h_diam: f64, a_n: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&h_diam) {
        return Err(Error::arg(format!(
            "chordal diameter {h_diam} outside [0, 1]"
        )));
    }
    if !(a_n > 0.0 && a_n.is_finite()) {
        return Err(Error::arg(format!("a_n must be positive, got {a_n}")));
    }
    Ok(a_n * h_diam)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(c: &[f64]) -> ExtendedPoint {
        ExtendedPoint::finite(c.to_vec()).unwrap()
    }

    #[test]
    fn chordal_examples() {
        let x = pt(&[0.3, -1.2, 4.0]);
        assert_eq!(chordal_distance(&x, &x).unwrap(), 0.0);
        for n in 2..6 {
            let zero = ExtendedPoint::origin(n).unwrap();
            let inf = ExtendedPoint::infinity(n).unwrap();
            assert_eq!(chordal_distance(&zero, &inf).unwrap(), 1.0);
            let mut e1 = vec![0.0; n];
            e1[0] = 1.0;
            let h = chordal_distance(&zero, &ExtendedPoint::Finite(e1)).unwrap();
            assert!((h - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        }
        let inf = ExtendedPoint::infinity(3).unwrap();
        assert_eq!(chordal_distance(&inf, &inf).unwrap(), 0.0);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let e = chordal_distance(&pt(&[0.0, 0.0]), &pt(&[0.0, 0.0, 0.0])).unwrap_err();
        assert_eq!(e, Error::DimensionMismatch { expected: 2, found: 3 });
        assert!(ExtendedPoint::finite(vec![1.0]).is_err());
        assert!(ExtendedPoint::finite(vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn diameter_examples() {
        assert_eq!(chordal_diameter(&[pt(&[1.0, 2.0])]).unwrap(), 0.0);
        assert_eq!(chordal_diameter(&[]).unwrap_err(), Error::EmptySet);
        let pair = [ExtendedPoint::origin(2).unwrap(), ExtendedPoint::infinity(2).unwrap()];
        assert_eq!(chordal_diameter(&pair).unwrap(), 1.0);

        // brute force over the three pairs by hand
        let pts = [pt(&[0.0, 0.0]), pt(&[1.0, 0.0]), pt(&[2.0, 0.0])];
        let d01 = 1.0 / 2f64.sqrt();
        let d02 = 2.0 / 5f64.sqrt();
        let d12 = 1.0 / (2f64.sqrt() * 5f64.sqrt());
        let expected = d01.max(d02).max(d12);
        assert!((expected - 0.894_427_190_999_915_9).abs() < 1e-15);
        assert!((chordal_diameter(&pts).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn dimension_constant_examples() {
        let c2 = dimension_constants(2).unwrap();
        assert!((c2.sphere_area - 2.0 * PI).abs() < 1e-15);
        assert!((c2.ball_volume - PI).abs() < 1e-15);
        let c3 = dimension_constants(3).unwrap();
        assert!((c3.sphere_area - 4.0 * PI).abs() < 1e-14);
        assert!((c3.ball_volume - 4.0 * PI / 3.0).abs() < 1e-14);
        // 2π^{n/2}/Γ(n/2) at n = 4 with Γ(2) = 1
        let c4 = dimension_constants(4).unwrap();
        assert!((c4.sphere_area - 2.0 * PI * PI).abs() < 1e-13);
        assert_eq!(dimension_constants(1).unwrap_err(), Error::InvalidDimension(1));
    }

    #[test]
    fn sphere_area_is_n_times_ball_volume() {
        // independent check against the Gamma closed forms for half-integers
        fn gamma_half(k: usize) -> f64 {
            // Γ(k/2)
            if k.is_multiple_of(2) {
                (1..k / 2).map(|j| j as f64).product()
            } else {
                let mut g = PI.sqrt();
                let mut x = 0.5;
                while x < k as f64 / 2.0 - 0.25 {
                    g *= x;
                    x += 1.0;
                }
                g
            }
        }
        for n in 2..=10 {
            let c = dimension_constants(n).unwrap();
            let rel = (c.sphere_area - n as f64 * c.ball_volume).abs() / c.sphere_area;
            assert!(rel < 1e-12);
            let gamma_form = 2.0 * PI.powf(n as f64 / 2.0) / gamma_half(n);
            assert!((c.sphere_area - gamma_form).abs() / gamma_form < 1e-12, "n={n}");
        }
    }

    #[test]
    fn inversion_examples() {
        assert_eq!(inversion_point(&pt(&[1.0, 0.0])), pt(&[-1.0, 0.0]));
        assert_eq!(inversion_point(&pt(&[2.0, 0.0])), pt(&[-0.5, 0.0]));
        assert_eq!(
            inversion_point(&ExtendedPoint::origin(3).unwrap()),
            ExtendedPoint::infinity(3).unwrap()
        );
        assert_eq!(
            inversion_point(&ExtendedPoint::infinity(3).unwrap()),
            ExtendedPoint::origin(3).unwrap()
        );
    }

    #[test]
    fn continuum_bound_examples() {
        assert_eq!(continuum_c_lower_bound(0.0, 0.3).unwrap(), 0.0);
        assert_eq!(continuum_c_lower_bound(1.0, 0.5).unwrap(), 0.5);
        let h = 2.0 / 5f64.sqrt();
        assert!((continuum_c_lower_bound(h, 0.1).unwrap() - 0.1 * 0.894_427_19).abs() < 1e-9);
        assert!(continuum_c_lower_bound(1.5, 0.1).is_err());
        assert!(continuum_c_lower_bound(-0.1, 0.1).is_err());
        assert!(continuum_c_lower_bound(0.5, 0.0).is_err());
    }
}
