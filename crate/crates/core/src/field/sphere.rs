//! Averaging rules on spheres S(x₀, r) ⊂ ℝⁿ.
//!
//! Deterministic rules for n = 2 (equispaced trapezoid on the circle) and
//! n = 3 (Gauss–Legendre in cos θ × trapezoid in φ), Monte Carlo for any n.
//! Every rule is a positive weighted average of point values with weights
//! summing to one, so Jensen's inequality holds exactly for the discrete
//! measure, not just up to quadrature error.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{check_dim, norm};
use crate::quadrature::gauss_legendre;

/// Monte Carlo directions are generated in fixed-size chunks, each from its
/// own ChaCha stream, so the sample set does not depend on thread count.
const MC_CHUNK: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum SphericalQuadratureSpec {
    /// n = 2 only: trapezoid rule with `nodes` equispaced angles.
    ExactCircle { nodes: usize },
    /// n = 3 only: `polar` Gauss–Legendre nodes in cos θ times `azimuthal`
    /// trapezoid nodes in φ.
    ProductSphere { polar: usize, azimuthal: usize },
    /// Any n: `samples` uniformly distributed directions from `seed`.
    MonteCarlo { samples: usize, seed: u64 },
}

impl SphericalQuadratureSpec {
    /// Deterministic rules where they exist, Monte Carlo for n ≥ 4.
    pub fn default_for(n: usize) -> Self {
        match n {
            2 => SphericalQuadratureSpec::ExactCircle { nodes: 256 },
            3 => SphericalQuadratureSpec::ProductSphere {
                polar: 32,
                azimuthal: 64,
            },
            _ => SphericalQuadratureSpec::MonteCarlo {
                samples: 4096,
                seed: 0,
            },
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        check_dim(n)?;
        match *self {
            SphericalQuadratureSpec::ExactCircle { nodes } => {
                if n != 2 {
                    return Err(Error::arg(format!("circle rule needs n = 2, got {n}")));
                }
                if nodes < 16 {
                    return Err(Error::arg(format!("circle rule needs >= 16 nodes, got {nodes}")));
                }
            }
            SphericalQuadratureSpec::ProductSphere { polar, azimuthal } => {
                if n != 3 {
                    return Err(Error::arg(format!("product sphere rule needs n = 3, got {n}")));
                }
                if polar < 16 || azimuthal < 16 {
                    return Err(Error::arg(format!(
                        "product sphere rule needs >= 16 nodes per axis, got {polar}x{azimuthal}"
                    )));
                }
            }
            SphericalQuadratureSpec::MonteCarlo { samples, .. } => {
                if samples < 1000 {
                    return Err(Error::arg(format!(
                        "Monte Carlo needs >= 1000 samples, got {samples}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn is_monte_carlo(&self) -> bool {
        matches!(self, SphericalQuadratureSpec::MonteCarlo { .. })
    }

    /// Materializes unit directions and weights for dimension `n`.
    pub fn rule(&self, n: usize) -> Result<SphereRule> {
        self.validate(n)?;
        let rule = match *self {
            SphericalQuadratureSpec::ExactCircle { nodes } => {
                let mut directions = Vec::with_capacity(2 * nodes);
                for j in 0..nodes {
                    let theta = 2.0 * PI * j as f64 / nodes as f64;
                    directions.push(theta.cos());
                    directions.push(theta.sin());
                }
                SphereRule {
                    dim: 2,
                    directions,
                    weights: vec![1.0 / nodes as f64; nodes],
                    monte_carlo: false,
                }
            }
            SphericalQuadratureSpec::ProductSphere { polar, azimuthal } => {
                let (t, w) = gauss_legendre(polar);
                let mut directions = Vec::with_capacity(3 * polar * azimuthal);
                let mut weights = Vec::with_capacity(polar * azimuthal);
                for (ct, wt) in t.iter().zip(&w) {
                    let st = (1.0 - ct * ct).max(0.0).sqrt();
                    for j in 0..azimuthal {
                        let phi = 2.0 * PI * (j as f64 + 0.5) / azimuthal as f64;
                        directions.extend_from_slice(&[st * phi.cos(), st * phi.sin(), *ct]);
                        weights.push(wt / (2.0 * azimuthal as f64));
                    }
                }
                SphereRule {
                    dim: 3,
                    directions,
                    weights,
                    monte_carlo: false,
                }
            }
            SphericalQuadratureSpec::MonteCarlo { samples, seed } => SphereRule {
                dim: n,
                directions: random_directions(n, samples, seed),
                weights: vec![1.0 / samples as f64; samples],
                monte_carlo: true,
            },
        };
        Ok(rule)
    }
}

/// `count` uniformly distributed unit vectors in ℝⁿ, flattened row-major.
/// Bit-identical for a fixed seed regardless of the rayon pool size.
pub fn random_directions(n: usize, count: usize, seed: u64) -> Vec<f64> {
    let chunks = count.div_ceil(MC_CHUNK);
    let parts: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let len = MC_CHUNK.min(count - c * MC_CHUNK);
            let mut out = Vec::with_capacity(len * n);
            let mut v = vec![0.0; n];
            for _ in 0..len {
                loop {
                    for x in v.iter_mut() {
                        *x = StandardNormal.sample(&mut rng);
                    }
                    let r = norm(&v);
                    if r > 1e-12 {
                        out.extend(v.iter().map(|x| x / r));
                        break;
                    }
                }
            }
            out
        })
        .collect();
    parts.concat()
}

/// A materialized averaging rule on the unit sphere.
#[derive(Debug, Clone)]
pub struct SphereRule {
    dim: usize,
    directions: Vec<f64>,
    weights: Vec<f64>,
    monte_carlo: bool,
}

/// Weighted mean of point values, with a standard error for Monte Carlo.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereAverage {
    pub mean: f64,
    /// Standard error of the mean; zero for deterministic rules.
    pub std_error: f64,
}

impl SphereRule {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Points of S(center, r) used by the rule.
    pub fn points<'a>(&'a self, center: &'a [f64], r: f64) -> impl Iterator<Item = Vec<f64>> + 'a {
        self.directions
            .chunks_exact(self.dim)
            .map(move |u| center.iter().zip(u).map(|(c, u)| c + r * u).collect())
    }

    /// Average of `f` over S(center, r).
    pub fn average<F>(&self, center: &[f64], r: f64, mut f: F) -> Result<SphereAverage>
    where
        F: FnMut(&[f64]) -> Result<f64>,
    {
        let mut z = vec![0.0; self.dim];
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for (u, w) in self.directions.chunks_exact(self.dim).zip(&self.weights) {
            for ((zi, ci), ui) in z.iter_mut().zip(center).zip(u) {
                *zi = ci + r * ui;
            }
            let v = f(&z)?;
            sum += w * v;
            if self.monte_carlo {
                sum_sq += w * v * v;
            }
        }
        let std_error = if self.monte_carlo {
            let k = self.weights.len() as f64;
            let var = (sum_sq - sum * sum).max(0.0) * k / (k - 1.0);
            (var / k).sqrt()
        } else {
            0.0
        };
        Ok(SphereAverage {
            mean: sum,
            std_error,
        })
    }
}
