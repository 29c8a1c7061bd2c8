//! Deterministic point sampling over chart interiors.
//!
//! Classification and the verification batteries evaluate residuals on a
//! fixed lattice plus a low-discrepancy tail, so repeated runs visit exactly
//! the same points. Pseudo-random points (for spot checks) come from a
//! seeded SplitMix64 stream rather than a platform RNG for the same reason.

use crate::geometry::ChartManifold;
use serde::{Deserialize, Serialize};

/// Sampling descriptor for classification grids.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    /// Lattice points per dimension over the margin-inset box.
    pub lattice_per_dim: usize,
    /// Additional quasi-random (Halton) interior points.
    pub quasi_random: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { lattice_per_dim: 33, quasi_random: 200 }
    }
}

impl GridSpec {
    pub fn total_points(&self, dim: usize) -> usize {
        self.lattice_per_dim.pow(dim as u32) + self.quasi_random
    }
}

const HALTON_PRIMES: [usize; 8] = [2, 3, 5, 7, 11, 13, 17, 19];
// Skip the first few Halton indices, which line up across bases.
const HALTON_SKIP: usize = 20;

/// Radical-inverse (van der Corput) value of `index` in base `base`.
pub fn radical_inverse(mut index: usize, base: usize) -> f64 {
    let b = base as f64;
    let mut factor = 1.0;
    let mut result = 0.0;
    while index > 0 {
        factor /= b;
        result += factor * (index % base) as f64;
        index /= base;
    }
    result
}

/// The sampling box: margin-inset for ordinary coordinates, the full period
/// for periodic ones.
pub fn sampling_box(manifold: &ChartManifold) -> Vec<(f64, f64)> {
    (0..manifold.dim())
        .map(|i| {
            let (lo, hi) = manifold.domain()[i];
            if manifold.periodic()[i] {
                (lo, hi)
            } else {
                let margin = manifold.boundary_margin()[i];
                (lo + margin, hi - margin)
            }
        })
        .collect()
}

/// Deterministic grid: a uniform lattice over the sampling box plus a Halton
/// tail. Periodic coordinates space lattice points over the full period
/// without duplicating the wrap-around endpoint.
pub fn grid_points(manifold: &ChartManifold, spec: &GridSpec) -> Vec<Vec<f64>> {
    let dim = manifold.dim();
    let boxes = sampling_box(manifold);
    let n = spec.lattice_per_dim;
    let mut axes: Vec<Vec<f64>> = Vec::with_capacity(dim);
    for (i, &(lo, hi)) in boxes.iter().enumerate() {
        let axis = if n == 0 {
            Vec::new()
        } else if manifold.periodic()[i] {
            (0..n)
                .map(|k| lo + (hi - lo) * k as f64 / n as f64)
                .collect()
        } else if n == 1 {
            vec![0.5 * (lo + hi)]
        } else {
            (0..n)
                .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
                .collect()
        };
        axes.push(axis);
    }

    let mut points = Vec::with_capacity(spec.total_points(dim));
    if axes.iter().all(|a| !a.is_empty()) {
        let mut index = vec![0usize; dim];
        loop {
            points.push((0..dim).map(|d| axes[d][index[d]]).collect());
            // Odometer increment, last coordinate fastest.
            let mut d = dim;
            loop {
                if d == 0 {
                    break;
                }
                d -= 1;
                index[d] += 1;
                if index[d] < axes[d].len() {
                    break;
                }
                index[d] = 0;
                if d == 0 {
                    index.clear();
                    break;
                }
            }
            if index.is_empty() {
                break;
            }
        }
    }

    for k in 0..spec.quasi_random {
        let point = (0..dim)
            .map(|d| {
                let u = radical_inverse(k + 1 + HALTON_SKIP, HALTON_PRIMES[d % HALTON_PRIMES.len()]);
                let (lo, hi) = boxes[d];
                lo + (hi - lo) * u
            })
            .collect();
        points.push(point);
    }
    points
}

/// Deterministic pseudo-random stream (SplitMix64).
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    pub fn in_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}

/// `count` seeded-random points uniform over the sampling box.
pub fn random_interior_points(
    manifold: &ChartManifold,
    count: usize,
    seed: u64,
) -> Vec<Vec<f64>> {
    let boxes = sampling_box(manifold);
    let mut rng = SplitMix64::new(seed);
    (0..count)
        .map(|_| boxes.iter().map(|&(lo, hi)| rng.in_range(lo, hi)).collect())
        .collect()
}
