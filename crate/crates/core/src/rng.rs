//! Deterministic, splittable randomness.
//!
//! Every random draw in the crate flows through [`RngState`]: a ChaCha8
//! stream keyed by a 64-bit seed and a 64-bit stream id. Children derived
//! with [`RngState::split`] get their own stream id, so a block of work seeded
//! from `parent.split(i)` produces the same numbers no matter what order the
//! blocks are evaluated in.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::error::{invalid, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone)]
pub struct RngState {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

/// Serializable provenance of a stream: enough to rebuild it from scratch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamId {
    pub seed: u64,
    pub stream: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distribution {
    Gaussian,
    Cauchy,
    #[serde(rename = "uniform_0_2pi")]
    Uniform0To2Pi,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

// FNV-1a; stable across platforms and releases, unlike `DefaultHasher`.
fn label_hash(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

impl RngState {
    pub fn seed_rng(seed: u64) -> Self {
        Self::from_stream(StreamId { seed, stream: 0 })
    }

    pub fn from_stream(id: StreamId) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(id.seed);
        inner.set_stream(id.stream);
        Self {
            seed: id.seed,
            stream: id.stream,
            inner,
        }
    }

    pub fn id(&self) -> StreamId {
        StreamId {
            seed: self.seed,
            stream: self.stream,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Child stream `index`. Depends only on this state's identity, not on
    /// how many values have already been drawn from it.
    pub fn split(&self, index: u64) -> RngState {
        let stream = splitmix64(self.stream ^ splitmix64(index.wrapping_add(0xA076_1D64_78BD_642F)));
        Self::from_stream(StreamId {
            seed: self.seed,
            stream,
        })
    }

    pub fn split_named(&self, label: &str) -> RngState {
        self.split(label_hash(label))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn gaussian(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Standard Cauchy by inverse CDF.
    pub fn cauchy(&mut self) -> f64 {
        loop {
            let u = self.uniform();
            // u = 0 maps to tan(-π/2), which is not a finite draw.
            if u > 0.0 {
                return (PI * (u - 0.5)).tan();
            }
        }
    }

    pub fn uniform_angle(&mut self) -> f64 {
        let v = self.uniform() * TAU;
        if v < TAU {
            v
        } else {
            0.0
        }
    }

    pub fn rademacher(&mut self) -> f64 {
        if self.inner.next_u32() & 1 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    pub fn draw(&mut self, dist: Distribution) -> f64 {
        match dist {
            Distribution::Gaussian => self.gaussian(),
            Distribution::Cauchy => self.cauchy(),
            Distribution::Uniform0To2Pi => self.uniform_angle(),
        }
    }

    pub fn fill_gaussian(&mut self, out: &mut [f64]) {
        for v in out {
            *v = self.gaussian();
        }
    }

    /// Fisher–Yates.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }

    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut p: Vec<usize> = (0..n).collect();
        self.shuffle(&mut p);
        p
    }
}

pub fn sample_matrix(
    rng: &mut RngState,
    rows: usize,
    cols: usize,
    dist: Distribution,
) -> Result<Matrix> {
    if rows == 0 || cols == 0 {
        return Err(invalid(format!(
            "sample_matrix needs positive dimensions, got {rows}x{cols}"
        )));
    }
    let data = (0..rows * cols).map(|_| rng.draw(dist)).collect();
    Matrix::from_vec(rows, cols, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussians(seed: u64, n: usize) -> Vec<f64> {
        let mut rng = RngState::seed_rng(seed);
        (0..n).map(|_| rng.gaussian()).collect()
    }

    #[test]
    fn same_seed_same_draws() {
        assert_eq!(gaussians(0, 100), gaussians(0, 100));
    }

    #[test]
    fn different_seed_different_draws() {
        assert_ne!(gaussians(0, 100), gaussians(1, 100));
    }

    #[test]
    fn gaussian_mean_near_zero() {
        let xs = gaussians(42, 1_000_000);
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        // 3σ of the sample mean is 0.003; the contract asks for 0.01.
        assert!(mean.abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn sample_matrix_shape_and_errors() {
        let mut rng = RngState::seed_rng(3);
        let m = sample_matrix(&mut rng, 2, 3, Distribution::Gaussian).unwrap();
        assert_eq!(m.shape(), (2, 3));
        assert!(sample_matrix(&mut rng, 0, 3, Distribution::Gaussian).is_err());
        assert!(sample_matrix(&mut rng, 3, 0, Distribution::Cauchy).is_err());
    }

    #[test]
    fn gaussian_variance_within_one_percent() {
        let mut rng = RngState::seed_rng(11);
        let m = sample_matrix(&mut rng, 1000, 1000, Distribution::Gaussian).unwrap();
        let n = m.as_slice().len() as f64;
        let mean = m.as_slice().iter().sum::<f64>() / n;
        let var = m.as_slice().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((var - 1.0).abs() < 0.01, "var {var}");
    }

    #[test]
    fn uniform_angle_range_and_mean() {
        let mut rng = RngState::seed_rng(5);
        let m = sample_matrix(&mut rng, 1000, 1000, Distribution::Uniform0To2Pi).unwrap();
        assert!(m.as_slice().iter().all(|&v| (0.0..TAU).contains(&v)));
        let mean = m.as_slice().iter().sum::<f64>() / 1e6;
        assert!((mean - PI).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn cauchy_median_and_iqr() {
        let mut rng = RngState::seed_rng(9);
        let mut xs: Vec<f64> = (0..200_001).map(|_| rng.cauchy()).collect();
        xs.sort_by(f64::total_cmp);
        let q = |p: f64| xs[(p * (xs.len() - 1) as f64) as usize];
        // Standard Cauchy: median 0, quartiles ±1.
        assert!(q(0.5).abs() < 0.02);
        assert!((q(0.75) - 1.0).abs() < 0.03);
        assert!((q(0.25) + 1.0).abs() < 0.03);
    }

    #[test]
    fn split_is_independent_of_parent_position() {
        let parent = RngState::seed_rng(7);
        let mut advanced = parent.clone();
        for _ in 0..17 {
            advanced.gaussian();
        }
        let mut a = parent.split(3);
        let mut b = advanced.split(3);
        assert_eq!(a.next_u64(), b.next_u64());
        let mut c = parent.split(4);
        assert_ne!(parent.split(3).next_u64(), c.next_u64());
    }

    #[test]
    fn stream_id_roundtrip() {
        let child = RngState::seed_rng(1).split_named("sketch");
        let mut a = child.clone();
        let mut b = RngState::from_stream(child.id());
        assert_eq!(a.next_u64(), b.next_u64());
    }
}
