//! Exact kernels and their randomized feature maps.
//!
//! Shift-invariant kernels use random Fourier features
//! `φ(x) = √(2/D)·cos(Ωx + b)`, with Gaussian rows of `Ω` for the RBF kernel
//! and Cauchy rows for the Laplacian kernel, both scaled by `1/σ`. The linear
//! kernel uses a Gaussian projection `φ(x) = Rx` with `R_ij ~ N(0, 1/D)`.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Result};
use crate::matrix::{dot, l1_dist, sq_dist, Matrix};
use crate::rng::{RngState, StreamId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelTag {
    Linear,
    Rbf,
    Laplacian,
}

impl KernelTag {
    pub const ALL: [KernelTag; 3] = [KernelTag::Linear, KernelTag::Laplacian, KernelTag::Rbf];

    pub fn name(self) -> &'static str {
        match self {
            KernelTag::Linear => "linear",
            KernelTag::Rbf => "rbf",
            KernelTag::Laplacian => "laplacian",
        }
    }
}

impl std::str::FromStr for KernelTag {
    type Err = crate::SrfError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(KernelTag::Linear),
            "rbf" => Ok(KernelTag::Rbf),
            "laplacian" => Ok(KernelTag::Laplacian),
            other => Err(invalid(format!("unknown kernel '{other}'"))),
        }
    }
}

impl std::fmt::Display for KernelTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A kernel with its bandwidth `σ` (unused by the linear kernel).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelKind {
    pub tag: KernelTag,
    pub bandwidth: f64,
}

impl KernelKind {
    pub fn linear() -> Self {
        Self {
            tag: KernelTag::Linear,
            bandwidth: 1.0,
        }
    }

    pub fn rbf(bandwidth: f64) -> Result<Self> {
        Self::new(KernelTag::Rbf, bandwidth)
    }

    pub fn laplacian(bandwidth: f64) -> Result<Self> {
        Self::new(KernelTag::Laplacian, bandwidth)
    }

    pub fn new(tag: KernelTag, bandwidth: f64) -> Result<Self> {
        let kind = Self { tag, bandwidth };
        kind.validate()?;
        Ok(kind)
    }

    pub fn validate(&self) -> Result<()> {
        if self.tag != KernelTag::Linear && !(self.bandwidth > 0.0 && self.bandwidth.is_finite()) {
            return Err(invalid(format!(
                "{} kernel needs a positive finite bandwidth, got {}",
                self.tag, self.bandwidth
            )));
        }
        Ok(())
    }
}

pub fn kappa_exact(kind: KernelKind, x: &[f64], y: &[f64]) -> Result<f64> {
    check_dim("kappa_exact", x.len(), y.len())?;
    kind.validate()?;
    let s = kind.bandwidth;
    Ok(match kind.tag {
        KernelTag::Linear => dot(x, y),
        KernelTag::Rbf => (-sq_dist(x, y) / (2.0 * s * s)).exp(),
        KernelTag::Laplacian => (-l1_dist(x, y) / s).exp(),
    })
}

/// A fitted random feature map `φ: ℝ^F → ℝ^D`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMap {
    pub kind: KernelKind,
    pub input_dim: usize,
    pub output_dim: usize,
    /// `D×F`: frequencies `ω_d` as rows, or the projection `R` for the
    /// linear kernel.
    pub frequencies: Matrix,
    /// Phase offsets in `[0, 2π)`; empty for the linear kernel.
    pub offsets: Vec<f64>,
    pub stream: Option<StreamId>,
}

pub fn fit_feature_map(
    rng: &mut RngState,
    kind: KernelKind,
    input_dim: usize,
    output_dim: usize,
) -> Result<FeatureMap> {
    kind.validate()?;
    if input_dim == 0 || output_dim == 0 {
        return Err(invalid(format!(
            "feature map needs F >= 1 and D >= 1, got F={input_dim}, D={output_dim}"
        )));
    }
    let stream = Some(rng.id());
    let mut frequencies = Matrix::zeros(output_dim, input_dim);
    let inv_sigma = 1.0 / kind.bandwidth;
    let offsets = match kind.tag {
        KernelTag::Linear => {
            let scale = 1.0 / (output_dim as f64).sqrt();
            for w in frequencies.as_mut_slice() {
                *w = rng.gaussian() * scale;
            }
            Vec::new()
        }
        KernelTag::Rbf | KernelTag::Laplacian => {
            for w in frequencies.as_mut_slice() {
                let draw = if kind.tag == KernelTag::Rbf {
                    rng.gaussian()
                } else {
                    rng.cauchy()
                };
                *w = draw * inv_sigma;
            }
            (0..output_dim).map(|_| rng.uniform_angle()).collect()
        }
    };
    Ok(FeatureMap {
        kind,
        input_dim,
        output_dim,
        frequencies,
        offsets,
        stream,
    })
}

impl FeatureMap {
    /// Linear map with `R = I`, so `embed(X) = X`.
    pub fn identity_projection(dim: usize) -> Self {
        Self {
            kind: KernelKind::linear(),
            input_dim: dim,
            output_dim: dim,
            frequencies: Matrix::identity(dim),
            offsets: Vec::new(),
            stream: None,
        }
    }

    pub fn embed_row(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.input_dim);
        debug_assert_eq!(out.len(), self.output_dim);
        match self.kind.tag {
            KernelTag::Linear => {
                for (d, o) in out.iter_mut().enumerate() {
                    *o = dot(self.frequencies.row(d), x);
                }
            }
            KernelTag::Rbf | KernelTag::Laplacian => {
                let amp = (2.0 / self.output_dim as f64).sqrt();
                for (d, o) in out.iter_mut().enumerate() {
                    *o = amp * (dot(self.frequencies.row(d), x) + self.offsets[d]).cos();
                }
            }
        }
    }

    /// `Φ = ℰ(X)`: one embedded row per input row.
    pub fn embed(&self, x: &Matrix) -> Result<Matrix> {
        check_dim("FeatureMap::embed", self.input_dim, x.cols())?;
        let mut phi = Matrix::zeros(x.rows(), self.output_dim);
        for i in 0..x.rows() {
            self.embed_row(x.row(i), phi.row_mut(i));
        }
        Ok(phi)
    }
}

/// Bandwidth chosen by the median heuristic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandwidthEstimate {
    pub sigma: f64,
    /// Set when every sampled distance was zero and `σ` fell back to 1.
    pub degenerate: bool,
}

pub const MEDIAN_MAX_PAIRS: usize = 10_000;

/// Median pairwise distance (L2 for RBF, L1 for Laplacian and linear).
/// Graphs with more than [`MEDIAN_MAX_PAIRS`] pairs are subsampled with a
/// fixed internal stream, so the result is a pure function of `x`.
pub fn median_bandwidth(x: &Matrix, tag: KernelTag) -> Result<BandwidthEstimate> {
    let n = x.rows();
    if n < 2 {
        return Err(invalid("median bandwidth needs at least two rows"));
    }
    let dist = |i: usize, j: usize| match tag {
        KernelTag::Rbf => sq_dist(x.row(i), x.row(j)).sqrt(),
        KernelTag::Laplacian | KernelTag::Linear => l1_dist(x.row(i), x.row(j)),
    };
    let total = n * (n - 1) / 2;
    let mut ds: Vec<f64> = if total <= MEDIAN_MAX_PAIRS {
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| dist(i, j))
            .collect()
    } else {
        let mut rng = RngState::seed_rng(0x6d65_6469_616e);
        (0..MEDIAN_MAX_PAIRS)
            .map(|_| {
                let i = rng.below(n);
                let mut j = rng.below(n - 1);
                if j >= i {
                    j += 1;
                }
                dist(i, j)
            })
            .collect()
    };
    ds.sort_by(f64::total_cmp);
    let m = ds.len();
    let median = if m % 2 == 1 {
        ds[m / 2]
    } else {
        0.5 * (ds[m / 2 - 1] + ds[m / 2])
    };
    Ok(if median > 0.0 {
        BandwidthEstimate {
            sigma: median,
            degenerate: false,
        }
    } else {
        BandwidthEstimate {
            sigma: 1.0,
            degenerate: true,
        }
    })
}
