//! Cross-node sketches and the end-to-end SRF pipeline `Z = 𝒮^(k)(ℰ(X))`.
//!
//! The additive Gaussian sketch is `(I + G/√N)·Φ` with `G_ij ~ N(0,1)`. Rows
//! of `Z` are produced one at a time: row `i` only needs row `i` of `G`, so
//! `G` is drawn, used and dropped without ever being materialized.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Result};
use crate::kernels::{fit_feature_map, median_bandwidth, FeatureMap, KernelKind, KernelTag};
use crate::matrix::{axpy, Matrix};
use crate::rng::{RngState, StreamId};
use crate::srm::{DiagonalLaw, StructuredRandomMatrix, DEFAULT_BLOCKS};

pub const DEFAULT_ORDER: usize = 4;
pub const DEFAULT_TOTAL_WIDTH: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SketchKind {
    DenseAg,
    SrmAg,
    Identity,
}

impl SketchKind {
    pub fn name(self) -> &'static str {
        match self {
            SketchKind::DenseAg => "dense_ag",
            SketchKind::SrmAg => "srm_ag",
            SketchKind::Identity => "identity",
        }
    }
}

impl std::str::FromStr for SketchKind {
    type Err = crate::SrfError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dense_ag" | "ag" => Ok(SketchKind::DenseAg),
            "srm_ag" | "srm" => Ok(SketchKind::SrmAg),
            "identity" | "id" => Ok(SketchKind::Identity),
            other => Err(invalid(format!("unknown sketch kind '{other}'"))),
        }
    }
}

/// Shared row loop for additive sketches: `z_i = φ_i + (1/√N) Σ_p w_p φ_p`,
/// where `fill_row(i, w)` writes the mixing weights for row `i`.
fn additive_rows(phi: &Matrix, mut fill_row: impl FnMut(usize, &mut [f64])) -> Matrix {
    let n = phi.rows();
    let scale = 1.0 / (n as f64).sqrt();
    let mut z = phi.clone();
    let mut weights = vec![0.0; n];
    for i in 0..n {
        fill_row(i, &mut weights);
        let zi = z.row_mut(i);
        for (p, &w) in weights.iter().enumerate() {
            if w != 0.0 {
                axpy(w * scale, phi.row(p), zi);
            }
        }
    }
    z
}

/// `(I + G/√N)·Φ` with a fresh Gaussian `G` drawn from `rng`.
pub fn apply_ag(phi: &Matrix, rng: &mut RngState) -> Matrix {
    additive_rows(phi, |_, w| rng.fill_gaussian(w))
}

/// `(I + G/√N)·Φ` for a caller-supplied `G`.
pub fn apply_ag_with(phi: &Matrix, g: &Matrix) -> Result<Matrix> {
    check_dim("apply_ag_with rows of G", phi.rows(), g.rows())?;
    check_dim("apply_ag_with cols of G", phi.rows(), g.cols())?;
    Ok(additive_rows(phi, |i, w| w.copy_from_slice(g.row(i))))
}

/// Concatenation of `k` independent additive Gaussian sketches. Block `m`
/// draws from `rng.split(m)`.
pub fn apply_korder(phi: &Matrix, k: usize, rng: &RngState) -> Result<Matrix> {
    korder_with(phi, k, rng, |phi, block_rng| Ok(apply_ag(phi, block_rng)))
}

fn korder_with(
    phi: &Matrix,
    k: usize,
    rng: &RngState,
    mut block: impl FnMut(&Matrix, &mut RngState) -> Result<Matrix>,
) -> Result<Matrix> {
    if k == 0 {
        return Err(invalid("sketch order k must be >= 1"));
    }
    let mut out: Option<Matrix> = None;
    for m in 0..k {
        let mut block_rng = rng.split(m as u64);
        let zb = block(phi, &mut block_rng)?;
        out = Some(match out {
            None => zb,
            Some(acc) => acc.hstack(&zb)?,
        });
    }
    Ok(out.expect("k >= 1"))
}

/// The SRM used by the fast sketch: three Hadamard blocks with a Gaussian
/// innermost diagonal.
pub fn sample_sketch_srm(rng: &mut RngState, n: usize) -> Result<StructuredRandomMatrix> {
    StructuredRandomMatrix::sample(rng, n, DEFAULT_BLOCKS, DiagonalLaw::GaussianFirst)
}

/// `(I + M/√N)·Φ` for a structured matrix `M`, column by column in
/// `O(N log N)` each.
pub fn apply_srm_ag_with(phi: &Matrix, srm: &StructuredRandomMatrix) -> Result<Matrix> {
    check_dim("apply_srm_ag", phi.rows(), srm.size())?;
    let mut z = srm.apply_columns(phi)?;
    let scale = 1.0 / (phi.rows() as f64).sqrt();
    for (zv, pv) in z.as_mut_slice().iter_mut().zip(phi.as_slice()) {
        *zv = pv + scale * *zv;
    }
    Ok(z)
}

pub fn apply_srm_ag(phi: &Matrix, rng: &mut RngState) -> Result<Matrix> {
    if phi.rows() == 0 {
        return Err(invalid("cannot sketch an empty node set"));
    }
    let srm = sample_sketch_srm(rng, phi.rows())?;
    apply_srm_ag_with(phi, &srm)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SketchOperator {
    pub kind: SketchKind,
    pub order: usize,
    pub seed: u64,
}

impl SketchOperator {
    pub fn new(kind: SketchKind, order: usize, seed: u64) -> Result<Self> {
        let op = Self { kind, order, seed };
        op.validate()?;
        Ok(op)
    }

    pub fn identity() -> Self {
        Self {
            kind: SketchKind::Identity,
            order: 1,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.order == 0 {
            return Err(invalid("sketch order k must be >= 1"));
        }
        if self.kind == SketchKind::Identity && self.order != 1 {
            return Err(invalid("identity sketch requires k = 1"));
        }
        Ok(())
    }

    pub fn output_width(&self, d: usize) -> usize {
        self.order * d
    }

    /// Sketch `Φ`, drawing block `m` from `rng.split(m)`.
    pub fn apply_with(&self, phi: &Matrix, rng: &RngState) -> Result<Matrix> {
        self.validate()?;
        match self.kind {
            SketchKind::Identity => Ok(phi.clone()),
            SketchKind::DenseAg => apply_korder(phi, self.order, rng),
            SketchKind::SrmAg => korder_with(phi, self.order, rng, apply_srm_ag),
        }
    }

    pub fn apply(&self, phi: &Matrix) -> Result<Matrix> {
        self.apply_with(phi, &RngState::seed_rng(self.seed))
    }

    pub fn block_streams(&self, rng: &RngState) -> Vec<StreamId> {
        match self.kind {
            SketchKind::Identity => Vec::new(),
            _ => (0..self.order).map(|m| rng.split(m as u64).id()).collect(),
        }
    }
}

/// Bandwidth as configured: the median heuristic or a fixed value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Bandwidth {
    Fixed(f64),
    Named(BandwidthRule),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthRule {
    Median,
}

impl Default for Bandwidth {
    fn default() -> Self {
        Bandwidth::Named(BandwidthRule::Median)
    }
}

/// Kernel and sketch settings for one SRF variant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SrfConfig {
    pub kernel: KernelTag,
    /// Kernel feature dimension `D`; the embedding width is `order·D`.
    pub dim: usize,
    #[serde(default)]
    pub bandwidth: Bandwidth,
    pub sketch: SketchKind,
    pub order: usize,
}

impl SrfConfig {
    pub fn width(&self) -> usize {
        self.dim * self.order
    }
}

/// Sketched embedding of one graph together with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SrfEmbedding {
    pub graph_id: String,
    pub z: Matrix,
    pub kernel: KernelKind,
    pub sketch: SketchOperator,
    pub feature_map_stream: Option<StreamId>,
    pub block_streams: Vec<StreamId>,
}

impl SrfEmbedding {
    pub fn width(&self) -> usize {
        self.z.cols()
    }
}

/// Featureless graphs (`F = 0`) get a constant feature of 1 per node.
pub fn effective_features(x: &Matrix) -> std::borrow::Cow<'_, Matrix> {
    if x.cols() == 0 {
        std::borrow::Cow::Owned(Matrix::filled(x.rows(), 1, 1.0))
    } else {
        std::borrow::Cow::Borrowed(x)
    }
}

pub fn effective_dim(f: usize) -> usize {
    f.max(1)
}

/// `Z = 𝒮^(k)(ℰ(X))` for a single graph.
pub fn srf(
    x: &Matrix,
    map: &FeatureMap,
    op: &SketchOperator,
    rng: &RngState,
    graph_id: &str,
) -> Result<SrfEmbedding> {
    if x.rows() == 0 {
        return Err(invalid(format!("graph '{graph_id}' has no nodes")));
    }
    let x = effective_features(x);
    let phi = map.embed(&x)?;
    let z = op.apply_with(&phi, rng)?;
    Ok(SrfEmbedding {
        graph_id: graph_id.to_string(),
        z,
        kernel: map.kind,
        sketch: *op,
        feature_map_stream: map.stream,
        block_streams: op.block_streams(rng),
    })
}

/// A feature map fitted once for a collection of graphs plus the sketch
/// applied to each of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SrfPipeline {
    pub config: SrfConfig,
    pub map: FeatureMap,
    pub op: SketchOperator,
    pub bandwidth_degenerate: bool,
}

impl SrfPipeline {
    /// Fits the feature map on the pooled rows of `features`. The map draws
    /// from `rng.split_named("feature-map")`; per-graph sketches are seeded
    /// by [`SrfPipeline::embed`].
    pub fn fit(config: SrfConfig, features: &[&Matrix], rng: &RngState) -> Result<Self> {
        let f = features.first().map_or(0, |x| x.cols());
        for x in features {
            check_dim("SrfPipeline::fit feature width", f, x.cols())?;
        }
        let f_eff = effective_dim(f);
        let (bandwidth, degenerate) = match (config.kernel, config.bandwidth) {
            (KernelTag::Linear, _) => (1.0, false),
            (_, Bandwidth::Fixed(s)) => (s, false),
            (tag, Bandwidth::Named(BandwidthRule::Median)) => {
                let pooled = pool_rows(features, f_eff);
                if pooled.rows() < 2 {
                    (1.0, true)
                } else {
                    let est = median_bandwidth(&pooled, tag)?;
                    (est.sigma, est.degenerate)
                }
            }
        };
        let kind = KernelKind::new(config.kernel, bandwidth)?;
        let map = fit_feature_map(&mut rng.split_named("feature-map"), kind, f_eff, config.dim)?;
        let op = SketchOperator::new(config.sketch, config.order, rng.split_named("sketch").seed())?;
        Ok(Self {
            config,
            map,
            op,
            bandwidth_degenerate: degenerate,
        })
    }

    /// Replace the fitted map, e.g. with [`FeatureMap::identity_projection`].
    pub fn with_map(config: SrfConfig, map: FeatureMap, op: SketchOperator) -> Self {
        Self {
            config,
            map,
            op,
            bandwidth_degenerate: false,
        }
    }

    pub fn width(&self) -> usize {
        self.op.output_width(self.map.output_dim)
    }

    /// Sketch graph number `index`, drawing from `rng.split_named("sketch").split(index)`.
    pub fn embed(&self, x: &Matrix, graph_id: &str, index: u64, rng: &RngState) -> Result<SrfEmbedding> {
        let stream = rng.split_named("sketch").split(index);
        srf(x, &self.map, &self.op, &stream, graph_id)
    }
}

// Row-stack up to ~2000 rows from the feature matrices for the bandwidth
// heuristic; featureless graphs contribute constant rows.
fn pool_rows(features: &[&Matrix], f_eff: usize) -> Matrix {
    const CAP: usize = 2000;
    let total: usize = features.iter().map(|x| x.rows()).sum();
    let stride = total.div_ceil(CAP).max(1);
    let mut rows = Vec::new();
    let mut k = 0usize;
    for x in features {
        let x = effective_features(x);
        debug_assert_eq!(x.cols(), f_eff);
        for r in x.row_iter() {
            if k % stride == 0 {
                rows.push(r.to_vec());
            }
            k += 1;
        }
    }
    Matrix::from_rows(&rows).unwrap_or_else(|_| Matrix::zeros(0, f_eff))
}
