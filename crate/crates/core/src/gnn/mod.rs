//! GIN-style message passing with per-layer concatenation of sketched
//! features, hand-written reverse mode, and Dirichlet energy.

mod train;

pub use train::{
    accuracy, load_checkpoint, save_checkpoint, train, Checkpoint, EpochRecord, TrainReport,
    CHECKPOINT_VERSION,
};

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Result};
use crate::graph::Graph;
use crate::matrix::{gemm, sq_dist, Matrix};
use crate::rng::RngState;
use crate::sketch::{effective_dim, effective_features};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Readout {
    /// Sum over nodes, then the linear head.
    SumPoolGraph,
    /// Node 0 only.
    RootNode,
    /// Every labeled node.
    PerNode,
}

/// How neighbor states are combined before the perceptron.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// `h̃_i + Σ_j h̃_j`.
    #[default]
    Sum,
    /// `(h̃_i + Σ_j h̃_j) / (deg(i) + 1)`.
    Mean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GnnConfig {
    pub layers: usize,
    pub hidden: usize,
    /// Width of the injected embedding; 0 runs the plain backbone.
    pub srf_width: usize,
    pub readout: Readout,
    pub aggregation: Aggregation,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
    /// Stop once training accuracy reaches this value.
    pub stop_at_train_acc: Option<f64>,
}

impl Default for GnnConfig {
    fn default() -> Self {
        Self {
            layers: 4,
            hidden: 32,
            srf_width: 0,
            readout: Readout::SumPoolGraph,
            aggregation: Aggregation::Sum,
            epochs: 100,
            batch_size: 32,
            lr: 1e-3,
            seed: 0,
            stop_at_train_acc: None,
        }
    }
}

impl GnnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 || self.hidden == 0 {
            return Err(invalid("layers and hidden width must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(invalid("batch size must be at least 1"));
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(invalid(format!("learning rate must be finite and >= 0, got {}", self.lr)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub w1: Matrix,
    pub b1: Vec<f64>,
    pub w2: Matrix,
    pub b2: Vec<f64>,
}

/// All trainable arrays. Gradients and optimizer moments share this shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub layers: Vec<Layer>,
    pub w_out: Matrix,
    pub b_out: Vec<f64>,
}

impl Params {
    pub fn zeros_like(&self) -> Params {
        let z = |m: &Matrix| Matrix::zeros(m.rows(), m.cols());
        Params {
            layers: self
                .layers
                .iter()
                .map(|l| Layer {
                    w1: z(&l.w1),
                    b1: vec![0.0; l.b1.len()],
                    w2: z(&l.w2),
                    b2: vec![0.0; l.b2.len()],
                })
                .collect(),
            w_out: z(&self.w_out),
            b_out: vec![0.0; self.b_out.len()],
        }
    }

    /// Arrays in a fixed order: per layer `w1, b1, w2, b2`, then `w_out, b_out`.
    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::with_capacity(4 * self.layers.len() + 2);
        for l in &self.layers {
            out.extend([l.w1.as_slice(), &l.b1, l.w2.as_slice(), &l.b2]);
        }
        out.extend([self.w_out.as_slice(), &self.b_out[..]]);
        out
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::with_capacity(4 * self.layers.len() + 2);
        for l in &mut self.layers {
            out.push(l.w1.as_mut_slice());
            out.push(&mut l.b1);
            out.push(l.w2.as_mut_slice());
            out.push(&mut l.b2);
        }
        out.push(self.w_out.as_mut_slice());
        out.push(&mut self.b_out);
        out
    }

    pub fn len(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.slices().concat()
    }

    pub fn scale(&mut self, alpha: f64) {
        for s in self.slices_mut() {
            s.iter_mut().for_each(|v| *v *= alpha);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GnnModel {
    pub config: GnnConfig,
    /// Feature width seen by layer 0 (a featureless graph counts as width 1).
    pub input_dim: usize,
    pub num_classes: usize,
    pub params: Params,
}

fn glorot(rng: &mut RngState, fan_in: usize, fan_out: usize) -> Matrix {
    let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let mut m = Matrix::zeros(fan_in, fan_out);
    m.as_mut_slice()
        .iter_mut()
        .for_each(|v| *v = rng.uniform_range(-a, a));
    m
}

/// Glorot-uniform weights, zero biases. `feature_dim` is the raw `F`; a
/// featureless dataset is fed a constant column of ones.
pub fn init_model(cfg: &GnnConfig, feature_dim: usize, num_classes: usize, rng: &mut RngState) -> Result<GnnModel> {
    cfg.validate()?;
    if num_classes == 0 {
        return Err(invalid("num_classes must be at least 1"));
    }
    let input_dim = effective_dim(feature_dim);
    let h = cfg.hidden;
    let layers = (0..cfg.layers)
        .map(|l| {
            let fan_in = if l == 0 { input_dim } else { h } + cfg.srf_width;
            Layer {
                w1: glorot(rng, fan_in, h),
                b1: vec![0.0; h],
                w2: glorot(rng, h, h),
                b2: vec![0.0; h],
            }
        })
        .collect();
    let w_out = glorot(rng, h, num_classes);
    Ok(GnnModel {
        config: cfg.clone(),
        input_dim,
        num_classes,
        params: Params {
            layers,
            w_out,
            b_out: vec![0.0; num_classes],
        },
    })
}

impl GnnModel {
    pub fn layer_input_width(&self, layer: usize) -> usize {
        self.params.layers[layer].w1.rows()
    }
}

struct LayerCache {
    /// Nodes whose output is computed at this layer.
    rows: Vec<usize>,
    /// Aggregated inputs and pre-activations, one row per entry of `rows`.
    u: Matrix,
    a: Matrix,
}

/// Hidden states `H^(0..=L)` (without the injected columns) and logits.
pub struct ForwardPass {
    /// With a pruned pass, rows outside the readout's receptive field are zero.
    pub hidden: Vec<Matrix>,
    /// One row for pooled/root readouts, one row per node for `PerNode`.
    pub logits: Matrix,
    pooled: Matrix,
    caches: Vec<LayerCache>,
}

/// `Â x` restricted to `rows`, where `Â` is `I + A` (sum) or its
/// row-normalized form (mean).
fn aggregate_rows(g: &Graph, agg: Aggregation, x: &Matrix, rows: &[usize]) -> Matrix {
    let mut out = x.gather_rows(rows);
    for (k, &i) in rows.iter().enumerate() {
        let row = out.row_mut(k);
        for &j in g.neighbors(i) {
            for (o, v) in row.iter_mut().zip(x.row(j)) {
                *o += v;
            }
        }
        if agg == Aggregation::Mean {
            let s = 1.0 / (g.degree(i) + 1) as f64;
            row.iter_mut().for_each(|v| *v *= s);
        }
    }
    out
}

/// Transpose of [`aggregate_rows`]: scatters `dy` (one row per entry of
/// `rows`) back onto all `n` nodes.
fn aggregate_rows_transpose(g: &Graph, agg: Aggregation, dy: &Matrix, rows: &[usize], width: usize) -> Matrix {
    let mut out = Matrix::zeros(g.node_count(), width);
    for (k, &i) in rows.iter().enumerate() {
        let s = match agg {
            Aggregation::Sum => 1.0,
            Aggregation::Mean => 1.0 / (g.degree(i) + 1) as f64,
        };
        let src = &dy.row(k)[..width];
        for j in std::iter::once(i).chain(g.neighbors(i).iter().copied()) {
            for (o, v) in out.row_mut(j).iter_mut().zip(src) {
                *o += s * v;
            }
        }
    }
    out
}

fn affine(x: &Matrix, w: &Matrix, b: &[f64]) -> Matrix {
    let mut out = Matrix::zeros(x.rows(), w.cols());
    for i in 0..x.rows() {
        out.row_mut(i).copy_from_slice(b);
    }
    gemm(1.0, x, false, w, false, 1.0, &mut out);
    out
}

fn relu(a: &Matrix) -> Matrix {
    let mut r = a.clone();
    r.as_mut_slice().iter_mut().for_each(|v| *v = v.max(0.0));
    r
}

fn add_column_sums(m: &Matrix, acc: &mut [f64]) {
    for row in m.row_iter() {
        for (a, v) in acc.iter_mut().zip(row) {
            *a += v;
        }
    }
}

/// Nodes each layer must compute. Only a root readout prunes: layer `l`
/// of `L` then needs the ball of radius `L − 1 − l` around node 0.
fn active_rows(g: &Graph, layers: usize, readout: Readout, prune: bool) -> Vec<Vec<usize>> {
    let n = g.node_count();
    if !(prune && readout == Readout::RootNode) || n == 0 {
        return vec![(0..n).collect(); layers];
    }
    let mut dist = vec![usize::MAX; n];
    dist[0] = 0;
    let mut queue = std::collections::VecDeque::from([0usize]);
    while let Some(u) = queue.pop_front() {
        if dist[u] + 1 >= layers {
            continue;
        }
        for &v in g.neighbors(u) {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    (0..layers)
        .map(|l| (0..n).filter(|&i| dist[i] < layers - l).collect())
        .collect()
}

/// Full forward pass: every layer computes every node.
pub fn forward(model: &GnnModel, g: &Graph, z: Option<&Matrix>) -> Result<ForwardPass> {
    run_forward(model, g, z, false)
}

fn run_forward(model: &GnnModel, g: &Graph, z: Option<&Matrix>, prune: bool) -> Result<ForwardPass> {
    let cfg = &model.config;
    let n = g.node_count();
    let x = effective_features(g.features());
    check_dim("GNN input features", model.input_dim, x.cols())?;
    match z {
        Some(z) => {
            check_dim("embedding rows", n, z.rows())?;
            check_dim("embedding width", cfg.srf_width, z.cols())?;
        }
        None if cfg.srf_width > 0 => {
            return Err(invalid(format!(
                "model expects a width-{} embedding but none was given",
                cfg.srf_width
            )))
        }
        None => {}
    }
    if cfg.readout == Readout::RootNode && n == 0 {
        return Err(invalid(format!("graph '{}' has no root node", g.id)));
    }

    let mut hidden = Vec::with_capacity(cfg.layers + 1);
    hidden.push(x.into_owned());
    let mut caches = Vec::with_capacity(cfg.layers);
    for (layer, rows) in model
        .params
        .layers
        .iter()
        .zip(active_rows(g, cfg.layers, cfg.readout, prune))
    {
        let h = hidden.last().expect("non-empty");
        let tilde = match z {
            Some(z) => h.hstack(z)?,
            None => h.clone(),
        };
        let u = aggregate_rows(g, cfg.aggregation, &tilde, &rows);
        let a = affine(&u, &layer.w1, &layer.b1);
        let out = affine(&relu(&a), &layer.w2, &layer.b2);
        let next = if rows.len() == n {
            out
        } else {
            let mut full = Matrix::zeros(n, cfg.hidden);
            for (k, &i) in rows.iter().enumerate() {
                full.row_mut(i).copy_from_slice(out.row(k));
            }
            full
        };
        caches.push(LayerCache { rows, u, a });
        hidden.push(next);
    }

    let last = hidden.last().expect("non-empty");
    let pooled = match cfg.readout {
        Readout::SumPoolGraph => {
            let mut s = vec![0.0; cfg.hidden];
            add_column_sums(last, &mut s);
            Matrix::from_vec(1, cfg.hidden, s)?
        }
        Readout::RootNode => Matrix::from_vec(1, cfg.hidden, last.row(0).to_vec())?,
        Readout::PerNode => last.clone(),
    };
    let logits = affine(&pooled, &model.params.w_out, &model.params.b_out);
    Ok(ForwardPass {
        hidden,
        logits,
        pooled,
        caches,
    })
}

/// Accumulates `∂loss/∂θ` into `grads` given `∂loss/∂logits`.
pub fn backward(
    model: &GnnModel,
    g: &Graph,
    pass: &ForwardPass,
    dlogits: &Matrix,
    grads: &mut Params,
) -> Result<()> {
    let cfg = &model.config;
    let p = &model.params;
    check_dim("logit gradient rows", pass.logits.rows(), dlogits.rows())?;
    gemm(1.0, &pass.pooled, true, dlogits, false, 1.0, &mut grads.w_out);
    add_column_sums(dlogits, &mut grads.b_out);
    let mut dpooled = Matrix::zeros(pass.pooled.rows(), cfg.hidden);
    gemm(1.0, dlogits, false, &p.w_out, true, 0.0, &mut dpooled);

    let n = g.node_count();
    let mut dh = match cfg.readout {
        Readout::SumPoolGraph => {
            let mut m = Matrix::zeros(n, cfg.hidden);
            for i in 0..n {
                m.row_mut(i).copy_from_slice(dpooled.row(0));
            }
            m
        }
        Readout::RootNode => {
            let mut m = Matrix::zeros(n, cfg.hidden);
            m.row_mut(0).copy_from_slice(dpooled.row(0));
            m
        }
        Readout::PerNode => dpooled,
    };

    for l in (0..cfg.layers).rev() {
        let layer = &p.layers[l];
        let cache = &pass.caches[l];
        let gl = &mut grads.layers[l];
        let dout = if cache.rows.len() == n {
            dh
        } else {
            dh.gather_rows(&cache.rows)
        };
        let r = relu(&cache.a);
        gemm(1.0, &r, true, &dout, false, 1.0, &mut gl.w2);
        add_column_sums(&dout, &mut gl.b2);
        let mut da = Matrix::zeros(cache.rows.len(), cfg.hidden);
        gemm(1.0, &dout, false, &layer.w2, true, 0.0, &mut da);
        for (d, &a) in da.as_mut_slice().iter_mut().zip(cache.a.as_slice()) {
            if a <= 0.0 {
                *d = 0.0;
            }
        }
        gemm(1.0, &cache.u, true, &da, false, 1.0, &mut gl.w1);
        add_column_sums(&da, &mut gl.b1);
        if l == 0 {
            break;
        }
        let mut du = Matrix::zeros(cache.rows.len(), layer.w1.rows());
        gemm(1.0, &da, false, &layer.w1, true, 0.0, &mut du);
        dh = aggregate_rows_transpose(g, cfg.aggregation, &du, &cache.rows, pass.hidden[l].cols());
    }
    Ok(())
}

/// `(logit row, class)` pairs supervised for `g` under `readout`.
pub fn targets(readout: Readout, g: &Graph) -> Result<Vec<(usize, usize)>> {
    match readout {
        Readout::SumPoolGraph => g
            .graph_label
            .map(|y| vec![(0, y)])
            .ok_or_else(|| invalid(format!("graph '{}' has no graph label", g.id))),
        Readout::RootNode => match g.node_labels.as_ref().and_then(|l| l.first()) {
            Some(&y) if y >= 0 => Ok(vec![(0, y as usize)]),
            _ => Err(invalid(format!("graph '{}' has no root label", g.id))),
        },
        Readout::PerNode => Ok(g.labeled_nodes()),
    }
}

/// Lowest index wins ties.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

fn log_softmax(row: &[f64]) -> Vec<f64> {
    let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + row.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
    row.iter().map(|v| v - lse).collect()
}

pub struct Sample<'a> {
    pub graph: &'a Graph,
    pub z: Option<&'a Matrix>,
}

/// Summed cross-entropy, correct count and target count over `batch`,
/// without gradients.
pub fn evaluate(model: &GnnModel, batch: &[Sample<'_>]) -> Result<(f64, usize, usize)> {
    let (mut loss, mut correct, mut count) = (0.0, 0, 0);
    for s in batch {
        let pass = run_forward(model, s.graph, s.z, true)?;
        for (row, y) in targets(model.config.readout, s.graph)? {
            check_class(model, y)?;
            let logits = pass.logits.row(row);
            loss -= log_softmax(logits)[y];
            correct += usize::from(argmax(logits) == y);
            count += 1;
        }
    }
    Ok((loss, correct, count))
}

fn check_class(model: &GnnModel, y: usize) -> Result<()> {
    if y >= model.num_classes {
        return Err(invalid(format!("label {y} outside [0, {})", model.num_classes)));
    }
    Ok(())
}

/// Mean cross-entropy over every supervised target in `batch` and its exact
/// gradient.
pub fn loss_and_grad(model: &GnnModel, batch: &[Sample<'_>]) -> Result<(f64, Params)> {
    if batch.is_empty() {
        return Err(invalid("empty batch"));
    }
    let mut per_sample = Vec::with_capacity(batch.len());
    let mut count = 0usize;
    for s in batch {
        let t = targets(model.config.readout, s.graph)?;
        count += t.len();
        per_sample.push(t);
    }
    let mut grads = model.params.zeros_like();
    if count == 0 {
        return Ok((0.0, grads));
    }
    let inv = 1.0 / count as f64;
    let mut loss = 0.0;
    for (s, t) in batch.iter().zip(&per_sample) {
        if t.is_empty() {
            continue;
        }
        let pass = run_forward(model, s.graph, s.z, true)?;
        let mut dlogits = Matrix::zeros(pass.logits.rows(), model.num_classes);
        for &(row, y) in t {
            check_class(model, y)?;
            let lp = log_softmax(pass.logits.row(row));
            loss -= lp[y] * inv;
            let d = dlogits.row_mut(row);
            for (c, (dv, l)) in d.iter_mut().zip(&lp).enumerate() {
                *dv += (l.exp() - f64::from(u8::from(c == y))) * inv;
            }
        }
        backward(model, s.graph, &pass, &dlogits, &mut grads)?;
    }
    Ok((loss, grads))
}

/// `(1/N) Σ_i Σ_{j∈N(i)} ‖h_i − h_j‖²`; every undirected edge is counted
/// from both ends.
pub fn dirichlet_energy(h: &Matrix, g: &Graph) -> Result<f64> {
    let n = g.node_count();
    check_dim("Dirichlet energy rows", n, h.rows())?;
    if n == 0 {
        return Ok(0.0);
    }
    let total: f64 = g
        .edges()
        .iter()
        .map(|&(i, j)| 2.0 * sq_dist(h.row(i), h.row(j)))
        .sum();
    Ok(total / n as f64)
}
