//! Desk-scale synthetic benchmarks: CSL expressiveness, Tree-NeighborsMatch
//! oversquashing and Dirichlet-energy oversmoothing.

use serde::{Deserialize, Serialize};

use super::{config_hash, mean_std, par_map, Check};
use crate::error::{invalid, Result};
use crate::gnn::{dirichlet_energy, forward, init_model, train, Aggregation, GnnConfig, Readout, TrainReport};
use crate::graph::{gen_csl, gen_random_graph, gen_tree_neighbors_match, CslConfig, Dataset, FeatureMode, TreeConfig};
use crate::kernels::KernelTag;
use crate::matrix::Matrix;
use crate::rng::RngState;
use crate::sketch::{Bandwidth, SketchKind, SrfConfig, SrfPipeline, DEFAULT_ORDER, DEFAULT_TOTAL_WIDTH};

/// A model variant: the plain backbone (`srf = None`) or one embedding setup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variant {
    pub name: String,
    #[serde(default)]
    pub srf: Option<SrfConfig>,
}

impl Variant {
    pub fn baseline() -> Self {
        Self {
            name: "baseline".into(),
            srf: None,
        }
    }

    /// Laplacian random features without cross-node mixing.
    pub fn ablation(width: usize) -> Self {
        Self {
            name: "ablation-laplacian-id".into(),
            srf: Some(SrfConfig {
                kernel: KernelTag::Laplacian,
                dim: width,
                bandwidth: Bandwidth::default(),
                sketch: SketchKind::Identity,
                order: 1,
            }),
        }
    }

    /// `order` blocks of width `width / order` each.
    pub fn srf(kernel: KernelTag, sketch: SketchKind, order: usize, width: usize) -> Self {
        Self {
            name: format!("srf-{}-{}{}", kernel.name(), sketch.name(), order),
            srf: Some(SrfConfig {
                kernel,
                dim: (width / order).max(1),
                bandwidth: Bandwidth::default(),
                sketch,
                order,
            }),
        }
    }

    /// True for cross-node sketches, false for the baseline and the ablation.
    pub fn is_sketched(&self) -> bool {
        self.srf.is_some_and(|c| c.sketch != SketchKind::Identity)
    }

    pub fn kernel_name(&self) -> &'static str {
        self.srf.map_or("none", |c| c.kernel.name())
    }

    pub fn order(&self) -> usize {
        self.srf.map_or(0, |c| c.order)
    }

    pub fn width(&self) -> usize {
        self.srf.map_or(0, |c| c.width())
    }
}

/// Baseline, ablation, and first- and eighth-order dense sketches for each kernel.
pub fn table_variants(width: usize) -> Vec<Variant> {
    let mut v = vec![Variant::baseline(), Variant::ablation(width)];
    for order in [1, 8] {
        for kernel in KernelTag::ALL {
            v.push(Variant::srf(kernel, SketchKind::DenseAg, order, width));
        }
    }
    v
}

/// Baseline, ablation and one `order`-th order sketch per kernel.
pub fn figure_variants(order: usize, width: usize) -> Vec<Variant> {
    let mut v = vec![Variant::baseline(), Variant::ablation(width)];
    for kernel in KernelTag::ALL {
        v.push(Variant::srf(kernel, SketchKind::DenseAg, order, width));
    }
    v
}

/// One feature map for the whole dataset; graph `i` is sketched from its own
/// split stream.
pub fn embed_dataset(ds: &Dataset, cfg: SrfConfig, rng: &RngState) -> Result<Vec<Matrix>> {
    let feats: Vec<&Matrix> = ds.graphs.iter().map(|g| g.features()).collect();
    let pipeline = SrfPipeline::fit(cfg, &feats, rng)?;
    ds.graphs
        .iter()
        .enumerate()
        .map(|(i, g)| Ok(pipeline.embed(g.features(), &g.id, i as u64, rng)?.z))
        .collect()
}

/// Progress sink shared by worker threads.
pub type Log<'a> = &'a (dyn Fn(&str) + Sync);

/// Everything derives from `seed`: the feature-map and sketch streams for
/// embeddings, `"init"` for weights and `"shuffle"` for batches.
pub fn train_variant(ds: &Dataset, variant: &Variant, gnn: &GnnConfig, seed: u64) -> Result<TrainReport> {
    let root = RngState::seed_rng(seed);
    let zs = variant.srf.map(|c| embed_dataset(ds, c, &root)).transpose()?;
    let cfg = GnnConfig {
        srf_width: variant.width(),
        seed,
        ..gnn.clone()
    };
    let mut model = init_model(&cfg, ds.feature_dim(), ds.num_classes, &mut root.split_named("init"))?;
    train(&mut model, ds, zs.as_deref())
}

trait Named {
    fn variant(&self) -> &str;
}

impl Named for ExpressivenessRow {
    fn variant(&self) -> &str {
        &self.variant
    }
}

impl Named for OversquashRow {
    fn variant(&self) -> &str {
        &self.variant
    }
}

fn variant_means<R: Named>(
    rows: &[R],
    variant: &str,
    filter: impl Fn(&R) -> bool,
    value: impl Fn(&R) -> f64,
) -> Option<(f64, f64)> {
    let vals: Vec<f64> = rows
        .iter()
        .filter(|r| r.variant() == variant && filter(r))
        .map(value)
        .collect();
    (!vals.is_empty()).then(|| mean_std(&vals))
}

// ---------------------------------------------------------------- CSL

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExpressivenessConfig {
    pub seeds: Vec<u64>,
    pub csl: CslConfig,
    pub gnn: GnnConfig,
    pub variants: Vec<Variant>,
}

impl Default for ExpressivenessConfig {
    fn default() -> Self {
        Self {
            seeds: (0..5).collect(),
            csl: CslConfig::default(),
            gnn: GnnConfig {
                layers: 4,
                hidden: 32,
                readout: Readout::SumPoolGraph,
                aggregation: Aggregation::Sum,
                epochs: 300,
                batch_size: 16,
                lr: 1e-3,
                ..GnnConfig::default()
            },
            variants: table_variants(DEFAULT_TOTAL_WIDTH),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpressivenessRow {
    pub variant: String,
    pub kernel: String,
    pub k: usize,
    pub seed: u64,
    /// Test accuracy at the best epoch.
    pub accuracy: f64,
    pub train_accuracy: f64,
    pub best_epoch: usize,
    pub config_hash: String,
    pub version: String,
}

pub fn run_expressiveness(cfg: &ExpressivenessConfig, threads: usize, log: Log<'_>) -> Result<Vec<ExpressivenessRow>> {
    let hash = config_hash(cfg);
    let data: Vec<Dataset> = cfg
        .seeds
        .iter()
        .map(|&seed| gen_csl(&cfg.csl, &mut RngState::seed_rng(seed).split_named("dataset")))
        .collect::<Result<_>>()?;
    let jobs: Vec<(usize, &Variant)> = (0..cfg.seeds.len())
        .flat_map(|s| cfg.variants.iter().map(move |v| (s, v)))
        .collect();
    par_map(&jobs, threads, |&(s, v)| {
        let seed = cfg.seeds[s];
        let report = train_variant(&data[s], v, &cfg.gnn, seed)?;
        let row = ExpressivenessRow {
            variant: v.name.clone(),
            kernel: v.kernel_name().into(),
            k: v.order(),
            seed,
            accuracy: report.best_test_acc.unwrap_or(0.0),
            train_accuracy: report.best_train_acc,
            best_epoch: report.best_epoch,
            config_hash: hash.clone(),
            version: crate::VERSION.into(),
        };
        log(&format!("expressiveness {} seed {seed}: test {:.3} train {:.3}", v.name, row.accuracy, row.train_accuracy));
        Ok(row)
    })
    .into_iter()
    .collect()
}

/// Plain backbone and ablation at or below `chance_bound`; every sketched
/// variant at or above `srf_bound` (means over seeds).
pub fn assess_expressiveness(cfg: &ExpressivenessConfig, rows: &[ExpressivenessRow], chance_bound: f64, srf_bound: f64) -> Vec<Check> {
    cfg.variants
        .iter()
        .filter_map(|v| {
            let (mean, _) = variant_means(rows, &v.name, |_| true, |r| r.accuracy)?;
            Some(if v.is_sketched() {
                Check::at_least(&format!("{}_accuracy", v.name), mean, srf_bound)
            } else {
                Check::at_most(&format!("{}_accuracy", v.name), mean, chance_bound)
            })
        })
        .collect()
}

// ---------------------------------------------------------------- trees

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccuracyMetric {
    /// Best training accuracy: can the model fit the task at all.
    Train,
    /// Test accuracy at the best epoch.
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OversquashConfig {
    pub depths: Vec<usize>,
    pub train: usize,
    pub test: usize,
    pub seeds: Vec<u64>,
    /// `layers` is replaced by `depth + 1` for every tree depth.
    pub gnn: GnnConfig,
    pub variants: Vec<Variant>,
    pub metric: AccuracyMetric,
}

impl Default for OversquashConfig {
    fn default() -> Self {
        Self {
            depths: vec![2, 3, 4, 5, 6],
            train: 4_000,
            test: 500,
            seeds: vec![0, 1, 2],
            gnn: GnnConfig {
                hidden: 32,
                readout: Readout::RootNode,
                aggregation: Aggregation::Sum,
                epochs: 60,
                batch_size: 64,
                lr: 1e-3,
                stop_at_train_acc: Some(1.0),
                ..GnnConfig::default()
            },
            variants: figure_variants(DEFAULT_ORDER, DEFAULT_TOTAL_WIDTH),
            metric: AccuracyMetric::Train,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OversquashRow {
    pub variant: String,
    pub r: usize,
    pub seed: u64,
    /// Per the configured metric.
    pub accuracy: f64,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub epochs: usize,
    pub config_hash: String,
    pub version: String,
}

pub fn run_oversquashing(cfg: &OversquashConfig, threads: usize, log: Log<'_>) -> Result<Vec<OversquashRow>> {
    if let Some(r) = cfg.depths.iter().find(|r| !(2..=8).contains(*r)) {
        return Err(invalid(format!("tree depth {r} outside [2, 8]")));
    }
    let hash = config_hash(cfg);
    let mut data = Vec::new();
    for &r in &cfg.depths {
        for &seed in &cfg.seeds {
            let tree = TreeConfig {
                depth: r,
                train: cfg.train,
                test: cfg.test,
            };
            data.push((r, seed, gen_tree_neighbors_match(tree, &mut RngState::seed_rng(seed).split_named("dataset"))?));
        }
    }
    let jobs: Vec<(usize, &Variant)> = (0..data.len())
        .flat_map(|d| cfg.variants.iter().map(move |v| (d, v)))
        .collect();
    par_map(&jobs, threads, |&(d, v)| {
        let (r, seed, ref ds) = data[d];
        let gnn = GnnConfig {
            layers: r + 1,
            ..cfg.gnn.clone()
        };
        let report = train_variant(ds, v, &gnn, seed)?;
        let test = report.best_test_acc.unwrap_or(0.0);
        let row = OversquashRow {
            variant: v.name.clone(),
            r,
            seed,
            accuracy: match cfg.metric {
                AccuracyMetric::Train => report.best_train_acc,
                AccuracyMetric::Test => test,
            },
            train_accuracy: report.best_train_acc,
            test_accuracy: test,
            epochs: report.history.len(),
            config_hash: hash.clone(),
            version: crate::VERSION.into(),
        };
        log(&format!(
            "oversquash r={r} {} seed {seed}: train {:.3} test {:.3} ({} epochs)",
            v.name, row.train_accuracy, row.test_accuracy, row.epochs
        ));
        Ok(row)
    })
    .into_iter()
    .collect()
}

/// Every variant at least `fit_bound` for depths in `easy`; every sketched
/// variant at least `margin` above the baseline for depths in `hard`.
pub fn assess_oversquashing(
    cfg: &OversquashConfig,
    rows: &[OversquashRow],
    easy: &[usize],
    fit_bound: f64,
    hard: &[usize],
    margin: f64,
) -> Vec<Check> {
    let mean = |name: &str, r: usize| variant_means(rows, name, |row| row.r == r, |row| row.accuracy);
    let mut checks = Vec::new();
    for &r in easy.iter().filter(|r| cfg.depths.contains(r)) {
        for v in &cfg.variants {
            if let Some((m, _)) = mean(&v.name, r) {
                checks.push(Check::at_least(&format!("{}_r{r}", v.name), m, fit_bound));
            }
        }
    }
    for &r in hard.iter().filter(|r| cfg.depths.contains(r)) {
        let Some((base, _)) = mean("baseline", r) else { continue };
        for v in cfg.variants.iter().filter(|v| v.is_sketched()) {
            if let Some((m, _)) = mean(&v.name, r) {
                checks.push(Check::at_least(&format!("{}_minus_baseline_r{r}", v.name), m - base, margin));
            }
        }
    }
    checks
}

// ---------------------------------------------------------------- energy

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OversmoothConfig {
    pub nodes: usize,
    pub edge_prob: f64,
    pub features: usize,
    pub depth: usize,
    pub hidden: usize,
    pub aggregation: Aggregation,
    pub seeds: Vec<u64>,
    pub variants: Vec<Variant>,
}

impl Default for OversmoothConfig {
    fn default() -> Self {
        let mut variants = figure_variants(DEFAULT_ORDER, DEFAULT_TOTAL_WIDTH);
        for k in [1, 2, 8] {
            variants.push(Variant::srf(KernelTag::Laplacian, SketchKind::DenseAg, k, DEFAULT_TOTAL_WIDTH));
        }
        Self {
            nodes: 200,
            edge_prob: 0.05,
            features: 16,
            depth: 32,
            hidden: 32,
            aggregation: Aggregation::Mean,
            seeds: (0..5).collect(),
            variants,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OversmoothRow {
    pub variant: String,
    pub k: usize,
    pub layer: usize,
    pub seed: u64,
    pub energy: f64,
    pub config_hash: String,
    pub version: String,
}

/// Untrained models; one `G(n, p)` graph with Gaussian features per seed.
pub fn run_oversmoothing(cfg: &OversmoothConfig, threads: usize, log: Log<'_>) -> Result<Vec<OversmoothRow>> {
    if cfg.depth < 8 {
        return Err(invalid(format!("oversmoothing depth must be >= 8, got {}", cfg.depth)));
    }
    let hash = config_hash(cfg);
    let graphs: Vec<_> = cfg
        .seeds
        .iter()
        .map(|&seed| {
            let mut rng = RngState::seed_rng(seed).split_named("dataset");
            gen_random_graph(cfg.nodes, cfg.edge_prob, FeatureMode::Gaussian, cfg.features, &mut rng)
        })
        .collect::<Result<_>>()?;
    let jobs: Vec<(usize, &Variant)> = (0..cfg.seeds.len())
        .flat_map(|s| cfg.variants.iter().map(move |v| (s, v)))
        .collect();
    let per_job = par_map(&jobs, threads, |&(s, v)| -> Result<Vec<OversmoothRow>> {
        let (seed, g) = (cfg.seeds[s], &graphs[s]);
        let root = RngState::seed_rng(seed);
        let z = match v.srf {
            Some(c) => {
                let p = SrfPipeline::fit(c, &[g.features()], &root)?;
                Some(p.embed(g.features(), &g.id, 0, &root)?.z)
            }
            None => None,
        };
        let gnn = GnnConfig {
            layers: cfg.depth,
            hidden: cfg.hidden,
            srf_width: v.width(),
            readout: Readout::PerNode,
            aggregation: cfg.aggregation,
            seed,
            ..GnnConfig::default()
        };
        let model = init_model(&gnn, cfg.features, 1, &mut root.split_named("init"))?;
        let pass = forward(&model, g, z.as_ref())?;
        let rows = pass
            .hidden
            .iter()
            .enumerate()
            .map(|(layer, h)| {
                Ok(OversmoothRow {
                    variant: v.name.clone(),
                    k: v.order(),
                    layer,
                    seed,
                    energy: dirichlet_energy(h, g)?,
                    config_hash: hash.clone(),
                    version: crate::VERSION.into(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let last = rows.last().map_or(0.0, |r| r.energy);
        log(&format!("oversmooth {} seed {seed}: layer-{} energy {last:.3e}", v.name, cfg.depth));
        Ok(rows)
    });
    let mut rows = Vec::new();
    for r in per_job {
        rows.extend(r?);
    }
    Ok(rows)
}

/// Baseline decay `E(L) < decay·E(1)` for every seed; each sketched variant's
/// mean `E(L)` at least `lift` times the baseline's; the dense Laplacian
/// sketches non-decreasing in `k` up to one pooled standard deviation.
pub fn assess_oversmoothing(cfg: &OversmoothConfig, rows: &[OversmoothRow], decay: f64, lift: f64) -> Vec<Check> {
    let depth = cfg.depth;
    let at = |name: &str, layer: usize| -> Vec<f64> {
        rows.iter()
            .filter(|r| r.variant == name && r.layer == layer)
            .map(|r| r.energy)
            .collect()
    };
    let mut checks = Vec::new();
    let base_first = at("baseline", 1);
    let base_last = at("baseline", depth);
    if !base_last.is_empty() {
        let worst = base_last
            .iter()
            .zip(&base_first)
            .map(|(l, f)| l / f)
            .fold(0.0f64, f64::max);
        checks.push(Check::at_most("baseline_last_over_first", worst, decay));
        let (base_mean, _) = mean_std(&base_last);
        for v in cfg.variants.iter().filter(|v| v.is_sketched()) {
            let (m, _) = mean_std(&at(&v.name, depth));
            checks.push(Check::at_least(&format!("{}_over_baseline", v.name), m / base_mean, lift));
        }
    }
    let mut sweep: Vec<&Variant> = cfg
        .variants
        .iter()
        .filter(|v| v.srf.is_some_and(|c| c.kernel == KernelTag::Laplacian && c.sketch == SketchKind::DenseAg))
        .collect();
    sweep.sort_by_key(|v| v.order());
    for pair in sweep.windows(2) {
        let (ma, sa) = mean_std(&at(&pair[0].name, depth));
        let (mb, sb) = mean_std(&at(&pair[1].name, depth));
        let pooled = ((sa * sa + sb * sb) / 2.0).sqrt();
        checks.push(Check::at_least(
            &format!("k{}_to_k{}_energy_change_plus_pooled_sd", pair[0].order(), pair[1].order()),
            mb - ma + pooled,
            0.0,
        ));
    }
    checks
}
