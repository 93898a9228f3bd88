use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use srf_core::gnn::{init_model, train, Checkpoint, TrainReport, CHECKPOINT_VERSION};
use srf_core::graph::{
    dataset_from_json, dataset_to_json, gen_csl, gen_random_graph, gen_tree_neighbors_match, Dataset, Splits, Task,
    TreeConfig,
};
use srf_core::kernels::FeatureMap;
use srf_core::metrics::*;
use srf_core::sketch::{effective_dim, Bandwidth, SketchOperator, SrfEmbedding, SrfPipeline};
use srf_core::{write_atomic, Matrix, RngState, SrfError};

use crate::config::*;
use crate::run::{threads, RunDir, OUT_DIR_ENV};
use crate::{BenchKind, CheckKind, Cli, Command, Common, GenKind};

pub enum Outcome {
    Passed,
    Failed,
}

impl From<bool> for Outcome {
    fn from(passed: bool) -> Self {
        if passed {
            Outcome::Passed
        } else {
            Outcome::Failed
        }
    }
}

/// Training that diverged counts as a benchmark failure; everything else
/// (bad flags, configs, files) is a usage error.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<SrfError>() {
        Some(SrfError::NonFiniteLoss { .. }) => 1,
        _ => 2,
    }
}

/// Precomputed embeddings for one dataset file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub version: String,
    pub dataset: String,
    /// Digest of the dataset file contents.
    pub dataset_hash: String,
    pub seed: u64,
    pub config: SrfRun,
    pub feature_map: FeatureMap,
    pub bandwidth_degenerate: bool,
    pub embeddings: Vec<SrfEmbedding>,
}

struct Overrides(Vec<(String, Value)>);

impl Overrides {
    fn new() -> Self {
        Self(Vec::new())
    }

    fn opt<T: Serialize>(&mut self, key: &str, v: Option<T>) -> Result<()> {
        if let Some(v) = v {
            self.0.push((key.to_string(), serde_json::to_value(v)?));
        }
        Ok(())
    }

    /// Flags first, then `--seed`, then `--set` in order.
    fn finish(mut self, common: &Common, seed_key: &str) -> Result<Vec<(String, Value)>> {
        self.opt(seed_key, common.seed)?;
        for s in &common.set {
            self.0.push(parse_override(s)?);
        }
        Ok(self.0)
    }
}

fn progress(quiet: bool) -> impl Fn(&str) + Sync {
    move |msg: &str| {
        if !quiet {
            eprintln!("{msg}");
        }
    }
}

pub fn dispatch(cli: &Cli) -> Result<Outcome> {
    let log = progress(cli.quiet);
    match &cli.command {
        Command::Gen {
            kind,
            out,
            r,
            n,
            p,
            features,
            common,
        } => cmd_gen(*kind, out.as_deref(), *r, *n, *p, *features, common, &log),
        Command::Srf {
            data,
            out,
            kernel,
            dim,
            order,
            sketch,
            sigma,
            common,
        } => {
            let mut o = Overrides::new();
            o.opt("srf.kernel", kernel.as_deref())?;
            o.opt("srf.dim", *dim)?;
            o.opt("srf.order", *order)?;
            o.opt("srf.sketch", sketch.as_deref())?;
            o.opt("srf.bandwidth", sigma.map(Bandwidth::Fixed))?;
            let (cfg, _) = resolve::<SrfRun>(common.config.as_deref(), &o.finish(common, "seed")?)?;
            cmd_srf(data, out, &cfg, &log)
        }
        Command::Check {
            which,
            trials,
            kernel,
            n,
            out_dir,
            common,
        } => {
            let mut o = Overrides::new();
            o.opt("unbiasedness.trials", *trials)?;
            o.opt("uniqueness.trials", *trials)?;
            if let Some(k) = kernel {
                o.opt("kernels", Some([k]))?;
                o.opt("distortion.kernel", Some(k))?;
            }
            o.opt("distortion.sizes", n.clone())?;
            let (cfg, resolved) = resolve::<CheckRun>(common.config.as_deref(), &o.finish(common, "seed")?)?;
            cmd_check(*which, &cfg, &resolved, out_dir.as_deref(), &log)
        }
        Command::Bench {
            which,
            seeds,
            epochs,
            depths,
            out_dir,
            common,
        } => {
            let mut o = Overrides::new();
            o.opt("bench.seeds", seeds.clone())?;
            if *which != BenchKind::Oversmooth {
                o.opt("bench.gnn.epochs", *epochs)?;
            } else if epochs.is_some() {
                bail!("--epochs does not apply to the oversmoothing bench (models are untrained)");
            }
            if *which == BenchKind::Oversquash {
                o.opt("bench.depths", depths.clone())?;
            } else if depths.is_some() {
                bail!("--depths applies only to the oversquash bench");
            }
            if common.seed.is_some() {
                bail!("bench runs take --seeds");
            }
            let o = o.finish(common, "bench.seeds")?;
            let file = common.config.as_deref();
            let out_dir = out_dir.as_deref();
            match which {
                BenchKind::Expressiveness => bench_expressiveness(resolve(file, &o)?, out_dir, &log),
                BenchKind::Oversquash => bench_oversquash(resolve(file, &o)?, out_dir, &log),
                BenchKind::Oversmooth => bench_oversmooth(resolve(file, &o)?, out_dir, &log),
            }
        }
        Command::Train {
            data,
            srf,
            epochs,
            out_dir,
            common,
        } => {
            let mut o = Overrides::new();
            o.opt("gnn.epochs", *epochs)?;
            let (cfg, resolved) = resolve::<TrainRun>(common.config.as_deref(), &o.finish(common, "seed")?)?;
            cmd_train(data, srf.as_deref(), &cfg, &resolved, out_dir.as_deref(), &log)
        }
    }
}

fn write_pretty<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes).with_context(|| format!("writing {}", path.display()))
}

#[allow(clippy::too_many_arguments)]
fn cmd_gen(
    kind: GenKind,
    out: Option<&Path>,
    r: Option<usize>,
    n: Option<usize>,
    p: Option<f64>,
    features: Option<usize>,
    common: &Common,
    log: &(dyn Fn(&str) + Sync),
) -> Result<Outcome> {
    let name = match kind {
        GenKind::TreeNm => "tree-nm",
        GenKind::Csl => "csl",
        GenKind::Gnp => "gnp",
    };
    let misplaced = match kind {
        GenKind::TreeNm => n.is_some() || p.is_some() || features.is_some(),
        GenKind::Csl => r.is_some() || n.is_some() || p.is_some() || features.is_some(),
        GenKind::Gnp => r.is_some(),
    };
    if misplaced {
        bail!("flag does not apply to `gen {name}`");
    }
    let file = common.config.as_deref();
    let mut o = Overrides::new();
    let ds = match kind {
        GenKind::TreeNm => {
            o.opt("depth", r)?;
            let (c, _) = resolve::<TreeGen>(file, &o.finish(common, "seed")?)?;
            let tree = TreeConfig {
                depth: c.depth,
                train: c.train,
                test: c.test,
            };
            gen_tree_neighbors_match(tree, &mut RngState::seed_rng(c.seed).split_named("dataset"))?
        }
        GenKind::Csl => {
            let (c, _) = resolve::<CslGen>(file, &o.finish(common, "seed")?)?;
            gen_csl(&c.csl(), &mut RngState::seed_rng(c.seed).split_named("dataset"))?
        }
        GenKind::Gnp => {
            o.opt("n", n)?;
            o.opt("p", p)?;
            o.opt("features", features)?;
            let (c, _) = resolve::<GnpGen>(file, &o.finish(common, "seed")?)?;
            let g = gen_random_graph(c.n, c.p, c.mode, c.features, &mut RngState::seed_rng(c.seed).split_named("dataset"))?;
            Dataset {
                task: Task::GraphClassification,
                num_classes: 1,
                graphs: vec![g],
                splits: Splits::default(),
            }
        }
    };
    let path = out.map_or_else(
        || {
            let base = std::env::var_os(OUT_DIR_ENV).map_or_else(|| PathBuf::from("."), PathBuf::from);
            base.join(format!("{name}.json"))
        },
        Path::to_path_buf,
    );
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    write_atomic(&path, dataset_to_json(&ds)?.as_bytes()).with_context(|| format!("writing {}", path.display()))?;
    log(&format!("wrote {} graphs to {}", ds.graphs.len(), path.display()));
    Ok(Outcome::Passed)
}

fn read_dataset(path: &Path) -> Result<(Dataset, String)> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading dataset {}", path.display()))?;
    let ds = dataset_from_json(&text).with_context(|| format!("loading dataset {}", path.display()))?;
    Ok((ds, config_hash(&text)))
}

fn cmd_srf(data: &Path, out: &Path, cfg: &SrfRun, log: &(dyn Fn(&str) + Sync)) -> Result<Outcome> {
    let (ds, hash) = read_dataset(data)?;
    let root = RngState::seed_rng(cfg.seed);
    let feats: Vec<&Matrix> = ds.graphs.iter().map(|g| g.features()).collect();
    let pipeline = if cfg.identity_projection {
        let f = effective_dim(ds.feature_dim());
        if cfg.srf.dim != f {
            bail!("identity projection needs srf.dim equal to the feature width {f}, got {}", cfg.srf.dim);
        }
        let op = SketchOperator::new(cfg.srf.sketch, cfg.srf.order, root.split_named("sketch").seed())?;
        SrfPipeline::with_map(cfg.srf, FeatureMap::identity_projection(f), op)
    } else {
        SrfPipeline::fit(cfg.srf, &feats, &root)?
    };
    let embeddings = ds
        .graphs
        .iter()
        .enumerate()
        .map(|(i, g)| pipeline.embed(g.features(), &g.id, i as u64, &root))
        .collect::<srf_core::Result<Vec<_>>>()?;
    let sidecar = Sidecar {
        version: srf_core::VERSION.to_string(),
        dataset: data.display().to_string(),
        dataset_hash: hash,
        seed: cfg.seed,
        config: cfg.clone(),
        feature_map: pipeline.map.clone(),
        bandwidth_degenerate: pipeline.bandwidth_degenerate,
        embeddings,
    };
    write_pretty(out, &sidecar)?;
    log(&format!(
        "wrote {} embeddings of width {} to {}",
        sidecar.embeddings.len(),
        pipeline.width(),
        out.display()
    ));
    Ok(Outcome::Passed)
}

#[derive(Serialize)]
struct DistortionRow<'a> {
    n: usize,
    pairs: usize,
    skipped: usize,
    q01: f64,
    q50: f64,
    q99: f64,
    fitted_c: f64,
    within_band: f64,
    config_hash: &'a str,
    seed: u64,
    version: &'a str,
}

fn cmd_check(
    which: CheckKind,
    cfg: &CheckRun,
    resolved: &Value,
    out_dir: Option<&Path>,
    log: &(dyn Fn(&str) + Sync),
) -> Result<Outcome> {
    let label = format!("check {}", format!("{which:?}").to_lowercase());
    let mut run = RunDir::create(out_dir, &label, resolved)?;
    let root = RngState::seed_rng(cfg.seed);
    let all = which == CheckKind::All;
    let mut reports = Vec::new();
    if all || which == CheckKind::P1 {
        for &k in &cfg.kernels {
            let rng = root.split_named("p1").split_named(k.name());
            reports.push(run_unbiasedness(&cfg.unbiasedness, k, srf_core::sketch::SketchKind::DenseAg, &rng)?);
        }
    }
    if all || which == CheckKind::P2 {
        let (rows, report) = check_distortion(&cfg.distortion, &root.split_named("p2"))?;
        let hash = config_hash(resolved);
        let rows: Vec<DistortionRow> = rows
            .iter()
            .map(|r| DistortionRow {
                n: r.n,
                pairs: r.pairs,
                skipped: r.skipped,
                q01: r.q01,
                q50: r.q50,
                q99: r.q99,
                fitted_c: r.fitted_c,
                within_band: r.within_band,
                config_hash: &hash,
                seed: cfg.seed,
                version: srf_core::VERSION,
            })
            .collect();
        run.write_csv("distortion.csv", &rows)?;
        reports.push(report);
    }
    if all || which == CheckKind::P3 {
        reports.push(check_cross_node(cfg.cross_node.nodes, cfg.cross_node.dim, &root.split_named("p3"))?);
    }
    if all || which == CheckKind::P4 {
        reports.push(check_uniqueness(&cfg.uniqueness, srf_core::sketch::SketchKind::DenseAg, &root.split_named("p4"))?);
    }
    if all || which == CheckKind::P5 {
        reports.push(run_equivariance(&cfg.equivariance, &root.split_named("p5"))?);
    }
    if all || which == CheckKind::Srm {
        reports.extend(check_srm(&cfg.unbiasedness, &cfg.uniqueness, &root.split_named("srm"))?);
    }
    for r in &reports {
        log(&format!(
            "{} {}: {}",
            r.property.label(),
            if r.passed { "PASS" } else { "FAIL" },
            r.description
        ));
        for c in r.checks.iter().filter(|c| !c.passed) {
            log(&format!("  {c}"));
        }
    }
    let passed = reports.iter().all(|r| r.passed);
    run.write_json("reports.json", &reports)?;
    let dir = run.finish(passed)?;
    log(&format!("results in {}", dir.display()));
    Ok(passed.into())
}

fn finish_bench(mut run: RunDir, checks: &[Check], log: &(dyn Fn(&str) + Sync)) -> Result<Outcome> {
    for c in checks {
        log(&format!("{} {c}", if c.passed { "PASS" } else { "FAIL" }));
    }
    let passed = checks.iter().all(|c| c.passed);
    run.write_json("checks.json", checks)?;
    let dir = run.finish(passed)?;
    log(&format!("results in {}", dir.display()));
    Ok(passed.into())
}

fn bench_expressiveness(
    (cfg, resolved): (ExpressivenessRun, Value),
    out_dir: Option<&Path>,
    log: &(dyn Fn(&str) + Sync),
) -> Result<Outcome> {
    let mut run = RunDir::create(out_dir, "bench expressiveness", &resolved)?;
    let rows = run_expressiveness(&cfg.bench, threads(), log)?;
    run.write_csv("expressiveness.csv", &rows)?;
    let checks = assess_expressiveness(&cfg.bench, &rows, cfg.criteria.chance_bound, cfg.criteria.srf_bound);
    finish_bench(run, &checks, log)
}

fn bench_oversquash(
    (cfg, resolved): (OversquashRun, Value),
    out_dir: Option<&Path>,
    log: &(dyn Fn(&str) + Sync),
) -> Result<Outcome> {
    let mut run = RunDir::create(out_dir, "bench oversquash", &resolved)?;
    let rows = run_oversquashing(&cfg.bench, threads(), log)?;
    run.write_csv("oversquash.csv", &rows)?;
    let c = &cfg.criteria;
    let checks = assess_oversquashing(&cfg.bench, &rows, &c.easy_depths, c.fit_bound, &c.hard_depths, c.margin);
    finish_bench(run, &checks, log)
}

fn bench_oversmooth(
    (cfg, resolved): (OversmoothRun, Value),
    out_dir: Option<&Path>,
    log: &(dyn Fn(&str) + Sync),
) -> Result<Outcome> {
    let mut run = RunDir::create(out_dir, "bench oversmooth", &resolved)?;
    let rows = run_oversmoothing(&cfg.bench, threads(), log)?;
    run.write_csv("oversmooth.csv", &rows)?;
    let checks = assess_oversmoothing(&cfg.bench, &rows, cfg.criteria.decay, cfg.criteria.lift);
    finish_bench(run, &checks, log)
}

fn load_sidecar(path: &Path, ds: &Dataset, dataset_hash: &str) -> Result<Vec<Matrix>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading sidecar {}", path.display()))?;
    let sc: Sidecar = serde_json::from_str(&text).with_context(|| format!("parsing sidecar {}", path.display()))?;
    if sc.dataset_hash != dataset_hash {
        bail!("sidecar {} was computed for a different dataset ({})", path.display(), sc.dataset);
    }
    if sc.embeddings.len() != ds.graphs.len() {
        bail!("sidecar has {} embeddings for {} graphs", sc.embeddings.len(), ds.graphs.len());
    }
    let width = sc.embeddings.first().map_or(0, SrfEmbedding::width);
    for (e, g) in sc.embeddings.iter().zip(&ds.graphs) {
        if e.graph_id != g.id || e.z.rows() != g.node_count() || e.width() != width {
            bail!("sidecar embedding for graph '{}' does not match graph '{}'", e.graph_id, g.id);
        }
    }
    Ok(sc.embeddings.into_iter().map(|e| e.z).collect())
}

#[derive(Serialize)]
struct TrainSummary<'a> {
    report: &'a TrainReport,
    srf_width: usize,
    parameters: usize,
}

fn cmd_train(
    data: &Path,
    sidecar: Option<&Path>,
    cfg: &TrainRun,
    resolved: &Value,
    out_dir: Option<&Path>,
    log: &(dyn Fn(&str) + Sync),
) -> Result<Outcome> {
    let (ds, hash) = read_dataset(data)?;
    ds.validate()?;
    let root = RngState::seed_rng(cfg.seed);
    let zs = match (sidecar, cfg.srf) {
        (Some(_), Some(_)) => bail!("give either --srf or an `srf` config section, not both"),
        (Some(p), None) => Some(load_sidecar(p, &ds, &hash)?),
        (None, Some(c)) => Some(embed_dataset(&ds, c, &root)?),
        (None, None) => None,
    };
    let width = zs.as_ref().and_then(|z| z.first()).map_or(0, Matrix::cols);
    if cfg.gnn.srf_width != 0 && cfg.gnn.srf_width != width {
        bail!("gnn.srf_width is {} but the embeddings have width {width}", cfg.gnn.srf_width);
    }
    let gnn = srf_core::gnn::GnnConfig {
        srf_width: width,
        seed: cfg.seed,
        ..cfg.gnn.clone()
    };
    let mut run = RunDir::create(out_dir, "train", resolved)?;
    let mut model = init_model(&gnn, ds.feature_dim(), ds.num_classes, &mut root.split_named("init"))?;
    let report = train(&mut model, &ds, zs.as_deref())?;
    for r in &report.history {
        log(&format!(
            "epoch {:>4} loss {:.4} train {:.3} test {}",
            r.epoch,
            r.train_loss,
            r.train_acc,
            r.test_acc.map_or("-".into(), |a| format!("{a:.3}"))
        ));
    }
    run.write_csv("history.csv", &report.history)?;
    run.write_json(
        "report.json",
        &TrainSummary {
            report: &report,
            srf_width: width,
            parameters: model.params.len(),
        },
    )?;
    run.write_json(
        "checkpoint.json",
        &Checkpoint {
            version: CHECKPOINT_VERSION,
            model,
        },
    )?;
    let dir = run.finish(true)?;
    log(&format!(
        "best epoch {} test accuracy {} ; results in {}",
        report.best_epoch,
        report.best_test_acc.map_or("-".into(), |a| format!("{a:.3}")),
        dir.display()
    ));
    Ok(Outcome::Passed)
}
