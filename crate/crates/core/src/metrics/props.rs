//! Monte-Carlo checks of the embedding's statistical guarantees.

use serde::{Deserialize, Serialize};

use super::{log_log_slope, quantile, Check, Moments};
use crate::error::{invalid, Result};
use crate::kernels::{fit_feature_map, kappa_exact, median_bandwidth, KernelKind, KernelTag};
use crate::matrix::{sq_dist, Matrix};
use crate::rng::RngState;
use crate::sketch::{apply_ag_with, SketchKind, SketchOperator};
use crate::srm::{DiagonalLaw, StructuredRandomMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PropertyId {
    /// Unbiased cross terms.
    P1,
    /// Distance sensitivity.
    P2,
    /// Cross-node information.
    P3,
    /// Uniqueness.
    P4,
    /// Equivariance in expectation.
    P5,
    #[serde(rename = "SRM-P1")]
    SrmP1,
    #[serde(rename = "SRM-P4")]
    SrmP4,
}

impl PropertyId {
    pub fn label(self) -> &'static str {
        match self {
            PropertyId::P1 => "P1",
            PropertyId::P2 => "P2",
            PropertyId::P3 => "P3",
            PropertyId::P4 => "P4",
            PropertyId::P5 => "P5",
            PropertyId::SrmP1 => "SRM-P1",
            PropertyId::SrmP4 => "SRM-P4",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropReport {
    pub property: PropertyId,
    pub description: String,
    pub trials: usize,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub passed: bool,
    /// Per-pair, per-N or per-M raw values, depending on the property.
    pub values: Vec<f64>,
}

impl PropReport {
    fn new(property: PropertyId, description: &str, trials: usize, seed: u64, checks: Vec<Check>, values: Vec<f64>) -> Self {
        Self {
            property,
            description: description.to_string(),
            trials,
            seed,
            passed: checks.iter().all(|c| c.passed),
            checks,
            values,
        }
    }
}

fn gaussian_matrix(rows: usize, cols: usize, rng: &mut RngState) -> Matrix {
    let mut m = Matrix::zeros(rows, cols);
    rng.fill_gaussian(m.as_mut_slice());
    m
}

/// Kernel with the median-heuristic bandwidth of `x` (σ is ignored for linear).
pub fn kernel_for(tag: KernelTag, x: &Matrix) -> Result<KernelKind> {
    match tag {
        KernelTag::Linear => Ok(KernelKind::linear()),
        _ => KernelKind::new(tag, median_bandwidth(x, tag)?.sigma),
    }
}

/// `z_i·z_j` averaged over `trials` joint draws of the feature map and a
/// first-order sketch, standardized against the exact kernel per pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UnbiasednessConfig {
    pub nodes: usize,
    pub features: usize,
    pub dim: usize,
    pub pairs: usize,
    pub trials: usize,
    pub max_sigmas: f64,
}

impl Default for UnbiasednessConfig {
    fn default() -> Self {
        Self {
            nodes: 32,
            features: 4,
            dim: 16,
            pairs: 10,
            trials: 20_000,
            max_sigmas: 4.0,
        }
    }
}

pub fn random_pairs(n: usize, count: usize, rng: &mut RngState) -> Result<Vec<(usize, usize)>> {
    if n < 2 {
        return Err(invalid("need at least two nodes to form a pair"));
    }
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let i = rng.below(n);
        let j = rng.below(n);
        if i != j {
            out.push((i.min(j), i.max(j)));
        }
    }
    Ok(out)
}

/// Standardized deviations `(mean(z_iᵀz_j) − κ(x_i, x_j)) / SE` for each
/// pair. Trial `t` draws its map and sketch from `rng.split(t)`.
pub fn check_unbiasedness(
    x: &Matrix,
    kind: KernelKind,
    sketch: SketchKind,
    pairs: &[(usize, usize)],
    dim: usize,
    trials: usize,
    max_sigmas: f64,
    rng: &RngState,
) -> Result<PropReport> {
    if trials < 100 {
        return Err(invalid(format!("unbiasedness needs at least 100 trials, got {trials}")));
    }
    if let Some((i, _)) = pairs.iter().find(|(i, j)| i == j) {
        return Err(invalid(format!("pair ({i}, {i}) is not a pair of distinct nodes")));
    }
    let exact: Vec<f64> = pairs
        .iter()
        .map(|&(i, j)| kappa_exact(kind, x.row(i), x.row(j)))
        .collect::<Result<_>>()?;
    let op = SketchOperator::new(sketch, 1, 0)?;
    let mut acc = vec![Moments::default(); pairs.len()];
    for t in 0..trials {
        let trial = rng.split(t as u64);
        let map = fit_feature_map(&mut trial.split_named("feature-map"), kind, x.cols(), dim)?;
        let z = op.apply_with(&map.embed(x)?, &trial.split_named("sketch"))?;
        for (m, &(i, j)) in acc.iter_mut().zip(pairs) {
            m.push(crate::matrix::dot(z.row(i), z.row(j)));
        }
    }
    let devs: Vec<f64> = acc
        .iter()
        .zip(&exact)
        .map(|(m, k)| (m.mean() - k) / m.std_error())
        .collect();
    let worst = devs.iter().fold(0.0f64, |a, d| a.max(d.abs()));
    let property = if sketch == SketchKind::SrmAg { PropertyId::SrmP1 } else { PropertyId::P1 };
    Ok(PropReport::new(
        property,
        &format!("mean z_i.z_j vs exact {} kernel, {} sketch", kind.tag.name(), sketch.name()),
        trials,
        rng.seed(),
        vec![Check::within("max_standardized_deviation", worst, 0.0, max_sigmas, "standard errors")],
        devs,
    ))
}

pub fn run_unbiasedness(cfg: &UnbiasednessConfig, tag: KernelTag, sketch: SketchKind, rng: &RngState) -> Result<PropReport> {
    let x = gaussian_matrix(cfg.nodes, cfg.features, &mut rng.split_named("features"));
    let pairs = random_pairs(cfg.nodes, cfg.pairs, &mut rng.split_named("pairs"))?;
    let kind = kernel_for(tag, &x)?;
    check_unbiasedness(&x, kind, sketch, &pairs, cfg.dim, cfg.trials, cfg.max_sigmas, &rng.split_named("trials"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionReport {
    pub n: usize,
    pub pairs: usize,
    pub skipped: usize,
    pub q01: f64,
    pub q50: f64,
    pub q99: f64,
    /// 99th percentile of `|ratio − 1|`.
    pub fitted_c: f64,
    /// Fraction of ratios inside `[1 − 4/√N, 1 + 4/√N]`.
    pub within_band: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistortionConfig {
    pub kernel: KernelTag,
    pub sizes: Vec<usize>,
    pub pairs: usize,
    pub features: usize,
    pub dim: usize,
    pub min_coverage: f64,
    pub slope_range: (f64, f64),
}

impl Default for DistortionConfig {
    fn default() -> Self {
        Self {
            kernel: KernelTag::Rbf,
            sizes: vec![64, 256, 1024],
            pairs: 200,
            features: 4,
            dim: 64,
            min_coverage: 0.99,
            slope_range: (-0.7, -0.3),
        }
    }
}

/// Ratios `‖z_i − z_j‖ / ‖φ_i − φ_j‖` for one graph size, with one feature
/// map and one first-order dense sketch.
pub fn distortion_at(n: usize, cfg: &DistortionConfig, rng: &RngState) -> Result<DistortionReport> {
    if n < 16 {
        return Err(invalid(format!("distortion needs N >= 16, got {n}")));
    }
    let x = gaussian_matrix(n, cfg.features, &mut rng.split_named("features"));
    let kind = kernel_for(cfg.kernel, &x)?;
    let map = fit_feature_map(&mut rng.split_named("feature-map"), kind, cfg.features, cfg.dim)?;
    let phi = map.embed(&x)?;
    let z = SketchOperator::new(SketchKind::DenseAg, 1, 0)?.apply_with(&phi, &rng.split_named("sketch"))?;
    let pairs = random_pairs(n, cfg.pairs, &mut rng.split_named("pairs"))?;
    let mut ratios = Vec::with_capacity(pairs.len());
    let mut skipped = 0;
    for (i, j) in pairs {
        let d_phi = sq_dist(phi.row(i), phi.row(j)).sqrt();
        if d_phi == 0.0 {
            skipped += 1;
            continue;
        }
        ratios.push(sq_dist(z.row(i), z.row(j)).sqrt() / d_phi);
    }
    let band = 4.0 / (n as f64).sqrt();
    let dev: Vec<f64> = ratios.iter().map(|r| (r - 1.0).abs()).collect();
    Ok(DistortionReport {
        n,
        pairs: ratios.len(),
        skipped,
        q01: quantile(&ratios, 0.01),
        q50: quantile(&ratios, 0.5),
        q99: quantile(&ratios, 0.99),
        fitted_c: quantile(&dev, 0.99),
        within_band: dev.iter().filter(|&&d| d <= band).count() as f64 / ratios.len().max(1) as f64,
    })
}

pub fn check_distortion(cfg: &DistortionConfig, rng: &RngState) -> Result<(Vec<DistortionReport>, PropReport)> {
    let reports: Vec<DistortionReport> = cfg
        .sizes
        .iter()
        .map(|&n| distortion_at(n, cfg, &rng.split(n as u64)))
        .collect::<Result<_>>()?;
    let mut checks: Vec<Check> = reports
        .iter()
        .map(|r| Check::at_least(&format!("coverage_n{}", r.n), r.within_band, cfg.min_coverage))
        .collect();
    let ns: Vec<f64> = reports.iter().map(|r| r.n as f64).collect();
    let cs: Vec<f64> = reports.iter().map(|r| r.fitted_c).collect();
    let slope = if reports.len() >= 2 { log_log_slope(&ns, &cs) } else { f64::NAN };
    checks.push(Check::in_range("fitted_c_slope", slope, cfg.slope_range.0, cfg.slope_range.1));
    let report = PropReport::new(
        PropertyId::P2,
        &format!("distance ratio band and decay, {} kernel", cfg.kernel.name()),
        cfg.pairs,
        rng.seed(),
        checks,
        cs,
    );
    Ok((reports, report))
}

/// Perturbing row `p` of `Φ` by `δ` must move every `z_i` by
/// `(𝟙[i=p] + G_ip/√N)·δ` for a materialized `G` with no zero entries.
pub fn check_cross_node(n: usize, dim: usize, rng: &RngState) -> Result<PropReport> {
    let mut r = rng.clone();
    let phi = gaussian_matrix(n, dim, &mut r);
    let g = gaussian_matrix(n, n, &mut r);
    let delta: Vec<f64> = (0..dim).map(|_| r.gaussian()).collect();
    let base = apply_ag_with(&phi, &g)?;
    let scale = 1.0 / (n as f64).sqrt();
    let mut worst = 0.0f64;
    let mut min_shift = f64::INFINITY;
    for p in 0..n {
        let mut moved = phi.clone();
        moved.row_mut(p).iter_mut().zip(&delta).for_each(|(v, d)| *v += d);
        let z = apply_ag_with(&moved, &g)?;
        for i in 0..n {
            let w = f64::from(u8::from(i == p)) + g[(i, p)] * scale;
            let mut shift = 0.0f64;
            for c in 0..dim {
                let diff = z[(i, c)] - base[(i, c)];
                worst = worst.max((diff - w * delta[c]).abs());
                shift = shift.max(diff.abs());
            }
            min_shift = min_shift.min(shift);
        }
    }
    let min_g = g.as_slice().iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
    Ok(PropReport::new(
        PropertyId::P3,
        "every row responds to every other row through G",
        n,
        rng.seed(),
        vec![
            Check::at_most("max_response_error", worst, 1e-10),
            Check::at_least("min_abs_G_entry", min_g, f64::MIN_POSITIVE),
            Check::at_least("min_row_response", min_shift, f64::MIN_POSITIVE),
        ],
        vec![worst, min_g, min_shift],
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UniquenessConfig {
    pub nodes: usize,
    pub dim: usize,
    pub order: usize,
    pub trials: usize,
    pub kernel: KernelTag,
}

impl Default for UniquenessConfig {
    fn default() -> Self {
        Self {
            nodes: 64,
            dim: 16,
            order: 1,
            trials: 100,
            kernel: KernelTag::Rbf,
        }
    }
}

fn min_row_distance(z: &Matrix) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..z.rows() {
        for j in i + 1..z.rows() {
            best = best.min(sq_dist(z.row(i), z.row(j)).sqrt());
        }
    }
    best
}

/// Identical node features; counts draws whose rows are pairwise distinct.
pub fn check_uniqueness(cfg: &UniquenessConfig, sketch: SketchKind, rng: &RngState) -> Result<PropReport> {
    let x = Matrix::filled(cfg.nodes, 1, 1.0);
    let kind = match cfg.kernel {
        KernelTag::Linear => KernelKind::linear(),
        tag => KernelKind::new(tag, 1.0)?,
    };
    let op = SketchOperator::new(sketch, cfg.order, 0)?;
    let mut distances = Vec::with_capacity(cfg.trials);
    for t in 0..cfg.trials {
        let trial = rng.split(t as u64);
        let map = fit_feature_map(&mut trial.split_named("feature-map"), kind, 1, cfg.dim)?;
        let z = op.apply_with(&map.embed(&x)?, &trial.split_named("sketch"))?;
        distances.push(min_row_distance(&z));
    }
    let unique = distances.iter().filter(|&&d| d > 0.0).count() as f64 / cfg.trials.max(1) as f64;
    let property = if sketch == SketchKind::SrmAg { PropertyId::SrmP4 } else { PropertyId::P4 };
    Ok(PropReport::new(
        property,
        &format!("constant features, {} sketch: all rows distinct", sketch.name()),
        cfg.trials,
        rng.seed(),
        vec![Check::within("fraction_unique", unique, 1.0, 0.0, "absolute")],
        distances,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EquivarianceConfig {
    pub nodes: usize,
    pub features: usize,
    pub dim: usize,
    pub order: usize,
    pub kernel: KernelTag,
    pub trial_counts: Vec<usize>,
    pub max_sigmas: f64,
    pub slope_range: (f64, f64),
}

impl Default for EquivarianceConfig {
    fn default() -> Self {
        Self {
            nodes: 16,
            features: 4,
            dim: 8,
            order: 4,
            kernel: KernelTag::Rbf,
            trial_counts: vec![100, 1_000, 10_000],
            max_sigmas: 6.0,
            slope_range: (-0.7, -0.3),
        }
    }
}

/// `Δ(M) = max |mean_M srf(P_π X) − P_π mean_M srf(X)|` with the feature
/// map fixed; both sides of trial `t` use the same sketch stream.
/// `pi[i]` is the new position of row `i`.
pub fn check_equivariance(x: &Matrix, pi: &[usize], cfg: &EquivarianceConfig, rng: &RngState) -> Result<PropReport> {
    let n = x.rows();
    let inv = crate::graph::invert_permutation(pi)?;
    crate::error::check_dim("permutation length", n, pi.len())?;
    let mut counts = cfg.trial_counts.clone();
    counts.sort_unstable();
    let total = *counts.last().ok_or_else(|| invalid("no trial counts given"))?;
    let kind = kernel_for(cfg.kernel, x)?;
    let map = fit_feature_map(&mut rng.split_named("feature-map"), kind, x.cols(), cfg.dim)?;
    let phi = map.embed(x)?;
    let phi_perm = map.embed(&x.gather_rows(&inv))?;
    let op = SketchOperator::new(SketchKind::DenseAg, cfg.order, 0)?;
    let width = op.output_width(cfg.dim);
    let mut acc = vec![Moments::default(); n * width];
    let mut deltas = Vec::new();
    let mut sigmas = Vec::new();
    let sketch = rng.split_named("sketch");
    for t in 1..=total {
        let stream = sketch.split(t as u64);
        let lhs = op.apply_with(&phi_perm, &stream)?;
        let rhs = op.apply_with(&phi, &stream)?.gather_rows(&inv);
        for (m, (a, b)) in acc.iter_mut().zip(lhs.as_slice().iter().zip(rhs.as_slice())) {
            m.push(a - b);
        }
        if counts.contains(&t) {
            deltas.push(acc.iter().fold(0.0f64, |a, m| a.max(m.mean().abs())));
            sigmas.push(acc.iter().fold(0.0f64, |a, m| {
                let se = m.std_error();
                a.max(if se == 0.0 { 0.0 } else { m.mean().abs() / se })
            }));
        }
    }
    let exact = deltas.iter().all(|&d| d == 0.0);
    let ms: Vec<f64> = counts.iter().map(|&m| m as f64).collect();
    let slope = if exact || counts.len() < 2 { f64::NAN } else { log_log_slope(&ms, &deltas) };
    let mut slope_check = Check::in_range("delta_decay_slope", slope, cfg.slope_range.0, cfg.slope_range.1);
    // identical sides: nothing to decay
    slope_check.passed |= exact;
    let last_sigma = *sigmas.last().unwrap_or(&0.0);
    Ok(PropReport::new(
        PropertyId::P5,
        &format!("permuted vs permuting the mean embedding, {} kernel, k={}", cfg.kernel.name(), cfg.order),
        total,
        rng.seed(),
        vec![
            slope_check,
            Check::at_most("final_max_standardized_entry", last_sigma, cfg.max_sigmas),
        ],
        deltas,
    ))
}

pub fn run_equivariance(cfg: &EquivarianceConfig, rng: &RngState) -> Result<PropReport> {
    let x = gaussian_matrix(cfg.nodes, cfg.features, &mut rng.split_named("features"));
    let pi = rng.split_named("permutation").permutation(cfg.nodes);
    check_equivariance(&x, &pi, cfg, &rng.split_named("trials"))
}

/// Fast transform vs dense materialization for every `n ≤ max_n`; the
/// statistic is the worst relative error over `vectors` random inputs.
pub fn check_srm_dense(max_n: usize, vectors: usize, rng: &RngState) -> Result<Check> {
    let mut worst = 0.0f64;
    for n in 1..=max_n {
        let mut r = rng.split(n as u64);
        for law in [DiagonalLaw::Rademacher, DiagonalLaw::GaussianFirst] {
            let srm = StructuredRandomMatrix::sample(&mut r, n, crate::srm::DEFAULT_BLOCKS, law)?;
            let dense = srm.to_dense();
            for _ in 0..vectors {
                let v: Vec<f64> = (0..n).map(|_| r.gaussian()).collect();
                let fast = srm.apply(&v)?;
                let vm = Matrix::from_vec(n, 1, v)?;
                let slow = dense.matmul(&vm)?;
                let num: f64 = fast.iter().zip(slow.as_slice()).map(|(a, b)| (a - b).powi(2)).sum();
                let den: f64 = slow.as_slice().iter().map(|b| b * b).sum();
                worst = worst.max((num / den.max(f64::MIN_POSITIVE)).sqrt());
            }
        }
    }
    Ok(Check::at_most("srm_fast_vs_dense_rel_error", worst, 1e-10))
}

/// The structured sketch through the unbiasedness and uniqueness suites at
/// the dense tolerances, plus the fast-apply agreement check.
pub fn check_srm(
    unbiased: &UnbiasednessConfig,
    unique: &UniquenessConfig,
    rng: &RngState,
) -> Result<Vec<PropReport>> {
    let mut out = Vec::new();
    for tag in KernelTag::ALL {
        out.push(run_unbiasedness(unbiased, tag, SketchKind::SrmAg, &rng.split_named(tag.name()))?);
    }
    let mut p4 = check_uniqueness(unique, SketchKind::SrmAg, &rng.split_named("uniqueness"))?;
    p4.checks.push(check_srm_dense(64, 100, &rng.split_named("dense"))?);
    p4.passed = p4.checks.iter().all(|c| c.passed);
    out.push(p4);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_unbiased() -> UnbiasednessConfig {
        UnbiasednessConfig {
            nodes: 8,
            pairs: 4,
            trials: 2_000,
            ..UnbiasednessConfig::default()
        }
    }

    #[test]
    fn unbiasedness_small_runs_pass() {
        let rng = RngState::seed_rng(1);
        for tag in KernelTag::ALL {
            for sketch in [SketchKind::DenseAg, SketchKind::SrmAg, SketchKind::Identity] {
                let r = run_unbiasedness(&small_unbiased(), tag, sketch, &rng).unwrap();
                assert!(r.passed, "{tag:?} {sketch:?}: {:?}", r.checks);
                assert_eq!(r.values.len(), 4);
            }
        }
    }

    #[test]
    fn unbiasedness_rejects_bad_input() {
        let x = Matrix::zeros(4, 2);
        let rng = RngState::seed_rng(0);
        let k = KernelKind::linear();
        assert!(check_unbiasedness(&x, k, SketchKind::DenseAg, &[(0, 1)], 4, 10, 4.0, &rng).is_err());
        assert!(check_unbiasedness(&x, k, SketchKind::DenseAg, &[(2, 2)], 4, 100, 4.0, &rng).is_err());
    }

    #[test]
    fn linear_identity_converges_to_inner_product() {
        // with no cross-node term the JL estimate concentrates as D grows
        let mut r = RngState::seed_rng(3);
        let x = gaussian_matrix(6, 3, &mut r);
        let kind = KernelKind::linear();
        let report = check_unbiasedness(&x, kind, SketchKind::Identity, &[(0, 1), (2, 5)], 256, 400, 4.0, &r).unwrap();
        assert!(report.passed, "{:?}", report.checks);
    }

    #[test]
    fn distortion_reports_are_ordered() {
        let cfg = DistortionConfig {
            sizes: vec![16, 64],
            pairs: 50,
            ..DistortionConfig::default()
        };
        let (reports, p) = check_distortion(&cfg, &RngState::seed_rng(2)).unwrap();
        for r in &reports {
            assert!(r.q01 <= r.q50 && r.q50 <= r.q99);
            assert_eq!(r.pairs + r.skipped, 50);
        }
        assert_eq!(p.checks.len(), 3);
        assert!(distortion_at(8, &cfg, &RngState::seed_rng(0)).is_err());
    }

    #[test]
    fn cross_node_response_is_exact() {
        let r = check_cross_node(8, 4, &RngState::seed_rng(4)).unwrap();
        assert!(r.passed, "{:?}", r.checks);
    }

    #[test]
    fn constant_features_become_unique() {
        let cfg = UniquenessConfig {
            trials: 20,
            ..UniquenessConfig::default()
        };
        for sketch in [SketchKind::DenseAg, SketchKind::SrmAg] {
            let r = check_uniqueness(&cfg, sketch, &RngState::seed_rng(5)).unwrap();
            assert!(r.passed, "{sketch:?}");
        }
        let r = check_uniqueness(&cfg, SketchKind::Identity, &RngState::seed_rng(5)).unwrap();
        assert!(!r.passed);
        assert!(r.values.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn identity_permutation_is_exactly_equivariant() {
        let cfg = EquivarianceConfig {
            trial_counts: vec![10, 100],
            ..EquivarianceConfig::default()
        };
        let x = gaussian_matrix(cfg.nodes, cfg.features, &mut RngState::seed_rng(6));
        let id: Vec<usize> = (0..cfg.nodes).collect();
        let r = check_equivariance(&x, &id, &cfg, &RngState::seed_rng(7)).unwrap();
        assert_eq!(r.values, vec![0.0, 0.0]);
        assert!(r.passed);
    }

    #[test]
    fn reports_reproduce_from_seed() {
        let cfg = EquivarianceConfig {
            trial_counts: vec![20, 200],
            ..EquivarianceConfig::default()
        };
        let a = run_equivariance(&cfg, &RngState::seed_rng(8)).unwrap();
        let b = run_equivariance(&cfg, &RngState::seed_rng(8)).unwrap();
        assert_eq!(a, b);
        assert!(a.values[1] < a.values[0]);
    }

    #[test]
    fn srm_dense_agreement() {
        let c = check_srm_dense(20, 5, &RngState::seed_rng(9)).unwrap();
        assert!(c.passed, "{c:?}");
    }
}
