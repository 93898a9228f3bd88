//! Three small interactive experiments for the browser demo. Each returns a
//! JSON string so the page stays free of generated bindings beyond strings
//! and numbers.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use srf_core::gnn::{dirichlet_energy, forward, init_model, Aggregation, GnnConfig, Readout};
use srf_core::graph::{gen_random_graph, FeatureMode};
use srf_core::kernels::{kappa_exact, KernelTag};
use srf_core::matrix::{dot, sq_dist};
use srf_core::metrics::{kernel_for, Moments};
use srf_core::sketch::{Bandwidth, SketchKind, SrfConfig, SrfPipeline};
use srf_core::{Matrix, Result, RngState};

#[derive(Debug, Serialize)]
pub struct KernelEstimate {
    pub kernel: &'static str,
    pub exact: f64,
    /// Running mean after each checkpoint in `trials`.
    pub trials: Vec<usize>,
    pub means: Vec<f64>,
    pub std_errors: Vec<f64>,
}

fn parse_kernel(name: &str) -> Result<KernelTag> {
    KernelTag::ALL
        .into_iter()
        .find(|t| t.name() == name)
        .ok_or_else(|| srf_core::SrfError::InvalidArgument(format!("unknown kernel '{name}'")))
}

fn parse_sketch(name: &str) -> Result<SketchKind> {
    name.parse()
}

/// Mean sketched inner product of nodes 0 and 1 of a random 8-node feature
/// matrix over `trials` fresh draws, against the exact kernel value.
pub fn kernel_estimate(kernel: &str, sketch: &str, dim: usize, trials: usize, seed: u64) -> Result<KernelEstimate> {
    let tag = parse_kernel(kernel)?;
    let sketch = parse_sketch(sketch)?;
    let trials = trials.clamp(1, 50_000);
    let root = RngState::seed_rng(seed);
    let mut x = Matrix::zeros(8, 3);
    root.split_named("features").fill_gaussian(x.as_mut_slice());
    let kind = kernel_for(tag, &x)?;
    let exact = kappa_exact(kind, x.row(0), x.row(1))?;
    let cfg = SrfConfig {
        kernel: tag,
        dim: dim.max(1),
        bandwidth: Bandwidth::Fixed(kind.bandwidth),
        sketch,
        order: 1,
    };
    let mut acc = Moments::default();
    let mut out = KernelEstimate {
        kernel: tag.name(),
        exact,
        trials: Vec::new(),
        means: Vec::new(),
        std_errors: Vec::new(),
    };
    let mut next = 10;
    for t in 0..trials {
        let rng = root.split(t as u64);
        let z = SrfPipeline::fit(cfg, &[&x], &rng)?.embed(&x, "demo", 0, &rng)?.z;
        acc.push(dot(z.row(0), z.row(1)));
        if t + 1 == next || t + 1 == trials {
            out.trials.push(t + 1);
            out.means.push(acc.mean());
            out.std_errors.push(if t > 0 { acc.std_error() } else { 0.0 });
            next = (next as f64 * 1.5).ceil() as usize;
        }
    }
    Ok(out)
}

#[derive(Debug, Serialize)]
pub struct Uniqueness {
    pub nodes: usize,
    /// Smallest pairwise row distance of the unsketched features (always 0).
    pub min_distance_features: f64,
    pub min_distance_sketched: f64,
    pub distinct_rows: usize,
}

/// All-ones features on `nodes` nodes, before and after one sketch draw.
pub fn uniqueness(nodes: usize, dim: usize, order: usize, seed: u64) -> Result<Uniqueness> {
    let nodes = nodes.clamp(2, 512);
    let x = Matrix::filled(nodes, 1, 1.0);
    let cfg = SrfConfig {
        kernel: KernelTag::Rbf,
        dim: dim.max(1),
        bandwidth: Bandwidth::default(),
        sketch: SketchKind::DenseAg,
        order: order.max(1),
    };
    let rng = RngState::seed_rng(seed);
    let z = SrfPipeline::fit(cfg, &[&x], &rng)?.embed(&x, "ones", 0, &rng)?.z;
    let min_dist = |m: &Matrix| {
        let mut best = f64::INFINITY;
        for i in 0..m.rows() {
            for j in i + 1..m.rows() {
                best = best.min(sq_dist(m.row(i), m.row(j)).sqrt());
            }
        }
        best
    };
    let mut rows: Vec<Vec<u64>> = z.row_iter().map(|r| r.iter().map(|v| v.to_bits()).collect()).collect();
    rows.sort();
    rows.dedup();
    Ok(Uniqueness {
        nodes,
        min_distance_features: min_dist(&x),
        min_distance_sketched: min_dist(&z),
        distinct_rows: rows.len(),
    })
}

#[derive(Debug, Serialize)]
pub struct EnergyCurve {
    pub label: String,
    pub energy: Vec<f64>,
}

/// Per-layer Dirichlet energy of an untrained deep model on `G(n, p)` with
/// Gaussian features: the plain backbone and Laplacian sketches of each order.
pub fn energy_curves(nodes: usize, p: f64, depth: usize, orders: &[usize], seed: u64) -> Result<Vec<EnergyCurve>> {
    let (nodes, depth) = (nodes.clamp(4, 400), depth.clamp(1, 64));
    let root = RngState::seed_rng(seed);
    let g = gen_random_graph(nodes, p, FeatureMode::Gaussian, 8, &mut root.split_named("dataset"))?;
    let mut curves = Vec::new();
    let mut variants: Vec<(String, Option<SrfConfig>)> = vec![("baseline".into(), None)];
    for &k in orders.iter().filter(|&&k| k > 0) {
        let cfg = SrfConfig {
            kernel: KernelTag::Laplacian,
            dim: (64 / k).max(1),
            bandwidth: Bandwidth::default(),
            sketch: SketchKind::DenseAg,
            order: k,
        };
        variants.push((format!("k = {k}"), Some(cfg)));
    }
    for (label, srf) in variants {
        let z = match srf {
            Some(c) => Some(SrfPipeline::fit(c, &[g.features()], &root)?.embed(g.features(), &g.id, 0, &root)?.z),
            None => None,
        };
        let cfg = GnnConfig {
            layers: depth,
            hidden: 32,
            srf_width: srf.map_or(0, |c| c.width()),
            readout: Readout::PerNode,
            aggregation: Aggregation::Mean,
            ..GnnConfig::default()
        };
        let model = init_model(&cfg, 8, 1, &mut root.split_named("init"))?;
        let pass = forward(&model, &g, z.as_ref())?;
        let energy = pass.hidden.iter().map(|h| dirichlet_energy(h, &g)).collect::<Result<_>>()?;
        curves.push(EnergyCurve { label, energy });
    }
    Ok(curves)
}

fn to_js<T: Serialize>(r: Result<T>) -> std::result::Result<String, JsValue> {
    r.and_then(|v| Ok(serde_json::to_string(&v)?))
        .map_err(|e| JsValue::from_str(&e.to_string()))
}

#[wasm_bindgen(js_name = kernelEstimate)]
pub fn kernel_estimate_js(kernel: &str, sketch: &str, dim: usize, trials: usize, seed: u32) -> std::result::Result<String, JsValue> {
    to_js(kernel_estimate(kernel, sketch, dim, trials, seed.into()))
}

#[wasm_bindgen(js_name = uniqueness)]
pub fn uniqueness_js(nodes: usize, dim: usize, order: usize, seed: u32) -> std::result::Result<String, JsValue> {
    to_js(uniqueness(nodes, dim, order, seed.into()))
}

/// `orders` is a comma-separated list such as `"1,2,4,8"`.
#[wasm_bindgen(js_name = energyCurves)]
pub fn energy_curves_js(nodes: usize, p: f64, depth: usize, orders: &str, seed: u32) -> std::result::Result<String, JsValue> {
    let orders: Vec<usize> = orders.split(',').filter_map(|s| s.trim().parse().ok()).collect();
    to_js(energy_curves(nodes, p, depth, &orders, seed.into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn estimate_approaches_exact_value() {
        let e = kernel_estimate("rbf", "dense_ag", 16, 4000, 3).unwrap();
        let (m, se) = (*e.means.last().unwrap(), *e.std_errors.last().unwrap());
        assert!((m - e.exact).abs() <= 4.0 * se, "{m} vs {}", e.exact);
        assert_eq!(*e.trials.last().unwrap(), 4000);
        assert!(kernel_estimate("cosine", "dense_ag", 4, 10, 0).is_err());
        assert!(kernel_estimate("rbf", "fancy", 4, 10, 0).is_err());
    }

    #[test]
    fn sketch_separates_identical_nodes() {
        let u = uniqueness(20, 8, 1, 5).unwrap();
        assert_eq!(u.min_distance_features, 0.0);
        assert!(u.min_distance_sketched > 0.0);
        assert_eq!(u.distinct_rows, 20);
    }

    #[test]
    fn baseline_energy_decays_below_sketched() {
        let curves = energy_curves(60, 0.1, 16, &[1, 4], 2).unwrap();
        assert_eq!(curves.len(), 3);
        assert!(curves.iter().all(|c| c.energy.len() == 17));
        let last = |i: usize| *curves[i].energy.last().unwrap();
        assert!(last(1) > last(0) && last(2) > last(0));
    }

    #[test]
    fn js_wrappers_return_json() {
        let s = energy_curves_js(10, 0.3, 4, "1, 2", 0).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v.as_array().unwrap().len(), 3);
        assert!(uniqueness_js(5, 4, 2, 1).unwrap().contains("distinct_rows"));
    }
}
