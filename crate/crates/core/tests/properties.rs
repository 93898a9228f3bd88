use proptest::prelude::*;

use srf_core::gnn::{dirichlet_energy, forward, init_model, GnnConfig};
use srf_core::graph::{
    dataset_from_json, dataset_to_json, gen_random_graph, invert_permutation, permute, wl1, Dataset, FeatureMode, Graph, Splits, Task,
};
use srf_core::kernels::{fit_feature_map, kappa_exact, KernelKind, KernelTag};
use srf_core::srm::{DiagonalLaw, StructuredRandomMatrix};
use srf_core::{Matrix, RngState};

fn graph_strategy() -> impl Strategy<Value = (Graph, u64)> {
    (2usize..14, 0.1f64..0.9, 1usize..4, any::<u64>()).prop_map(|(n, p, f, seed)| {
        let g = gen_random_graph(n, p, FeatureMode::Gaussian, f, &mut RngState::seed_rng(seed)).unwrap();
        (g, seed)
    })
}

fn kind_strategy() -> impl Strategy<Value = KernelKind> {
    prop_oneof![
        Just(KernelKind::linear()),
        (0.2f64..5.0).prop_map(|s| KernelKind::rbf(s).unwrap()),
        (0.2f64..5.0).prop_map(|s| KernelKind::laplacian(s).unwrap()),
    ]
}

fn vec3() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, 3)
}

/// Cholesky of `k + jitter·I`; succeeds iff the smallest eigenvalue exceeds `-jitter`.
fn cholesky_ok(k: &Matrix, jitter: f64) -> bool {
    let n = k.rows();
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|p| l[(i, p)] * l[(j, p)]).sum();
            if i == j {
                let d = k[(i, i)] + jitter - s;
                if d <= 0.0 {
                    return false;
                }
                l[(i, i)] = d.sqrt();
            } else {
                l[(i, j)] = (k[(i, j)] - s) / l[(j, j)];
            }
        }
    }
    true
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernel_is_symmetric(kind in kind_strategy(), x in vec3(), y in vec3()) {
        prop_assert_eq!(kappa_exact(kind, &x, &y).unwrap(), kappa_exact(kind, &y, &x).unwrap());
    }

    #[test]
    fn gram_matrix_is_psd(kind in kind_strategy(), pts in prop::collection::vec(vec3(), 2..16)) {
        let n = pts.len();
        let mut k = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                k[(i, j)] = kappa_exact(kind, &pts[i], &pts[j]).unwrap();
            }
        }
        prop_assert!(cholesky_ok(&k, 1e-9));
    }

    #[test]
    fn cosine_features_are_bounded(seed in any::<u64>(), x in vec3(), d in 1usize..32) {
        let kind = KernelKind::rbf(1.0).unwrap();
        let map = fit_feature_map(&mut RngState::seed_rng(seed), kind, 3, d).unwrap();
        let mut out = vec![0.0; d];
        map.embed_row(&x, &mut out);
        let bound = (2.0 / d as f64).sqrt();
        prop_assert!(out.iter().all(|v| v.abs() <= bound));
        prop_assert!(map.offsets.iter().all(|b| (0.0..std::f64::consts::TAU).contains(b)));
    }

    #[test]
    fn embedding_is_row_local((g, seed) in graph_strategy(), kind in kind_strategy()) {
        let x = g.features();
        let map = fit_feature_map(&mut RngState::seed_rng(seed ^ 1), kind, x.cols(), 8).unwrap();
        let pi = RngState::seed_rng(seed ^ 2).permutation(x.rows());
        let direct = map.embed(&x.gather_rows(&pi)).unwrap();
        prop_assert_eq!(direct, map.embed(x).unwrap().gather_rows(&pi));
    }

    #[test]
    fn permutation_roundtrip((g, seed) in graph_strategy()) {
        let pi = RngState::seed_rng(seed).permutation(g.node_count());
        let back = permute(&permute(&g, &pi).unwrap(), &invert_permutation(&pi).unwrap()).unwrap();
        prop_assert_eq!(back, g);
    }

    #[test]
    fn wl_colors_ignore_node_order((g, seed) in graph_strategy()) {
        let pi = RngState::seed_rng(seed).permutation(g.node_count());
        prop_assert_eq!(wl1(&g, 20), wl1(&permute(&g, &pi).unwrap(), 20));
    }

    #[test]
    fn dataset_json_roundtrip(graphs in prop::collection::vec(graph_strategy(), 1..5)) {
        let graphs: Vec<Graph> = graphs.into_iter().map(|(g, s)| g.with_graph_label((s % 3) as usize)).collect();
        let ds = Dataset {
            task: Task::GraphClassification,
            num_classes: 3,
            splits: Splits { train: (0..graphs.len()).collect(), ..Splits::default() },
            graphs,
        };
        let text = dataset_to_json(&ds).unwrap();
        prop_assert_eq!(dataset_from_json(&text).unwrap(), ds);
    }

    #[test]
    fn energy_is_nonnegative_and_shift_invariant((g, seed) in graph_strategy(), shift in -5.0f64..5.0) {
        let mut h = Matrix::zeros(g.node_count(), 3);
        RngState::seed_rng(seed).fill_gaussian(h.as_mut_slice());
        let e = dirichlet_energy(&h, &g).unwrap();
        prop_assert!(e >= 0.0);
        let mut shifted = h.clone();
        shifted.as_mut_slice().iter_mut().for_each(|v| *v += shift);
        prop_assert!((dirichlet_energy(&shifted, &g).unwrap() - e).abs() <= 1e-9 * (1.0 + e));
    }

    #[test]
    fn backbone_is_permutation_equivariant((g, seed) in graph_strategy()) {
        let cfg = GnnConfig { layers: 2, hidden: 8, readout: srf_core::gnn::Readout::PerNode, ..GnnConfig::default() };
        let m = init_model(&cfg, g.feature_dim(), 3, &mut RngState::seed_rng(seed)).unwrap();
        let pi = RngState::seed_rng(seed ^ 3).permutation(g.node_count());
        let inv = invert_permutation(&pi).unwrap();
        let a = forward(&m, &g, None).unwrap().logits.gather_rows(&inv);
        let b = forward(&m, &permute(&g, &pi).unwrap(), None).unwrap().logits;
        prop_assert!(a.max_abs_diff(&b) <= 1e-9 * (1.0 + a.frobenius_norm()));
    }

    #[test]
    fn power_of_two_srm_with_signs_is_orthogonal(log_n in 0u32..7, seed in any::<u64>()) {
        let n = 1usize << log_n;
        let mut rng = RngState::seed_rng(seed);
        let m = StructuredRandomMatrix::sample(&mut rng, n, 3, DiagonalLaw::Rademacher).unwrap();
        let mut v = vec![0.0; n];
        rng.fill_gaussian(&mut v);
        let out = m.apply(&v).unwrap();
        let (a, b): (f64, f64) = (v.iter().map(|x| x * x).sum(), out.iter().map(|x| x * x).sum());
        prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));
    }
}

#[test]
fn kernel_names_are_distinct() {
    let names: std::collections::HashSet<_> = KernelTag::ALL.iter().map(|t| t.name()).collect();
    assert_eq!(names.len(), 3);
}
