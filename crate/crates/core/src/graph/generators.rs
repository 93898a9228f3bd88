//! Synthetic datasets: Tree-NeighborsMatch, circulant skip-link graphs and
//! Erdős–Rényi graphs.

use super::{Dataset, Graph, Splits, Task};
use crate::error::{invalid, Result};
use crate::matrix::Matrix;
use crate::rng::RngState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct TreeConfig {
    pub depth: usize,
    pub train: usize,
    pub test: usize,
}

impl TreeConfig {
    pub fn new(depth: usize) -> Self {
        Self {
            depth,
            train: 32_000,
            test: 4_000,
        }
    }
}

/// Complete binary trees of the given depth in heap order (node 0 is the
/// root, children of `i` are `2i+1` and `2i+2`).
///
/// With `ℓ = 2^depth` leaves the features are `[key one-hot (ℓ) | value
/// one-hot (ℓ)]`. Leaf `m` (left to right) has key `m`; leaf values are a
/// random permutation of the `ℓ` classes. The root carries a random key only
/// and is labeled with the value of the leaf holding that key. Every other
/// node has all-zero features and label `-1`.
pub fn gen_tree_neighbors_match(cfg: TreeConfig, rng: &mut RngState) -> Result<Dataset> {
    let r = cfg.depth;
    if !(2..=8).contains(&r) {
        return Err(invalid(format!("tree depth must be in [2, 8], got {r}")));
    }
    let n = (1usize << (r + 1)) - 1;
    let leaves = 1usize << r;
    let first_leaf = leaves - 1;
    let edges: Vec<(usize, usize)> = (1..n).map(|i| ((i - 1) / 2, i)).collect();
    let total = cfg.train + cfg.test;
    let mut graphs = Vec::with_capacity(total);
    for t in 0..total {
        let values = rng.permutation(leaves);
        let key = rng.below(leaves);
        let mut x = Matrix::zeros(n, 2 * leaves);
        x[(0, key)] = 1.0;
        for (m, &v) in values.iter().enumerate() {
            x[(first_leaf + m, m)] = 1.0;
            x[(first_leaf + m, leaves + v)] = 1.0;
        }
        let mut labels = vec![-1i64; n];
        labels[0] = values[key] as i64;
        graphs.push(Graph::new(format!("tree-r{r}-{t}"), n, &edges, x)?.with_node_labels(labels)?);
    }
    Ok(Dataset {
        task: Task::NodeClassification,
        num_classes: leaves,
        graphs,
        splits: Splits {
            train: (0..cfg.train).collect(),
            val: Vec::new(),
            test: (cfg.train..total).collect(),
        },
    })
}

/// Reads the root label straight off the leaf features, bypassing any model.
pub fn tree_leaf_oracle(g: &Graph) -> Option<usize> {
    let x = g.features();
    let leaves = x.cols() / 2;
    let key = (0..leaves).find(|&k| x[(0, k)] == 1.0)?;
    (1..g.node_count()).find_map(|i| {
        (x[(i, key)] == 1.0 && g.degree(i) == 1)
            .then(|| (0..leaves).find(|&v| x[(i, leaves + v)] == 1.0))
            .flatten()
    })
}

pub const CSL_DEFAULT_NODES: usize = 41;
pub const CSL_DEFAULT_SKIPS: [usize; 10] = [2, 3, 4, 5, 6, 9, 11, 12, 13, 16];
pub const CSL_DEFAULT_PER_CLASS: usize = 15;

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CslConfig {
    pub n_nodes: usize,
    pub skips: Vec<usize>,
    pub per_class: usize,
}

impl Default for CslConfig {
    fn default() -> Self {
        Self {
            n_nodes: CSL_DEFAULT_NODES,
            skips: CSL_DEFAULT_SKIPS.to_vec(),
            per_class: CSL_DEFAULT_PER_CLASS,
        }
    }
}

/// Circulant skip-link graphs: the cycle `0–1–⋯–(n−1)–0` plus chords
/// `{i, (i+s) mod n}`. Class `c` uses `skips[c]`; each copy is a random
/// relabeling. Graphs are featureless (`F = 0`). Splits are stratified,
/// two thirds of each class to train and the rest to test.
pub fn gen_csl(cfg: &CslConfig, rng: &mut RngState) -> Result<Dataset> {
    let n = cfg.n_nodes;
    if n < 5 {
        return Err(invalid(format!("CSL needs at least 5 nodes, got {n}")));
    }
    if cfg.skips.is_empty() || cfg.per_class == 0 {
        return Err(invalid("CSL needs at least one skip length and one graph per class"));
    }
    for (c, &s) in cfg.skips.iter().enumerate() {
        if s < 2 || 2 * s >= n {
            return Err(invalid(format!("skip {s} outside [2, n/2) for n={n}")));
        }
        if cfg.skips[..c].contains(&s) {
            return Err(invalid(format!("duplicate skip length {s}")));
        }
    }
    let mut graphs = Vec::new();
    let mut splits = Splits::default();
    let n_train = (2 * cfg.per_class).div_ceil(3).min(cfg.per_class);
    for (class, &s) in cfg.skips.iter().enumerate() {
        let base: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| [(i, (i + 1) % n), (i, (i + s) % n)])
            .collect();
        let mut order: Vec<usize> = (0..cfg.per_class).collect();
        rng.shuffle(&mut order);
        for copy in 0..cfg.per_class {
            let pi = rng.permutation(n);
            let edges: Vec<_> = base.iter().map(|&(a, b)| (pi[a], pi[b])).collect();
            let idx = graphs.len();
            graphs.push(
                Graph::new(format!("csl-s{s}-{copy}"), n, &edges, Matrix::empty_rows(n))?
                    .with_graph_label(class),
            );
            if order[copy] < n_train {
                splits.train.push(idx);
            } else {
                splits.test.push(idx);
            }
        }
    }
    Ok(Dataset {
        task: Task::GraphClassification,
        num_classes: cfg.skips.len(),
        graphs,
        splits,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMode {
    Gaussian,
    Constant,
}

/// `G(n, p)` with i.i.d. `N(0,1)` or all-ones features.
pub fn gen_random_graph(
    n: usize,
    p: f64,
    mode: FeatureMode,
    f: usize,
    rng: &mut RngState,
) -> Result<Graph> {
    if !(p > 0.0 && p < 1.0) {
        return Err(invalid(format!("edge probability must be in (0, 1), got {p}")));
    }
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.bernoulli(p) {
                edges.push((i, j));
            }
        }
    }
    let x = match mode {
        FeatureMode::Constant => Matrix::filled(n, f, 1.0),
        FeatureMode::Gaussian => {
            let mut x = Matrix::zeros(n, f);
            rng.fill_gaussian(x.as_mut_slice());
            x
        }
    };
    Graph::new(format!("gnp-{n}-{p}"), n, &edges, x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{permute, wl1};

    fn small_trees(r: usize, count: usize, seed: u64) -> Dataset {
        let cfg = TreeConfig {
            depth: r,
            train: count,
            test: 0,
        };
        gen_tree_neighbors_match(cfg, &mut RngState::seed_rng(seed)).unwrap()
    }

    #[test]
    fn tree_sizes() {
        let ds = small_trees(2, 3, 0);
        let g = &ds.graphs[0];
        assert_eq!(g.node_count(), 7);
        assert_eq!((0..7).filter(|&i| g.degree(i) == 1).count(), 4);
        assert_eq!(ds.num_classes, 4);
        assert_eq!(small_trees(3, 1, 0).graphs[0].node_count(), 15);
    }

    #[test]
    fn tree_depth_bounds() {
        let mut rng = RngState::seed_rng(0);
        assert!(gen_tree_neighbors_match(TreeConfig::new(1), &mut rng).is_err());
        assert!(gen_tree_neighbors_match(TreeConfig::new(9), &mut rng).is_err());
    }

    #[test]
    fn tree_leaves_are_r_hops_from_root() {
        let g = &small_trees(3, 1, 1).graphs[0];
        // BFS distances
        let mut dist = vec![usize::MAX; g.node_count()];
        dist[0] = 0;
        let mut queue = std::collections::VecDeque::from([0]);
        while let Some(u) = queue.pop_front() {
            for &v in g.neighbors(u) {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        for i in 0..g.node_count() {
            if g.degree(i) == 1 {
                assert_eq!(dist[i], 3);
            }
        }
    }

    #[test]
    fn tree_labels_match_leaf_oracle() {
        for r in 2..=5 {
            let ds = small_trees(r, 200, r as u64);
            ds.validate().unwrap();
            for g in &ds.graphs {
                let label = g.node_labels.as_ref().unwrap()[0] as usize;
                assert_eq!(tree_leaf_oracle(g), Some(label));
            }
        }
    }

    #[test]
    fn csl_regular_with_expected_edges() {
        let cfg = CslConfig {
            n_nodes: 41,
            skips: vec![2],
            per_class: 2,
        };
        let ds = gen_csl(&cfg, &mut RngState::seed_rng(0)).unwrap();
        for g in &ds.graphs {
            assert_eq!(g.edge_count(), 82);
            assert!((0..41).all(|i| g.degree(i) == 4));
        }
        assert_eq!(ds.graphs[0].degree_sequence(), ds.graphs[1].degree_sequence());
        assert_eq!(wl1(&ds.graphs[0], 50), wl1(&ds.graphs[1], 50));
    }

    #[test]
    fn csl_defaults_and_validation() {
        let ds = gen_csl(&CslConfig::default(), &mut RngState::seed_rng(1)).unwrap();
        assert_eq!(ds.graphs.len(), 150);
        assert_eq!(ds.splits.train.len(), 100);
        assert_eq!(ds.splits.test.len(), 50);
        ds.validate().unwrap();
        let bad = |skips: Vec<usize>| {
            gen_csl(
                &CslConfig {
                    n_nodes: 41,
                    skips,
                    per_class: 1,
                },
                &mut RngState::seed_rng(0),
            )
            .is_err()
        };
        assert!(bad(vec![1]));
        assert!(bad(vec![21]));
        assert!(bad(vec![3, 3]));
    }

    #[test]
    fn gnp_edge_count_within_binomial_band() {
        let g = gen_random_graph(100, 0.05, FeatureMode::Gaussian, 3, &mut RngState::seed_rng(7)).unwrap();
        let pairs = 4950.0;
        let mean = pairs * 0.05;
        let sd = (pairs * 0.05 * 0.95f64).sqrt();
        assert!((g.edge_count() as f64 - mean).abs() <= 4.0 * sd);
    }

    #[test]
    fn gnp_constant_and_determinism() {
        let g = gen_random_graph(20, 0.3, FeatureMode::Constant, 2, &mut RngState::seed_rng(1)).unwrap();
        assert!(g.features().all_rows_identical());
        let a = gen_random_graph(20, 0.3, FeatureMode::Gaussian, 2, &mut RngState::seed_rng(2)).unwrap();
        let b = gen_random_graph(20, 0.3, FeatureMode::Gaussian, 2, &mut RngState::seed_rng(2)).unwrap();
        assert_eq!(a, b);
        assert!(gen_random_graph(20, 1.0, FeatureMode::Constant, 2, &mut RngState::seed_rng(2)).is_err());
    }

    #[test]
    fn generators_survive_relabeling() {
        let mut rng = RngState::seed_rng(4);
        let g = &small_trees(3, 1, 9).graphs[0];
        let h = permute(g, &rng.permutation(g.node_count())).unwrap();
        assert_eq!(wl1(g, 50), wl1(&h, 50));
    }
}
