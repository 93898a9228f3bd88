//! Graph data model, permutations and datasets.

mod generators;
mod io;
mod wl;

pub use generators::{
    gen_csl, gen_random_graph, gen_tree_neighbors_match, tree_leaf_oracle, CslConfig,
    FeatureMode, TreeConfig, CSL_DEFAULT_NODES, CSL_DEFAULT_PER_CLASS, CSL_DEFAULT_SKIPS,
};
pub use io::{
    dataset_from_json, dataset_to_json, load_graph_json, save_graph_json, DatasetFile, GraphRecord,
};
pub use wl::{wl1, wl1_distinguishable, WlHistogram};

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Result};
use crate::matrix::Matrix;

/// Undirected simple graph with dense node features.
///
/// Edges are stored once as `(i, j)` with `i < j`, sorted; a CSR neighbor
/// index is built on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    pub id: String,
    n: usize,
    edges: Vec<(usize, usize)>,
    x: Matrix,
    /// Per-node labels; negative entries mark unlabeled nodes.
    pub node_labels: Option<Vec<i64>>,
    pub graph_label: Option<usize>,
    offsets: Vec<usize>,
    adjacency: Vec<usize>,
}

impl Graph {
    /// Validates and normalizes `edges`: endpoints must lie in `[0, n)` and
    /// self-loops are rejected; `(j, i)` duplicates of `(i, j)` collapse.
    pub fn new(id: impl Into<String>, n: usize, edges: &[(usize, usize)], x: Matrix) -> Result<Self> {
        let id = id.into();
        check_dim("Graph feature rows", n, x.rows())?;
        let mut norm = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(invalid(format!(
                    "graph '{id}': edge ({a}, {b}) out of range for {n} nodes"
                )));
            }
            if a == b {
                return Err(invalid(format!("graph '{id}': self-loop at node {a}")));
            }
            norm.push((a.min(b), a.max(b)));
        }
        norm.sort_unstable();
        norm.dedup();

        let mut degree = vec![0usize; n];
        for &(a, b) in &norm {
            degree[a] += 1;
            degree[b] += 1;
        }
        let mut offsets = vec![0usize; n + 1];
        for i in 0..n {
            offsets[i + 1] = offsets[i] + degree[i];
        }
        let mut fill = offsets.clone();
        let mut adjacency = vec![0usize; offsets[n]];
        for &(a, b) in &norm {
            adjacency[fill[a]] = b;
            fill[a] += 1;
            adjacency[fill[b]] = a;
            fill[b] += 1;
        }
        for i in 0..n {
            adjacency[offsets[i]..offsets[i + 1]].sort_unstable();
        }
        Ok(Self {
            id,
            n,
            edges: norm,
            x,
            node_labels: None,
            graph_label: None,
            offsets,
            adjacency,
        })
    }

    pub fn with_graph_label(mut self, label: usize) -> Self {
        self.graph_label = Some(label);
        self
    }

    pub fn with_node_labels(mut self, labels: Vec<i64>) -> Result<Self> {
        check_dim("Graph node labels", self.n, labels.len())?;
        self.node_labels = Some(labels);
        Ok(self)
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn features(&self) -> &Matrix {
        &self.x
    }

    pub fn feature_dim(&self) -> usize {
        self.x.cols()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn degree_sequence(&self) -> Vec<usize> {
        let mut d: Vec<usize> = (0..self.n).map(|i| self.degree(i)).collect();
        d.sort_unstable();
        d
    }

    /// Nodes with a non-negative label.
    pub fn labeled_nodes(&self) -> Vec<(usize, usize)> {
        self.node_labels
            .as_ref()
            .map(|ls| {
                ls.iter()
                    .enumerate()
                    .filter(|(_, &l)| l >= 0)
                    .map(|(i, &l)| (i, l as usize))
                    .collect()
            })
            .unwrap_or_default()
    }
}

/// `pi[i]` is the new index of node `i`.
pub fn permute(g: &Graph, pi: &[usize]) -> Result<Graph> {
    let n = g.node_count();
    check_dim("permutation length", n, pi.len())?;
    let inv = invert_permutation(pi)?;
    let edges: Vec<(usize, usize)> = g.edges().iter().map(|&(a, b)| (pi[a], pi[b])).collect();
    let x = g.features().gather_rows(&inv);
    let mut out = Graph::new(g.id.clone(), n, &edges, x)?;
    out.graph_label = g.graph_label;
    if let Some(labels) = &g.node_labels {
        out.node_labels = Some(inv.iter().map(|&old| labels[old]).collect());
    }
    Ok(out)
}

pub fn invert_permutation(pi: &[usize]) -> Result<Vec<usize>> {
    let n = pi.len();
    let mut inv = vec![usize::MAX; n];
    for (i, &p) in pi.iter().enumerate() {
        if p >= n || inv[p] != usize::MAX {
            return Err(invalid("permutation is not a bijection"));
        }
        inv[p] = i;
    }
    Ok(inv)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    GraphClassification,
    NodeClassification,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Splits {
    #[serde(default)]
    pub train: Vec<usize>,
    #[serde(default)]
    pub val: Vec<usize>,
    #[serde(default)]
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub task: Task,
    pub num_classes: usize,
    pub graphs: Vec<Graph>,
    pub splits: Splits,
}

impl Dataset {
    pub fn validate(&self) -> Result<()> {
        let n = self.graphs.len();
        let mut seen = vec![false; n];
        for idx in self
            .splits
            .train
            .iter()
            .chain(&self.splits.val)
            .chain(&self.splits.test)
        {
            if *idx >= n {
                return Err(invalid(format!("split index {idx} out of range ({n} graphs)")));
            }
            if std::mem::replace(&mut seen[*idx], true) {
                return Err(invalid(format!("graph {idx} appears in more than one split slot")));
            }
        }
        for g in &self.graphs {
            if let Some(y) = g.graph_label {
                if y >= self.num_classes {
                    return Err(invalid(format!(
                        "graph '{}': label {y} outside [0, {})",
                        g.id, self.num_classes
                    )));
                }
            }
            for (_, y) in g.labeled_nodes() {
                if y >= self.num_classes {
                    return Err(invalid(format!(
                        "graph '{}': node label {y} outside [0, {})",
                        g.id, self.num_classes
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn feature_dim(&self) -> usize {
        self.graphs.first().map_or(0, Graph::feature_dim)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngState;

    fn path(n: usize) -> Graph {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Graph::new("p", n, &edges, Matrix::zeros(n, 1)).unwrap()
    }

    #[test]
    fn edges_normalized_and_validated() {
        let g = Graph::new("g", 3, &[(1, 0), (0, 1), (2, 1)], Matrix::zeros(3, 0)).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (1, 2)]);
        assert_eq!(g.neighbors(1), &[0, 2]);
        assert!(Graph::new("g", 3, &[(0, 3)], Matrix::zeros(3, 0)).is_err());
        assert!(Graph::new("g", 3, &[(1, 1)], Matrix::zeros(3, 0)).is_err());
        assert!(Graph::new("g", 3, &[], Matrix::zeros(2, 0)).is_err());
    }

    #[test]
    fn identity_and_swap_permutations() {
        let g = path(2);
        assert_eq!(permute(&g, &[0, 1]).unwrap(), g);
        assert_eq!(permute(&g, &[1, 0]).unwrap().edges(), g.edges());
        assert!(permute(&g, &[0, 0]).is_err());
        assert!(permute(&g, &[0]).is_err());
    }

    #[test]
    fn permutation_roundtrip() {
        let mut rng = RngState::seed_rng(3);
        let g = gen_random_graph(30, 0.2, FeatureMode::Gaussian, 4, &mut rng).unwrap();
        let pi = rng.permutation(30);
        let inv = invert_permutation(&pi).unwrap();
        let back = permute(&permute(&g, &pi).unwrap(), &inv).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn dataset_split_validation() {
        let g = path(3).with_graph_label(1);
        let mut ds = Dataset {
            task: Task::GraphClassification,
            num_classes: 2,
            graphs: vec![g.clone(), g],
            splits: Splits {
                train: vec![0],
                val: vec![],
                test: vec![1],
            },
        };
        assert!(ds.validate().is_ok());
        ds.splits.test = vec![0];
        assert!(ds.validate().is_err());
        ds.splits.test = vec![5];
        assert!(ds.validate().is_err());
        ds.splits.test = vec![1];
        ds.num_classes = 1;
        assert!(ds.validate().is_err());
    }
}
