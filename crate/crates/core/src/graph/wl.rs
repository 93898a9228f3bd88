//! 1-WL color refinement.

use super::Graph;

/// Sorted `(color, count)` pairs of the final coloring.
pub type WlHistogram = Vec<(u64, usize)>;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn mix(h: u64, v: u64) -> u64 {
    v.to_le_bytes()
        .iter()
        .fold(h, |acc, &b| (acc ^ b as u64).wrapping_mul(FNV_PRIME))
}

fn class_count(colors: &[u64]) -> usize {
    let mut c = colors.to_vec();
    c.sort_unstable();
    c.dedup();
    c.len()
}

/// Refines from uniform colors until the number of color classes stops
/// growing or `max_iters` rounds have run. Colors are stable hashes of
/// `(round, own color, sorted neighbor colors)`, so histograms from
/// different graphs are directly comparable.
pub fn wl1(g: &Graph, max_iters: usize) -> WlHistogram {
    let n = g.node_count();
    let mut colors = vec![mix(FNV_OFFSET, 0); n];
    let mut classes = class_count(&colors);
    let mut scratch = Vec::new();
    for round in 1..=max_iters {
        let next: Vec<u64> = (0..n)
            .map(|i| {
                scratch.clear();
                scratch.extend(g.neighbors(i).iter().map(|&j| colors[j]));
                scratch.sort_unstable();
                let h = mix(mix(FNV_OFFSET, round as u64), colors[i]);
                scratch.iter().fold(mix(h, scratch.len() as u64), |acc, &c| mix(acc, c))
            })
            .collect();
        let next_classes = class_count(&next);
        colors = next;
        if next_classes == classes {
            break;
        }
        classes = next_classes;
    }
    colors.sort_unstable();
    let mut hist: WlHistogram = Vec::new();
    for c in colors {
        match hist.last_mut() {
            Some((last, count)) if *last == c => *count += 1,
            _ => hist.push((c, 1)),
        }
    }
    hist
}

pub fn wl1_distinguishable(a: &Graph, b: &Graph, max_iters: usize) -> bool {
    wl1(a, max_iters) != wl1(b, max_iters)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{gen_csl, gen_random_graph, permute, CslConfig, FeatureMode};
    use crate::matrix::Matrix;
    use crate::rng::RngState;

    fn g(n: usize, edges: &[(usize, usize)]) -> Graph {
        Graph::new("t", n, edges, Matrix::zeros(n, 0)).unwrap()
    }

    #[test]
    fn triangle_vs_path() {
        let tri = g(3, &[(0, 1), (1, 2), (0, 2)]);
        let path = g(3, &[(0, 1), (1, 2)]);
        assert!(wl1_distinguishable(&tri, &path, 10));
    }

    #[test]
    fn hexagon_vs_two_triangles_indistinguishable() {
        let hex = g(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (0, 5)]);
        let two = g(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]);
        assert!(!wl1_distinguishable(&hex, &two, 10));
    }

    #[test]
    fn csl_classes_collapse_to_one_color() {
        let cfg = CslConfig {
            per_class: 1,
            ..CslConfig::default()
        };
        let ds = gen_csl(&cfg, &mut RngState::seed_rng(0)).unwrap();
        let h0 = wl1(&ds.graphs[0], 100);
        assert_eq!(h0.len(), 1);
        for other in &ds.graphs[1..] {
            assert_eq!(wl1(other, 100), h0);
        }
    }

    #[test]
    fn invariant_under_relabeling() {
        let mut rng = RngState::seed_rng(11);
        for _ in 0..10 {
            let a = gen_random_graph(25, 0.15, FeatureMode::Constant, 1, &mut rng).unwrap();
            let b = permute(&a, &rng.permutation(25)).unwrap();
            assert_eq!(wl1(&a, 50), wl1(&b, 50));
        }
    }
}
