//! Structured random matrices: products of normalized Hadamard transforms and
//! random diagonals, `M = H·D_B ⋯ H·D_1`, applied in `O(n log n)`.
//!
//! Sizes that are not a power of two are zero-padded to the next power of
//! two and truncated back, with a `√(n′/n)` rescale so that
//! `E‖M v‖² = ‖v‖²` still holds.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Result};
use crate::matrix::Matrix;
use crate::rng::RngState;

pub const DEFAULT_BLOCKS: usize = 3;

/// In-place fast Walsh–Hadamard transform, scaled by `1/√len` so the
/// transform is orthogonal. `x.len()` must be a power of two.
pub fn fwht_normalized(x: &mut [f64]) {
    let n = x.len();
    assert!(n.is_power_of_two(), "Hadamard length must be a power of two");
    let mut h = 1;
    while h < n {
        for start in (0..n).step_by(2 * h) {
            for i in start..start + h {
                let a = x[i];
                let b = x[i + h];
                x[i] = a + b;
                x[i + h] = a - b;
            }
        }
        h *= 2;
    }
    let scale = 1.0 / (n as f64).sqrt();
    for v in x {
        *v *= scale;
    }
}

/// Distribution of the diagonal entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagonalLaw {
    /// Every diagonal is a uniform random sign vector. For power-of-two `n`
    /// the product is exactly orthogonal.
    Rademacher,
    /// The innermost diagonal is i.i.d. `N(0,1)`, the rest are signs. Keeps
    /// `E[M] = 0` and `E‖Mv‖² = ‖v‖²` but gives `M·v` a continuous law, so
    /// ties between output coordinates have probability zero.
    GaussianFirst,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuredRandomMatrix {
    n: usize,
    padded: usize,
    law: DiagonalLaw,
    /// `diagonals[0]` is applied first.
    diagonals: Vec<Vec<f64>>,
}

pub fn build_srm(rng: &mut RngState, n: usize, blocks: usize) -> Result<StructuredRandomMatrix> {
    StructuredRandomMatrix::sample(rng, n, blocks, DiagonalLaw::Rademacher)
}

impl StructuredRandomMatrix {
    pub fn sample(
        rng: &mut RngState,
        n: usize,
        blocks: usize,
        law: DiagonalLaw,
    ) -> Result<Self> {
        if n == 0 || blocks == 0 {
            return Err(invalid(format!(
                "SRM needs n >= 1 and blocks >= 1, got n={n}, blocks={blocks}"
            )));
        }
        let padded = n.next_power_of_two();
        let diagonals = (0..blocks)
            .map(|b| {
                (0..padded)
                    .map(|_| match (law, b) {
                        (DiagonalLaw::GaussianFirst, 0) => rng.gaussian(),
                        _ => rng.rademacher(),
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            n,
            padded,
            law,
            diagonals,
        })
    }

    /// Build from explicit diagonals, each of padded length.
    pub fn from_diagonals(n: usize, diagonals: Vec<Vec<f64>>, law: DiagonalLaw) -> Result<Self> {
        if n == 0 || diagonals.is_empty() {
            return Err(invalid("SRM needs n >= 1 and at least one diagonal"));
        }
        let padded = n.next_power_of_two();
        for d in &diagonals {
            check_dim("SRM diagonal", padded, d.len())?;
        }
        Ok(Self {
            n,
            padded,
            law,
            diagonals,
        })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn padded_size(&self) -> usize {
        self.padded
    }

    pub fn blocks(&self) -> usize {
        self.diagonals.len()
    }

    pub fn law(&self) -> DiagonalLaw {
        self.law
    }

    pub fn diagonals(&self) -> &[Vec<f64>] {
        &self.diagonals
    }

    fn output_scale(&self) -> f64 {
        (self.padded as f64 / self.n as f64).sqrt()
    }

    /// `M·v` using `scratch` (length `padded`) as workspace.
    fn apply_into(&self, v: &[f64], scratch: &mut [f64], out: &mut [f64]) {
        scratch[..self.n].copy_from_slice(v);
        scratch[self.n..].fill(0.0);
        for diag in &self.diagonals {
            for (s, d) in scratch.iter_mut().zip(diag) {
                *s *= d;
            }
            fwht_normalized(scratch);
        }
        let scale = self.output_scale();
        for (o, s) in out.iter_mut().zip(&scratch[..self.n]) {
            *o = s * scale;
        }
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_dim("SRM apply", self.n, v.len())?;
        let mut scratch = vec![0.0; self.padded];
        let mut out = vec![0.0; self.n];
        self.apply_into(v, &mut scratch, &mut out);
        Ok(out)
    }

    /// `M·A`, transforming each column of `a` independently.
    pub fn apply_columns(&self, a: &Matrix) -> Result<Matrix> {
        check_dim("SRM apply_columns", self.n, a.rows())?;
        let mut out = Matrix::zeros(a.rows(), a.cols());
        let mut scratch = vec![0.0; self.padded];
        let mut col = vec![0.0; self.n];
        let mut res = vec![0.0; self.n];
        for j in 0..a.cols() {
            for (i, c) in col.iter_mut().enumerate() {
                *c = a[(i, j)];
            }
            self.apply_into(&col, &mut scratch, &mut res);
            for (i, r) in res.iter().enumerate() {
                out[(i, j)] = *r;
            }
        }
        Ok(out)
    }

    /// Dense `n×n` materialization by transforming basis vectors.
    pub fn to_dense(&self) -> Matrix {
        let mut m = Matrix::zeros(self.n, self.n);
        let mut scratch = vec![0.0; self.padded];
        let mut e = vec![0.0; self.n];
        let mut res = vec![0.0; self.n];
        for j in 0..self.n {
            e.fill(0.0);
            e[j] = 1.0;
            self.apply_into(&e, &mut scratch, &mut res);
            for (i, r) in res.iter().enumerate() {
                m[(i, j)] = *r;
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Sylvester construction, built without the butterfly.
    fn dense_hadamard(n: usize) -> Matrix {
        let mut h = Matrix::from_rows(&[[1.0]]).unwrap();
        while h.rows() < n {
            let m = h.rows();
            let mut next = Matrix::zeros(2 * m, 2 * m);
            for i in 0..m {
                for j in 0..m {
                    let v = h[(i, j)];
                    next[(i, j)] = v;
                    next[(i, j + m)] = v;
                    next[(i + m, j)] = v;
                    next[(i + m, j + m)] = -v;
                }
            }
            h = next;
        }
        let s = 1.0 / (n as f64).sqrt();
        for v in h.as_mut_slice() {
            *v *= s;
        }
        h
    }

    fn dense_oracle(srm: &StructuredRandomMatrix) -> Matrix {
        let p = srm.padded_size();
        let h = dense_hadamard(p);
        let mut m = Matrix::identity(p);
        for diag in srm.diagonals() {
            let mut d = Matrix::zeros(p, p);
            for (i, v) in diag.iter().enumerate() {
                d[(i, i)] = *v;
            }
            m = h.matmul(&d.matmul(&m).unwrap()).unwrap();
        }
        let n = srm.size();
        let scale = (p as f64 / n as f64).sqrt();
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] = m[(i, j)] * scale;
            }
        }
        out
    }

    #[test]
    fn unit_vector_keeps_unit_norm() {
        let mut rng = RngState::seed_rng(1);
        let srm = build_srm(&mut rng, 4, 3).unwrap();
        let out = srm.apply(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        let norm = out.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-15, "norm {norm}");
    }

    #[test]
    fn non_power_of_two_pads_and_truncates() {
        let mut rng = RngState::seed_rng(2);
        let srm = build_srm(&mut rng, 5, 3).unwrap();
        assert_eq!(srm.padded_size(), 8);
        assert_eq!(srm.apply(&[1.0; 5]).unwrap().len(), 5);
        assert!(srm.apply(&[1.0; 4]).is_err());
    }

    #[test]
    fn rejects_empty() {
        let mut rng = RngState::seed_rng(0);
        assert!(build_srm(&mut rng, 0, 3).is_err());
        assert!(build_srm(&mut rng, 4, 0).is_err());
    }

    #[test]
    fn fast_apply_matches_dense_materialization() {
        let mut rng = RngState::seed_rng(3);
        for n in 1..=64 {
            for law in [DiagonalLaw::Rademacher, DiagonalLaw::GaussianFirst] {
                let srm = StructuredRandomMatrix::sample(&mut rng, n, DEFAULT_BLOCKS, law).unwrap();
                let dense = dense_oracle(&srm);
                for _ in 0..100 {
                    let v: Vec<f64> = (0..n).map(|_| rng.gaussian()).collect();
                    let fast = srm.apply(&v).unwrap();
                    let slow: Vec<f64> = (0..n)
                        .map(|i| crate::matrix::dot(dense.row(i), &v))
                        .collect();
                    let err = fast.iter().zip(&slow).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                    let scale = slow.iter().map(|b| b * b).sum::<f64>().sqrt().max(1e-300);
                    assert!(err / scale < 1e-10, "n={n} rel err {}", err / scale);
                }
            }
        }
    }

    #[test]
    fn power_of_two_rademacher_is_isometry() {
        let mut rng = RngState::seed_rng(4);
        for n in [1, 2, 8, 64, 256] {
            let srm = build_srm(&mut rng, n, 3).unwrap();
            let v: Vec<f64> = (0..n).map(|_| rng.gaussian()).collect();
            let out = srm.apply(&v).unwrap();
            let a: f64 = v.iter().map(|x| x * x).sum();
            let b: f64 = out.iter().map(|x| x * x).sum();
            assert!((a - b).abs() < 1e-10 * a, "n={n}");
        }
    }

    #[test]
    fn padded_norm_is_preserved_in_expectation() {
        let mut rng = RngState::seed_rng(5);
        let n = 5;
        let v = [0.3, -1.0, 0.7, 0.2, 1.5];
        let target: f64 = v.iter().map(|x| x * x).sum();
        let trials = 20_000;
        let samples: Vec<f64> = (0..trials)
            .map(|_| {
                let srm = build_srm(&mut rng, n, 3).unwrap();
                srm.apply(&v).unwrap().iter().map(|x| x * x).sum()
            })
            .collect();
        let mean = samples.iter().sum::<f64>() / trials as f64;
        let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
        let se = (var / trials as f64).sqrt();
        assert!((mean - target).abs() < 4.0 * se, "mean {mean} target {target} se {se}");
    }

    #[test]
    fn to_dense_agrees_with_oracle() {
        let mut rng = RngState::seed_rng(6);
        let srm = build_srm(&mut rng, 8, 3).unwrap();
        assert!(srm.to_dense().max_abs_diff(&dense_oracle(&srm)) < 1e-12);
    }
}
