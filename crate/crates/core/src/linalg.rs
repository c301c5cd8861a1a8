//! Dense symmetric eigen-solver for the small Gram systems behind the
//! partition-local regressions (at most a few dozen unknowns).

use alloc::vec;
use alloc::vec::Vec;

use crate::numeric::{abs, sqrt};

/// Eigen-decomposition `A = V diag(values) V^T` of a symmetric matrix.
pub(crate) struct SymmetricEigen {
    pub values: Vec<f64>,
    /// Column-major: column `k` is the eigenvector for `values[k]`.
    pub vectors: Vec<f64>,
    n: usize,
}

impl SymmetricEigen {
    /// Cyclic Jacobi rotations on a row-major symmetric `n x n` matrix.
    pub fn new(matrix: &[f64], n: usize) -> Self {
        let mut a = matrix.to_vec();
        let mut v = vec![0.0; n * n];
        for i in 0..n {
            v[i * n + i] = 1.0;
        }
        let norm = sqrt(a.iter().map(|x| x * x).sum::<f64>());
        for _sweep in 0..100 {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[i * n + j] * a[i * n + j])
                .sum();
            if sqrt(off) <= 1e-15 * norm || off == 0.0 {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = a[p * n + q];
                    if apq == 0.0 {
                        continue;
                    }
                    let app = a[p * n + p];
                    let aqq = a[q * n + q];
                    let theta = (aqq - app) / (2.0 * apq);
                    let t = if theta >= 0.0 {
                        1.0 / (theta + sqrt(1.0 + theta * theta))
                    } else {
                        -1.0 / (-theta + sqrt(1.0 + theta * theta))
                    };
                    let c = 1.0 / sqrt(1.0 + t * t);
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[k * n + p];
                        let akq = a[k * n + q];
                        a[k * n + p] = c * akp - s * akq;
                        a[k * n + q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[p * n + k];
                        let aqk = a[q * n + k];
                        a[p * n + k] = c * apk - s * aqk;
                        a[q * n + k] = s * apk + c * aqk;
                    }
                    for k in 0..n {
                        let vkp = v[k * n + p];
                        let vkq = v[k * n + q];
                        v[k * n + p] = c * vkp - s * vkq;
                        v[k * n + q] = s * vkp + c * vkq;
                    }
                }
            }
        }
        let values = (0..n).map(|i| a[i * n + i]).collect();
        // `v` is row-major with eigenvectors as columns; transpose into
        // column-major storage so each eigenvector is contiguous.
        let mut vectors = vec![0.0; n * n];
        for r in 0..n {
            for c in 0..n {
                vectors[c * n + r] = v[r * n + c];
            }
        }
        Self { values, vectors, n }
    }

    pub fn vector(&self, k: usize) -> &[f64] {
        &self.vectors[k * self.n..(k + 1) * self.n]
    }

    /// Minimum-norm solution of `(A + shift I) x = b`.
    ///
    /// Directions whose shifted eigenvalue is negligible relative to the
    /// largest one are dropped.
    pub fn solve_shifted(&self, b: &[f64], shift: f64) -> Vec<f64> {
        let n = self.n;
        let top = self
            .values
            .iter()
            .map(|&e| abs(e + shift))
            .fold(0.0f64, f64::max);
        let cutoff = top * 1e-12 * (n.max(1) as f64);
        let mut x = vec![0.0; n];
        for k in 0..n {
            let lambda = self.values[k] + shift;
            if lambda <= cutoff || lambda <= 0.0 {
                continue;
            }
            let vk = self.vector(k);
            let proj: f64 = vk.iter().zip(b).map(|(v, b)| v * b).sum();
            let coef = proj / lambda;
            for (xi, vi) in x.iter_mut().zip(vk) {
                *xi += coef * vi;
            }
        }
        x
    }
}
