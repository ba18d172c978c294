use std::collections::hash_map::DefaultHasher;
use std::collections::VecDeque;
use std::hash::{Hash, Hasher};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Cholesky factor `P A Pᵀ = L Lᵀ` in band storage, with a reverse
/// Cuthill-McKee ordering `P` to keep the band narrow. Small or unstructured
/// matrices simply end up with a full band.
#[derive(Debug, Clone)]
pub struct FactorizedOperator {
    n: usize,
    band: usize,
    /// `perm[k]` is the original index placed at position `k`.
    perm: Vec<usize>,
    /// Row `i` holds `L[i][i-band ..= i]`, left-padded with zeros.
    lower: Vec<f64>,
    fingerprint: u64,
}

impl FactorizedOperator {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: a.ncols(),
            });
        }
        let perm = reverse_cuthill_mckee(a);
        let mut inv = vec![0; n];
        for (k, &i) in perm.iter().enumerate() {
            inv[i] = k;
        }
        let band = a
            .triplets()
            .map(|(i, j, _)| inv[i].abs_diff(inv[j]))
            .max()
            .unwrap_or(0);
        let w = band + 1;
        let mut l = vec![0.0; n * w];
        let mut diag = vec![0.0; n];
        for (i, j, v) in a.triplets() {
            let (pi, pj) = (inv[i], inv[j]);
            if pj <= pi {
                l[pi * w + band - (pi - pj)] = v;
            }
            if i == j {
                diag[pi] = v.abs();
            }
        }
        for i in 0..n {
            let lo = i.saturating_sub(band);
            for j in lo..=i {
                let jlo = j.saturating_sub(band).max(lo);
                let mut s = l[i * w + band - (i - j)];
                for k in jlo..j {
                    s -= l[i * w + band - (i - k)] * l[j * w + band - (j - k)];
                }
                if j == i {
                    if !(s > (n as f64) * f64::EPSILON * diag[i]) || !s.is_finite() {
                        return Err(Error::NotPositiveDefinite {
                            row: perm[i],
                            pivot: s,
                        });
                    }
                    l[i * w + band] = s.sqrt();
                } else {
                    l[i * w + band - (i - j)] = s / l[j * w + band];
                }
            }
        }
        Ok(Self {
            n,
            band,
            perm,
            lower: l,
            fingerprint: fingerprint(a),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.band
    }

    /// Hash of the matrix this factor was built from.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        assert_eq!(rhs.len(), self.n);
        let (n, b, w) = (self.n, self.band, self.band + 1);
        let l = &self.lower;
        let mut y: Vec<f64> = self.perm.iter().map(|&i| rhs[i]).collect();
        for i in 0..n {
            let mut s = y[i];
            for k in i.saturating_sub(b)..i {
                s -= l[i * w + b - (i - k)] * y[k];
            }
            y[i] = s / l[i * w + b];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..(i + b + 1).min(n) {
                s -= l[k * w + b - (k - i)] * y[k];
            }
            y[i] = s / l[i * w + b];
        }
        let mut x = DVector::zeros(n);
        for (k, &i) in self.perm.iter().enumerate() {
            x[i] = y[k];
        }
        x
    }

    pub fn solve_matrix(&self, rhs: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(rhs.nrows(), rhs.ncols());
        for c in 0..rhs.ncols() {
            out.set_column(c, &self.solve(&rhs.column(c).into_owned()));
        }
        out
    }
}

/// Solves `A x = rhs` for symmetric positive-definite `A`.
pub fn solve_spd(a: &CsrMatrix, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    if rhs.len() != a.nrows() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: rhs.len(),
        });
    }
    Ok(FactorizedOperator::new(a)?.solve(rhs))
}

pub fn fingerprint(a: &CsrMatrix) -> u64 {
    let mut h = DefaultHasher::new();
    (a.nrows(), a.ncols()).hash(&mut h);
    for (i, j, v) in a.triplets() {
        (i, j, v.to_bits()).hash(&mut h);
    }
    h.finish()
}

fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.nrows();
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|i| a.row(i).map(|(j, _)| j).filter(|&j| j != i).collect())
        .collect();
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let start = (0..n)
            .filter(|&i| !visited[i])
            .min_by_key(|&i| (degree[i], i))
            .expect("unvisited vertex");
        visited[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            order.push(i);
            let mut next: Vec<usize> = adj[i].iter().copied().filter(|&j| !visited[j]).collect();
            next.sort_by_key(|&j| (degree[j], j));
            for j in next {
                visited[j] = true;
                queue.push_back(j);
            }
        }
    }
    order.reverse();
    order
}
