use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::solvers::factor::FactorizedOperator;
use crate::sparse::CsrMatrix;

/// Residual tolerance of the subspace iteration.
pub const EIGEN_TOLERANCE: f64 = 1e-10;
const MAX_ITERATIONS: usize = 1000;
/// Extra iterations allowed after the residual test passes, while the Ritz
/// values are still moving. The residual is relative to `‖K‖`, which on
/// stiff, slender models leaves the smallest eigenvalues loose.
const MAX_POLISH: usize = 50;
const RITZ_STABILITY: f64 = 1e-13;
/// `λ` counts as zero below this fraction of the largest Ritz value.
const ZERO_MODE_RATIO: f64 = 1e-8;

/// Lowest generalized eigenpairs of `K φ = ω² M φ`, ascending.
#[derive(Debug, Clone, Serialize)]
pub struct ModeSet {
    /// Angular frequencies; zero modes report exactly 0.
    pub omega: Vec<f64>,
    /// Eigenvalues `ω²` as computed (zero modes keep their round-off value).
    pub lambda: Vec<f64>,
    /// M-orthonormal shapes.
    #[serde(skip)]
    pub shapes: Vec<DVector<f64>>,
    pub zero_modes: usize,
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

impl ModeSet {
    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    /// `(ω, φ)` of the modes with nonzero frequency.
    pub fn nonzero(&self) -> impl Iterator<Item = (f64, &DVector<f64>)> {
        self.omega
            .iter()
            .zip(&self.shapes)
            .skip(self.zero_modes)
            .map(|(&w, s)| (w, s))
    }
}

/// `‖Kφ − λMφ‖∞ / ((‖K‖∞ + |λ|‖M‖∞) ‖φ‖∞)`.
pub fn relative_residual(m: &CsrMatrix, k: &CsrMatrix, lambda: f64, phi: &DVector<f64>) -> f64 {
    let r = k.mul_vec(phi) - m.mul_vec(phi) * lambda;
    let scale = (k.norm_inf() + lambda.abs() * m.norm_inf()) * phi.amax();
    if scale == 0.0 {
        return 0.0;
    }
    r.amax() / scale
}

/// A shift below the spectrum of a PSD stiffness: a small negative multiple
/// of the largest diagonal ratio `K_ii / M_ii`.
pub fn default_shift(m: &CsrMatrix, k: &CsrMatrix) -> f64 {
    let km = k.diagonal();
    let mm = m.diagonal();
    let top = km
        .iter()
        .zip(mm.iter())
        .filter(|(_, &b)| b > 0.0)
        .map(|(&a, &b)| a / b)
        .fold(0.0, f64::max);
    -1e-6 * top.max(f64::MIN_POSITIVE)
}

/// Lowest `n_modes` pairs by shift-invert subspace iteration with Rayleigh-Ritz
/// projection. `K − shift·M` must be positive definite, i.e. the shift lies
/// below the spectrum.
pub fn eigenmodes(m: &CsrMatrix, k: &CsrMatrix, n_modes: usize, shift: f64) -> Result<ModeSet> {
    let n = m.nrows();
    if k.nrows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: k.nrows(),
        });
    }
    let want = n_modes.min(n);
    if want == 0 {
        return Ok(ModeSet {
            omega: vec![],
            lambda: vec![],
            shapes: vec![],
            zero_modes: 0,
            residuals: vec![],
            iterations: 0,
        });
    }
    let p = n.min((2 * want).max(want + 8));
    let shifted = FactorizedOperator::new(&k.combine(1.0, m, -shift))?;

    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut x = DMatrix::from_fn(n, p, |_, _| rng.gen_range(-1.0..1.0));
    let mut worst = f64::INFINITY;
    let mut polish = 0;
    let mut previous: Option<Vec<f64>> = None;
    for it in 1..=MAX_ITERATIONS {
        let mx = sparse_times(m, &x);
        let mut y = shifted.solve_matrix(&mx);
        m_orthonormalize(m, &mut y);
        let ky = sparse_times(k, &y);
        let mut reduced = y.transpose() * ky;
        reduced = (&reduced + reduced.transpose()) * 0.5;
        let eig = SymmetricEigen::new(reduced);
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let z = DMatrix::from_fn(p.min(y.ncols()), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
        x = &y * z;
        let lambda: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();

        let residuals: Vec<f64> = (0..want)
            .map(|c| relative_residual(m, k, lambda[c], &x.column(c).into_owned()))
            .collect();
        worst = residuals.iter().fold(0.0, |a: f64, &b| a.max(b));
        let settled = match &previous {
            Some(prev) => {
                let top = lambda[..want].iter().fold(0.0f64, |a, &b| a.max(b.abs()));
                prev.iter()
                    .zip(&lambda[..want])
                    .all(|(a, b)| (a - b).abs() <= RITZ_STABILITY * top)
            }
            None => false,
        };
        previous = Some(lambda[..want].to_vec());
        if worst <= EIGEN_TOLERANCE && !settled && polish < MAX_POLISH {
            polish += 1;
            continue;
        }
        if worst <= EIGEN_TOLERANCE {
            let top = lambda.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
            let zero_modes = lambda[..want]
                .iter()
                .filter(|l| l.abs() < ZERO_MODE_RATIO * top)
                .count();
            let omega = lambda[..want]
                .iter()
                .enumerate()
                .map(|(i, &l)| if i < zero_modes { 0.0 } else { l.max(0.0).sqrt() })
                .collect();
            return Ok(ModeSet {
                omega,
                lambda: lambda[..want].to_vec(),
                shapes: (0..want).map(|c| x.column(c).into_owned()).collect(),
                zero_modes,
                residuals,
                iterations: it,
            });
        }
    }
    Err(Error::ConvergenceFailure {
        iterations: MAX_ITERATIONS,
        residual: worst,
    })
}

fn sparse_times(a: &CsrMatrix, x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows(), x.ncols());
    for (i, j, v) in a.triplets() {
        for c in 0..x.ncols() {
            out[(i, c)] += v * x[(j, c)];
        }
    }
    out
}

/// Modified Gram-Schmidt in the M inner product, two passes.
fn m_orthonormalize(m: &CsrMatrix, y: &mut DMatrix<f64>) {
    for _ in 0..2 {
        for c in 0..y.ncols() {
            let mut v = y.column(c).into_owned();
            for prev in 0..c {
                let u = y.column(prev).into_owned();
                let proj = m.bilinear(&u, &v);
                v -= u * proj;
            }
            let norm = m.bilinear(&v, &v).sqrt();
            y.set_column(c, &(v / norm));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::TripletBuilder;

    /// P1 rod on [0, 1]: stiffness a/h [1 -1; -1 1], consistent mass ρh/6 [2 1; 1 2].
    fn rod(n_el: usize) -> (CsrMatrix, CsrMatrix) {
        let h = 1.0 / n_el as f64;
        let mut k = TripletBuilder::new(n_el + 1, n_el + 1);
        let mut m = TripletBuilder::new(n_el + 1, n_el + 1);
        for e in 0..n_el {
            for (a, b, kv, mv) in [
                (0, 0, 1.0, 2.0),
                (0, 1, -1.0, 1.0),
                (1, 0, -1.0, 1.0),
                (1, 1, 1.0, 2.0),
            ] {
                k.add(e + a, e + b, kv / h);
                m.add(e + a, e + b, mv * h / 6.0);
            }
        }
        (m.build(), k.build())
    }

    #[test]
    fn free_rod_spectrum() {
        let (m, k) = rod(64);
        let modes = eigenmodes(&m, &k, 4, default_shift(&m, &k)).unwrap();
        assert_eq!(modes.zero_modes, 1);
        for (i, (w, _)) in modes.nonzero().enumerate() {
            let exact = (i + 1) as f64 * std::f64::consts::PI;
            assert!((w - exact).abs() / exact < 2e-3, "{w} vs {exact}");
        }
        for i in 0..modes.len() {
            for j in 0..modes.len() {
                let g = m.bilinear(&modes.shapes[i], &modes.shapes[j]);
                let d = if i == j { 1.0 } else { 0.0 };
                assert!((g - d).abs() < 1e-10);
            }
            assert!(modes.residuals[i] < 1e-8);
        }
    }

    #[test]
    fn diagonal_pencil_is_exact() {
        let m = CsrMatrix::identity(5);
        let k = CsrMatrix::from_dense(&DMatrix::from_diagonal(&DVector::from_vec(vec![
            9.0, 1.0, 4.0, 16.0, 25.0,
        ])));
        let modes = eigenmodes(&m, &k, 3, -0.5).unwrap();
        assert_eq!(modes.zero_modes, 0);
        for (w, e) in modes.omega.iter().zip([1.0, 2.0, 3.0]) {
            assert!((w - e).abs() < 1e-10);
        }
    }

    #[test]
    fn shift_above_spectrum_fails() {
        let m = CsrMatrix::identity(3);
        let k = CsrMatrix::identity(3);
        assert!(eigenmodes(&m, &k, 1, 2.0).is_err());
    }
}
