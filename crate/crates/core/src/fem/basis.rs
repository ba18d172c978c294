//! One-dimensional element shape functions.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Basis {
    /// Continuous piecewise-linear Lagrange.
    P1,
    /// Continuous piecewise-quadratic Lagrange; local order `[left, mid, right]`.
    P2,
    /// C¹ Hermite cubic; local order `[w_l, w'_l, w_r, w'_r]`.
    Hermite,
}

/// Value, first and second `x`-derivative of one shape function.
pub type ShapeValues = [f64; 3];

impl Basis {
    pub fn local_dofs(self) -> usize {
        match self {
            Basis::P1 => 2,
            Basis::P2 => 3,
            Basis::Hermite => 4,
        }
    }

    /// Highest derivative with a bounded, element-wise smooth representative.
    pub fn max_derivative(self) -> u8 {
        match self {
            Basis::P1 | Basis::P2 => 1,
            Basis::Hermite => 2,
        }
    }

    /// Evaluates all local shape functions at reference coordinate `xi` on an
    /// element of length `he`.
    pub fn eval(self, xi: f64, he: f64) -> Vec<ShapeValues> {
        match self {
            Basis::P1 => vec![
                [0.5 * (1.0 - xi), -1.0 / he, 0.0],
                [0.5 * (1.0 + xi), 1.0 / he, 0.0],
            ],
            Basis::P2 => {
                let j = 2.0 / he;
                vec![
                    [0.5 * xi * (xi - 1.0), (xi - 0.5) * j, j * j],
                    [1.0 - xi * xi, -2.0 * xi * j, -2.0 * j * j],
                    [0.5 * xi * (xi + 1.0), (xi + 0.5) * j, j * j],
                ]
            }
            Basis::Hermite => {
                let t = 0.5 * (xi + 1.0);
                let (t2, t3) = (t * t, t * t * t);
                vec![
                    [
                        1.0 - 3.0 * t2 + 2.0 * t3,
                        (-6.0 * t + 6.0 * t2) / he,
                        (-6.0 + 12.0 * t) / (he * he),
                    ],
                    [
                        he * (t - 2.0 * t2 + t3),
                        1.0 - 4.0 * t + 3.0 * t2,
                        (-4.0 + 6.0 * t) / he,
                    ],
                    [
                        3.0 * t2 - 2.0 * t3,
                        (6.0 * t - 6.0 * t2) / he,
                        (6.0 - 12.0 * t) / (he * he),
                    ],
                    [he * (-t2 + t3), -2.0 * t + 3.0 * t2, (-2.0 + 6.0 * t) / he],
                ]
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_check(basis: Basis) {
        let he = 0.37;
        let d = 1e-6;
        for &xi in &[-0.8, -0.1, 0.3, 0.9] {
            let c = basis.eval(xi, he);
            let p = basis.eval(xi + d, he);
            let m = basis.eval(xi - d, he);
            for k in 0..basis.local_dofs() {
                let dx = d * he / 2.0;
                let d1 = (p[k][0] - m[k][0]) / (2.0 * dx);
                let d2 = (p[k][1] - m[k][1]) / (2.0 * dx);
                assert!((d1 - c[k][1]).abs() < 1e-7, "{basis:?} slope {k}");
                assert!((d2 - c[k][2]).abs() < 1e-5, "{basis:?} curvature {k}");
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        fd_check(Basis::P1);
        fd_check(Basis::P2);
        fd_check(Basis::Hermite);
    }

    #[test]
    fn nodal_interpolation_properties() {
        let he = 2.0;
        let l = Basis::Hermite.eval(-1.0, he);
        let r = Basis::Hermite.eval(1.0, he);
        assert_eq!([l[0][0], l[1][0], l[2][0], l[3][0]], [1.0, 0.0, 0.0, 0.0]);
        assert_eq!([l[0][1], l[1][1], l[2][1], l[3][1]], [0.0, 1.0, 0.0, 0.0]);
        assert_eq!([r[0][0], r[1][0], r[2][0], r[3][0]], [0.0, 0.0, 1.0, 0.0]);
        assert_eq!([r[0][1], r[1][1], r[2][1], r[3][1]], [0.0, 0.0, 0.0, 1.0]);

        let mid = Basis::P2.eval(0.0, he);
        assert_eq!([mid[0][0], mid[1][0], mid[2][0]], [0.0, 1.0, 0.0]);
    }

    #[test]
    fn partition_of_unity() {
        for basis in [Basis::P1, Basis::P2] {
            for &xi in &[-0.7, 0.0, 0.4] {
                let s: f64 = basis.eval(xi, 0.5).iter().map(|v| v[0]).sum();
                assert!((s - 1.0).abs() < 1e-15);
            }
        }
    }
}
