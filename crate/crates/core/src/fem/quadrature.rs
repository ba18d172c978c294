//! Gauss-Legendre rules on the reference interval `[-1, 1]`.

/// Rule used for an energy term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    /// Four points, exact for polynomials up to degree 7.
    Full,
    /// One point at the element midpoint.
    Reduced,
}

const FULL_POINTS: [f64; 4] = [
    -0.861_136_311_594_052_6,
    -0.339_981_043_584_856_3,
    0.339_981_043_584_856_3,
    0.861_136_311_594_052_6,
];
const FULL_WEIGHTS: [f64; 4] = [
    0.347_854_845_137_453_9,
    0.652_145_154_862_546_1,
    0.652_145_154_862_546_1,
    0.347_854_845_137_453_9,
];

impl Rule {
    pub fn points(self) -> &'static [f64] {
        match self {
            Rule::Full => &FULL_POINTS,
            Rule::Reduced => &[0.0],
        }
    }

    pub fn weights(self) -> &'static [f64] {
        match self {
            Rule::Full => &FULL_WEIGHTS,
            Rule::Reduced => &[2.0],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_rule_integrates_degree_seven_exactly() {
        for k in 0..=7 {
            let approx: f64 = Rule::Full
                .points()
                .iter()
                .zip(Rule::Full.weights())
                .map(|(x, w)| w * x.powi(k))
                .sum();
            let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
            assert!((approx - exact).abs() < 1e-15, "degree {k}: {approx} vs {exact}");
        }
    }

    #[test]
    fn reduced_rule_is_midpoint() {
        assert_eq!(Rule::Reduced.points(), &[0.0]);
        assert_eq!(Rule::Reduced.weights(), &[2.0]);
    }
}
