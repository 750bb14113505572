//! Fano metric for lattice sequential decoding.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::gauss::GaussInt;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    Real,
    Complex,
}

/// Bias that makes paths of different length comparable:
/// `σ²·ln(4/(πσ²))` for complex symbols, `σ²·ln(2/(πσ²))` for real ones,
/// where `σ²` is the total noise variance per symbol (the limit 0 at
/// `σ² = 0`).
pub fn fano_bias(sigma2: f64, kind: NoiseKind) -> f64 {
    let c = match kind {
        NoiseKind::Real => 2.0,
        NoiseKind::Complex => 4.0,
    };
    if sigma2 == 0.0 {
        return 0.0;
    }
    sigma2 * (c / (std::f64::consts::PI * sigma2)).ln()
}

/// The variance above which the correct path's expected metric
/// `B − σ²` turns negative for complex lattices, `4/(πe)`.
pub fn complex_boundary() -> f64 {
    4.0 / (std::f64::consts::PI * std::f64::consts::E)
}

/// `B − |y − (b + s)|²` where `s` is the interference of earlier symbols.
#[inline]
pub fn branch_metric(y: Complex64, b: GaussInt, s: Complex64, bias: f64) -> f64 {
    bias - (y - (b.to_c64() + s)).norm_sqr()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bias_examples() {
        let pi = std::f64::consts::PI;
        assert!(fano_bias(4.0 / pi, NoiseKind::Complex).abs() < 1e-15);
        let s = complex_boundary();
        assert!((fano_bias(s, NoiseKind::Complex) - s).abs() < 1e-15);
        assert!((fano_bias(0.1, NoiseKind::Complex) - 0.254_415).abs() < 1e-6);
        assert!(fano_bias(2.0 / pi, NoiseKind::Real).abs() < 1e-15);
    }

    #[test]
    fn metric_examples() {
        let s = Complex64::new(0.25, -1.5);
        let b = GaussInt::new(3, 1);
        let x = b.to_c64() + s;
        assert_eq!(branch_metric(x, b, s, 0.7), 0.7);
        let d = Complex64::new(0.3, 0.4);
        assert!((branch_metric(x + d, b, s, 0.7) - (0.7 - 0.25)).abs() < 1e-12);
    }
}
