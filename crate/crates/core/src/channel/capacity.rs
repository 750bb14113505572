//! Reference curves for a complex AWGN channel whose input is uniform on
//! the `[−M, M)²` box.
//!
//! The box input factors into two independent real uniform inputs on
//! `[−M, M)`, each seeing noise of variance `σ²/2`, so every quantity is
//! twice a one-dimensional integral. Those are evaluated with composite
//! Gauss-Legendre quadrature; the panel width follows the noise scale.

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use statrs::function::erf::erf;

use crate::error::{Error, Result};

const PANEL_DEGREE: usize = 32;
/// Integration range past the box edges, in noise standard deviations.
const TAIL_SIGMAS: f64 = 14.0;
const CONVERGENCE_TOL: f64 = 1e-7;

fn phi(z: f64) -> f64 {
    0.5 * (1.0 + erf(z / std::f64::consts::SQRT_2))
}

fn composite(rule: &GaussLegendre, a: f64, b: f64, panels: usize, f: &dyn Fn(f64) -> f64) -> f64 {
    let w = (b - a) / panels as f64;
    (0..panels)
        .map(|i| {
            let lo = a + w * i as f64;
            rule.integrate(lo, lo + w, f)
        })
        .sum()
}

/// Integrate `f` over `[−M − 14s, M + 14s]`, refining until two successive
/// panel counts agree.
fn integrate(m: f64, s: f64, f: &dyn Fn(f64) -> f64) -> Result<f64> {
    let rule = GaussLegendre::new(NonZeroUsize::new(PANEL_DEGREE).unwrap());
    let (a, b) = (-m - TAIL_SIGMAS * s, m + TAIL_SIGMAS * s);
    let mut panels = (((b - a) / s).ceil() as usize).clamp(4, 1 << 16);
    let mut prev = composite(&rule, a, b, panels, f);
    for _ in 0..4 {
        panels *= 2;
        let next = composite(&rule, a, b, panels, f);
        if (next - prev).abs() <= CONVERGENCE_TOL * next.abs().max(1.0) {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::InvalidArgument(format!(
        "quadrature did not converge (M = {m}, s = {s})"
    )))
}

fn check(m: u32, sigma2: f64) -> Result<(f64, f64)> {
    if m == 0 || !(sigma2.is_finite() && sigma2 > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need M > 0 and a finite positive noise variance (got M = {m}, σ² = {sigma2})"
        )));
    }
    Ok((m as f64, (sigma2 / 2.0).sqrt()))
}

/// Mutual information in bits per complex symbol.
pub fn uniform_capacity_sigma2(m: u32, sigma2: f64) -> Result<f64> {
    let (m, s) = check(m, sigma2)?;
    let p = |y: f64| (phi((y + m) / s) - phi((y - m) / s)) / (2.0 * m);
    let h_y = integrate(m, s, &|y| {
        let v = p(y);
        if v > 0.0 {
            -v * v.log2()
        } else {
            0.0
        }
    })?;
    let h_n = 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * s * s).log2();
    Ok(2.0 * (h_y - h_n))
}

/// Cutoff rate `R₀ = −log₂ ∫ (E_x √p(y|x))² dy` in bits per complex symbol.
pub fn uniform_cutoff_sigma2(m: u32, sigma2: f64) -> Result<f64> {
    let (m, s) = check(m, sigma2)?;
    let pi = std::f64::consts::PI;
    // E_x √p(y|x) = (2πs²)^{-1/4} √(4πs²) · P(y − x ∈ N(0, 2s²)) / 2M.
    let c = (2.0 * pi * s * s).powf(-0.25) * (4.0 * pi * s * s).sqrt() / (2.0 * m);
    let s2 = std::f64::consts::SQRT_2 * s;
    let g = |y: f64| c * (phi((y + m) / s2) - phi((y - m) / s2));
    let z = integrate(m, s, &|y| g(y) * g(y))?;
    Ok(-2.0 * z.log2())
}

/// Power of the uniform box input, `2M²/3`.
pub fn box_power(m: u32) -> f64 {
    2.0 * (m as f64).powi(2) / 3.0
}

/// Capacity with SNR normalized by the box power.
pub fn uniform_input_capacity(m: u32, snr_db: f64) -> Result<f64> {
    uniform_capacity_sigma2(m, super::snr_to_sigma2(snr_db, box_power(m))?)
}

pub fn uniform_input_cutoff(m: u32, snr_db: f64) -> Result<f64> {
    uniform_cutoff_sigma2(m, super::snr_to_sigma2(snr_db, box_power(m))?)
}

/// `log₂(1 + SNR)`.
pub fn gaussian_capacity(snr_db: f64) -> f64 {
    (1.0 + 10f64.powf(snr_db / 10.0)).log2()
}

/// SNR (dB) where an increasing rate curve reaches `target`, by bisection
/// on `[lo, hi]`.
pub fn snr_for_rate(target: f64, lo: f64, hi: f64, rate: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    if rate(a)? > target || rate(b)? < target {
        return Err(Error::InvalidArgument(format!(
            "rate {target} is not bracketed by [{lo}, {hi}] dB"
        )));
    }
    while b - a > 1e-6 {
        let mid = 0.5 * (a + b);
        if rate(mid)? < target {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal, Uniform};

    #[test]
    fn six_bit_points() {
        let c = snr_for_rate(6.0, 15.0, 25.0, |s| uniform_input_capacity(8, s)).unwrap();
        let r = snr_for_rate(6.0, 15.0, 25.0, |s| uniform_input_cutoff(8, s)).unwrap();
        let g = snr_for_rate(6.0, 15.0, 25.0, |s| Ok(gaussian_capacity(s))).unwrap();
        assert!((c - 19.1).abs() <= 0.1, "capacity point {c}");
        assert!((r - 20.9).abs() <= 0.1, "cutoff point {r}");
        assert!((g - 18.0).abs() <= 0.02, "gaussian point {g}");
    }

    #[test]
    fn high_snr_shaping_gap() {
        let c = uniform_input_capacity(8, 40.0).unwrap();
        let equiv = 10.0 * (2f64.powf(c) - 1.0).log10();
        assert!((40.0 - equiv - 1.53).abs() < 0.1, "gap {}", 40.0 - equiv);
    }

    #[test]
    fn low_snr_limits() {
        // Cutoff never exceeds capacity, and both vanish with the signal.
        for snr in [-10.0, 0.0, 10.0, 20.0, 30.0] {
            let c = uniform_input_capacity(8, snr).unwrap();
            let r = uniform_input_cutoff(8, snr).unwrap();
            assert!(r <= c + 1e-9 && r > 0.0);
        }
        assert!(uniform_input_capacity(8, -30.0).unwrap() < 0.01);
        assert!(uniform_input_capacity(8, 45.0).unwrap() > uniform_input_capacity(8, 40.0).unwrap());
    }

    #[test]
    fn capacity_matches_monte_carlo() {
        let (m, sigma2) = (2u32, 0.8f64);
        let s = (sigma2 / 2.0).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ux = Uniform::new(-(m as f64), m as f64).unwrap();
        let nz = Normal::new(0.0, s).unwrap();
        let mf = m as f64;
        let n = 400_000;
        let mut acc = 0.0;
        for _ in 0..n {
            let y = ux.sample(&mut rng) + nz.sample(&mut rng);
            let p = (phi((y + mf) / s) - phi((y - mf) / s)) / (2.0 * mf);
            acc -= p.log2();
        }
        let h_n = 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * s * s).log2();
        let mc = 2.0 * (acc / n as f64 - h_n);
        let quad = uniform_capacity_sigma2(m, sigma2).unwrap();
        assert!((mc - quad).abs() < 0.02, "{mc} vs {quad}");
    }

    #[test]
    fn bad_arguments() {
        assert!(uniform_capacity_sigma2(8, 0.0).is_err());
        assert!(uniform_cutoff_sigma2(0, 1.0).is_err());
        assert!(snr_for_rate(20.0, 0.0, 10.0, |s| Ok(gaussian_capacity(s))).is_err());
    }
}
