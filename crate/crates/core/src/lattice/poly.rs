//! Small polynomial helpers over complex coefficients.
//!
//! Polynomials are stored in ascending powers of `z⁻¹`: `p[l]` multiplies `z⁻ˡ`.

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub fn mul(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Complex64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// `(1 + c z⁻¹)^L`.
pub fn binomial_power(c: Complex64, l: usize) -> Vec<Complex64> {
    let mut p = vec![Complex64::new(1.0, 0.0)];
    for _ in 0..l {
        p = mul(&p, &[Complex64::new(1.0, 0.0), c]);
    }
    p
}

/// Monic polynomial `Π (1 − r z⁻¹)`.
pub fn from_roots(roots: &[Complex64]) -> Vec<Complex64> {
    let mut p = vec![Complex64::new(1.0, 0.0)];
    for &r in roots {
        p = mul(&p, &[Complex64::new(1.0, 0.0), -r]);
    }
    p
}

/// `P(e^{jw})`.
pub fn eval_response(p: &[Complex64], w: f64) -> Complex64 {
    let step = Complex64::from_polar(1.0, -w);
    // Horner in z⁻¹.
    p.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * step + c)
}

/// Evaluate `z^L · P(z) = Σ p_l z^{L−l}` at `z`, with its derivative.
fn eval_poly_z(p: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut v = Complex64::new(0.0, 0.0);
    let mut d = Complex64::new(0.0, 0.0);
    for &c in p {
        d = d * z + v;
        v = v * z + c;
    }
    (v, d)
}

/// Zeros of `P(z)` (the roots of `z^L P(z)`), `p[0]` must be nonzero.
///
/// Uses the eigenvalues of the companion matrix followed by a few Newton
/// steps on the original polynomial.
pub fn roots(p: &[Complex64]) -> Result<Vec<Complex64>> {
    let l = p.len().saturating_sub(1);
    if l == 0 {
        return Ok(Vec::new());
    }
    let lead = p[0];
    if lead.norm() == 0.0 {
        return Err(Error::InvalidArgument("leading coefficient is zero".into()));
    }
    let monic: Vec<Complex64> = p.iter().map(|&c| c / lead).collect();
    if l == 1 {
        return Ok(vec![-monic[1]]);
    }
    let mut comp = DMatrix::<Complex64>::zeros(l, l);
    for j in 0..l {
        comp[(0, j)] = -monic[j + 1];
    }
    for i in 1..l {
        comp[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    let eig = Schur::try_new(comp, 1e-15, 10_000)
        .and_then(|s| s.eigenvalues())
        .ok_or(Error::RootFinding)?;
    let mut out: Vec<Complex64> = eig.iter().copied().collect();
    if out.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::RootFinding);
    }
    for z in out.iter_mut() {
        for _ in 0..8 {
            let (v, d) = eval_poly_z(&monic, *z);
            if d.norm() == 0.0 {
                break;
            }
            let next = *z - v / d;
            if eval_poly_z(&monic, next).0.norm() < v.norm() {
                *z = next;
            } else {
                break;
            }
        }
    }
    Ok(out)
}

/// Power series of `num / den` truncated once `|coefficient| < eps`
/// for `den.len()` consecutive terms past the numerator degree, or at `max_len`.
pub fn divide_series(num: &[Complex64], den: &[Complex64], eps: f64, max_len: usize) -> Vec<Complex64> {
    let h0 = den[0];
    let mut out: Vec<Complex64> = Vec::new();
    let mut quiet = 0usize;
    let window = den.len().max(1);
    for n in 0..max_len {
        let mut v = num.get(n).copied().unwrap_or_default();
        for (k, &hk) in den.iter().enumerate().skip(1) {
            if k > n {
                break;
            }
            v -= hk * out[n - k];
        }
        v /= h0;
        out.push(v);
        if n >= num.len() {
            if v.norm() < eps {
                quiet += 1;
                if quiet >= window {
                    break;
                }
            } else {
                quiet = 0;
            }
        }
    }
    while out.len() > 1 && out.last().is_some_and(|c| c.norm() < eps) {
        out.pop();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn roots_round_trip() {
        let rs = [c(0.5, 0.1), c(-0.3, 0.7), c(1.4, -0.2)];
        let p = from_roots(&rs);
        let mut found = roots(&p).unwrap();
        for r in rs {
            let (i, d) = found
                .iter()
                .enumerate()
                .map(|(i, z)| (i, (z - r).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            assert!(d < 1e-10, "root {r} off by {d}");
            found.remove(i);
        }
    }

    #[test]
    fn response_matches_direct_sum() {
        let p = [c(1.0, 0.0), c(0.3, -0.2), c(-0.1, 0.4)];
        for k in 0..16 {
            let w = k as f64 * 0.37;
            let direct: Complex64 = p
                .iter()
                .enumerate()
                .map(|(l, &pl)| pl * Complex64::from_polar(1.0, -w * l as f64))
                .sum();
            assert!((direct - eval_response(&p, w)).norm() < 1e-14);
        }
    }

    #[test]
    fn geometric_series() {
        let s = divide_series(&[c(1.0, 0.0)], &[c(1.0, 0.0), c(-0.5, 0.0)], 1e-12, 1000);
        for (n, v) in s.iter().enumerate() {
            assert!((v.re - 0.5f64.powi(n as i32)).abs() < 1e-15);
        }
        assert!(s.last().unwrap().norm() >= 1e-12);
        assert!(s.len() < 60);
    }
}
