//! Minimum-phase analysis and allpass constructions.

use num_complex::Complex64;

use super::{poly, FilterPattern};
use crate::error::{Error, Result};

/// Zeros must satisfy `|z| < 1 − TOL_MP` to count as minimum phase.
pub const TOL_MP: f64 = 1e-9;

/// `scale · z^advance · num(z) / den(z)`, an allpass up to a constant gain.
#[derive(Clone, Debug, PartialEq)]
pub struct AllpassSpec {
    pub scale: Complex64,
    pub advance: usize,
    pub num: Vec<Complex64>,
    pub den: Vec<Complex64>,
}

impl AllpassSpec {
    pub fn identity() -> Self {
        AllpassSpec {
            scale: Complex64::new(1.0, 0.0),
            advance: 0,
            num: vec![Complex64::new(1.0, 0.0)],
            den: vec![Complex64::new(1.0, 0.0)],
        }
    }

    pub fn is_identity(&self) -> bool {
        *self == AllpassSpec::identity()
    }

    pub fn response(&self, w: f64) -> Complex64 {
        self.scale
            * Complex64::from_polar(1.0, w * self.advance as f64)
            * poly::eval_response(&self.num, w)
            / poly::eval_response(&self.den, w)
    }

    /// The constant `|A(e^{jw})|`.
    pub fn magnitude(&self) -> f64 {
        self.response(0.0).norm()
    }
}

fn zeros_of(p: &[Complex64]) -> Result<Vec<Complex64>> {
    poly::roots(p)
}

fn max_norm(z: &[Complex64]) -> f64 {
    z.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// True iff every zero of the numerator and the denominator lies strictly
/// inside the unit circle (by at least [`TOL_MP`]).
pub fn is_minimum_phase(f: &FilterPattern) -> Result<bool> {
    let num = zeros_of(f.taps())?;
    let den = zeros_of(f.den())?;
    Ok(max_norm(&num) < 1.0 - TOL_MP && max_norm(&den) < 1.0 - TOL_MP)
}

fn split_zeros(p: &[Complex64]) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let mut inside = Vec::new();
    let mut outside = Vec::new();
    for z in zeros_of(p)? {
        let r = z.norm();
        if (r - 1.0).abs() <= TOL_MP {
            return Err(Error::NotInvertible(r));
        }
        if r < 1.0 {
            inside.push(z);
        } else {
            outside.push(z);
        }
    }
    Ok((inside, outside))
}

/// Reflect the zeros of an FIR pattern that lie outside the unit circle.
///
/// Returns the monic minimum-phase pattern `F_MP` and `A = F / F_MP`.
/// `|A|` is the constant `Π|z_o|` over the reflected zeros, so
/// `|F(e^{jw})| = |A|·|F_MP(e^{jw})|`.
pub fn minimum_phase_equivalent(f: &FilterPattern) -> Result<(FilterPattern, AllpassSpec)> {
    if !f.is_fir() {
        return Err(Error::InvalidArgument(
            "minimum-phase equivalent is defined for FIR patterns".into(),
        ));
    }
    let (inside, outside) = split_zeros(f.taps())?;
    if outside.is_empty() {
        return Ok((f.clone(), AllpassSpec::identity()));
    }
    let reflected: Vec<Complex64> = outside.iter().map(|z| 1.0 / z.conj()).collect();
    let mut mp_zeros = inside;
    mp_zeros.extend_from_slice(&reflected);
    let fmp = FilterPattern::fir(&poly::from_roots(&mp_zeros))?;
    let spec = AllpassSpec {
        scale: Complex64::new(1.0, 0.0),
        advance: 0,
        num: poly::from_roots(&outside),
        den: poly::from_roots(&reflected),
    };
    Ok((fmp, spec))
}

/// Impulse response of `A(z) = F*(1/z*)/F(z)`, the allpass that maps a
/// minimum-phase code to its time-reversed twin. Returns `(offset, h)` with
/// `h[k + offset]` the coefficient of `z⁻ᵏ`; the causal `1/F` part is
/// truncated once its taps fall below `eps`.
pub fn allpass_impulse_response(f: &FilterPattern, eps: f64) -> Result<(usize, Vec<Complex64>)> {
    if !f.is_fir() || !is_minimum_phase(f)? {
        return Err(Error::InvalidArgument(
            "allpass response needs a minimum-phase FIR pattern".into(),
        ));
    }
    let l = f.order();
    let inv = poly::divide_series(&[Complex64::new(1.0, 0.0)], f.taps(), eps, 1 << 22);
    // a_k = Σ_l conj(f_l) h_{k+l}, k from −L to len(inv)−1.
    let len = inv.len() + l;
    let mut out = vec![Complex64::new(0.0, 0.0); len];
    for (i, slot) in out.iter_mut().enumerate() {
        let k = i as isize - l as isize;
        for (lag, &fl) in f.taps().iter().enumerate() {
            let idx = k + lag as isize;
            if idx >= 0 && (idx as usize) < inv.len() {
                *slot += fl.conj() * inv[idx as usize];
            }
        }
    }
    Ok((l, out))
}

/// Time-reverse a received block for backward decoding.
///
/// `y` is filtered by `A(z) = F*(1/z*)/F(z)` and reversed, so that
/// `y_bwd[m]` is a noisy sample of the code with taps `conj(f_l)` driven by
/// `b'_m = b_{K−1−L−m}` where `K = y.len()`. The causal `1/F` part runs as
/// an exact recursion over the block; the anti-causal FIR part only reads
/// samples inside the block, so the output has the same length as `y`.
pub fn backward_code_transform(
    f: &FilterPattern,
    y: &[Complex64],
) -> Result<(FilterPattern, Vec<Complex64>)> {
    if !f.is_fir() || !is_minimum_phase(f)? {
        return Err(Error::InvalidArgument(
            "backward transform needs a minimum-phase FIR pattern".into(),
        ));
    }
    let taps = f.taps();
    let l = f.order();
    let k_len = y.len();
    let mut u = Vec::with_capacity(k_len);
    for n in 0..k_len {
        let mut v = y[n];
        for (lag, &fl) in taps.iter().enumerate().skip(1) {
            if lag > n {
                break;
            }
            v -= fl * u[n - lag];
        }
        u.push(v);
    }
    let mut out = Vec::with_capacity(k_len);
    for m in 0..k_len {
        // z_k with k = K−1−L−m.
        let k = k_len as isize - 1 - l as isize - m as isize;
        let mut v = Complex64::new(0.0, 0.0);
        for (lag, &fl) in taps.iter().enumerate() {
            let idx = k + lag as isize;
            if idx >= 0 {
                v += fl.conj() * u[idx as usize];
            }
        }
        out.push(v);
    }
    Ok((f.conj(), out))
}

/// Transmit-side filtering for a known channel.
#[derive(Clone, Debug)]
pub struct PreEqualizer {
    /// Monic ARMA encoder `F / (H_i·H_omp)`.
    pub encoder: FilterPattern,
    /// Receiver allpass `H_o*(1/z*)/H_o(z)` with unit magnitude.
    pub allpass: AllpassSpec,
    /// Overall gain: `encoder · channel · allpass = gain · z^advance · F`.
    pub gain: Complex64,
    pub advance: usize,
}

/// Build the encoder filter that turns channel `h` (FIR taps, `h₀ ≠ 0`)
/// into the code `F` after the receiver allpass.
pub fn preequalization_filter(f_target: &FilterPattern, channel: &[Complex64]) -> Result<PreEqualizer> {
    if !f_target.is_fir() {
        return Err(Error::InvalidArgument("target pattern must be FIR".into()));
    }
    let h0 = *channel
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty channel".into()))?;
    if h0.norm() == 0.0 {
        return Err(Error::InvalidArgument("channel leading tap is zero".into()));
    }
    let monic: Vec<Complex64> = channel.iter().map(|&c| c / h0).collect();
    let (inside, outside) = split_zeros(&monic)?;
    let h_i = poly::from_roots(&inside);
    let h_o = poly::from_roots(&outside);
    let reflected: Vec<Complex64> = outside.iter().map(|z| 1.0 / z.conj()).collect();
    let h_omp = poly::from_roots(&reflected);
    let k = outside.len();
    // H_o*(1/z*) = conj(o_K) · z^K · H_omp(z), o_K the last coefficient of H_o.
    let c = h_o[k].conj();
    let encoder = FilterPattern::arma(f_target.taps(), &poly::mul(&h_i, &h_omp))?;
    let allpass = AllpassSpec {
        scale: c,
        advance: k,
        num: h_omp,
        den: h_o,
    };
    Ok(PreEqualizer {
        encoder,
        allpass,
        gain: h0 * c,
        advance: k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn grid() -> impl Iterator<Item = f64> {
        (0..1024).map(|k| 2.0 * std::f64::consts::PI * k as f64 / 1024.0)
    }

    #[test]
    fn trivial_phase_checks() {
        assert!(is_minimum_phase(&FilterPattern::identity()).unwrap());
        let f = FilterPattern::fir(&[c(1.0, 0.0), c(-1.5, 0.0)]).unwrap();
        assert!(!is_minimum_phase(&f).unwrap());
    }

    #[test]
    fn reflect_single_zero() {
        let f = FilterPattern::fir(&[c(1.0, 0.0), c(-2.0, 0.0)]).unwrap();
        let (fmp, a) = minimum_phase_equivalent(&f).unwrap();
        assert!((fmp.taps()[1] - c(-0.5, 0.0)).norm() < 1e-12);
        assert!((a.magnitude() - 2.0).abs() < 1e-12);
        for w in grid() {
            assert!((f.response(w).norm() - 2.0 * fmp.response(w).norm()).abs() < 1e-9);
            assert!((f.response(w) - fmp.response(w) * a.response(w)).norm() < 1e-9);
        }
    }

    #[test]
    fn minimum_phase_is_fixed_point() {
        let f = FilterPattern::fir(&[c(1.0, 0.0), c(0.3, 0.1)]).unwrap();
        let (fmp, a) = minimum_phase_equivalent(&f).unwrap();
        assert_eq!(fmp, f);
        assert!(a.is_identity());
    }

    #[test]
    fn unit_circle_zero_rejected() {
        let f = FilterPattern::fir(&[c(1.0, 0.0), c(-1.0, 0.0)]).unwrap();
        assert!(matches!(minimum_phase_equivalent(&f), Err(Error::NotInvertible(_))));
    }

    #[test]
    fn identity_backward_transform_reverses() {
        let y = vec![c(1.0, 2.0), c(3.0, -1.0), c(0.5, 0.0)];
        let (fb, yb) = backward_code_transform(&FilterPattern::identity(), &y).unwrap();
        assert_eq!(fb, FilterPattern::identity());
        assert_eq!(yb, vec![c(0.5, 0.0), c(3.0, -1.0), c(1.0, 2.0)]);
    }

    #[test]
    fn preequalizer_trivial_channel() {
        let f = FilterPattern::factored(c(0.5, 0.2), 2);
        let p = preequalization_filter(&f, &[c(1.0, 0.0)]).unwrap();
        assert_eq!(p.encoder.taps(), f.taps());
        assert!(p.encoder.is_fir());
        assert!(p.allpass.is_identity());
        assert_eq!(p.gain, c(1.0, 0.0));
    }
}
