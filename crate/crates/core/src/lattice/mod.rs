//! Filter patterns, the encoding convolution and related filter algebra.

use std::hash::{Hash, Hasher};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gauss::GaussInt;

mod pattern_json;
mod phase;
pub mod poly;

pub use pattern_json::{
    table1_pattern, FactorSpec, PatternSpec, Sign, TapsSpec, Table1Row, ZeroSpec, TABLE1,
};
pub use phase::{
    allpass_impulse_response, backward_code_transform, is_minimum_phase,
    minimum_phase_equivalent, preequalization_filter, AllpassSpec, PreEqualizer, TOL_MP,
};

const MONIC_TOL: f64 = 1e-12;

/// The factored form `(1 + c·z⁻¹)^L` a pattern was built from, if any.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Factor {
    pub coef: Complex64,
    pub multiplicity: usize,
}

/// A monic filter `F(z) = G(z)/H(z)` with `G` FIR of order `L` and `H` the
/// (optional) recursive part. Plain FIR patterns have `H = 1`.
#[derive(Clone, Debug)]
pub struct FilterPattern {
    taps: Vec<Complex64>,
    den: Vec<Complex64>,
    factor: Option<Factor>,
}

impl PartialEq for FilterPattern {
    fn eq(&self, other: &Self) -> bool {
        bits(&self.taps) == bits(&other.taps) && bits(&self.den) == bits(&other.den)
    }
}

impl Eq for FilterPattern {}

impl Hash for FilterPattern {
    fn hash<H: Hasher>(&self, state: &mut H) {
        bits(&self.taps).hash(state);
        bits(&self.den).hash(state);
    }
}

/// Maps `-0.0` to `0.0` so that bitwise equality matches numeric equality
/// for zero taps.
fn canon(v: impl IntoIterator<Item = Complex64>) -> Vec<Complex64> {
    v.into_iter().map(|c| Complex64::new(c.re + 0.0, c.im + 0.0)).collect()
}

fn bits(v: &[Complex64]) -> Vec<(u64, u64)> {
    v.iter().map(|c| (c.re.to_bits(), c.im.to_bits())).collect()
}

fn check_monic(v: &[Complex64]) -> Result<Vec<Complex64>> {
    let Some(&first) = v.first() else {
        return Err(Error::Pattern("empty tap list".into()));
    };
    if (first - Complex64::new(1.0, 0.0)).norm() > MONIC_TOL {
        return Err(Error::NotMonic(format!("{first}")));
    }
    if v.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::Pattern("non-finite tap".into()));
    }
    let mut out = canon(v.iter().copied());
    out[0] = Complex64::new(1.0, 0.0);
    Ok(out)
}

impl FilterPattern {
    pub fn identity() -> Self {
        FilterPattern {
            taps: vec![Complex64::new(1.0, 0.0)],
            den: vec![Complex64::new(1.0, 0.0)],
            factor: None,
        }
    }

    /// FIR pattern from taps `f₀..f_L`; `f₀` must be 1.
    pub fn fir(taps: &[Complex64]) -> Result<Self> {
        Ok(FilterPattern {
            taps: check_monic(taps)?,
            den: vec![Complex64::new(1.0, 0.0)],
            factor: None,
        })
    }

    /// `(1 + c·z⁻¹)^L`.
    pub fn factored(coef: Complex64, multiplicity: usize) -> Self {
        FilterPattern {
            taps: canon(poly::binomial_power(coef, multiplicity)),
            den: vec![Complex64::new(1.0, 0.0)],
            factor: Some(Factor { coef, multiplicity }),
        }
    }

    /// ARMA pattern `G(z)/H(z)`, both monic.
    pub fn arma(num: &[Complex64], den: &[Complex64]) -> Result<Self> {
        Ok(FilterPattern {
            taps: check_monic(num)?,
            den: check_monic(den)?,
            factor: None,
        })
    }

    /// FIR taps `f₀..f_L` (the numerator for ARMA patterns).
    pub fn taps(&self) -> &[Complex64] {
        &self.taps
    }

    /// Denominator taps `h₀..h_K`; `[1]` for FIR patterns.
    pub fn den(&self) -> &[Complex64] {
        &self.den
    }

    /// Filter memory `L`.
    pub fn order(&self) -> usize {
        self.taps.len() - 1
    }

    pub fn is_fir(&self) -> bool {
        self.den.len() == 1
    }

    pub fn factor(&self) -> Option<Factor> {
        self.factor
    }

    /// `Σ|f_l|²`.
    pub fn energy(&self) -> f64 {
        self.taps.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Last tap `f_L`.
    pub fn last_tap(&self) -> Complex64 {
        self.taps[self.order()]
    }

    /// `F(e^{jw})`.
    pub fn response(&self, w: f64) -> Complex64 {
        poly::eval_response(&self.taps, w) / poly::eval_response(&self.den, w)
    }

    /// Pattern with conjugated taps.
    pub fn conj(&self) -> Self {
        FilterPattern {
            taps: canon(self.taps.iter().map(|c| c.conj())),
            den: canon(self.den.iter().map(|c| c.conj())),
            factor: self.factor.map(|f| Factor {
                coef: f.coef.conj(),
                multiplicity: f.multiplicity,
            }),
        }
    }

    /// Same pattern with every tap `f_l` replaced by `f_l·(−1)^l`.
    pub fn alternate(&self) -> Self {
        let flip = |v: &[Complex64]| -> Vec<Complex64> {
            v.iter()
                .enumerate()
                .map(|(l, &c)| if l % 2 == 1 { -c } else { c })
                .collect()
        };
        FilterPattern {
            taps: canon(flip(&self.taps)),
            den: canon(flip(&self.den)),
            factor: self.factor.map(|f| Factor {
                coef: -f.coef,
                multiplicity: f.multiplicity,
            }),
        }
    }
}

/// `Σ_{l=1}^{L} f_l·b_{n−l}` where `recent` holds `b_{n−L}..b_{n−1}`
/// (oldest first). Every component that reconstructs `x_n` goes through
/// this function so that encoder, shaper and decoder agree bit for bit.
#[inline]
pub fn fir_interference(taps: &[Complex64], recent: &[GaussInt]) -> Complex64 {
    let l = taps.len() - 1;
    debug_assert!(recent.len() >= l);
    let base = recent.len() - l;
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 1..=l {
        let b = recent[base + l - k];
        acc += taps[k] * Complex64::new(b.re as f64, b.im as f64);
    }
    acc
}

/// A block of encoded samples.
#[derive(Clone, Debug, PartialEq)]
pub struct Codeword {
    pub samples: Vec<Complex64>,
    pub n: usize,
}

/// `x_n = b_n + Σ f_l b_{n−l}` for `n = 0..N+L−1`, with `b` zero outside
/// its support.
pub fn encode_convolve(b: &[GaussInt], f: &FilterPattern) -> Codeword {
    encode_with_head(b, &vec![GaussInt::ZERO; f.order()], f)
}

/// Like [`encode_convolve`] with `head = b_{−L}..b_{−1}` as initial state.
/// Samples `N..N+L−1` only contain contributions of `b` (and of `head` when
/// `N < L`).
pub fn encode_with_head(b: &[GaussInt], head: &[GaussInt], f: &FilterPattern) -> Codeword {
    let l = f.order();
    assert_eq!(head.len(), l, "head must hold L symbols");
    let n = b.len();
    let mut padded = Vec::with_capacity(n + 2 * l);
    padded.extend_from_slice(head);
    padded.extend_from_slice(b);
    padded.extend(std::iter::repeat_n(GaussInt::ZERO, l));
    let taps = f.taps();
    let samples = (0..n + l)
        .map(|i| padded[l + i].to_c64() + fir_interference(taps, &padded[i..l + i]))
        .collect();
    Codeword { samples, n }
}

/// `(N+L)×N` band-Toeplitz generator matrix.
pub fn generator_matrix(f: &FilterPattern, n: usize) -> Result<DMatrix<Complex64>> {
    if n < 1 {
        return Err(Error::InvalidArgument("generator matrix needs N >= 1".into()));
    }
    let l = f.order();
    let mut g = DMatrix::<Complex64>::zeros(n + l, n);
    for col in 0..n {
        for (k, &t) in f.taps().iter().enumerate() {
            g[(col + k, col)] = t;
        }
    }
    Ok(g)
}

/// ARMA encoding `x_n = b_n + Σ g_l b_{n−l} − Σ h_k x_{n−k}` over `len`
/// output samples.
pub fn arma_encode(b: &[GaussInt], f: &FilterPattern, len: usize) -> Result<Vec<Complex64>> {
    let den = f.den();
    if den.len() > 1 {
        let hp = FilterPattern::fir(den)?;
        if !is_minimum_phase(&hp)? {
            let worst = poly::roots(den)?.iter().map(|z| z.norm()).fold(0.0, f64::max);
            return Err(Error::NotMinimumPhase(worst));
        }
    }
    let g = f.taps();
    let mut x: Vec<Complex64> = Vec::with_capacity(len);
    for n in 0..len {
        let mut v = Complex64::new(0.0, 0.0);
        for (l, &gl) in g.iter().enumerate() {
            if l > n {
                break;
            }
            if let Some(bv) = b.get(n - l) {
                v += gl * bv.to_c64();
            }
        }
        for (k, &hk) in den.iter().enumerate().skip(1) {
            if k > n {
                break;
            }
            v -= hk * x[n - k];
        }
        x.push(v);
    }
    Ok(x)
}

/// Energy of a codeword.
pub fn energy(x: &[Complex64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn g(re: i64, im: i64) -> GaussInt {
        GaussInt::new(re, im)
    }

    #[test]
    fn trivial_encodings() {
        let x = encode_convolve(&[g(2, 0)], &FilterPattern::identity());
        assert_eq!(x.samples, vec![c(2.0, 0.0)]);
        let f = FilterPattern::fir(&[c(1.0, 0.0), c(-0.5, 0.0)]).unwrap();
        let x = encode_convolve(&[g(2, 0), g(2, 0)], &f);
        assert_eq!(x.samples, vec![c(2.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0)]);
    }

    #[test]
    fn generator_matrix_shapes() {
        let id = generator_matrix(&FilterPattern::identity(), 3).unwrap();
        assert_eq!(id, DMatrix::identity(3, 3));
        let f1 = c(0.3, -0.4);
        let f = FilterPattern::fir(&[c(1.0, 0.0), f1]).unwrap();
        let gm = generator_matrix(&f, 2).unwrap();
        let one = c(1.0, 0.0);
        let zero = c(0.0, 0.0);
        assert_eq!(gm, DMatrix::from_row_slice(3, 2, &[one, zero, f1, one, zero, f1]));
        assert!(generator_matrix(&f, 0).is_err());
    }

    #[test]
    fn not_monic_rejected() {
        assert!(FilterPattern::fir(&[c(0.9, 0.0), c(0.1, 0.0)]).is_err());
        assert!(FilterPattern::fir(&[]).is_err());
    }

    #[test]
    fn equality_is_bitwise() {
        let a = FilterPattern::fir(&[c(1.0, 0.0), c(0.5, 0.0)]).unwrap();
        let c2 = FilterPattern::fir(&[c(1.0, 0.0), c(0.5, 0.0)]).unwrap();
        assert_eq!(a, c2);
        assert_eq!(a, FilterPattern::fir(&[c(1.0, 0.0), c(0.5, -0.0)]).unwrap());
        assert_ne!(a, FilterPattern::fir(&[c(1.0, 0.0), c(0.5000000000000001, 0.0)]).unwrap());
    }

    #[test]
    fn arma_identity_denominator() {
        let f = FilterPattern::fir(&[c(1.0, 0.0), c(0.4, 0.2)]).unwrap();
        let b = [g(1, 1), g(-3, 1), g(5, -7)];
        let x = arma_encode(&b, &f, 4).unwrap();
        assert_eq!(x, encode_convolve(&b, &f).samples);
    }

    #[test]
    fn arma_geometric() {
        let f = FilterPattern::arma(&[c(1.0, 0.0)], &[c(1.0, 0.0), c(-0.5, 0.0)]).unwrap();
        let x = arma_encode(&[g(2, 0)], &f, 4).unwrap();
        assert_eq!(x, vec![c(2.0, 0.0), c(1.0, 0.0), c(0.5, 0.0), c(0.25, 0.0)]);
        let bad = FilterPattern::arma(&[c(1.0, 0.0)], &[c(1.0, 0.0), c(-1.5, 0.0)]).unwrap();
        assert!(matches!(arma_encode(&[g(2, 0)], &bad, 4), Err(Error::NotMinimumPhase(_))));
    }

    proptest! {
        #[test]
        fn generator_matches_convolution(
            taps in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 0..4),
            b in prop::collection::vec((-9i64..9, -9i64..9), 16),
        ) {
            let mut t = vec![c(1.0, 0.0)];
            t.extend(taps.iter().map(|&(r, i)| c(r, i)));
            let f = FilterPattern::fir(&t).unwrap();
            let b: Vec<GaussInt> = b.iter().map(|&(r, i)| g(2 * r + 1, 2 * i + 1)).collect();
            let gm = generator_matrix(&f, b.len()).unwrap();
            let bv = nalgebra::DVector::from_iterator(b.len(), b.iter().map(|s| s.to_c64()));
            let prod = gm * bv;
            let x = encode_convolve(&b, &f);
            prop_assert_eq!(x.samples.len(), prod.len());
            for (u, v) in x.samples.iter().zip(prod.iter()) {
                prop_assert!((u - v).norm() < 1e-12);
            }
        }

        #[test]
        fn single_symbol_energy_scales(
            taps in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 0..4),
            re in -7i64..7, im in -7i64..7,
        ) {
            let mut t = vec![c(1.0, 0.0)];
            t.extend(taps.iter().map(|&(r, i)| c(r, i)));
            let f = FilterPattern::fir(&t).unwrap();
            let a = g(2 * re + 1, 2 * im + 1);
            let e = energy(&encode_convolve(&[a], &f).samples);
            prop_assert!((e - a.norm_sqr() as f64 * f.energy()).abs() < 1e-9);
        }
    }
}
