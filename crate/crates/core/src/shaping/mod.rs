//! Shaping: choosing `b_n = a_n − 2M·k_n` (or `a_n − 2k_n`) so that the
//! codeword stays in a bounded region.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauss::{slice_odd, GaussInt, Qam, QamSymbol};
use crate::lattice::{fir_interference, FilterPattern};

mod nested;
mod tail;

pub use nested::{nested_shape_block, NestedOutput, DEFAULT_K_RADIUS};
pub use tail::{compress_tail, decompress_tail, signed_width, TailPredictor, TailRecord};

/// Shaping scheme.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Scheme {
    /// Modulo-2M precoding into the `[−M, M)²` box.
    Tomlinson,
    /// Dither precoding: `x_n − a_n ∈ [−1, 1)²`.
    Flexible,
    /// M-algorithm search for a low-energy `k` sequence.
    Nested {
        m_alg: usize,
        #[serde(default = "default_radius")]
        radius: i64,
    },
}

fn default_radius() -> i64 {
    DEFAULT_K_RADIUS
}

impl Scheme {
    /// True when every codeword sample is guaranteed to lie in `[−M, M)²`.
    pub fn has_box(&self) -> bool {
        matches!(self, Scheme::Tomlinson | Scheme::Flexible)
    }
}

/// Output of one shaping step.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Step {
    pub b: GaussInt,
    pub x: Complex64,
    pub k: GaussInt,
}

/// Recursion memory of a shaper.
#[derive(Clone, Debug, PartialEq)]
pub struct ShaperState {
    m: u32,
    /// `b_{n−L}..b_{n−1}`, oldest first.
    last_b: Vec<GaussInt>,
    /// `x_{n−K}..x_{n−1}` for patterns with a recursive part.
    last_x: Vec<Complex64>,
}

impl ShaperState {
    pub fn new(f: &FilterPattern, m: u32) -> Result<Self> {
        Qam::new(m)?;
        Ok(ShaperState {
            m,
            last_b: vec![GaussInt::ZERO; f.order()],
            last_x: vec![Complex64::new(0.0, 0.0); f.den().len() - 1],
        })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    /// The last `L` shaped symbols, oldest first.
    pub fn last_b(&self) -> &[GaussInt] {
        &self.last_b
    }

    fn interference(&self, f: &FilterPattern) -> Complex64 {
        let mut s = fir_interference(f.taps(), &self.last_b);
        let den = f.den();
        if den.len() > 1 {
            let kk = self.last_x.len();
            for (k, &h) in den.iter().enumerate().skip(1) {
                s -= h * self.last_x[kk - k];
            }
        }
        s
    }

    fn push(&mut self, b: GaussInt, x: Complex64) {
        if !self.last_b.is_empty() {
            self.last_b.rotate_left(1);
            *self.last_b.last_mut().unwrap() = b;
        }
        if !self.last_x.is_empty() {
            self.last_x.rotate_left(1);
            *self.last_x.last_mut().unwrap() = x;
        }
    }
}

fn round_div(v: f64, d: f64) -> i64 {
    crate::gauss::round_half_up(v / d)
}

/// Modulo-2M precoding step.
pub fn tomlinson_step(a: QamSymbol, state: &mut ShaperState, f: &FilterPattern) -> Step {
    let s = state.interference(f);
    let m2 = 2.0 * state.m as f64;
    let av = a.value();
    let k = GaussInt::new(
        round_div(av.re as f64 + s.re, m2),
        round_div(av.im as f64 + s.im, m2),
    );
    let b = av - k * (2 * state.m as i64);
    let x = b.to_c64() + s;
    state.push(b, x);
    Step { b, x, k }
}

/// Flexible (dither) precoding step.
pub fn flexible_step(a: QamSymbol, state: &mut ShaperState, f: &FilterPattern) -> Step {
    let s = state.interference(f);
    let k = GaussInt::new(round_div(s.re, 2.0), round_div(s.im, 2.0));
    let b = a.value() - k * 2;
    let x = b.to_c64() + s;
    state.push(b, x);
    Step { b, x, k }
}

/// A shaped block: lattice coordinates `b`, samples `x` (`x_0..x_{N−1}`)
/// and the chosen offsets `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct ShapedBlock {
    pub b: Vec<GaussInt>,
    pub x: Vec<Complex64>,
    pub k: Vec<GaussInt>,
}

impl ShapedBlock {
    pub fn mean_power(&self) -> f64 {
        if self.x.is_empty() {
            return 0.0;
        }
        self.x.iter().map(|v| v.norm_sqr()).sum::<f64>() / self.x.len() as f64
    }
}

/// Shape a block, continuing from `state`. For the nested scheme the
/// search starts from the state's history and the state is advanced past
/// the chosen sequence.
pub fn shape_block(
    a: &[QamSymbol],
    scheme: Scheme,
    state: &mut ShaperState,
    f: &FilterPattern,
) -> Result<ShapedBlock> {
    let mut out = ShapedBlock {
        b: Vec::with_capacity(a.len()),
        x: Vec::with_capacity(a.len()),
        k: Vec::with_capacity(a.len()),
    };
    match scheme {
        Scheme::Tomlinson | Scheme::Flexible => {
            for &s in a {
                let st = if scheme == Scheme::Tomlinson {
                    tomlinson_step(s, state, f)
                } else {
                    flexible_step(s, state, f)
                };
                out.b.push(st.b);
                out.x.push(st.x);
                out.k.push(st.k);
            }
        }
        Scheme::Nested { m_alg, radius } => {
            if !f.is_fir() {
                return Err(Error::InvalidArgument(
                    "nested shaping is implemented for FIR patterns".into(),
                ));
            }
            let r = nested_shape_block(a, f, state.m, m_alg, radius, &state.last_b)?;
            for (&b, &x) in r.b.iter().zip(&r.x) {
                state.push(b, x);
            }
            out.b = r.b;
            out.x = r.x;
            out.k = r.k;
        }
    }
    Ok(out)
}

/// Centered residue of an odd integer modulo `2M`.
fn centered_mod(v: i64, m: i64) -> i64 {
    (v + m).rem_euclid(2 * m) - m
}

/// Recover the data symbols from shaped lattice coordinates.
///
/// `head` holds the `L` symbols that preceded `b` (zeros at stream start).
/// For flexible shaping a sliced value outside the constellation means `b`
/// was corrupted and is reported as an error.
pub fn inverse_shape(
    b: &[GaussInt],
    scheme: Scheme,
    f: &FilterPattern,
    m: u32,
    head: &[GaussInt],
) -> Result<Vec<QamSymbol>> {
    let qam = Qam::new(m)?;
    let mi = m as i64;
    match scheme {
        Scheme::Tomlinson | Scheme::Nested { .. } => b
            .iter()
            .enumerate()
            .map(|(pos, v)| {
                if !v.is_odd() {
                    return Err(Error::OutOfConstellation { pos });
                }
                qam.symbol(GaussInt::new(centered_mod(v.re, mi), centered_mod(v.im, mi)))
            })
            .collect(),
        Scheme::Flexible => {
            let mut state = ShaperState::new(f, m)?;
            if head.len() != f.order() {
                return Err(Error::InvalidArgument("head must hold L symbols".into()));
            }
            state.last_b.copy_from_slice(head);
            let mut out = Vec::with_capacity(b.len());
            for (pos, &v) in b.iter().enumerate() {
                let x = v.to_c64() + state.interference(f);
                let a = GaussInt::new(slice_odd(x.re), slice_odd(x.im));
                out.push(qam.symbol(a).map_err(|_| Error::OutOfConstellation { pos })?);
                state.push(v, x);
            }
            Ok(out)
        }
    }
}

/// Capture the last `L` shaped symbols at the end of a block.
pub fn terminate_block(state: &ShaperState, f: &FilterPattern) -> Result<TailRecord> {
    compress_tail(&state.last_b, f, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{encode_convolve, table1_pattern};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sym(re: i64, im: i64, m: u32) -> QamSymbol {
        QamSymbol::new(GaussInt::new(re, im), m).unwrap()
    }

    #[test]
    fn tomlinson_cold_start() {
        let f = table1_pattern(4).unwrap();
        let mut st = ShaperState::new(&f, 8).unwrap();
        let s = tomlinson_step(sym(3, 1, 8), &mut st, &f);
        assert_eq!(s.k, GaussInt::ZERO);
        assert_eq!(s.b, GaussInt::new(3, 1));
        assert_eq!(s.x, c(3.0, 1.0));
    }

    #[test]
    fn tomlinson_wraps() {
        // Interference of exactly 10 from a single previous symbol.
        let f = FilterPattern::fir(&[c(1.0, 0.0), c(2.0, 0.0)]).unwrap();
        let mut st = ShaperState::new(&f, 8).unwrap();
        st.last_b[0] = GaussInt::new(5, 0);
        let s = tomlinson_step(sym(7, 1, 8), &mut st, &f);
        assert_eq!(s.k.re, 1);
        assert_eq!(s.b.re, -9);
        assert_eq!(s.x.re, 1.0);
    }

    #[test]
    fn flexible_dither() {
        let f = FilterPattern::fir(&[c(1.0, 0.0), c(0.7, 0.2)]).unwrap();
        let mut st = ShaperState::new(&f, 8).unwrap();
        let first = flexible_step(sym(1, 1, 8), &mut st, &f);
        assert_eq!(first.b, GaussInt::new(1, 1));
        assert_eq!(first.x, c(1.0, 1.0));
        // Force an interference of 0.7+0.2j.
        st.last_b[0] = GaussInt::new(1, 0);
        let s = flexible_step(sym(1, 1, 8), &mut st, &f);
        assert_eq!(s.k, GaussInt::ZERO);
        assert_eq!(s.b, GaussInt::new(1, 1));
        assert!((s.x - c(1.7, 1.2)).norm() < 1e-15);
    }

    #[test]
    fn inverse_examples() {
        let f = FilterPattern::identity();
        let a = inverse_shape(&[GaussInt::new(-9, 1)], Scheme::Tomlinson, &f, 8, &[]).unwrap();
        assert_eq!(a[0].value(), GaussInt::new(7, 1));
        let a = inverse_shape(&[GaussInt::new(3, -5)], Scheme::Flexible, &f, 8, &[]).unwrap();
        assert_eq!(a[0].value(), GaussInt::new(3, -5));
    }

    #[test]
    fn flexible_inverse_flags_corruption() {
        let f = FilterPattern::identity();
        let r = inverse_shape(&[GaussInt::new(11, 1)], Scheme::Flexible, &f, 8, &[]);
        assert!(matches!(r, Err(Error::OutOfConstellation { pos: 0 })));
    }

    #[test]
    fn block_matches_convolution() {
        let f = table1_pattern(4).unwrap();
        let qam = Qam::new(8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = qam.random_block(&mut rng, 300);
        for scheme in [
            Scheme::Tomlinson,
            Scheme::Flexible,
            Scheme::Nested { m_alg: 4, radius: 2 },
        ] {
            let mut st = ShaperState::new(&f, 8).unwrap();
            let blk = shape_block(&a, scheme, &mut st, &f).unwrap();
            let x = encode_convolve(&blk.b, &f);
            assert_eq!(&x.samples[..a.len()], &blk.x[..], "{scheme:?}");
            assert!(blk.b.iter().all(|v| v.is_odd()));
            let back = inverse_shape(&blk.b, scheme, &f, 8, &[GaussInt::ZERO; 3]).unwrap();
            assert_eq!(back, a);
        }
    }

    #[test]
    fn streaming_continues_state() {
        let f = table1_pattern(1).unwrap();
        let qam = Qam::new(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = qam.random_block(&mut rng, 200);
        let mut whole = ShaperState::new(&f, 4).unwrap();
        let one = shape_block(&a, Scheme::Tomlinson, &mut whole, &f).unwrap();
        let mut split = ShaperState::new(&f, 4).unwrap();
        let p1 = shape_block(&a[..120], Scheme::Tomlinson, &mut split, &f).unwrap();
        let tail = terminate_block(&split, &f).unwrap();
        assert_eq!(tail.raw_b, &one.b[118..120]);
        let p2 = shape_block(&a[120..], Scheme::Tomlinson, &mut split, &f).unwrap();
        assert_eq!([p1.b, p2.b].concat(), one.b);
        assert_eq!(split, whole);
    }

    #[test]
    fn arma_shaping_stays_in_box() {
        let f = FilterPattern::arma(
            &[c(1.0, 0.0), c(0.9, 0.3)],
            &[c(1.0, 0.0), c(-0.4, 0.1)],
        )
        .unwrap();
        let qam = Qam::new(8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = qam.random_block(&mut rng, 2000);
        let mut st = ShaperState::new(&f, 8).unwrap();
        let blk = shape_block(&a, Scheme::Tomlinson, &mut st, &f).unwrap();
        assert!(blk.x.iter().all(|x| (-8.0..8.0).contains(&x.re) && (-8.0..8.0).contains(&x.im)));
        let x = crate::lattice::arma_encode(&blk.b, &f, a.len()).unwrap();
        for (u, v) in x.iter().zip(&blk.x) {
            assert!((u - v).norm() < 1e-9);
        }
    }
}
