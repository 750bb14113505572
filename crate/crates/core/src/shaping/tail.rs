//! Lossless compression of the block tail `b_{N−L}..b_{N−1}`.
//!
//! Shaped symbols near the end of a block can be large because `1/F` has
//! high gain close to the unit circle. Stage `k` (1-based) sends
//! `b'_k = b_k + round(Σ_{j≥1} p_j·b_{k−j})`, where `p` is `(1 + c·z⁻¹)^{k−1}`
//! for factored patterns and the first `k` taps of `F` otherwise. The
//! filtered values are much smaller than the raw ones.
//!
//! Byte format, bits written least significant first:
//! 8 bits `L`, then `L` fields of 6 bits holding the per-stage width `w_k`,
//! then for each stage the real and imaginary parts of `b'_k` as `w_k`-bit
//! two's complement integers.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gauss::GaussInt;
use crate::lattice::{poly, FilterPattern};

const WIDTH_FIELD_BITS: u32 = 6;
const MAX_WIDTH: u8 = 63;

/// Predictor family used for the prediction-error stages.
#[derive(Clone, Debug, PartialEq)]
pub enum TailPredictor {
    /// `(1 + c·z⁻¹)^{k−1}` at stage `k`.
    Factored(Complex64),
    /// Taps `f_0..f_{k−1}` at stage `k`.
    Truncated(Vec<Complex64>),
}

impl TailPredictor {
    pub fn for_pattern(f: &FilterPattern) -> Self {
        match f.factor() {
            Some(fac) if fac.multiplicity == f.order() => TailPredictor::Factored(fac.coef),
            _ => TailPredictor::Truncated(f.taps().to_vec()),
        }
    }

    /// Predictor taps `p_0..p_{k−1}` for stage `k ≥ 1`.
    fn stage(&self, k: usize) -> Vec<Complex64> {
        match self {
            TailPredictor::Factored(c) => poly::binomial_power(*c, k - 1),
            TailPredictor::Truncated(t) => t[..k.min(t.len())].to_vec(),
        }
    }

    fn prediction(&self, prev: &[GaussInt]) -> GaussInt {
        let k = prev.len() + 1;
        let p = self.stage(k);
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, &pj) in p.iter().enumerate().skip(1) {
            acc += pj * prev[k - 1 - j].to_c64();
        }
        GaussInt::round(acc)
    }
}

/// A compressed block tail.
#[derive(Clone, Debug, PartialEq)]
pub struct TailRecord {
    /// The raw symbols `b_{N−L}..b_{N−1}`.
    pub raw_b: Vec<GaussInt>,
    /// Prediction errors `b'_1..b'_L`.
    pub residuals: Vec<GaussInt>,
    /// Two's-complement width per stage (both components).
    pub bit_widths: Vec<u8>,
    pub packed: Vec<u8>,
    /// Some requested width was too small and had to grow.
    pub widths_expanded: bool,
}

impl TailRecord {
    /// Payload bits excluding the header.
    pub fn payload_bits(&self) -> usize {
        self.bit_widths.iter().map(|&w| 2 * w as usize).sum()
    }
}

/// Smallest two's-complement width holding `v`.
pub fn signed_width(v: i64) -> u8 {
    let mag = if v < 0 { !v } else { v } as u64;
    (64 - mag.leading_zeros() + 1) as u8
}

struct BitWriter {
    bytes: Vec<u8>,
    used: usize,
}

impl BitWriter {
    fn new() -> Self {
        BitWriter { bytes: Vec::new(), used: 0 }
    }

    fn put(&mut self, v: u64, bits: u32) {
        for i in 0..bits {
            if self.used.is_multiple_of(8) {
                self.bytes.push(0);
            }
            if (v >> i) & 1 == 1 {
                *self.bytes.last_mut().unwrap() |= 1 << (self.used % 8);
            }
            self.used += 1;
        }
    }
}

struct BitReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl BitReader<'_> {
    fn get(&mut self, bits: u32) -> Result<u64> {
        let mut v = 0u64;
        for i in 0..bits {
            let byte = self
                .bytes
                .get(self.pos / 8)
                .ok_or_else(|| Error::TailFormat("record is truncated".into()))?;
            if (byte >> (self.pos % 8)) & 1 == 1 {
                v |= 1 << i;
            }
            self.pos += 1;
        }
        Ok(v)
    }

    fn get_signed(&mut self, bits: u32) -> Result<i64> {
        let raw = self.get(bits)?;
        let shift = 64 - bits;
        Ok(((raw << shift) as i64) >> shift)
    }
}

/// Compress a tail. `widths`, if given, are the preferred per-stage widths;
/// any stage that does not fit is widened and `widths_expanded` is set.
pub fn compress_tail(tail: &[GaussInt], f: &FilterPattern, widths: Option<&[u8]>) -> Result<TailRecord> {
    let l = tail.len();
    if l != f.order() {
        return Err(Error::InvalidArgument(format!(
            "tail holds {l} symbols but the pattern has memory {}",
            f.order()
        )));
    }
    if let Some(w) = widths {
        if w.len() != l {
            return Err(Error::InvalidArgument("one width per stage is required".into()));
        }
    }
    let pred = TailPredictor::for_pattern(f);
    let residuals: Vec<GaussInt> = (0..l).map(|k| tail[k] + pred.prediction(&tail[..k])).collect();
    let mut expanded = false;
    let mut bit_widths = Vec::with_capacity(l);
    for (k, r) in residuals.iter().enumerate() {
        let need = signed_width(r.re).max(signed_width(r.im));
        let w = match widths {
            Some(w) if w[k] >= need => w[k],
            Some(_) => {
                expanded = true;
                need
            }
            None => need,
        };
        if w > MAX_WIDTH {
            return Err(Error::TailFormat(format!("stage {k} needs {w} bits")));
        }
        bit_widths.push(w);
    }
    let mut bw = BitWriter::new();
    bw.put(l as u64, 8);
    for &w in &bit_widths {
        bw.put(w as u64, WIDTH_FIELD_BITS);
    }
    for (r, &w) in residuals.iter().zip(&bit_widths) {
        bw.put(r.re as u64, w as u32);
        bw.put(r.im as u64, w as u32);
    }
    Ok(TailRecord {
        raw_b: tail.to_vec(),
        residuals,
        bit_widths,
        packed: bw.bytes,
        widths_expanded: expanded,
    })
}

/// Inverse of [`compress_tail`].
pub fn decompress_tail(packed: &[u8], f: &FilterPattern) -> Result<Vec<GaussInt>> {
    let mut rd = BitReader { bytes: packed, pos: 0 };
    let l = rd.get(8)? as usize;
    if l != f.order() {
        return Err(Error::TailFormat(format!(
            "record has {l} stages but the pattern has memory {}",
            f.order()
        )));
    }
    let mut widths = Vec::with_capacity(l);
    for _ in 0..l {
        let w = rd.get(WIDTH_FIELD_BITS)? as u32;
        if w == 0 {
            return Err(Error::TailFormat("zero width".into()));
        }
        widths.push(w);
    }
    let pred = TailPredictor::for_pattern(f);
    let mut out: Vec<GaussInt> = Vec::with_capacity(l);
    for &w in &widths {
        let r = GaussInt::new(rd.get_signed(w)?, rd.get_signed(w)?);
        let b = r - pred.prediction(&out);
        out.push(b);
    }
    Ok(out)
}
