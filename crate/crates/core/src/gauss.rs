//! Exact complex-integer symbols and QAM constellations.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;

/// A complex integer `re + j·im`.
///
/// Serialized as an `[re, im]` pair.
#[derive(
    Copy, Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(from = "[i64; 2]", into = "[i64; 2]")]
pub struct GaussInt {
    pub re: i64,
    pub im: i64,
}

impl From<[i64; 2]> for GaussInt {
    fn from(v: [i64; 2]) -> Self {
        GaussInt::new(v[0], v[1])
    }
}

impl From<GaussInt> for [i64; 2] {
    fn from(g: GaussInt) -> Self {
        [g.re, g.im]
    }
}

impl GaussInt {
    pub const ZERO: GaussInt = GaussInt { re: 0, im: 0 };

    pub const fn new(re: i64, im: i64) -> Self {
        GaussInt { re, im }
    }

    /// Squared magnitude `re² + im²`.
    pub fn norm_sqr(self) -> i64 {
        self.re * self.re + self.im * self.im
    }

    pub fn is_zero(self) -> bool {
        self.re == 0 && self.im == 0
    }

    /// Both components odd: a point of the shifted QAM grid.
    pub fn is_odd(self) -> bool {
        self.re.rem_euclid(2) == 1 && self.im.rem_euclid(2) == 1
    }

    /// Both components even: a valid error symbol.
    pub fn is_even(self) -> bool {
        self.re.rem_euclid(2) == 0 && self.im.rem_euclid(2) == 0
    }

    /// Multiplication by `j`.
    pub fn mul_j(self) -> Self {
        GaussInt::new(-self.im, self.re)
    }

    pub fn conj(self) -> Self {
        GaussInt::new(self.re, -self.im)
    }

    pub fn to_c64(self) -> Complex64 {
        Complex64::new(self.re as f64, self.im as f64)
    }

    /// Nearest complex integer, halves rounded toward +∞ per component.
    pub fn round(z: Complex64) -> Self {
        GaussInt::new(round_half_up(z.re), round_half_up(z.im))
    }

    /// Nearest point with odd components. Values exactly between two odd
    /// integers (i.e. even integers) go up.
    pub fn round_odd(z: Complex64) -> Self {
        GaussInt::new(slice_odd(z.re), slice_odd(z.im))
    }

    /// The rotation class representative: the element of
    /// `{g, jg, -g, -jg}` with `re > 0, im >= 0`. Zero maps to zero.
    pub fn canonical_rotation(self) -> (Self, u8) {
        let mut g = self;
        for k in 0..4u8 {
            if g.re > 0 && g.im >= 0 {
                return (g, k);
            }
            g = g.mul_j();
        }
        (self, 0)
    }

    /// `self · j^k`.
    pub fn rotate(self, k: u8) -> Self {
        let mut g = self;
        for _ in 0..(k % 4) {
            g = g.mul_j();
        }
        g
    }
}

/// Round to nearest integer, ties toward +∞.
pub fn round_half_up(v: f64) -> i64 {
    (v + 0.5).floor() as i64
}

/// Map a real value to the odd integer of its length-2 cell `[2k, 2k+2)`.
pub fn slice_odd(v: f64) -> i64 {
    2 * (v / 2.0).floor() as i64 + 1
}

impl fmt::Display for GaussInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im >= 0 {
            write!(f, "{}+{}j", self.re, self.im)
        } else {
            write!(f, "{}{}j", self.re, self.im)
        }
    }
}

impl Add for GaussInt {
    type Output = GaussInt;
    fn add(self, o: GaussInt) -> GaussInt {
        GaussInt::new(self.re + o.re, self.im + o.im)
    }
}

impl AddAssign for GaussInt {
    fn add_assign(&mut self, o: GaussInt) {
        self.re += o.re;
        self.im += o.im;
    }
}

impl Sub for GaussInt {
    type Output = GaussInt;
    fn sub(self, o: GaussInt) -> GaussInt {
        GaussInt::new(self.re - o.re, self.im - o.im)
    }
}

impl SubAssign for GaussInt {
    fn sub_assign(&mut self, o: GaussInt) {
        self.re -= o.re;
        self.im -= o.im;
    }
}

impl Neg for GaussInt {
    type Output = GaussInt;
    fn neg(self) -> GaussInt {
        GaussInt::new(-self.re, -self.im)
    }
}

impl Mul<i64> for GaussInt {
    type Output = GaussInt;
    fn mul(self, k: i64) -> GaussInt {
        GaussInt::new(self.re * k, self.im * k)
    }
}

impl Mul for GaussInt {
    type Output = GaussInt;
    fn mul(self, o: GaussInt) -> GaussInt {
        GaussInt::new(
            self.re * o.re - self.im * o.im,
            self.re * o.im + self.im * o.re,
        )
    }
}

/// PAM (one real dimension) or QAM (complex) constellation family.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstellationKind {
    Pam,
    Qam,
}

/// Average energy of the M-PAM or M²-QAM constellation.
pub fn constellation_energy(m: u32, kind: ConstellationKind) -> f64 {
    let m = m as f64;
    let pam = (m * m - 1.0) / 3.0;
    match kind {
        ConstellationKind::Pam => pam,
        ConstellationKind::Qam => 2.0 * pam,
    }
}

/// An M²-QAM constellation: odd components in `[-(M-1), M-1]`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Qam {
    m: u32,
}

impl Qam {
    /// `m` must be even and at least 2 so that every point has odd components.
    pub fn new(m: u32) -> Result<Self, Error> {
        if m < 2 || !m.is_multiple_of(2) {
            return Err(Error::InvalidConstellation(m));
        }
        Ok(Qam { m })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    /// Half-width of the shaping box `[-M, M)`.
    pub fn half_width(&self) -> i64 {
        self.m as i64
    }

    pub fn size(&self) -> usize {
        (self.m * self.m) as usize
    }

    pub fn energy(&self) -> f64 {
        constellation_energy(self.m, ConstellationKind::Qam)
    }

    pub fn contains(&self, g: GaussInt) -> bool {
        let lim = self.m as i64 - 1;
        g.is_odd() && g.re.abs() <= lim && g.im.abs() <= lim
    }

    pub fn symbol(&self, g: GaussInt) -> Result<QamSymbol, Error> {
        QamSymbol::new(g, self.m)
    }

    /// All points in row-major order.
    pub fn points(&self) -> Vec<GaussInt> {
        let lim = self.m as i64 - 1;
        let axis: Vec<i64> = (-lim..=lim).step_by(2).collect();
        axis.iter()
            .flat_map(|&re| axis.iter().map(move |&im| GaussInt::new(re, im)))
            .collect()
    }

    /// Uniformly random point.
    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> QamSymbol {
        let m = self.m as i64;
        let re = 2 * rng.random_range(0..m) - (m - 1);
        let im = 2 * rng.random_range(0..m) - (m - 1);
        QamSymbol {
            value: GaussInt::new(re, im),
            m: self.m,
        }
    }

    pub fn random_block<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<QamSymbol> {
        (0..n).map(|_| self.random(rng)).collect()
    }
}

/// A validated QAM data symbol.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QamSymbol {
    value: GaussInt,
    m: u32,
}

impl QamSymbol {
    pub fn new(value: GaussInt, m: u32) -> Result<Self, Error> {
        let qam = Qam::new(m)?;
        if !qam.contains(value) {
            return Err(Error::NotInConstellation { symbol: value, m });
        }
        Ok(QamSymbol { value, m })
    }

    pub fn value(&self) -> GaussInt {
        self.value
    }

    pub fn m(&self) -> u32 {
        self.m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn energy_formulas() {
        assert_eq!(constellation_energy(2, ConstellationKind::Pam), 1.0);
        assert_eq!(constellation_energy(8, ConstellationKind::Qam), 42.0);
    }

    #[test]
    fn qam64_energy_matches_enumeration() {
        let qam = Qam::new(8).unwrap();
        let pts = qam.points();
        assert_eq!(pts.len(), 64);
        let mean = pts.iter().map(|g| g.norm_sqr() as f64).sum::<f64>() / 64.0;
        assert!((mean - qam.energy()).abs() < 1e-12);
    }

    #[test]
    fn rounding_ties_go_up() {
        assert_eq!(round_half_up(0.5), 1);
        assert_eq!(round_half_up(-0.5), 0);
        assert_eq!(round_half_up(-1.5), -1);
        assert_eq!(slice_odd(2.0), 3);
        assert_eq!(slice_odd(1.999), 1);
        assert_eq!(slice_odd(-2.0), -1);
        assert_eq!(slice_odd(-0.1), -1);
    }

    #[test]
    fn canonical_rotation_covers_orbit() {
        for g in [GaussInt::new(2, 0), GaussInt::new(-2, 4), GaussInt::new(0, -6)] {
            let (c, k) = g.canonical_rotation();
            assert!(c.re > 0 && c.im >= 0);
            assert_eq!(g.rotate(k), c);
            for r in 0..4 {
                assert_eq!(g.rotate(r).canonical_rotation().0, c);
            }
        }
    }

    #[test]
    fn odd_m_rejected() {
        assert!(Qam::new(3).is_err());
        assert!(QamSymbol::new(GaussInt::new(2, 1), 8).is_err());
        assert!(QamSymbol::new(GaussInt::new(9, 1), 8).is_err());
        assert!(QamSymbol::new(GaussInt::new(7, -7), 8).is_ok());
    }
}
