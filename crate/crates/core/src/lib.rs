//! Signal codes: lattice codes whose generator matrix is band-Toeplitz,
//! obtained by convolving odd-grid QAM symbols with a monic
//! minimum-phase filter.
//!
//! The crate covers encoding and shaping ([`shaping`]), exact enumeration
//! of low-weight error events ([`spectrum`]), sequential decoding with the
//! Fano metric ([`decoder`]) and an AWGN simulation harness ([`channel`]).

pub mod error;
pub mod gauss;
pub mod lattice;
pub mod shaping;
pub mod spectrum;
pub mod decoder;
pub mod channel;

pub use error::{Error, Result};
pub use gauss::{constellation_energy, ConstellationKind, GaussInt, Qam, QamSymbol};
pub use lattice::{encode_convolve, Codeword, FilterPattern, PatternSpec};
