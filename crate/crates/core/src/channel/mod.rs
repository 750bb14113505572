//! AWGN channel, SNR bookkeeping and Monte-Carlo experiments.

mod capacity;
mod gain;
mod sim;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

pub use capacity::{
    box_power, gaussian_capacity, snr_for_rate, uniform_capacity_sigma2, uniform_cutoff_sigma2,
    uniform_input_capacity, uniform_input_cutoff,
};
pub use gain::{shaping_gain_experiment, ShapingGainRow};
pub use sim::{
    run_block, run_simulation, BlockRecord, DEFAULT_BLOCK_ENTRIES, DecoderKind, DecoderSettings, SimConfig, SimPoint,
    SimResult,
};

/// `y_n = x_n + w_n` with circular complex Gaussian `w_n` of total
/// variance `σ²` (`σ²/2` per component).
pub fn awgn_add<R: Rng + ?Sized>(x: &[Complex64], sigma2: f64, rng: &mut R) -> Result<Vec<Complex64>> {
    if !(sigma2.is_finite() && sigma2 >= 0.0) {
        return Err(Error::InvalidArgument(format!("noise variance {sigma2} must be finite and >= 0")));
    }
    if sigma2 == 0.0 {
        return Ok(x.to_vec());
    }
    let nd = Normal::new(0.0, (sigma2 / 2.0).sqrt()).expect("positive deviation");
    Ok(x.iter()
        .map(|&v| v + Complex64::new(nd.sample(rng), nd.sample(rng)))
        .collect())
}

/// `σ² = P / 10^(snr/10)`; `+∞` dB gives a noiseless channel.
pub fn snr_to_sigma2(snr_db: f64, signal_power: f64) -> Result<f64> {
    if signal_power.is_nan() || signal_power <= 0.0 || snr_db.is_nan() {
        return Err(Error::InvalidArgument(format!(
            "signal power {signal_power} must be positive and SNR a number"
        )));
    }
    if snr_db == f64::INFINITY {
        return Ok(0.0);
    }
    Ok(signal_power / 10f64.powf(snr_db / 10.0))
}
