//! Shaping gain of the nested (M-algorithm) shaper.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::gauss::Qam;
use crate::lattice::FilterPattern;
use crate::shaping::{shape_block, Scheme, ShaperState, DEFAULT_K_RADIUS};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapingGainRow {
    pub m: u32,
    pub m_alg: usize,
    pub symbols: usize,
    pub mean_power: f64,
    pub qam_energy: f64,
    /// `10·log10(E_qam / P)`; negative values are a power penalty.
    pub gain_db: f64,
}

/// Mean output power of the nested shaper against the uncoded
/// constellation energy, for every `(m, m_alg)` pair. Data are shaped in
/// independent blocks of `block_len` symbols; every `m_alg` sees the same
/// data.
pub fn shaping_gain_experiment(
    f: &FilterPattern,
    m_algs: &[usize],
    ms: &[u32],
    symbols: usize,
    block_len: usize,
    seed: u64,
) -> Result<Vec<ShapingGainRow>> {
    let blocks = symbols.div_ceil(block_len.max(1));
    let mut rows = Vec::new();
    for &m in ms {
        let qam = Qam::new(m)?;
        for &m_alg in m_algs {
            let scheme = Scheme::Nested {
                m_alg,
                radius: DEFAULT_K_RADIUS,
            };
            let parts = (0..blocks as u64)
                .into_par_iter()
                .map(|b| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(((m as u64) << 40) ^ b);
                    let a = qam.random_block(&mut rng, block_len);
                    let mut st = ShaperState::new(f, m)?;
                    let out = shape_block(&a, scheme, &mut st, f)?;
                    Ok(out.x.iter().map(|v| v.norm_sqr()).sum::<f64>())
                })
                .collect::<Result<Vec<f64>>>()?;
            let total = blocks * block_len;
            let mean_power = parts.iter().sum::<f64>() / total as f64;
            let qam_energy = qam.energy();
            rows.push(ShapingGainRow {
                m,
                m_alg,
                symbols: total,
                mean_power,
                qam_energy,
                gain_db: 10.0 * (qam_energy / mean_power).log10(),
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::table1_pattern;

    #[test]
    fn tomlinson_penalty_and_gain_order() {
        let f = table1_pattern(4).unwrap();
        let rows = shaping_gain_experiment(&f, &[1, 8], &[8], 20_000, 1000, 3).unwrap();
        let penalty = -10.0 * (64.0f64 / 63.0).log10();
        assert!((rows[0].gain_db - penalty).abs() < 0.05, "{}", rows[0].gain_db);
        assert!(rows[1].gain_db > rows[0].gain_db + 0.3);
        assert_eq!(rows[0].symbols, 20_000);
    }
}
