//! Monte-Carlo frame-error and complexity runs.

use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{awgn_add, box_power, snr_to_sigma2};
use crate::decoder::{bidirectional_decode, stack_decode, BlockInput, DecodeResult, FanoConfig, PathMemory};
use crate::error::{Error, Result};
use crate::gauss::{GaussInt, Qam};
use crate::lattice::{is_minimum_phase, FilterPattern, PatternSpec};
use crate::shaping::{decompress_tail, shape_block, terminate_block, Scheme, ShaperState};

/// Per-block entry budget used by simulations; a block that exhausts it
/// counts as a frame error.
pub const DEFAULT_BLOCK_ENTRIES: u64 = 1_000_000;

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecoderKind {
    #[default]
    #[serde(rename = "stack")]
    Stack,
    #[serde(rename = "bidir", alias = "bidirectional")]
    Bidirectional,
}

/// Decoder settings that do not depend on the noise level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecoderSettings {
    pub kind: DecoderKind,
    pub max_stack: usize,
    pub branch_delta: Option<f64>,
    pub x_range_test: bool,
    pub merge_len: usize,
    pub path_memory: PathMemory,
    pub window_radius: i64,
    pub max_entries: Option<u64>,
    pub verify_merge: bool,
    /// Replaces the Fano bias derived from `σ²`.
    pub bias: Option<f64>,
}

impl Default for DecoderSettings {
    fn default() -> Self {
        let f = FanoConfig::new(1.0);
        DecoderSettings {
            kind: DecoderKind::Stack,
            max_stack: f.max_stack,
            branch_delta: f.branch_delta,
            x_range_test: f.x_range_test,
            merge_len: f.merge_len,
            path_memory: f.path_memory,
            window_radius: f.window_radius,
            max_entries: Some(DEFAULT_BLOCK_ENTRIES),
            verify_merge: f.verify_merge,
            bias: None,
        }
    }
}

impl DecoderSettings {
    pub fn fano(&self, sigma2: f64) -> FanoConfig {
        let base = FanoConfig::new(sigma2);
        FanoConfig {
            bias: self.bias.unwrap_or(base.bias),
            max_stack: self.max_stack,
            branch_delta: self.branch_delta,
            x_range_test: self.x_range_test,
            merge_len: self.merge_len,
            path_memory: self.path_memory,
            window_radius: self.window_radius,
            max_entries: self.max_entries,
            verify_merge: self.verify_merge,
            ..base
        }
    }

    pub fn decode(&self, f: &FilterPattern, blk: &BlockInput, sigma2: f64) -> Result<DecodeResult> {
        let cfg = self.fano(sigma2);
        match self.kind {
            DecoderKind::Stack => stack_decode(f, blk, &cfg),
            DecoderKind::Bidirectional => bidirectional_decode(f, blk, &cfg),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub pattern: PatternSpec,
    pub m: u32,
    pub scheme: Scheme,
    pub decoder: DecoderSettings,
    pub block_len: usize,
    pub blocks: usize,
    pub snr_db: Vec<f64>,
    pub seed: u64,
    /// Worker threads; 0 uses every core. Results do not depend on it.
    pub jobs: usize,
    /// Power that defines the SNR; defaults to the box power `2M²/3`.
    pub signal_power: Option<f64>,
    /// Keep per-block records in the result.
    pub record_blocks: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            pattern: PatternSpec::Named("table1:4".into()),
            m: 8,
            scheme: Scheme::Tomlinson,
            decoder: DecoderSettings::default(),
            block_len: 500,
            blocks: 500,
            snr_db: vec![20.5, 21.0, 21.5, 22.0],
            seed: 1,
            jobs: 0,
            signal_power: None,
            record_blocks: false,
        }
    }
}

impl SimConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn power(&self) -> f64 {
        self.signal_power.unwrap_or_else(|| box_power(self.m))
    }

    /// Check every component and return the built pattern.
    pub fn validate(&self) -> Result<FilterPattern> {
        let f = self.pattern.build()?;
        Qam::new(self.m)?;
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !f.is_fir() {
            return bad("simulation needs an FIR pattern".into());
        }
        if self.block_len < f.order().max(1) || self.blocks == 0 {
            return bad(format!(
                "need at least one block of at least {} symbols",
                f.order().max(1)
            ));
        }
        if self.snr_db.is_empty() || self.snr_db.iter().any(|s| s.is_nan()) {
            return bad("SNR list must be non-empty".into());
        }
        if self.decoder.x_range_test && !self.scheme.has_box() {
            return bad("the box test is only valid for tomlinson and flexible shaping".into());
        }
        if self.decoder.kind == DecoderKind::Bidirectional && !is_minimum_phase(&f)? {
            return bad("bidirectional decoding needs a minimum-phase pattern".into());
        }
        if let Scheme::Nested { m_alg: 0, .. } = self.scheme {
            return bad("M-algorithm width must be at least 1".into());
        }
        self.decoder.fano(1.0).validate()?;
        if self.power().is_nan() || self.power() <= 0.0 {
            return bad("signal power must be positive".into());
        }
        Ok(f)
    }
}

/// Outcome of one simulated block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockRecord {
    pub block: u64,
    pub frame_ok: bool,
    pub entries_processed: u64,
    pub max_occupancy: usize,
    pub evictions: u64,
    pub cpl: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub merge_position: Option<usize>,
    pub failed: bool,
    /// Size of the compressed tail sent out of band.
    pub tail_bits: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimPoint {
    pub snr_db: f64,
    pub sigma2: f64,
    pub frames: u64,
    pub frame_errors: u64,
    pub fer: f64,
    /// Processed stack entries per symbol, averaged over blocks.
    pub mean_comp: f64,
    /// Largest per-block value of the same quantity.
    pub max_comp: f64,
    pub cpl_count: u64,
    pub evictions: u64,
    pub failures: u64,
    pub total_entries: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blocks: Option<Vec<BlockRecord>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub config: SimConfig,
    pub version: String,
    pub signal_power: f64,
    pub points: Vec<SimPoint>,
    /// Mean compressed tail size per block.
    pub tail_bits_mean: f64,
    /// SNR cost of sending the tail, `10·log10(2^(bits/N))` dB.
    pub tail_rate_loss_db: f64,
    pub wall_time_s: f64,
}

impl SimResult {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Columns `snr_db, fer, mean_comp, max_comp`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["snr_db", "fer", "mean_comp", "max_comp"])?;
        for p in &self.points {
            w.serialize((p.snr_db, p.fer, p.mean_comp, p.max_comp))?;
        }
        w.flush()?;
        Ok(())
    }
}

fn block_rng(seed: u64, snr_index: usize, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((snr_index as u64) << 40) ^ block);
    rng
}

/// Shape, encode, transmit and decode one block. The random stream depends
/// only on `(seed, snr_index, block)`.
pub fn run_block(cfg: &SimConfig, f: &FilterPattern, snr_index: usize, sigma2: f64, block: u64) -> Result<BlockRecord> {
    let mut rng = block_rng(cfg.seed, snr_index, block);
    let qam = Qam::new(cfg.m)?;
    let n = cfg.block_len;
    let a = qam.random_block(&mut rng, n);
    let mut state = ShaperState::new(f, cfg.m)?;
    let shaped = shape_block(&a, cfg.scheme, &mut state, f)?;
    let y = awgn_add(&shaped.x, sigma2, &mut rng)?;
    let rec = terminate_block(&state, f)?;
    let tail = decompress_tail(&rec.packed, f)?;
    let head = vec![GaussInt::ZERO; f.order()];
    let blk = BlockInput {
        y: &y,
        n,
        head: &head,
        tail: &tail,
        m: cfg.m,
        truth: Some(&shaped.b),
    };
    let r = cfg.decoder.decode(f, &blk, sigma2)?;
    Ok(BlockRecord {
        block,
        frame_ok: r.b.as_deref() == Some(&shaped.b[..]),
        entries_processed: r.stats.entries_processed,
        max_occupancy: r.stats.max_occupancy,
        evictions: r.stats.evictions,
        cpl: r.stats.cpl,
        merge_position: r.stats.merge_position,
        failed: r.stats.failure.is_some(),
        tail_bits: rec.packed.len() * 8,
    })
}

fn run_point(cfg: &SimConfig, f: &FilterPattern, idx: usize, pool: Option<&rayon::ThreadPool>) -> Result<SimPoint> {
    let snr = cfg.snr_db[idx];
    let sigma2 = snr_to_sigma2(snr, cfg.power())?;
    let work = |b: u64| run_block(cfg, f, idx, sigma2, b);
    let records: Vec<BlockRecord> = match pool {
        None => (0..cfg.blocks as u64).map(work).collect::<Result<_>>()?,
        Some(p) => p.install(|| (0..cfg.blocks as u64).into_par_iter().map(work).collect::<Result<_>>())?,
    };
    let n = cfg.block_len as f64;
    let frames = records.len() as u64;
    let frame_errors = records.iter().filter(|r| !r.frame_ok).count() as u64;
    let comps = records.iter().map(|r| r.entries_processed as f64 / n);
    let point = SimPoint {
        snr_db: snr,
        sigma2,
        frames,
        frame_errors,
        fer: frame_errors as f64 / frames as f64,
        mean_comp: comps.clone().sum::<f64>() / frames as f64,
        max_comp: comps.fold(0.0, f64::max),
        cpl_count: records.iter().filter(|r| r.cpl).count() as u64,
        evictions: records.iter().map(|r| r.evictions).sum(),
        failures: records.iter().filter(|r| r.failed).count() as u64,
        total_entries: records.iter().map(|r| r.entries_processed).sum(),
        blocks: cfg.record_blocks.then_some(records),
    };
    log::info!(
        "{snr:.2} dB: {frame_errors}/{frames} frame errors, {:.2} entries/symbol (max {:.1})",
        point.mean_comp,
        point.max_comp
    );
    Ok(point)
}

/// Run every SNR point of `cfg`. Decode failures count as frame errors.
pub fn run_simulation(cfg: &SimConfig) -> Result<SimResult> {
    let start = Instant::now();
    let f = cfg.validate()?;
    let pool = match cfg.jobs {
        1 => None,
        j => Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(j)
                .build()
                .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?,
        ),
    };
    let points = (0..cfg.snr_db.len())
        .map(|i| run_point(cfg, &f, i, pool.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    // Tail sizes do not depend on the noise; measure them on the first point.
    let tails: Vec<usize> = {
        let qam = Qam::new(cfg.m)?;
        (0..cfg.blocks.min(64) as u64)
            .map(|b| {
                let mut rng = block_rng(cfg.seed, 0, b);
                let a = qam.random_block(&mut rng, cfg.block_len);
                let mut st = ShaperState::new(&f, cfg.m)?;
                shape_block(&a, cfg.scheme, &mut st, &f)?;
                Ok(terminate_block(&st, &f)?.packed.len() * 8)
            })
            .collect::<Result<_>>()?
    };
    let tail_bits_mean = tails.iter().sum::<usize>() as f64 / tails.len() as f64;
    Ok(SimResult {
        config: cfg.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        signal_power: cfg.power(),
        points,
        tail_bits_mean,
        tail_rate_loss_db: 10.0 * 2f64.log10() * tail_bits_mean / cfg.block_len as f64,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SimConfig {
        SimConfig {
            pattern: PatternSpec::Named("table1:1".into()),
            m: 4,
            block_len: 60,
            blocks: 12,
            snr_db: vec![300.0, 16.0],
            seed: 7,
            record_blocks: true,
            ..SimConfig::default()
        }
    }

    #[test]
    fn noiseless_has_no_errors() {
        for scheme in [Scheme::Tomlinson, Scheme::Flexible] {
            let cfg = SimConfig { scheme, ..small() };
            let r = run_simulation(&cfg).unwrap();
            assert_eq!(r.points[0].frame_errors, 0);
            assert!(r.points[0].sigma2 < 1e-28);
        }
        let mut cfg = small();
        cfg.scheme = Scheme::Nested { m_alg: 4, radius: 2 };
        cfg.decoder.x_range_test = false;
        assert_eq!(run_simulation(&cfg).unwrap().points[0].frame_errors, 0);
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let mut cfg = small();
        cfg.snr_db = vec![15.0];
        cfg.jobs = 1;
        let a = run_simulation(&cfg).unwrap();
        cfg.jobs = 3;
        let b = run_simulation(&cfg).unwrap();
        assert_eq!(a.points, b.points);
        cfg.jobs = 1;
        assert_eq!(run_simulation(&cfg).unwrap().points, a.points);
    }

    #[test]
    fn counters_add_up() {
        let mut cfg = small();
        cfg.snr_db = vec![13.0];
        cfg.decoder.kind = DecoderKind::Bidirectional;
        let r = run_simulation(&cfg).unwrap();
        let p = &r.points[0];
        let blocks = p.blocks.as_ref().unwrap();
        assert_eq!(p.total_entries, blocks.iter().map(|b| b.entries_processed).sum::<u64>());
        assert_eq!(p.frame_errors, blocks.iter().filter(|b| !b.frame_ok).count() as u64);
        assert!((p.fer - p.frame_errors as f64 / p.frames as f64).abs() < 1e-15);
        assert!(p.max_comp >= p.mean_comp);
        assert!(r.tail_bits_mean > 0.0 && r.tail_rate_loss_db > 0.0);
    }

    #[test]
    fn config_json() {
        let cfg = small();
        let back = SimConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back.pattern, cfg.pattern);
        assert_eq!(back.decoder, cfg.decoder);
        let partial = SimConfig::from_json(r#"{"blocks": 3, "decoder": {"kind": "bidir"}}"#).unwrap();
        assert_eq!(partial.blocks, 3);
        assert_eq!(partial.decoder.kind, DecoderKind::Bidirectional);
        assert!(SimConfig::from_json(r#"{"blockz": 3}"#).is_err());
        assert!(SimConfig::from_json(r#"{"decoder": {"stack": 3}}"#).is_err());
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = small();
        cfg.scheme = Scheme::Nested { m_alg: 4, radius: 2 };
        assert!(cfg.validate().is_err());
        let cfg = SimConfig { m: 3, ..small() };
        assert!(cfg.validate().is_err());
        let cfg = SimConfig { snr_db: vec![], ..small() };
        assert!(cfg.validate().is_err());
        let cfg = SimConfig { blocks: 0, ..small() };
        assert!(cfg.validate().is_err());
    }
}
