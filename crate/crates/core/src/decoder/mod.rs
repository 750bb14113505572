//! Sequential (stack) decoding with the Fano metric.
//!
//! The stack holds partial paths ordered by accumulated metric. The best
//! one is extended by every admissible symbol and the children are pushed
//! back; when the stack is full the worst entry is dropped. The
//! bidirectional decoder runs a second stack on the time-reversed block
//! and stops when the two searches meet.

mod engine;
pub mod heap;
pub mod memory;
pub mod merge;
pub mod metric;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauss::GaussInt;
use crate::lattice::{backward_code_transform, encode_with_head, is_minimum_phase, FilterPattern};
use engine::{BoxCheck, Engine, Problem, Step};
pub use heap::MinMaxHeap;
pub use merge::MergeIndex;
pub use metric::{branch_metric, complex_boundary, fano_bias, NoiseKind};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PathMemory {
    /// Every entry keeps its whole path.
    Full,
    /// Symbols further than `depth` behind the newest extracted entry are
    /// committed; entries that disagree with them are discarded.
    Truncated { depth: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FanoConfig {
    /// Noise variance per complex symbol.
    pub sigma2: f64,
    pub bias: f64,
    pub max_stack: usize,
    /// Children whose branch metric is more than this below the best child
    /// are not pushed. `None` keeps all.
    pub branch_delta: Option<f64>,
    /// Only hypothesize symbols whose sample lies in the shaping box
    /// (valid for Tomlinson and flexible shaping).
    pub x_range_test: bool,
    /// Symbols compared when the two searches meet; 0 means `L`.
    pub merge_len: usize,
    pub path_memory: PathMemory,
    /// Half-width (in odd-grid steps) of the candidate window used when no
    /// box test applies.
    pub window_radius: i64,
    /// Give up after processing this many entries (both directions).
    pub max_entries: Option<u64>,
    /// Accept a meeting point (or a backward completion) only once its
    /// total metric beats every open forward entry. With zero bias this
    /// makes the bidirectional decoder maximum likelihood.
    pub verify_merge: bool,
}

impl FanoConfig {
    pub fn new(sigma2: f64) -> Self {
        FanoConfig {
            sigma2,
            bias: fano_bias(sigma2, NoiseKind::Complex),
            max_stack: 10_000,
            branch_delta: None,
            x_range_test: true,
            merge_len: 0,
            path_memory: PathMemory::Full,
            window_radius: 2,
            max_entries: None,
            verify_merge: false,
        }
    }

    /// Plain minimum-distance search: zero bias, unbounded stack.
    pub fn ml(sigma2: f64) -> Self {
        FanoConfig {
            bias: 0.0,
            max_stack: usize::MAX,
            verify_merge: true,
            ..FanoConfig::new(sigma2)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.into()));
        if self.sigma2.is_nan() || self.sigma2 < 0.0 || !self.bias.is_finite() {
            return bad("noise variance and bias must be finite and non-negative variance");
        }
        if self.max_stack < 2 {
            return bad("stack must hold at least two entries");
        }
        if self.branch_delta.is_some_and(|d| d.is_nan() || d < 0.0) {
            return bad("branch margin must be non-negative");
        }
        if self.window_radius < 0 {
            return bad("window radius must be non-negative");
        }
        if matches!(self.path_memory, PathMemory::Truncated { depth: 0 }) {
            return bad("path memory depth must be positive");
        }
        Ok(())
    }
}

/// One received block.
#[derive(Clone, Debug)]
pub struct BlockInput<'a> {
    /// At least `n` samples. Samples past `n` are ignored: the tail is
    /// known to the receiver.
    pub y: &'a [Complex64],
    pub n: usize,
    /// `b_{−L}..b_{−1}`, the last symbols of the previous block.
    pub head: &'a [GaussInt],
    /// `b_{N−L}..b_{N−1}`, delivered out of band.
    pub tail: &'a [GaussInt],
    /// Constellation size for the box test.
    pub m: u32,
    /// Transmitted symbols, used only for correct-path statistics.
    pub truth: Option<&'a [GaussInt]>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DirStats {
    pub entries_processed: u64,
    pub max_occupancy: usize,
    pub evictions: u64,
    /// The correct path left the stack (needs `truth`).
    pub cpl: bool,
    /// Extracted entries without any admissible successor.
    pub dead_ends: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DecodeStats {
    pub entries_processed: u64,
    pub max_occupancy: usize,
    pub evictions: u64,
    pub cpl: bool,
    pub forward: DirStats,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub backward: Option<DirStats>,
    /// Forward position where the searches met.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub merge_position: Option<usize>,
    /// Merges rejected by `verify_merge`.
    pub rejected_merges: u64,
    pub symbols_allocated: u64,
    /// Every path-memory node was freed at the end.
    pub memory_balanced: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecodeResult {
    /// `None` when decoding failed.
    pub b: Option<Vec<GaussInt>>,
    /// Accumulated Fano metric of `b`.
    pub score: Option<f64>,
    pub stats: DecodeStats,
}

impl DecodeResult {
    pub fn is_ok(&self) -> bool {
        self.b.is_some()
    }
}

fn check_block(f: &FilterPattern, blk: &BlockInput, cfg: &FanoConfig) -> Result<()> {
    cfg.validate()?;
    if !f.is_fir() {
        return Err(Error::InvalidArgument("decoding needs an FIR pattern".into()));
    }
    let l = f.order();
    if blk.n < l.max(1) || blk.y.len() < blk.n {
        return Err(Error::InvalidArgument(format!(
            "block of {} samples cannot hold {} symbols with {l} tail symbols",
            blk.y.len(),
            blk.n
        )));
    }
    if blk.head.len() != l || blk.tail.len() != l {
        return Err(Error::InvalidArgument(format!("head and tail must hold {l} symbols")));
    }
    if blk.truth.is_some_and(|t| t.len() != blk.n) {
        return Err(Error::InvalidArgument("truth must hold N symbols".into()));
    }
    Ok(())
}

/// Fano metric of a full path: `Σ (B − |y_n − x_n|²)` over its samples.
pub fn path_score(f: &FilterPattern, head: &[GaussInt], b: &[GaussInt], y: &[Complex64], bias: f64) -> f64 {
    b.len() as f64 * bias - path_distance(f, head, b, y)
}

/// Sum of squared errors of `b` against the first `b.len()` samples.
pub fn path_distance(f: &FilterPattern, head: &[GaussInt], b: &[GaussInt], y: &[Complex64]) -> f64 {
    let x = encode_with_head(b, head, f);
    (0..b.len()).map(|n| (y[n] - x.samples[n]).norm_sqr()).sum()
}

fn forward_problem(f: &FilterPattern, blk: &BlockInput, cfg: &FanoConfig) -> Problem {
    let l = f.order();
    let n = blk.n;
    let mut forced = vec![None; n];
    for (k, &t) in blk.tail.iter().enumerate() {
        forced[n - l + k] = Some(t);
    }
    Problem {
        taps: f.taps().to_vec(),
        y: blk.y[..n].to_vec(),
        n_sym: n,
        forced,
        head: blk.head.to_vec(),
        check: if cfg.x_range_test {
            BoxCheck::Forward { m: blk.m as i64 }
        } else {
            BoxCheck::Off
        },
        truth: blk.truth.map(<[GaussInt]>::to_vec),
    }
}

/// The reversed block: `b'_p = b_{N−1−p}`, known for `p < L`, zero for
/// `p ≥ N`.
fn backward_problem(f: &FilterPattern, blk: &BlockInput, cfg: &FanoConfig) -> Result<Problem> {
    let l = f.order();
    let n = blk.n;
    let zeros = vec![GaussInt::ZERO; n];
    let from_head = encode_with_head(&zeros, blk.head, f).samples;
    let mut tail_block = vec![GaussInt::ZERO; n];
    tail_block[n - l..].copy_from_slice(blk.tail);
    let from_tail = encode_with_head(&tail_block, &vec![GaussInt::ZERO; l], f).samples;
    let mut y: Vec<Complex64> = (0..n).map(|k| blk.y[k] - from_head[k]).collect();
    y.extend_from_slice(&from_tail[n..n + l]);
    let (fb, yb) = backward_code_transform(f, &y)?;
    let mut forced = vec![None; n + l];
    for (slot, &t) in forced.iter_mut().zip(blk.tail.iter().rev()) {
        *slot = Some(t);
    }
    for slot in forced.iter_mut().skip(n) {
        *slot = Some(GaussInt::ZERO);
    }
    Ok(Problem {
        taps: fb.taps().to_vec(),
        y: yb,
        n_sym: n + l,
        forced,
        head: vec![GaussInt::ZERO; l],
        check: if cfg.x_range_test {
            BoxCheck::Backward {
                m: blk.m as i64,
                f: f.taps().to_vec(),
                head: blk.head.to_vec(),
                n_block: n,
            }
        } else {
            BoxCheck::Off
        },
        truth: blk.truth.map(|t| {
            let mut v: Vec<GaussInt> = t.iter().rev().copied().collect();
            v.resize(n + l, GaussInt::ZERO);
            v
        }),
    })
}

fn over_budget(cfg: &FanoConfig, used: u64) -> bool {
    cfg.max_entries.is_some_and(|m| used >= m)
}

/// Decode one block with a single stack running forward.
pub fn stack_decode(f: &FilterPattern, blk: &BlockInput, cfg: &FanoConfig) -> Result<DecodeResult> {
    check_block(f, blk, cfg)?;
    let p = forward_problem(f, blk, cfg);
    let mut eng = Engine::new(&p, cfg);
    let mut b = None;
    let mut score = None;
    let mut failure = None;
    loop {
        if over_budget(cfg, eng.stats.entries_processed) {
            failure = Some("entry budget exhausted".to_string());
            break;
        }
        match eng.step() {
            Step::Expanded(e) => eng.mem.release(e.node),
            Step::Complete(e) => {
                b = Some(eng.path_of(e.node));
                score = Some(e.score);
                eng.mem.release(e.node);
                break;
            }
            Step::Exhausted => {
                failure = Some("stack exhausted".to_string());
                break;
            }
        }
    }
    eng.shutdown();
    let fs = eng.stats.clone();
    Ok(DecodeResult {
        b,
        score,
        stats: DecodeStats {
            entries_processed: fs.entries_processed,
            max_occupancy: fs.max_occupancy,
            evictions: fs.evictions,
            cpl: fs.cpl,
            forward: fs,
            backward: None,
            merge_position: None,
            rejected_merges: 0,
            symbols_allocated: eng.mem.allocations(),
            memory_balanced: eng.mem.live() == 0 && eng.mem.allocations() == eng.mem.frees(),
            failure,
        },
    })
}

struct Bidir<'a> {
    f: &'a FilterPattern,
    blk: &'a BlockInput<'a>,
    cfg: &'a FanoConfig,
    n: usize,
    ml: usize,
    idx_f: MergeIndex<u32>,
    idx_b: MergeIndex<u32>,
    rejected: u64,
}

impl Bidir<'_> {
    /// Forward distance of a candidate, checked against the open forward
    /// entries when certification is on.
    fn accept(&mut self, fwd: &Engine, b: &[GaussInt]) -> bool {
        if !self.cfg.verify_merge {
            return true;
        }
        let d = path_distance(self.f, self.blk.head, b, self.blk.y);
        let frontier = fwd.best_score().map_or(f64::INFINITY, |s| -s);
        if d <= frontier {
            true
        } else {
            self.rejected += 1;
            false
        }
    }

    fn splice(&self, fwd: &Engine, fnode: u32, bwd: &Engine, bnode: u32) -> Vec<GaussInt> {
        let mut out = fwd.path_of(fnode);
        let bp = bwd.path_of(bnode);
        out.extend(bp[..bp.len() - self.ml].iter().rev());
        debug_assert_eq!(out.len(), self.n);
        out
    }

    /// Returns the decoded block if `node` meets an entry of the other side.
    fn forward_entry(&mut self, fwd: &mut Engine, bwd: &Engine, node: u32, len: usize) -> Option<(Vec<GaussInt>, usize)> {
        if len < self.ml || len > self.n {
            fwd.mem.release(node);
            return None;
        }
        let key = fwd.last_symbols(node, self.ml);
        let s = self.n - len + self.ml;
        let mut rkey = key.clone();
        rkey.reverse();
        let hits: Vec<u32> = self.idx_b.query(s, &rkey).to_vec();
        for bnode in hits {
            let cand = self.splice(fwd, node, bwd, bnode);
            if self.accept(fwd, &cand) {
                fwd.mem.release(node);
                return Some((cand, len));
            }
        }
        self.idx_f.insert(len, &key, node);
        None
    }

    fn backward_entry(&mut self, fwd: &Engine, bwd: &mut Engine, node: u32, len: usize) -> Option<(Vec<GaussInt>, usize)> {
        if len < self.ml || len > self.n {
            bwd.mem.release(node);
            return None;
        }
        let key = bwd.last_symbols(node, self.ml);
        let t = self.n - len + self.ml;
        let mut fkey = key.clone();
        fkey.reverse();
        let hits: Vec<u32> = self.idx_f.query(t, &fkey).to_vec();
        for fnode in hits {
            let cand = self.splice(fwd, fnode, bwd, node);
            if self.accept(fwd, &cand) {
                bwd.mem.release(node);
                return Some((cand, t));
            }
        }
        self.idx_b.insert(len, &key, node);
        None
    }
}

/// Decode one block with a forward and a backward stack that alternate and
/// stop when an extracted path of one side meets a stored path of the
/// other on `merge_len` consecutive symbols. The pattern must be minimum
/// phase.
pub fn bidirectional_decode(f: &FilterPattern, blk: &BlockInput, cfg: &FanoConfig) -> Result<DecodeResult> {
    check_block(f, blk, cfg)?;
    if !is_minimum_phase(f)? {
        return Err(Error::InvalidArgument("bidirectional decoding needs a minimum-phase pattern".into()));
    }
    let l = f.order();
    let ml = if cfg.merge_len == 0 { l } else { cfg.merge_len };
    if ml < l || ml > blk.n {
        return Err(Error::InvalidArgument(format!(
            "merge length {ml} must lie in [{l}, {}]",
            blk.n
        )));
    }
    let pf = forward_problem(f, blk, cfg);
    let pb = backward_problem(f, blk, cfg)?;
    let mut fwd = Engine::new(&pf, cfg);
    let mut bwd = Engine::new(&pb, cfg);
    let mut st = Bidir {
        f,
        blk,
        cfg,
        n: blk.n,
        ml,
        idx_f: MergeIndex::new(),
        idx_b: MergeIndex::new(),
        rejected: 0,
    };
    let mut result: Option<(Vec<GaussInt>, Option<usize>)> = None;
    let mut failure = None;
    let (mut f_done, mut b_done) = (false, false);
    loop {
        if f_done && b_done {
            failure = Some("both stacks exhausted".to_string());
            break;
        }
        if over_budget(cfg, fwd.stats.entries_processed + bwd.stats.entries_processed) {
            failure = Some("entry budget exhausted".to_string());
            break;
        }
        if !f_done {
            match fwd.step() {
                Step::Expanded(e) => {
                    if let Some((b, t)) = st.forward_entry(&mut fwd, &bwd, e.node, e.len as usize) {
                        result = Some((b, Some(t)));
                        break;
                    }
                }
                Step::Complete(e) => {
                    result = Some((fwd.path_of(e.node), None));
                    fwd.mem.release(e.node);
                    break;
                }
                Step::Exhausted => f_done = true,
            }
        }
        if !b_done {
            match bwd.step() {
                Step::Expanded(e) => {
                    if let Some((b, t)) = st.backward_entry(&fwd, &mut bwd, e.node, e.len as usize) {
                        result = Some((b, Some(t)));
                        break;
                    }
                }
                Step::Complete(e) => {
                    let path = bwd.path_of(e.node);
                    let cand: Vec<GaussInt> = path[..blk.n].iter().rev().copied().collect();
                    let ok = st.accept(&fwd, &cand);
                    bwd.mem.release(e.node);
                    if ok {
                        result = Some((cand, None));
                        break;
                    }
                }
                Step::Exhausted => b_done = true,
            }
        }
    }
    for node in st.idx_f.drain_values().collect::<Vec<_>>() {
        fwd.mem.release(node);
    }
    for node in st.idx_b.drain_values().collect::<Vec<_>>() {
        bwd.mem.release(node);
    }
    fwd.shutdown();
    bwd.shutdown();
    let (fs, bs) = (fwd.stats.clone(), bwd.stats.clone());
    let balanced = [&fwd.mem, &bwd.mem]
        .iter()
        .all(|m| m.live() == 0 && m.allocations() == m.frees());
    let (b, merge_position) = match result {
        Some((b, t)) => (Some(b), t),
        None => (None, None),
    };
    if let Some(t) = merge_position {
        log::debug!("searches met at position {t} of {}", blk.n);
    }
    let score = b.as_ref().map(|b| path_score(f, blk.head, b, blk.y, cfg.bias));
    Ok(DecodeResult {
        b,
        score,
        stats: DecodeStats {
            entries_processed: fs.entries_processed + bs.entries_processed,
            max_occupancy: fs.max_occupancy.max(bs.max_occupancy),
            evictions: fs.evictions + bs.evictions,
            cpl: fs.cpl && bs.cpl,
            forward: fs,
            backward: Some(bs),
            merge_position,
            rejected_merges: st.rejected,
            symbols_allocated: fwd.mem.allocations() + bwd.mem.allocations(),
            memory_balanced: balanced,
            failure,
        },
    })
}
