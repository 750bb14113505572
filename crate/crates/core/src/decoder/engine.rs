//! One-directional stack decoder over a block.

use num_complex::Complex64;
use smallvec::SmallVec;

use super::heap::MinMaxHeap;
use super::memory::{SymbolMemory, ROOT};
use super::{DirStats, FanoConfig, PathMemory};
use crate::gauss::GaussInt;
use crate::lattice::fir_interference;

/// Candidate sets larger than this fall back to the window around the
/// received sample.
const MAX_BOX_CANDIDATES: i64 = 4096;

/// Shaping-box test applied to each hypothesis.
#[derive(Clone, Debug)]
pub(crate) enum BoxCheck {
    Off,
    /// `x_n = b_n + s` must lie in `[−m, m)²`.
    Forward { m: i64 },
    /// The decoder runs on the reversed block; choosing `b'_p` completes the
    /// forward sample `x_n`, `n = N−1−p+L`, which is tested instead.
    Backward {
        m: i64,
        f: Vec<Complex64>,
        head: Vec<GaussInt>,
        n_block: usize,
    },
}

#[derive(Clone, Debug)]
pub(crate) struct Problem {
    pub taps: Vec<Complex64>,
    pub y: Vec<Complex64>,
    pub n_sym: usize,
    pub forced: Vec<Option<GaussInt>>,
    /// Symbols before position 0, oldest first.
    pub head: Vec<GaussInt>,
    pub check: BoxCheck,
    pub truth: Option<Vec<GaussInt>>,
}

pub(crate) type State = SmallVec<[GaussInt; 8]>;

#[derive(Clone, Debug)]
pub(crate) struct Entry {
    pub score: f64,
    pub len: u32,
    pub counter: u64,
    pub node: u32,
}

impl PartialEq for Entry {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == std::cmp::Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}

/// Greater is better: higher score, then shorter, then older.
impl Ord for Entry {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.score
            .total_cmp(&o.score)
            .then(o.len.cmp(&self.len))
            .then(o.counter.cmp(&self.counter))
    }
}

pub(crate) enum Step {
    /// The entry was extended; its node reference passes to the caller.
    Expanded(Entry),
    /// A full-length path; its node reference passes to the caller.
    Complete(Entry),
    Exhausted,
}

#[inline]
fn in_box(x: Complex64, m: f64) -> bool {
    x.re >= -m && x.re < m && x.im >= -m && x.im < m
}

#[inline]
fn odd_floor(v: f64) -> i64 {
    let f = v.floor() as i64;
    if f.rem_euclid(2) == 1 {
        f
    } else {
        f - 1
    }
}

pub(crate) struct Engine<'p> {
    p: &'p Problem,
    bias: f64,
    cap: usize,
    delta: f64,
    radius: i64,
    depth: Option<usize>,
    heap: MinMaxHeap<Entry>,
    pub mem: SymbolMemory,
    counter: u64,
    pub stats: DirStats,
    true_counter: Option<u64>,
    committed: Vec<u32>,
    scratch: Vec<(f64, GaussInt)>,
}

impl<'p> Engine<'p> {
    pub fn new(p: &'p Problem, cfg: &FanoConfig) -> Self {
        let mut heap = MinMaxHeap::with_capacity(cfg.max_stack.min(1 << 20) + 1);
        heap.push(Entry {
            score: 0.0,
            len: 0,
            counter: 0,
            node: ROOT,
        });
        Engine {
            p,
            bias: cfg.bias,
            cap: cfg.max_stack,
            delta: cfg.branch_delta.unwrap_or(f64::INFINITY),
            radius: cfg.window_radius,
            depth: match cfg.path_memory {
                PathMemory::Full => None,
                PathMemory::Truncated { depth } => Some(depth),
            },
            heap,
            mem: SymbolMemory::new(),
            counter: 1,
            stats: DirStats {
                max_occupancy: 1,
                ..DirStats::default()
            },
            true_counter: p.truth.as_ref().map(|_| 0),
            committed: Vec::new(),
            scratch: Vec::new(),
        }
    }

    /// Best score in the stack.
    pub fn best_score(&self) -> Option<f64> {
        self.heap.peek_max().map(|e| e.score)
    }

    pub fn step(&mut self) -> Step {
        loop {
            let Some(e) = self.heap.pop_max() else {
                return Step::Exhausted;
            };
            if !self.valid(&e) {
                self.drop_entry(e);
                continue;
            }
            self.stats.entries_processed += 1;
            if e.len as usize == self.p.n_sym {
                return Step::Complete(e);
            }
            self.commit(&e);
            self.expand(&e);
            return Step::Expanded(e);
        }
    }

    fn drop_entry(&mut self, e: Entry) {
        if Some(e.counter) == self.true_counter {
            self.stats.cpl = true;
            self.true_counter = None;
        }
        self.mem.release(e.node);
    }

    fn valid(&self, e: &Entry) -> bool {
        let c = self.committed.len();
        if c == 0 {
            return true;
        }
        if e.node == ROOT {
            return false;
        }
        let pos = e.len as usize - 1;
        if pos + 1 >= c {
            self.mem.ancestor_at(e.node, c - 1) == Some(self.committed[c - 1])
        } else {
            e.node == self.committed[pos]
        }
    }

    /// Truncated path memory: fix every symbol more than `depth` behind the
    /// newest extracted path.
    fn commit(&mut self, e: &Entry) {
        let Some(d) = self.depth else { return };
        while self.committed.len() + d < e.len as usize {
            let pos = self.committed.len();
            let node = self
                .mem
                .ancestor_at(e.node, pos)
                .expect("valid entry reaches the commit point");
            self.mem.retain(node);
            self.mem.cut(node);
            self.committed.push(node);
        }
    }

    /// Hypothesized forward sample completed by choosing `cand` at backward
    /// position `p`, or `None` past the block end.
    fn backward_x(&self, p: usize, cand: GaussInt, state: &[GaussInt], f: &[Complex64], head: &[GaussInt], nb: usize) -> Option<Complex64> {
        let l = f.len() - 1;
        if p < l {
            return None;
        }
        let real = |j: usize, v: GaussInt| if j >= nb { head[l - (j - nb + 1)] } else { v };
        if l == 0 {
            return Some(real(p, cand).to_c64());
        }
        let mut recent: SmallVec<[GaussInt; 8]> = SmallVec::with_capacity(l);
        recent.push(real(p, cand));
        for k in 1..l {
            recent.push(real(p - k, state[l - k]));
        }
        let bn = real(p - l, state[0]);
        Some(bn.to_c64() + fir_interference(f, &recent))
    }

    fn admissible(&self, pos: usize, b: GaussInt, s: Complex64, state: &[GaussInt]) -> bool {
        match &self.p.check {
            BoxCheck::Off => true,
            BoxCheck::Forward { m } => in_box(b.to_c64() + s, *m as f64),
            BoxCheck::Backward { m, f, head, n_block } => self
                .backward_x(pos, b, state, f, head, *n_block)
                .is_none_or(|x| in_box(x, *m as f64)),
        }
    }

    fn window(&mut self, y: Complex64, s: Complex64) {
        let c = GaussInt::round_odd(y - s);
        for dr in -self.radius..=self.radius {
            for di in -self.radius..=self.radius {
                self.scratch.push((0.0, c + GaussInt::new(2 * dr, 2 * di)));
            }
        }
    }

    fn odd_range(&mut self, re: (f64, f64), im: (f64, f64)) -> bool {
        let (r0, r1) = (odd_floor(re.0) - 2, odd_floor(re.1) + 2);
        let (i0, i1) = (odd_floor(im.0) - 2, odd_floor(im.1) + 2);
        if ((r1 - r0) / 2 + 1) * ((i1 - i0) / 2 + 1) > MAX_BOX_CANDIDATES {
            return false;
        }
        let mut a = r0;
        while a <= r1 {
            let mut b = i0;
            while b <= i1 {
                self.scratch.push((0.0, GaussInt::new(a, b)));
                b += 2;
            }
            a += 2;
        }
        true
    }

    /// Fill `scratch` with candidate symbols at a free position (before the
    /// exact admissibility test).
    fn enumerate(&mut self, pos: usize, y: Complex64, s: Complex64, state: &[GaussInt]) {
        self.scratch.clear();
        match &self.p.check {
            BoxCheck::Off => self.window(y, s),
            BoxCheck::Forward { m } => {
                let m = *m as f64;
                self.odd_range((-m - s.re, m - s.re), (-m - s.im, m - s.im));
            }
            BoxCheck::Backward { m, f, head, n_block } => {
                let l = f.len() - 1;
                let coef = f[l];
                let k = self
                    .backward_x(pos, GaussInt::ZERO, state, f, head, *n_block)
                    .unwrap_or_default();
                let m = *m as f64;
                let ok = coef.norm() > 1e-3 && {
                    let corners = [(-m, -m), (m, -m), (m, m), (-m, m)]
                        .map(|(a, b)| (Complex64::new(a, b) - k) / coef);
                    let lo_re = corners.iter().map(|c| c.re).fold(f64::INFINITY, f64::min);
                    let hi_re = corners.iter().map(|c| c.re).fold(f64::NEG_INFINITY, f64::max);
                    let lo_im = corners.iter().map(|c| c.im).fold(f64::INFINITY, f64::min);
                    let hi_im = corners.iter().map(|c| c.im).fold(f64::NEG_INFINITY, f64::max);
                    self.odd_range((lo_re, hi_re), (lo_im, hi_im))
                };
                if !ok {
                    self.scratch.clear();
                    self.window(y, s);
                }
            }
        }
    }

    /// `b_{n−L}..b_{n−1}` for the path ending at `node` (length `n`).
    fn state_of(&self, node: u32, n: usize) -> State {
        let l = self.p.head.len();
        let mut st = State::new();
        if n < l {
            st.extend_from_slice(&self.p.head[n..]);
        }
        st.extend_from_slice(&self.last_symbols(node, l.min(n)));
        st
    }

    fn expand(&mut self, e: &Entry) {
        let n = e.len as usize;
        let state = self.state_of(e.node, n);
        let taps = &self.p.taps;
        let s = fir_interference(taps, &state);
        let y = self.p.y[n];
        match self.p.forced[n] {
            Some(b) => {
                self.scratch.clear();
                self.scratch.push((0.0, b));
            }
            None => self.enumerate(n, y, s, &state),
        }
        let mut cands = std::mem::take(&mut self.scratch);
        cands.retain(|c| self.admissible(n, c.1, s, &state));
        let mut best = f64::NEG_INFINITY;
        for c in cands.iter_mut() {
            c.0 = self.bias - (y - (c.1.to_c64() + s)).norm_sqr();
            best = best.max(c.0);
        }
        let floor = best - self.delta;
        cands.retain(|c| c.0 >= floor);
        cands.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        if cands.is_empty() {
            self.stats.dead_ends += 1;
            log::trace!("no admissible successor at position {n}");
        }

        let tracking = self.true_counter == Some(e.counter);
        let want = if tracking {
            self.p.truth.as_ref().map(|t| t[n])
        } else {
            None
        };
        if tracking {
            self.true_counter = None;
        }
        for &(metric, b) in &cands {
            let mut child = Entry {
                score: e.score + metric,
                len: e.len + 1,
                counter: self.counter,
                node: ROOT,
            };
            self.counter += 1;
            // A child that would be evicted at once is never allocated.
            if self.heap.len() >= self.cap && self.heap.peek_min().is_some_and(|w| child < *w) {
                self.stats.evictions += 1;
                continue;
            }
            child.node = self.mem.alloc(b, e.node);
            if want == Some(b) {
                self.true_counter = Some(child.counter);
            }
            if let Some(out) = self.heap.push_bounded(child, self.cap) {
                self.stats.evictions += 1;
                self.drop_entry(out);
            }
        }
        if tracking && self.true_counter.is_none() {
            self.stats.cpl = true;
        }
        self.stats.max_occupancy = self.stats.max_occupancy.max(self.heap.len());
        cands.clear();
        self.scratch = cands;
    }

    /// Full path ending at `node`.
    pub fn path_of(&self, node: u32) -> Vec<GaussInt> {
        if node == ROOT {
            return Vec::new();
        }
        let tail = self.mem.path(node);
        let start = self.mem.pos(node) + 1 - tail.len();
        let mut out: Vec<GaussInt> = self.committed[..start].iter().map(|&c| self.mem.symbol(c)).collect();
        out.extend(tail);
        out
    }

    /// The last `k` symbols of the path ending at `node`, oldest first.
    pub fn last_symbols(&self, node: u32, k: usize) -> State {
        let mut out = State::new();
        let mut id = node;
        while out.len() < k && id != ROOT {
            out.push(self.mem.symbol(id));
            let pos = self.mem.pos(id);
            id = self.mem.parent(id);
            if id == ROOT && pos > 0 {
                id = self.committed[pos - 1];
            }
        }
        out.reverse();
        out
    }

    /// Release every reference held by the engine itself.
    pub fn shutdown(&mut self) {
        let entries: Vec<Entry> = self.heap.drain().collect();
        for e in entries {
            self.mem.release(e.node);
        }
        for c in std::mem::take(&mut self.committed) {
            self.mem.release(c);
        }
    }
}
