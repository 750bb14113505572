//! Depth-first enumeration of error-symbol sequences with partial-weight
//! pruning.

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};

use num_complex::Complex64;
use rayon::prelude::*;
use smallvec::SmallVec;

use crate::gauss::GaussInt;

/// Slack added to pruning bounds so that rounding in partial sums never
/// removes a branch that leads to an admissible event.
pub(crate) const PRUNE_SLACK: f64 = 1e-9;

/// Which first symbols are admissible.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub(crate) enum FirstSymbol {
    /// One representative per rotation class: `re > 0, im ≥ 0`.
    Canonical,
    /// Every nonzero symbol.
    AnyNonzero,
}

/// Shape of the search tree.
#[derive(Clone, Debug)]
pub(crate) struct Tree<'a> {
    /// Taps `g_0..g_L` (`g_0` need not be 1).
    pub taps: &'a [Complex64],
    /// Sequences may not contain this many consecutive zeros.
    pub max_zero_run: usize,
    pub n_max: usize,
    pub first: FirstSymbol,
}

/// Shared node accounting.
pub(crate) struct Budget {
    pub nodes: AtomicU64,
    pub limit: u64,
    pub exhausted: AtomicBool,
}

impl Budget {
    pub fn new(limit: u64) -> Self {
        Budget {
            nodes: AtomicU64::new(0),
            limit,
            exhausted: AtomicBool::new(false),
        }
    }

    /// Count one node; false once the limit is reached.
    #[inline]
    fn tick(&self) -> bool {
        if self.exhausted.load(Ordering::Relaxed) {
            return false;
        }
        let n = self.nodes.fetch_add(1, Ordering::Relaxed) + 1;
        if n > self.limit {
            self.exhausted.store(true, Ordering::Relaxed);
            return false;
        }
        true
    }

    pub fn count(&self) -> u64 {
        self.nodes.load(Ordering::Relaxed).min(self.limit)
    }

    pub fn is_exhausted(&self) -> bool {
        self.exhausted.load(Ordering::Relaxed)
    }
}

/// What the search does at each node.
pub(crate) trait Visitor {
    /// Children with partial weight at or above this value are pruned.
    fn expand_bound(&self) -> f64;
    /// Called for every visited node with its partial weight (samples up to
    /// the last symbol) and full weight. Returns whether to expand it.
    fn visit(&mut self, seq: &[GaussInt], partial: f64, full: f64) -> bool;
}

/// `Σ_{l=1}^{L} g_l·e_{n+1−l}` for the prefix `seq = e_0..e_n`.
#[inline]
pub(crate) fn next_interference(taps: &[Complex64], seq: &[GaussInt]) -> Complex64 {
    let n1 = seq.len();
    let mut acc = Complex64::new(0.0, 0.0);
    for (l, &g) in taps.iter().enumerate().skip(1) {
        if l > n1 {
            break;
        }
        acc += g * seq[n1 - l].to_c64();
    }
    acc
}

/// Weight of the samples after the last symbol of `seq`.
#[inline]
pub(crate) fn tail_weight(taps: &[Complex64], seq: &[GaussInt]) -> f64 {
    let l = taps.len() - 1;
    let n = seq.len();
    let mut w = 0.0;
    for k in 1..=l {
        // Sample n−1+k: Σ_{j=k}^{L} g_j·e_{n−1+k−j}.
        let mut v = Complex64::new(0.0, 0.0);
        for (j, &g) in taps.iter().enumerate().skip(k) {
            let idx = (n + k) as isize - 1 - j as isize;
            if idx < 0 {
                break;
            }
            v += g * seq[idx as usize].to_c64();
        }
        w += v.norm_sqr();
    }
    w
}

/// Weight of the full convolution of `seq` with `taps`.
pub(crate) fn weight_with_taps(seq: &[GaussInt], taps: &[Complex64]) -> f64 {
    let mut w = 0.0;
    for n in 0..seq.len() + taps.len() - 1 {
        let mut v = Complex64::new(0.0, 0.0);
        for (l, &g) in taps.iter().enumerate() {
            if l <= n && n - l < seq.len() {
                v += g * seq[n - l].to_c64();
            }
        }
        w += v.norm_sqr();
    }
    w
}

type Candidates = SmallVec<[(f64, GaussInt); 64]>;

/// Even symbols `e` with `|c + g0·e|² < budget`, sorted by that increment.
fn candidates(c: Complex64, g0: Complex64, budget: f64, out: &mut Candidates) {
    out.clear();
    if budget <= 0.0 {
        return;
    }
    let center = -c / g0 / 2.0;
    let rho = budget.sqrt() / g0.norm() / 2.0;
    let p_lo = (center.re - rho).ceil() as i64;
    let p_hi = (center.re + rho).floor() as i64;
    for p in p_lo..=p_hi {
        let dx = p as f64 - center.re;
        let rem = rho * rho - dx * dx;
        if rem < 0.0 {
            continue;
        }
        let h = rem.sqrt();
        let q_lo = (center.im - h).ceil() as i64;
        let q_hi = (center.im + h).floor() as i64;
        for q in q_lo..=q_hi {
            let e = GaussInt::new(2 * p, 2 * q);
            let inc = (c + g0 * e.to_c64()).norm_sqr();
            if inc < budget {
                out.push((inc, e));
            }
        }
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
}

impl Tree<'_> {
    /// Admissible first symbols with their increments.
    pub fn roots(&self, bound: f64) -> Vec<(f64, GaussInt)> {
        let mut c = Candidates::new();
        candidates(Complex64::new(0.0, 0.0), self.taps[0], bound + PRUNE_SLACK, &mut c);
        c.into_iter()
            .filter(|(_, e)| match self.first {
                FirstSymbol::Canonical => e.re > 0 && e.im >= 0,
                FirstSymbol::AnyNonzero => !e.is_zero(),
            })
            .collect()
    }

    /// Depth-first search below the prefix `seq` whose partial weight is
    /// `partial` and whose trailing zero run is `zeros`.
    pub fn dfs<V: Visitor>(
        &self,
        seq: &mut Vec<GaussInt>,
        partial: f64,
        zeros: usize,
        v: &mut V,
        budget: &Budget,
    ) {
        if !budget.tick() {
            return;
        }
        let full = partial + tail_weight(self.taps, seq);
        if !v.visit(seq, partial, full) || seq.len() >= self.n_max {
            return;
        }
        let c = next_interference(self.taps, seq);
        let bound = v.expand_bound() + PRUNE_SLACK;
        let mut cand = Candidates::new();
        candidates(c, self.taps[0], bound - partial, &mut cand);
        for (inc, e) in cand {
            let z = if e.is_zero() { zeros + 1 } else { 0 };
            if z >= self.max_zero_run {
                continue;
            }
            // The bound may have tightened during earlier siblings.
            if partial + inc >= v.expand_bound() + PRUNE_SLACK {
                break;
            }
            seq.push(e);
            self.dfs(seq, partial + inc, z, v, budget);
            seq.pop();
            if budget.is_exhausted() {
                return;
            }
        }
    }

    /// Run the search from every admissible root, one visitor per root.
    /// With `parallel` the roots are distributed over the rayon pool.
    pub fn run<V, F>(&self, root_bound: f64, make: F, budget: &Budget, parallel: bool) -> Vec<V>
    where
        V: Visitor + Send,
        F: Fn() -> V + Sync,
    {
        let one = |&(inc, e): &(f64, GaussInt)| {
            let mut v = make();
            let mut seq = vec![e];
            if inc < v.expand_bound() + PRUNE_SLACK {
                self.dfs(&mut seq, inc, 0, &mut v, budget);
            }
            v
        };
        let roots = self.roots(root_bound);
        if parallel {
            roots.par_iter().map(one).collect()
        } else {
            roots.iter().map(one).collect()
        }
    }
}

/// Monotonically decreasing shared bound stored as `f64` bits.
pub(crate) struct SharedRadius(AtomicU64);

impl SharedRadius {
    pub fn new(v: f64) -> Self {
        SharedRadius(AtomicU64::new(v.to_bits()))
    }

    #[inline]
    pub fn get(&self) -> f64 {
        f64::from_bits(self.0.load(Ordering::Relaxed))
    }

    pub fn lower_to(&self, v: f64) {
        let mut cur = self.0.load(Ordering::Relaxed);
        while v < f64::from_bits(cur) {
            match self
                .0
                .compare_exchange_weak(cur, v.to_bits(), Ordering::Relaxed, Ordering::Relaxed)
            {
                Ok(_) => break,
                Err(actual) => cur = actual,
            }
        }
    }
}
