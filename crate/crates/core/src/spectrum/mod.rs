//! Error spectrum of a signal code.
//!
//! An error event is a sequence `e_0..e_{K−1}` of even complex integers (the
//! difference of two symbol sequences) with nonzero first and last symbol
//! and no run of `L` zeros inside. Its weight is the energy of `e ⊛ f`.
//! Events that differ by a shift or a rotation by a power of `j` have the
//! same weight; reports keep one representative whose first symbol has
//! `re > 0, im ≥ 0`.

mod backward;
mod cartesian;
mod fit;
pub(crate) mod search;

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauss::GaussInt;
use crate::lattice::{poly, FilterPattern};
use search::{Budget, FirstSymbol, SharedRadius, Tree, Visitor};

pub use backward::backward_forward_search;
pub use cartesian::{cartesian_b, cartesian_spectrum};
pub use fit::{histogram_fit, power_law_fit, PowerLawFit};

pub const DEFAULT_NODE_BUDGET: u64 = 1_000_000_000;

/// Weights closer than this are treated as equal.
pub const WEIGHT_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    /// Search tree nodes before giving up with an incomplete result.
    pub node_budget: u64,
    /// Split first symbols over the rayon pool.
    pub parallel: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            node_budget: DEFAULT_NODE_BUDGET,
            parallel: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorEvent {
    pub seq: Vec<GaussInt>,
    pub weight: f64,
}

impl ErrorEvent {
    pub fn len(&self) -> usize {
        self.seq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seq.is_empty()
    }
}

/// Rotate `seq` by the power of `j` that makes its first nonzero symbol
/// canonical.
pub fn canonicalize(seq: &[GaussInt]) -> Vec<GaussInt> {
    let k = seq
        .iter()
        .find(|e| !e.is_zero())
        .map_or(0, |e| e.canonical_rotation().1);
    seq.iter().map(|e| e.rotate(k)).collect()
}

/// Whether `seq` is an admissible error sequence for a pattern of memory
/// `l`: even components, nonzero ends, no run of `max(l, 1)` zeros.
pub fn is_admissible(seq: &[GaussInt], l: usize) -> bool {
    let (Some(first), Some(last)) = (seq.first(), seq.last()) else {
        return false;
    };
    if first.is_zero() || last.is_zero() || !seq.iter().all(|e| e.is_even()) {
        return false;
    }
    let limit = l.max(1);
    let mut run = 0;
    for e in seq {
        run = if e.is_zero() { run + 1 } else { 0 };
        if run >= limit {
            return false;
        }
    }
    true
}

/// Whether `e_t` and `e_{K−1−t}` agree up to a global rotation, optionally
/// combined with conjugation. The minimizing events of good patterns tend
/// to have this symmetry.
pub fn mirror_symmetric(seq: &[GaussInt]) -> bool {
    let k = seq.len();
    (0..4u8).any(|r| {
        let plain = (0..k).all(|t| seq[k - 1 - t] == seq[t].rotate(r));
        let conj = (0..k).all(|t| seq[k - 1 - t] == seq[t].conj().rotate(r));
        plain || conj
    })
}

fn expanded_taps(f: &FilterPattern) -> Vec<Complex64> {
    if f.is_fir() {
        f.taps().to_vec()
    } else {
        poly::divide_series(f.taps(), f.den(), 1e-15, 1 << 16)
    }
}

/// Squared Euclidean norm of `e ⊛ f` over its full support. ARMA patterns
/// use their impulse response, truncated far below double precision.
pub fn error_weight(e: &[GaussInt], f: &FilterPattern) -> f64 {
    if f.is_fir() {
        search::weight_with_taps(e, f.taps())
    } else {
        search::weight_with_taps(e, &expanded_taps(f))
    }
}

/// Same as [`error_weight`] for an arbitrary (not necessarily monic) tap
/// vector.
pub fn error_weight_taps(e: &[GaussInt], taps: &[Complex64]) -> f64 {
    search::weight_with_taps(e, taps)
}

/// All canonical events below a search radius.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    /// Sorted by weight, then length, then symbols.
    pub events: Vec<ErrorEvent>,
    pub d2_search: f64,
    pub n_max: usize,
    pub d2_min: Option<f64>,
    pub n_min: Option<usize>,
    pub nodes_examined: u64,
    /// False when the node budget ran out.
    pub complete: bool,
}

fn event_order(a: &ErrorEvent, b: &ErrorEvent) -> std::cmp::Ordering {
    a.weight
        .total_cmp(&b.weight)
        .then(a.seq.len().cmp(&b.seq.len()))
        .then_with(|| a.seq.cmp(&b.seq))
}

/// Index of the lightest event, ties within [`WEIGHT_TOL`] going to the
/// shortest.
fn lightest(events: &[ErrorEvent]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, ev) in events.iter().enumerate() {
        best = match best {
            None => Some(i),
            Some(j) => {
                let b = &events[j];
                let lighter = ev.weight < b.weight - WEIGHT_TOL;
                let tie_shorter = (ev.weight - b.weight).abs() <= WEIGHT_TOL
                    && (ev.len(), &ev.seq) < (b.len(), &b.seq);
                if lighter || tie_shorter {
                    Some(i)
                } else {
                    Some(j)
                }
            }
        };
    }
    best
}

impl SpectrumReport {
    pub fn new(mut events: Vec<ErrorEvent>, d2_search: f64, n_max: usize, nodes: u64, complete: bool) -> Self {
        events.sort_by(event_order);
        let best = lightest(&events);
        SpectrumReport {
            d2_min: best.map(|i| events[i].weight),
            n_min: best.map(|i| events[i].len()),
            events,
            d2_search,
            n_max,
            nodes_examined: nodes,
            complete,
        }
    }

    /// Counts per unit-width bin `[k, k+1)`, as `(k, count)` for every
    /// nonempty bin.
    pub fn histogram(&self) -> Vec<(i64, u64)> {
        let mut bins: Vec<(i64, u64)> = Vec::new();
        for ev in &self.events {
            let k = ev.weight.floor() as i64;
            match bins.binary_search_by_key(&k, |b| b.0) {
                Ok(i) => bins[i].1 += 1,
                Err(i) => bins.insert(i, (k, 1)),
            }
        }
        bins
    }

    pub fn write_histogram_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["bin_start", "count"])?;
        for (k, c) in self.histogram() {
            wr.write_record([k.to_string(), c.to_string()])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn check_search_args(f: &FilterPattern, d2: f64, n_max: usize) -> Result<()> {
    if !f.is_fir() {
        return Err(Error::InvalidArgument("spectrum search needs an FIR pattern".into()));
    }
    if !(d2.is_finite() && d2 > 0.0) {
        return Err(Error::InvalidArgument(format!("search radius must be positive, got {d2}")));
    }
    if n_max < 1 {
        return Err(Error::InvalidArgument("maximum event length must be at least 1".into()));
    }
    Ok(())
}

/// `4|g_L|²`, a lower bound on the weight of the samples after the last
/// symbol of an event.
fn tail_floor(taps: &[Complex64]) -> f64 {
    if taps.len() > 1 {
        4.0 * taps[taps.len() - 1].norm_sqr()
    } else {
        0.0
    }
}

struct Collect {
    d2: f64,
    bound: f64,
    events: Vec<ErrorEvent>,
}

impl Visitor for Collect {
    fn expand_bound(&self) -> f64 {
        self.bound
    }

    fn visit(&mut self, seq: &[GaussInt], _partial: f64, full: f64) -> bool {
        if !seq[seq.len() - 1].is_zero() && full < self.d2 {
            self.events.push(ErrorEvent {
                seq: seq.to_vec(),
                weight: full,
            });
        }
        true
    }
}

/// Every canonical event of weight `< d2_search` and length `≤ n_max`.
pub fn search_spectrum(f: &FilterPattern, d2_search: f64, n_max: usize, opts: &SearchOptions) -> Result<SpectrumReport> {
    check_search_args(f, d2_search, n_max)?;
    Ok(search_taps(f.taps(), f.order(), d2_search, n_max, opts))
}

/// [`search_spectrum`] on raw taps with an explicit zero-run limit
/// (`max(max_zero_run, 1)` consecutive zeros are excluded).
pub fn search_taps(taps: &[Complex64], max_zero_run: usize, d2_search: f64, n_max: usize, opts: &SearchOptions) -> SpectrumReport {
    let tree = Tree {
        taps,
        max_zero_run: max_zero_run.max(1),
        n_max,
        first: FirstSymbol::Canonical,
    };
    let bound = d2_search - tail_floor(taps);
    let budget = Budget::new(opts.node_budget);
    let parts = tree.run(
        bound,
        || Collect {
            d2: d2_search,
            bound,
            events: Vec::new(),
        },
        &budget,
        opts.parallel,
    );
    let events = with_direct_weights(parts.into_iter().flat_map(|c| c.events).collect(), taps);
    SpectrumReport::new(events, d2_search, n_max, budget.count(), !budget.is_exhausted())
}

/// Replace the incrementally accumulated weights by a direct evaluation, so
/// that every search reports bit-identical weights for the same event.
pub(crate) fn with_direct_weights(mut events: Vec<ErrorEvent>, taps: &[Complex64]) -> Vec<ErrorEvent> {
    for ev in &mut events {
        ev.weight = search::weight_with_taps(&ev.seq, taps);
    }
    events
}

/// Result of [`min_distance`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinDistance {
    pub d2_min: f64,
    pub n_min: usize,
    pub event: Vec<GaussInt>,
    pub nodes_examined: u64,
    pub complete: bool,
}

struct Shrink<'a> {
    radius: &'a SharedRadius,
    floor: f64,
    best: Option<ErrorEvent>,
}

impl Visitor for Shrink<'_> {
    fn expand_bound(&self) -> f64 {
        self.radius.get() - self.floor
    }

    fn visit(&mut self, seq: &[GaussInt], _partial: f64, full: f64) -> bool {
        if seq[seq.len() - 1].is_zero() || full >= self.radius.get() {
            return true;
        }
        let better = match &self.best {
            None => true,
            Some(b) => full < b.weight - WEIGHT_TOL || (full <= b.weight + WEIGHT_TOL && seq.len() < b.len()),
        };
        if better {
            self.best = Some(ErrorEvent {
                seq: seq.to_vec(),
                weight: full,
            });
            // Keep events tied with the best admissible so that the
            // shortest one wins.
            self.radius.lower_to(full + WEIGHT_TOL);
        }
        true
    }
}

/// Minimum event weight over lengths `≤ n_max`, with the search radius
/// shrinking on every improvement. Ties go to the shortest event.
///
/// The search starts from the single-symbol event `[2]`, whose weight
/// `4·Σ|f_l|²` bounds the minimum from above.
pub fn min_distance(f: &FilterPattern, n_max: usize, opts: &SearchOptions) -> Result<MinDistance> {
    check_search_args(f, 1.0, n_max)?;
    let taps = f.taps();
    // The single-symbol event [2] has weight 4·Σ|f|².
    let start = 4.0 * f.energy() + 1e-6;
    let radius = SharedRadius::new(start);
    let floor = tail_floor(taps);
    let budget = Budget::new(opts.node_budget);
    // Deepen the length limit one symbol at a time. Short events bring the
    // radius down cheaply; a deep search at the initial radius would spend
    // its time on long sequences whose tails are heavy.
    let mut found: Vec<ErrorEvent> = Vec::new();
    for depth in 1..=n_max {
        let tree = Tree {
            taps,
            max_zero_run: f.order().max(1),
            n_max: depth,
            first: FirstSymbol::Canonical,
        };
        let parts = tree.run(
            radius.get() - floor,
            || Shrink {
                radius: &radius,
                floor,
                best: None,
            },
            &budget,
            opts.parallel,
        );
        found.extend(parts.into_iter().filter_map(|s| s.best));
        if budget.is_exhausted() {
            break;
        }
    }
    let best = lightest(&found)
        .map(|i| found[i].clone())
        .ok_or_else(|| Error::InvalidArgument("search found no event".into()))?;
    Ok(MinDistance {
        d2_min: best.weight,
        n_min: best.len(),
        event: best.seq,
        nodes_examined: budget.count(),
        complete: !budget.is_exhausted(),
    })
}

/// Gaussian tail function.
pub fn q_function(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(x / std::f64::consts::SQRT_2)
}

/// Union-bound estimate of the error-event rate: every canonical event
/// stands for its four rotations, each contributing `Q(√(d²/2σ²))`.
/// Events beyond the search radius are missing, so this approximates the
/// bound rather than bounding the error rate.
pub fn union_bound_eer(report: &SpectrumReport, sigma2: f64) -> f64 {
    if sigma2 <= 0.0 {
        return 0.0;
    }
    report
        .events
        .iter()
        .map(|ev| 4.0 * q_function((ev.weight / (2.0 * sigma2)).sqrt()))
        .sum()
}
