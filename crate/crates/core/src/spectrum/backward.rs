//! Spectrum search with a database of low-weight event tails.
//!
//! A backward pass runs the search on the time-reversed code (taps
//! `f_L..f_0`) and stores every reversed tail of weight below `d²_tail`,
//! keyed by the `L` symbols where it overlaps the forward prefix. The
//! forward pass then stops expanding a prefix as soon as its partial weight
//! reaches `d²_search − d²_tail`: every completion of such a prefix must
//! have a tail lighter than `d²_tail`, so it is found by a table lookup.

use rustc_hash::FxHashMap;

use super::search::{Budget, FirstSymbol, Tree, Visitor, PRUNE_SLACK};
use super::{check_search_args, tail_floor, ErrorEvent, SearchOptions, SpectrumReport};
use crate::error::{Error, Result};
use crate::gauss::GaussInt;
use crate::lattice::FilterPattern;

struct Tail {
    /// Symbols after the overlap, forward order.
    suffix: Vec<GaussInt>,
    /// Weight of the samples from the first suffix symbol to the end.
    weight: f64,
}

type TailDb = FxHashMap<Vec<GaussInt>, Vec<Tail>>;

struct CollectTails {
    bound: f64,
    l: usize,
    db: TailDb,
}

impl Visitor for CollectTails {
    fn expand_bound(&self) -> f64 {
        self.bound
    }

    fn visit(&mut self, seq: &[GaussInt], partial: f64, _full: f64) -> bool {
        let s = seq.len();
        if s > self.l && partial < self.bound + PRUNE_SLACK {
            let key: Vec<GaussInt> = seq[s - self.l..].iter().rev().copied().collect();
            let suffix = seq[..s - self.l].iter().rev().copied().collect();
            self.db.entry(key).or_default().push(Tail {
                suffix,
                weight: partial,
            });
        }
        true
    }
}

struct Join<'a> {
    d2: f64,
    bound: f64,
    cross: f64,
    l: usize,
    n_max: usize,
    db: &'a TailDb,
    events: Vec<ErrorEvent>,
    joins: u64,
}

impl Visitor for Join<'_> {
    fn expand_bound(&self) -> f64 {
        self.bound
    }

    fn visit(&mut self, seq: &[GaussInt], partial: f64, full: f64) -> bool {
        if !seq[seq.len() - 1].is_zero() && full < self.d2 {
            self.events.push(ErrorEvent {
                seq: seq.to_vec(),
                weight: full,
            });
        }
        if partial < self.cross {
            return true;
        }
        let n = seq.len();
        let mut key = vec![GaussInt::ZERO; self.l.saturating_sub(n)];
        key.extend_from_slice(&seq[n.saturating_sub(self.l)..]);
        if let Some(bucket) = self.db.get(&key) {
            for t in bucket {
                let w = partial + t.weight;
                if w >= self.d2 {
                    break;
                }
                if n + t.suffix.len() > self.n_max {
                    continue;
                }
                let mut ev = seq.to_vec();
                ev.extend_from_slice(&t.suffix);
                self.events.push(ErrorEvent { seq: ev, weight: w });
                self.joins += 1;
            }
        }
        false
    }
}

/// Same event set as [`search_spectrum`](super::search_spectrum), found by
/// joining forward prefixes with a table of tails lighter than `d2_tail`.
/// `d2_tail = 0` disables the table.
pub fn backward_forward_search(
    f: &FilterPattern,
    d2_search: f64,
    d2_tail: f64,
    n_max: usize,
    opts: &SearchOptions,
) -> Result<SpectrumReport> {
    check_search_args(f, d2_search, n_max)?;
    if !(0.0..d2_search).contains(&d2_tail) {
        return Err(Error::InvalidArgument(format!(
            "tail radius {d2_tail} must lie in [0, {d2_search})"
        )));
    }
    let taps = f.taps();
    let l = f.order();
    let budget = Budget::new(opts.node_budget);

    let mut db = TailDb::default();
    if d2_tail > 0.0 {
        let rev: Vec<_> = taps.iter().rev().copied().collect();
        let back = Tree {
            taps: &rev,
            max_zero_run: l.max(1),
            n_max: n_max + l.saturating_sub(1),
            first: FirstSymbol::AnyNonzero,
        };
        let parts = back.run(
            d2_tail,
            || CollectTails {
                bound: d2_tail,
                l,
                db: TailDb::default(),
            },
            &budget,
            opts.parallel,
        );
        for p in parts {
            for (k, mut v) in p.db {
                db.entry(k).or_default().append(&mut v);
            }
        }
        for v in db.values_mut() {
            v.sort_by(|a, b| a.weight.total_cmp(&b.weight).then_with(|| a.suffix.cmp(&b.suffix)));
        }
    }
    let backward_nodes = budget.count();

    let fwd = Tree {
        taps,
        max_zero_run: l.max(1),
        n_max,
        first: FirstSymbol::Canonical,
    };
    let bound = d2_search - tail_floor(taps);
    let cross = if d2_tail > 0.0 { d2_search - d2_tail } else { f64::INFINITY };
    let parts = fwd.run(
        bound,
        || Join {
            d2: d2_search,
            bound,
            cross,
            l,
            n_max,
            db: &db,
            events: Vec::new(),
            joins: 0,
        },
        &budget,
        opts.parallel,
    );
    let joins: u64 = parts.iter().map(|p| p.joins).sum();
    let events = super::with_direct_weights(parts.into_iter().flat_map(|p| p.events).collect(), taps);
    log::info!(
        "backward-forward search: {} tails, {backward_nodes} backward nodes, {} forward nodes, {joins} joined events",
        db.values().map(Vec::len).sum::<usize>(),
        budget.count() - backward_nodes,
    );
    Ok(SpectrumReport::new(
        events,
        d2_search,
        n_max,
        budget.count(),
        !budget.is_exhausted(),
    ))
}
