//! Nested-lattice shaping by an M-algorithm search over `k` sequences.

use std::cmp::Ordering;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gauss::{round_half_up, GaussInt, QamSymbol};
use crate::lattice::{fir_interference, FilterPattern};

/// Default half-width of the `k` window around the modulo-2M choice.
pub const DEFAULT_K_RADIUS: i64 = 2;

/// Result of [`nested_shape_block`].
#[derive(Clone, Debug, PartialEq)]
pub struct NestedOutput {
    pub b: Vec<GaussInt>,
    pub x: Vec<Complex64>,
    pub k: Vec<GaussInt>,
    pub energy: f64,
    /// Positions of the chosen path whose `k` sits on the window edge.
    pub edge_hits: usize,
}

#[derive(Clone)]
struct Survivor {
    /// `b_{n−L}..b_{n−1}`.
    hist: Vec<GaussInt>,
    energy: f64,
    node: u32,
    /// Still equal to the modulo-2M path.
    pinned: bool,
}

struct Node {
    k: GaussInt,
    b: GaussInt,
    edge: bool,
    parent: u32,
}

const ROOT: u32 = u32::MAX;

#[derive(Copy, Clone)]
struct Child {
    energy: f64,
    parent: u32,
    offset: u32,
    k: GaussInt,
    b: GaussInt,
}

fn child_order(a: &Child, b: &Child) -> Ordering {
    a.energy
        .total_cmp(&b.energy)
        .then(a.parent.cmp(&b.parent))
        .then(a.offset.cmp(&b.offset))
}

/// Shape a block keeping the `m_alg` lowest-energy partial `k` sequences.
///
/// `k_n` is searched in a `(2r+1)²` window around the modulo-2M choice,
/// whose candidate is tried first so that `m_alg = 1` reproduces modulo-2M
/// precoding exactly. The modulo-2M path itself is kept alive throughout,
/// so the result never has more energy than modulo-2M precoding.
/// `head` is the initial `b` history (zeros for a fresh block).
pub fn nested_shape_block(
    a: &[QamSymbol],
    f: &FilterPattern,
    m: u32,
    m_alg: usize,
    radius: i64,
    head: &[GaussInt],
) -> Result<NestedOutput> {
    if m_alg == 0 {
        return Err(Error::InvalidArgument("M-algorithm width must be at least 1".into()));
    }
    if radius < 0 {
        return Err(Error::InvalidArgument("k window radius must be non-negative".into()));
    }
    let l = f.order();
    if head.len() != l {
        return Err(Error::InvalidArgument("head must hold L symbols".into()));
    }
    let taps = f.taps();
    let m2 = 2 * m as i64;
    let mut offsets = vec![GaussInt::ZERO];
    for dr in -radius..=radius {
        for di in -radius..=radius {
            if dr != 0 || di != 0 {
                offsets.push(GaussInt::new(dr, di));
            }
        }
    }

    let mut nodes: Vec<Node> = Vec::with_capacity(a.len() * m_alg.min(1024));
    let mut survivors = vec![Survivor {
        hist: head.to_vec(),
        energy: 0.0,
        node: ROOT,
        pinned: true,
    }];
    let mut children: Vec<Child> = Vec::new();

    for sym in a {
        let av = sym.value();
        children.clear();
        let mut pinned_child = None;
        for (si, sv) in survivors.iter().enumerate() {
            let s = fir_interference(taps, &sv.hist);
            let base = GaussInt::new(
                round_half_up((av.re as f64 + s.re) / m2 as f64),
                round_half_up((av.im as f64 + s.im) / m2 as f64),
            );
            for (oi, &off) in offsets.iter().enumerate() {
                let k = base + off;
                let b = av - k * m2;
                let x = b.to_c64() + s;
                let ch = Child {
                    energy: sv.energy + x.norm_sqr(),
                    parent: si as u32,
                    offset: oi as u32,
                    k,
                    b,
                };
                if sv.pinned && oi == 0 {
                    pinned_child = Some(ch);
                }
                children.push(ch);
            }
        }
        if children.len() > m_alg {
            children.select_nth_unstable_by(m_alg - 1, child_order);
            children.truncate(m_alg);
        }
        children.sort_by(child_order);
        if let Some(pc) = pinned_child {
            let kept = children
                .iter()
                .any(|c| c.parent == pc.parent && c.offset == 0);
            if !kept {
                children.push(pc);
            }
        }
        let mut next = Vec::with_capacity(children.len());
        for ch in &children {
            let parent = &survivors[ch.parent as usize];
            let off = offsets[ch.offset as usize];
            nodes.push(Node {
                k: ch.k,
                b: ch.b,
                edge: radius > 0 && (off.re.abs() == radius || off.im.abs() == radius),
                parent: parent.node,
            });
            let mut hist = parent.hist.clone();
            if l > 0 {
                hist.rotate_left(1);
                hist[l - 1] = ch.b;
            }
            next.push(Survivor {
                hist,
                energy: ch.energy,
                node: (nodes.len() - 1) as u32,
                pinned: parent.pinned && ch.offset == 0,
            });
        }
        survivors = next;
    }

    let best = survivors
        .iter()
        .min_by(|p, q| p.energy.total_cmp(&q.energy))
        .cloned();
    let mut b = Vec::with_capacity(a.len());
    let mut k = Vec::with_capacity(a.len());
    let mut edge_hits = 0;
    let energy = best.as_ref().map_or(0.0, |s| s.energy);
    let mut cur = best.map_or(ROOT, |s| s.node);
    while cur != ROOT {
        let nd = &nodes[cur as usize];
        b.push(nd.b);
        k.push(nd.k);
        edge_hits += nd.edge as usize;
        cur = nd.parent;
    }
    b.reverse();
    k.reverse();

    let mut padded = head.to_vec();
    padded.extend_from_slice(&b);
    let x = (0..b.len())
        .map(|n| b[n].to_c64() + fir_interference(taps, &padded[n..n + l]))
        .collect();
    if edge_hits > 0 {
        log::debug!("nested shaping: {edge_hits} window-edge choices in a block of {}", a.len());
    }
    Ok(NestedOutput {
        b,
        x,
        k,
        energy,
        edge_hits,
    })
}
