//! Index of explored paths by `(position, last symbols)`.

use rustc_hash::FxHashMap;
use smallvec::SmallVec;

use crate::gauss::GaussInt;

pub type MergeState = SmallVec<[GaussInt; 8]>;

/// Exact-match index. Buckets are looked up by hash and then compared
/// symbol by symbol, so a query never returns an entry with a different
/// state.
#[derive(Clone, Debug)]
pub struct MergeIndex<V> {
    map: FxHashMap<(usize, MergeState), Vec<V>>,
    len: usize,
}

impl<V> Default for MergeIndex<V> {
    fn default() -> Self {
        MergeIndex {
            map: FxHashMap::default(),
            len: 0,
        }
    }
}

impl<V> MergeIndex<V> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, pos: usize, state: &[GaussInt], v: V) {
        self.map.entry((pos, MergeState::from_slice(state))).or_default().push(v);
        self.len += 1;
    }

    /// Entries with exactly this position and state, oldest first.
    pub fn query(&self, pos: usize, state: &[GaussInt]) -> &[V] {
        self.map
            .get(&(pos, MergeState::from_slice(state)))
            .map_or(&[], |v| v.as_slice())
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn drain_values(&mut self) -> impl Iterator<Item = V> + '_ {
        self.len = 0;
        self.map.drain().flat_map(|(_, v)| v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn exact_lookup() {
        let mut ix = MergeIndex::new();
        let s = [GaussInt::new(1, 3), GaussInt::new(-5, 1)];
        ix.insert(7, &s, 42u32);
        assert_eq!(ix.query(7, &s), &[42]);
        assert!(ix.query(6, &s).is_empty());
        let t = [GaussInt::new(1, 3), GaussInt::new(-5, 3)];
        assert!(ix.query(7, &t).is_empty());
    }

    #[test]
    fn no_false_positives() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut ix = MergeIndex::new();
        let mut keys = std::collections::HashSet::new();
        let rand_state = |rng: &mut ChaCha8Rng| -> Vec<GaussInt> {
            (0..3)
                .map(|_| GaussInt::new(2 * rng.random_range(-4..4) + 1, 2 * rng.random_range(-4..4) + 1))
                .collect()
        };
        for i in 0..1_000_000u32 {
            let pos = rng.random_range(0..20usize);
            let st = rand_state(&mut rng);
            if i % 2 == 0 {
                ix.insert(pos, &st, (pos, st.clone()));
                keys.insert((pos, st));
            } else {
                let hits = ix.query(pos, &st);
                assert!(hits.iter().all(|(p, s)| *p == pos && *s == st));
                assert_eq!(!hits.is_empty(), keys.contains(&(pos, st)));
            }
        }
    }
}
