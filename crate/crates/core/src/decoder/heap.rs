//! Double-ended priority queue as a min-max heap.
//!
//! Complete binary tree in an array (root at 0, children of `i` at `2i+1`
//! and `2i+2`). Nodes on even levels are no greater than their
//! descendants, nodes on odd levels no smaller, so the minimum is the root
//! and the maximum one of its children.

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct MinMaxHeap<T> {
    a: Vec<T>,
}

impl<T: Ord> Default for MinMaxHeap<T> {
    fn default() -> Self {
        Self::new()
    }
}

#[inline]
fn is_min_level(i: usize) -> bool {
    (usize::BITS - (i + 1).leading_zeros() - 1).is_multiple_of(2)
}

impl<T: Ord> MinMaxHeap<T> {
    pub fn new() -> Self {
        MinMaxHeap { a: Vec::new() }
    }

    pub fn with_capacity(n: usize) -> Self {
        MinMaxHeap { a: Vec::with_capacity(n) }
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn clear(&mut self) {
        self.a.clear();
    }

    /// Drain in unspecified order.
    pub fn drain(&mut self) -> std::vec::Drain<'_, T> {
        self.a.drain(..)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, T> {
        self.a.iter()
    }

    pub fn peek_min(&self) -> Option<&T> {
        self.a.first()
    }

    fn max_index(&self) -> Option<usize> {
        match self.a.len() {
            0 => None,
            1 => Some(0),
            2 => Some(1),
            _ => Some(if self.a[1] >= self.a[2] { 1 } else { 2 }),
        }
    }

    pub fn peek_max(&self) -> Option<&T> {
        self.max_index().map(|i| &self.a[i])
    }

    pub fn push(&mut self, v: T) {
        self.a.push(v);
        self.bubble_up(self.a.len() - 1);
    }

    /// Insert into a heap holding at most `cap` items. When full, an item
    /// greater than the minimum replaces it and the minimum is returned;
    /// otherwise the new item itself comes back.
    pub fn push_bounded(&mut self, v: T, cap: usize) -> Option<T> {
        if self.a.len() < cap {
            self.push(v);
            return None;
        }
        match self.a.first() {
            Some(min) if v > *min => {
                let old = std::mem::replace(&mut self.a[0], v);
                self.trickle_down(0);
                Some(old)
            }
            _ => Some(v),
        }
    }

    pub fn pop_min(&mut self) -> Option<T> {
        self.remove_at(0)
    }

    pub fn pop_max(&mut self) -> Option<T> {
        let i = self.max_index()?;
        self.remove_at(i)
    }

    /// Like [`pop_max`](Self::pop_max) but an error on an empty heap.
    pub fn extract_best(&mut self) -> Result<T> {
        self.pop_max().ok_or(Error::EmptyHeap)
    }

    /// Like [`pop_min`](Self::pop_min) but an error on an empty heap.
    pub fn extract_worst(&mut self) -> Result<T> {
        self.pop_min().ok_or(Error::EmptyHeap)
    }

    fn remove_at(&mut self, i: usize) -> Option<T> {
        if i >= self.a.len() {
            return None;
        }
        let v = self.a.swap_remove(i);
        if i < self.a.len() {
            self.trickle_down(i);
        }
        Some(v)
    }

    fn bubble_up(&mut self, i: usize) {
        if i == 0 {
            return;
        }
        let p = (i - 1) / 2;
        if is_min_level(i) {
            if self.a[i] > self.a[p] {
                self.a.swap(i, p);
                self.bubble_up_dir(p, true);
            } else {
                self.bubble_up_dir(i, false);
            }
        } else if self.a[i] < self.a[p] {
            self.a.swap(i, p);
            self.bubble_up_dir(p, false);
        } else {
            self.bubble_up_dir(i, true);
        }
    }

    /// Move `i` up through its grandparents; `max` selects the max levels.
    fn bubble_up_dir(&mut self, mut i: usize, max: bool) {
        while i > 2 {
            let g = ((i - 1) / 2 - 1) / 2;
            let out_of_order = if max { self.a[i] > self.a[g] } else { self.a[i] < self.a[g] };
            if !out_of_order {
                break;
            }
            self.a.swap(i, g);
            i = g;
        }
    }

    fn trickle_down(&mut self, i: usize) {
        let max = !is_min_level(i);
        let mut i = i;
        let n = self.a.len();
        loop {
            let first_child = 2 * i + 1;
            if first_child >= n {
                return;
            }
            // Extreme among children and grandchildren.
            let mut m = first_child;
            let better = |x: &T, y: &T| if max { x > y } else { x < y };
            let cands = [first_child + 1, 4 * i + 3, 4 * i + 4, 4 * i + 5, 4 * i + 6];
            for &c in &cands {
                if c < n && better(&self.a[c], &self.a[m]) {
                    m = c;
                }
            }
            if !better(&self.a[m], &self.a[i]) {
                return;
            }
            self.a.swap(i, m);
            if m <= first_child + 1 {
                return;
            }
            let p = (m - 1) / 2;
            if better(&self.a[p], &self.a[m]) {
                self.a.swap(m, p);
            }
            i = m;
        }
    }

    /// Full scan of the level ordering.
    pub fn check_invariants(&self) -> bool {
        (1..self.a.len()).all(|i| {
            let mut j = i;
            while j > 0 {
                j = (j - 1) / 2;
                let ok = if is_min_level(j) { self.a[j] <= self.a[i] } else { self.a[j] >= self.a[i] };
                if !ok {
                    return false;
                }
            }
            true
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn small_example() {
        let mut h = MinMaxHeap::new();
        for v in [3, 1, 2] {
            h.push(v);
        }
        assert_eq!(h.peek_max(), Some(&3));
        assert_eq!(h.pop_max(), Some(3));
        assert_eq!(h.pop_min(), Some(1));
        assert_eq!(h.pop_min(), Some(2));
        assert!(h.extract_best().is_err());
        assert!(h.extract_worst().is_err());
    }

    #[test]
    fn levels() {
        let lv: Vec<bool> = (0..7).map(is_min_level).collect();
        assert_eq!(lv, [true, false, false, true, true, true, true]);
    }

    #[test]
    fn bounded_eviction() {
        let mut h = MinMaxHeap::new();
        for v in [5, 7, 9] {
            assert_eq!(h.push_bounded(v, 3), None);
        }
        assert_eq!(h.push_bounded(4, 3), Some(4));
        assert_eq!(h.push_bounded(6, 3), Some(5));
        assert_eq!(h.len(), 3);
        assert_eq!(h.peek_min(), Some(&6));
    }

    proptest! {
        #[test]
        fn matches_sorted_oracle(ops in prop::collection::vec((0u8..4, -50i32..50), 1..400)) {
            let mut h = MinMaxHeap::new();
            let mut oracle: Vec<i32> = Vec::new();
            for (op, v) in ops {
                match op {
                    0 | 1 => {
                        h.push(v);
                        let at = oracle.partition_point(|&x| x < v);
                        oracle.insert(at, v);
                    }
                    2 => prop_assert_eq!(h.pop_min(), if oracle.is_empty() { None } else { Some(oracle.remove(0)) }),
                    _ => prop_assert_eq!(h.pop_max(), oracle.pop()),
                }
                prop_assert!(h.check_invariants());
                prop_assert_eq!(h.len(), oracle.len());
            }
        }
    }
}
