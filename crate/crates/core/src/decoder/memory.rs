//! Reference-counted arena of path symbols.
//!
//! Every decoder path is a linked list running from its newest symbol back
//! to the root. Paths share prefixes, so each node counts the children and
//! stack entries that point at it and is recycled when the count drops to
//! zero.

use crate::gauss::GaussInt;

pub const ROOT: u32 = u32::MAX;

#[derive(Clone, Debug)]
struct Node {
    sym: GaussInt,
    parent: u32,
    pos: u32,
    refs: u32,
}

#[derive(Clone, Debug, Default)]
pub struct SymbolMemory {
    nodes: Vec<Node>,
    free: Vec<u32>,
    allocs: u64,
    frees: u64,
}

impl SymbolMemory {
    pub fn new() -> Self {
        Self::default()
    }

    /// New node holding one reference, linked below `parent`.
    pub fn alloc(&mut self, sym: GaussInt, parent: u32) -> u32 {
        let pos = if parent == ROOT { 0 } else { self.nodes[parent as usize].pos + 1 };
        if parent != ROOT {
            self.nodes[parent as usize].refs += 1;
        }
        let node = Node { sym, parent, pos, refs: 1 };
        self.allocs += 1;
        match self.free.pop() {
            Some(id) => {
                self.nodes[id as usize] = node;
                id
            }
            None => {
                self.nodes.push(node);
                (self.nodes.len() - 1) as u32
            }
        }
    }

    pub fn retain(&mut self, id: u32) {
        if id != ROOT {
            self.nodes[id as usize].refs += 1;
        }
    }

    /// Drop one reference, freeing the node and any ancestors that become
    /// unreferenced.
    pub fn release(&mut self, mut id: u32) {
        while id != ROOT {
            let n = &mut self.nodes[id as usize];
            debug_assert!(n.refs > 0, "double release of node {id}");
            n.refs -= 1;
            if n.refs > 0 {
                return;
            }
            let parent = n.parent;
            self.free.push(id);
            self.frees += 1;
            id = parent;
        }
    }

    /// Detach `id` from its ancestors (they are dropped if unreferenced).
    pub fn cut(&mut self, id: u32) {
        let p = std::mem::replace(&mut self.nodes[id as usize].parent, ROOT);
        self.release(p);
    }

    pub fn symbol(&self, id: u32) -> GaussInt {
        self.nodes[id as usize].sym
    }

    pub fn parent(&self, id: u32) -> u32 {
        self.nodes[id as usize].parent
    }

    /// Index of the symbol in its path (0 for the first symbol).
    pub fn pos(&self, id: u32) -> usize {
        self.nodes[id as usize].pos as usize
    }

    pub fn refs(&self, id: u32) -> u32 {
        self.nodes[id as usize].refs
    }

    /// Ancestor of `id` at position `pos`, if the chain reaches it.
    pub fn ancestor_at(&self, mut id: u32, pos: usize) -> Option<u32> {
        while id != ROOT {
            let p = self.pos(id);
            if p == pos {
                return Some(id);
            }
            if p < pos {
                return None;
            }
            id = self.parent(id);
        }
        None
    }

    /// Symbols from the oldest reachable ancestor to `id`.
    pub fn path(&self, mut id: u32) -> Vec<GaussInt> {
        let mut out = Vec::new();
        while id != ROOT {
            out.push(self.symbol(id));
            id = self.parent(id);
        }
        out.reverse();
        out
    }

    pub fn live(&self) -> usize {
        self.nodes.len() - self.free.len()
    }

    pub fn allocations(&self) -> u64 {
        self.allocs
    }

    pub fn frees(&self) -> u64 {
        self.frees
    }

    /// Total reference count equals child links plus `external` references.
    pub fn check_refcounts(&self, external: usize) -> bool {
        let free: std::collections::HashSet<u32> = self.free.iter().copied().collect();
        let mut children = vec![0u32; self.nodes.len()];
        let mut total = 0u64;
        for (i, n) in self.nodes.iter().enumerate() {
            if free.contains(&(i as u32)) {
                continue;
            }
            total += n.refs as u64;
            if n.parent != ROOT {
                children[n.parent as usize] += 1;
            }
        }
        let links: u64 = children.iter().map(|&c| c as u64).sum();
        let each_ok = self
            .nodes
            .iter()
            .enumerate()
            .filter(|(i, _)| !free.contains(&(*i as u32)))
            .all(|(i, n)| n.refs >= children[i].max(1));
        each_ok && total == links + external as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(v: i64) -> GaussInt {
        GaussInt::new(v, 1)
    }

    #[test]
    fn shared_prefix_freed_last() {
        let mut m = SymbolMemory::new();
        let a = m.alloc(g(1), ROOT);
        let b = m.alloc(g(3), a);
        let c = m.alloc(g(5), a);
        m.release(a); // the entry that was extended
        assert_eq!(m.live(), 3);
        assert_eq!(m.path(b), vec![g(1), g(3)]);
        assert_eq!(m.pos(c), 1);
        assert!(m.check_refcounts(2));
        m.release(b);
        assert_eq!(m.live(), 2);
        m.release(c);
        assert_eq!(m.live(), 0);
        assert_eq!(m.allocations(), m.frees());
    }

    #[test]
    fn cut_drops_unreferenced_prefix() {
        let mut m = SymbolMemory::new();
        let a = m.alloc(g(1), ROOT);
        let b = m.alloc(g(3), a);
        m.release(a);
        m.cut(b);
        assert_eq!(m.live(), 1);
        assert_eq!(m.path(b), vec![g(3)]);
        assert_eq!(m.ancestor_at(b, 1), Some(b));
        assert_eq!(m.ancestor_at(b, 0), None);
    }
}
