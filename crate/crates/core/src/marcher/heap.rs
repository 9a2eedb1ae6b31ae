//! Indexed binary min-heap over grid nodes.

use thiserror::Error;

use crate::grid::NodeState;

const NOT_IN_HEAP: usize = usize::MAX;

#[derive(Debug, Error, PartialEq)]
pub enum FrontError {
    #[error("node {0} is already on the front")]
    AlreadyQueued(usize),
    #[error("node {0} is not on the front")]
    NotQueued(usize),
    #[error("decrease-key on node {node} would raise its key from {old} to {new}")]
    KeyIncrease { node: usize, old: f64, new: f64 },
}

/// Marching state: node states, values and the trial-node heap. Keys are
/// compared as `(value, node index)` so ties pop in index order.
#[derive(Clone, Debug)]
pub struct Front {
    heap: Vec<usize>,
    pos: Vec<usize>,
    pub states: Vec<NodeState>,
    pub values: Vec<f64>,
    /// Number of push, decrease and pop operations performed.
    pub ops: u64,
}

impl Front {
    pub fn new(num_nodes: usize) -> Self {
        Front {
            heap: Vec::new(),
            pos: vec![NOT_IN_HEAP; num_nodes],
            states: vec![NodeState::Far; num_nodes],
            values: vec![f64::INFINITY; num_nodes],
            ops: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn contains(&self, node: usize) -> bool {
        self.pos[node] != NOT_IN_HEAP
    }

    #[inline]
    fn less(&self, a: usize, b: usize) -> bool {
        let (va, vb) = (self.values[a], self.values[b]);
        va < vb || (va == vb && a < b)
    }

    #[inline]
    fn place(&mut self, slot: usize, node: usize) {
        self.heap[slot] = node;
        self.pos[node] = slot;
    }

    fn swim(&mut self, mut slot: usize) {
        let node = self.heap[slot];
        while slot > 0 {
            let parent = (slot - 1) / 2;
            let pn = self.heap[parent];
            if !self.less(node, pn) {
                break;
            }
            self.place(slot, pn);
            slot = parent;
        }
        self.place(slot, node);
    }

    fn sink(&mut self, mut slot: usize) {
        let node = self.heap[slot];
        let n = self.heap.len();
        loop {
            let l = 2 * slot + 1;
            if l >= n {
                break;
            }
            let r = l + 1;
            let c = if r < n && self.less(self.heap[r], self.heap[l]) { r } else { l };
            let cn = self.heap[c];
            if !self.less(cn, node) {
                break;
            }
            self.place(slot, cn);
            slot = c;
        }
        self.place(slot, node);
    }

    /// Inserts a node as trial with the given value.
    pub fn push(&mut self, node: usize, value: f64) -> Result<(), FrontError> {
        if self.contains(node) {
            return Err(FrontError::AlreadyQueued(node));
        }
        self.ops += 1;
        self.values[node] = value;
        self.states[node] = NodeState::Trial;
        self.heap.push(node);
        let slot = self.heap.len() - 1;
        self.pos[node] = slot;
        self.swim(slot);
        Ok(())
    }

    /// Lowers the key of a queued node.
    pub fn decrease(&mut self, node: usize, value: f64) -> Result<(), FrontError> {
        if !self.contains(node) {
            return Err(FrontError::NotQueued(node));
        }
        let old = self.values[node];
        if value > old {
            return Err(FrontError::KeyIncrease { node, old, new: value });
        }
        self.ops += 1;
        self.values[node] = value;
        self.swim(self.pos[node]);
        Ok(())
    }

    /// Removes a minimum-key node and marks it valid.
    pub fn pop_min(&mut self) -> Option<usize> {
        let top = *self.heap.first()?;
        self.ops += 1;
        let last = self.heap.pop().expect("nonempty");
        self.pos[top] = NOT_IN_HEAP;
        if !self.heap.is_empty() {
            self.place(0, last);
            self.sink(0);
        }
        self.states[top] = NodeState::Valid;
        Some(top)
    }

    /// Whether every parent key is at most its children's keys and the
    /// position table is consistent.
    pub fn check_invariants(&self) -> bool {
        let heap_ok = (1..self.heap.len()).all(|i| !self.less(self.heap[i], self.heap[(i - 1) / 2]));
        let pos_ok = self.heap.iter().enumerate().all(|(i, &n)| self.pos[n] == i);
        let count = self.pos.iter().filter(|&&p| p != NOT_IN_HEAP).count();
        heap_ok && pos_ok && count == self.heap.len()
    }
}
