use std::sync::Arc;

use super::topology::{IotTopology, NodeId, Selection};
use crate::error::{Error, Result};
use crate::instrument::PathCost;

/// Occurrence counters over a shared [`IotTopology`].
///
/// Only the top node and left children hold counters; a right child's count
/// is its parent's count minus its left sibling's.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Iot {
    topology: Arc<IotTopology>,
    counts: Vec<u32>,
}

impl Iot {
    pub fn new(topology: Arc<IotTopology>) -> Self {
        let counts = vec![0; topology.slot_count()];
        Self { topology, counts }
    }

    pub fn topology(&self) -> &Arc<IotTopology> {
        &self.topology
    }

    /// Number of values currently stored (the top node's counter).
    pub fn total(&self) -> u32 {
        self.counts[0]
    }

    pub fn counters(&self) -> &[u32] {
        &self.counts
    }

    pub fn is_empty(&self) -> bool {
        self.total() == 0
    }

    pub fn add_value(&mut self, v: u32) -> Result<PathCost> {
        self.add_many(v, 1)
    }

    /// Inserts `count` copies of `v` in a single descent.
    pub fn add_many(&mut self, v: u32, count: u32) -> Result<PathCost> {
        self.topology.check_value(v)?;
        let counts = &mut self.counts;
        counts[0] = counts[0]
            .checked_add(count)
            .ok_or_else(|| Error::Logic("occurrence counter overflow".into()))?;
        let mut cost = self.topology.walk(v, |slot| counts[slot] += count);
        cost.additions += 1;
        Ok(cost)
    }

    pub fn remove_value(&mut self, v: u32) -> Result<PathCost> {
        self.topology.check_value(v)?;
        if self.leaf_count(v) == 0 {
            return Err(Error::Logic(format!("value {v} is not stored")));
        }
        let counts = &mut self.counts;
        counts[0] -= 1;
        let mut cost = self.topology.walk(v, |slot| counts[slot] -= 1);
        cost.additions += 1;
        Ok(cost)
    }

    /// The `rank`-th smallest stored value (1-based), to within `max_error`.
    ///
    /// With `max_error == 1` the result is exact: the smallest `v` such that
    /// at least `rank` stored values are `<= v`.
    pub fn select_rank(&self, rank: u32, max_error: u32) -> Result<Selection> {
        self.select_rank_with_cost(rank, max_error).map(|(s, _)| s)
    }

    pub fn select_rank_with_cost(&self, rank: u32, max_error: u32) -> Result<(Selection, PathCost)> {
        if self.is_empty() {
            return Err(Error::Query("rank query on an empty tree".into()));
        }
        if rank == 0 || rank > self.total() {
            return Err(Error::input(format!(
                "rank {rank} outside [1, {}]",
                self.total()
            )));
        }
        if max_error == 0 {
            return Err(Error::input("max_error must be at least 1"));
        }
        let counts = &self.counts;
        Ok(self.topology.descend(rank, max_error, |slot| counts[slot]))
    }

    /// Number of stored values in the leaf interval containing `v`.
    fn leaf_count(&self, v: u32) -> u32 {
        let topo = &*self.topology;
        let mut c = topo.root_cursor();
        let mut count = self.counts[0];
        while !c.is_leaf() && count > 0 {
            let (split, left_span) = topo.split_of(&c);
            if v < split {
                count = self.counts[c.child];
                c = IotTopology::left(&c, split, left_span);
            } else {
                count -= self.counts[c.child];
                c = IotTopology::right(&c, split, left_span);
            }
        }
        count
    }

    /// Number of stored values inside the interval of `node`.
    pub fn node_count(&self, node: NodeId) -> Result<u32> {
        let topo = &*self.topology;
        let mut c = topo.root_cursor();
        let mut count = self.counts[0];
        loop {
            if c.lo == node.lo && c.hi == node.hi {
                return Ok(count);
            }
            if c.is_leaf() || node.lo < c.lo || node.hi > c.hi {
                break;
            }
            let (split, left_span) = topo.split_of(&c);
            if node.hi <= split {
                count = self.counts[c.child];
                c = IotTopology::left(&c, split, left_span);
            } else if node.lo >= split {
                count -= self.counts[c.child];
                c = IotTopology::right(&c, split, left_span);
            } else {
                break;
            }
        }
        Err(Error::Logic(format!(
            "[{}, {}) is not a node of this topology",
            node.lo, node.hi
        )))
    }

    pub(crate) fn load_counters(&mut self, counts: &[u32]) {
        self.counts.copy_from_slice(counts);
    }

    pub fn clear(&mut self) {
        self.counts.fill(0);
    }
}
