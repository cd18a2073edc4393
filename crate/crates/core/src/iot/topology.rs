use crate::error::{Error, Result};
use crate::instrument::PathCost;

pub const MAX_BIT_DEPTH: u8 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TopologyMode {
    Uniform,
    Adaptive,
}

/// A node of a topology, identified by its half-open value interval `[lo, hi)`.
///
/// Intervals are unique within a tree: every split is strict, so no node
/// shares its interval with a descendant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId {
    pub lo: u32,
    pub hi: u32,
}

impl NodeId {
    pub fn width(&self) -> u32 {
        self.hi - self.lo
    }

    pub fn contains(&self, v: u32) -> bool {
        self.lo <= v && v < self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeInfo {
    pub id: NodeId,
    /// Levels below the top node (the top node has depth 0).
    pub depth: u32,
    /// Counter slot for explicit nodes (the top node and every left child);
    /// `None` for implicit right children.
    pub slot: Option<usize>,
    pub is_leaf: bool,
}

/// Position in a descent: the current node's interval, the slot of its
/// explicit left child and the number of explicit nodes below it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Cursor {
    pub child: usize,
    pub lo: u32,
    pub hi: u32,
    pub span: u32,
}

impl Cursor {
    #[inline]
    pub fn is_leaf(&self) -> bool {
        self.span == 0
    }

    #[inline]
    pub fn width(&self) -> u32 {
        self.hi - self.lo
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct AdaptiveLayout {
    // Both indexed by slot; slot 0 (the top node) is unused.
    split: Vec<u32>,
    left_span: Vec<u32>,
}

/// The shared shape of a family of interval-occurrences trees.
///
/// Explicit nodes live in a flat vector: slot 0 is the top node, and every
/// left child is followed by its whole left subtree and then by the subtree
/// hanging under its implicit right sibling. A uniform topology stores no
/// bounds at all; they are recovered from the descent path with shifts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IotTopology {
    bit_depth: u8,
    slots: usize,
    adaptive: Option<AdaptiveLayout>,
}

/// Bisection topology over `[0, 2^bit_depth)` with unit-width leaves.
pub fn uniform_topology(bit_depth: u8) -> Result<IotTopology> {
    IotTopology::uniform(bit_depth)
}

impl IotTopology {
    pub fn uniform(bit_depth: u8) -> Result<Self> {
        check_depth(bit_depth)?;
        Ok(Self {
            bit_depth,
            slots: 1 << bit_depth,
            adaptive: None,
        })
    }

    /// Assembles an adaptive topology from per-slot split points and left
    /// subtree spans, laid out in storage order.
    pub(crate) fn from_layout(bit_depth: u8, split: Vec<u32>, left_span: Vec<u32>) -> Result<Self> {
        check_depth(bit_depth)?;
        debug_assert_eq!(split.len(), left_span.len());
        Ok(Self {
            bit_depth,
            slots: split.len(),
            adaptive: Some(AdaptiveLayout { split, left_span }),
        })
    }

    pub fn bit_depth(&self) -> u8 {
        self.bit_depth
    }

    pub fn mode(&self) -> TopologyMode {
        if self.adaptive.is_some() {
            TopologyMode::Adaptive
        } else {
            TopologyMode::Uniform
        }
    }

    pub fn is_adaptive(&self) -> bool {
        self.adaptive.is_some()
    }

    /// Length of a counter array: the top node plus one slot per explicit left node.
    pub fn slot_count(&self) -> usize {
        self.slots
    }

    /// Exclusive upper bound of the value range, `2^bit_depth`.
    pub fn range(&self) -> u32 {
        1u32 << self.bit_depth
    }

    pub fn root(&self) -> NodeId {
        NodeId {
            lo: 0,
            hi: self.range(),
        }
    }

    #[inline]
    pub(crate) fn root_cursor(&self) -> Cursor {
        Cursor {
            child: 1,
            lo: 0,
            hi: self.range(),
            span: (self.slots - 1) as u32,
        }
    }

    /// Split point and left-subtree span below a non-leaf cursor.
    #[inline]
    pub(crate) fn split_of(&self, c: &Cursor) -> (u32, u32) {
        match &self.adaptive {
            None => {
                let half = (c.hi - c.lo) >> 1;
                (c.lo | half, half - 1)
            }
            Some(layout) => (layout.split[c.child], layout.left_span[c.child]),
        }
    }

    #[inline]
    pub(crate) fn left(c: &Cursor, split: u32, left_span: u32) -> Cursor {
        Cursor {
            child: c.child + 1,
            lo: c.lo,
            hi: split,
            span: left_span,
        }
    }

    #[inline]
    pub(crate) fn right(c: &Cursor, split: u32, left_span: u32) -> Cursor {
        Cursor {
            child: c.child + 1 + left_span as usize,
            lo: split,
            hi: c.hi,
            span: c.span - 1 - left_span,
        }
    }

    /// Walks the path of `v` from the top node to its leaf, calling
    /// `on_left` with the slot of every explicit left node on the path.
    ///
    /// The returned cost excludes the top-node counter: one addition per
    /// left step, one comparison per descent step, plus one leaf test per
    /// visited node for adaptive topologies.
    #[inline]
    pub(crate) fn walk<F: FnMut(usize)>(&self, v: u32, mut on_left: F) -> PathCost {
        let mut c = self.root_cursor();
        let mut additions = 0;
        let mut steps = 0;
        while !c.is_leaf() {
            let (split, left_span) = self.split_of(&c);
            steps += 1;
            if v < split {
                on_left(c.child);
                additions += 1;
                c = Self::left(&c, split, left_span);
            } else {
                c = Self::right(&c, split, left_span);
            }
        }
        let leaf_tests = if self.is_adaptive() { steps + 1 } else { 0 };
        PathCost {
            additions,
            comparisons: steps + leaf_tests,
        }
    }

    /// Rank descent driven by the left-child counts returned by `left_count`.
    ///
    /// Stops at a leaf or once the current interval is no wider than
    /// `max_error`; returns the interval's lower bound and width.
    #[inline]
    pub(crate) fn descend<F: FnMut(usize) -> u32>(
        &self,
        rank: u32,
        max_error: u32,
        mut left_count: F,
    ) -> (Selection, PathCost) {
        let adaptive = self.is_adaptive();
        let mut c = self.root_cursor();
        let mut acc = 0u32;
        let mut cost = PathCost::default();
        loop {
            if adaptive {
                cost.comparisons += 1;
            }
            if c.is_leaf() || c.width() <= max_error {
                break;
            }
            let (split, left_span) = self.split_of(&c);
            let left = left_count(c.child);
            cost.comparisons += 1;
            if acc + left >= rank {
                c = Self::left(&c, split, left_span);
            } else {
                acc += left;
                cost.additions += 1;
                c = Self::right(&c, split, left_span);
            }
        }
        (
            Selection {
                value: c.lo,
                error_bound: c.width(),
            },
            cost,
        )
    }

    /// Interval of the node stored at `slot`.
    pub fn slot_interval(&self, slot: usize) -> Result<NodeId> {
        if slot >= self.slots {
            return Err(Error::Logic(format!(
                "slot {slot} out of range for a topology with {} slots",
                self.slots
            )));
        }
        if slot == 0 {
            return Ok(self.root());
        }
        let mut c = self.root_cursor();
        loop {
            let (split, left_span) = self.split_of(&c);
            if slot == c.child {
                return Ok(NodeId {
                    lo: c.lo,
                    hi: split,
                });
            }
            if slot <= c.child + left_span as usize {
                c = Self::left(&c, split, left_span);
            } else {
                c = Self::right(&c, split, left_span);
            }
        }
    }

    /// Number of descent steps from the top node to the leaf holding `v`.
    pub fn leaf_depth(&self, v: u32) -> Result<u32> {
        self.check_value(v)?;
        let mut c = self.root_cursor();
        let mut depth = 0;
        while !c.is_leaf() {
            let (split, left_span) = self.split_of(&c);
            depth += 1;
            c = if v < split {
                Self::left(&c, split, left_span)
            } else {
                Self::right(&c, split, left_span)
            };
        }
        Ok(depth)
    }

    /// Every node, explicit and implicit, in storage (pre-)order.
    pub fn nodes(&self) -> Vec<NodeInfo> {
        let mut out = Vec::with_capacity(2 * self.slots);
        // (cursor, depth, own slot)
        let mut stack = vec![(self.root_cursor(), 0u32, Some(0usize))];
        while let Some((c, depth, slot)) = stack.pop() {
            out.push(NodeInfo {
                id: NodeId { lo: c.lo, hi: c.hi },
                depth,
                slot,
                is_leaf: c.is_leaf(),
            });
            if !c.is_leaf() {
                let (split, left_span) = self.split_of(&c);
                stack.push((Self::right(&c, split, left_span), depth + 1, None));
                stack.push((Self::left(&c, split, left_span), depth + 1, Some(c.child)));
            }
        }
        out
    }

    /// Leaves in ascending value order with their depths.
    pub fn leaves(&self) -> Vec<(NodeId, u32)> {
        self.nodes()
            .into_iter()
            .filter(|n| n.is_leaf)
            .map(|n| (n.id, n.depth))
            .collect()
    }

    /// `sum_v weight[v] * depth(v) / sum_v weight[v]`; `None` for zero total weight.
    pub fn weighted_mean_depth(&self, weights: &[f64]) -> Option<f64> {
        let mut num = 0.0;
        let mut den = 0.0;
        for (leaf, depth) in self.leaves() {
            let w: f64 = weights[leaf.lo as usize..leaf.hi as usize].iter().sum();
            num += w * f64::from(depth);
            den += w;
        }
        (den > 0.0).then(|| num / den)
    }

    pub(crate) fn check_value(&self, v: u32) -> Result<()> {
        if v >= self.range() {
            return Err(Error::input(format!(
                "value {v} outside [0, {})",
                self.range()
            )));
        }
        Ok(())
    }
}

/// Result of a rank query: a value and the width of the interval it bounds.
///
/// The exact order statistic lies in `[value, value + error_bound)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Selection {
    pub value: u32,
    pub error_bound: u32,
}

fn check_depth(bit_depth: u8) -> Result<()> {
    if bit_depth == 0 || bit_depth > MAX_BIT_DEPTH {
        return Err(Error::config(format!(
            "bit depth must be in 1..={MAX_BIT_DEPTH}, got {bit_depth}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depth_8_has_plain_histogram_size() {
        let t = uniform_topology(8).unwrap();
        assert_eq!(t.root(), NodeId { lo: 0, hi: 256 });
        assert_eq!(t.slot_count(), 256);
        assert_eq!(t.leaf_depth(0).unwrap(), 8);
        assert_eq!(t.leaf_depth(255).unwrap(), 8);
    }

    #[test]
    fn depth_1_is_smallest_tree() {
        let t = uniform_topology(1).unwrap();
        assert_eq!(t.slot_count(), 2);
        assert_eq!(t.slot_interval(1).unwrap(), NodeId { lo: 0, hi: 1 });
        let nodes = t.nodes();
        assert_eq!(nodes.len(), 3);
        assert_eq!(nodes[2].id, NodeId { lo: 1, hi: 2 });
        assert_eq!(nodes[2].slot, None);
    }

    #[test]
    fn depth_3_left_chain_bisects() {
        let t = uniform_topology(3).unwrap();
        // Left chain below the root: [0,4), [0,2), [0,1) at slots 1, 2, 3.
        assert_eq!(t.slot_interval(1).unwrap().hi, 4);
        assert_eq!(t.slot_interval(2).unwrap().hi, 2);
        assert_eq!(t.slot_interval(3).unwrap().hi, 1);
        // Then the implicit [1,2) leaf, then the subtree under implicit [2,4).
        assert_eq!(t.slot_interval(4).unwrap(), NodeId { lo: 2, hi: 3 });
        // Right half of the root starts with [4,6).
        assert_eq!(t.slot_interval(5).unwrap(), NodeId { lo: 4, hi: 6 });
        assert_eq!(t.slot_interval(6).unwrap(), NodeId { lo: 4, hi: 5 });
        assert_eq!(t.slot_interval(7).unwrap(), NodeId { lo: 6, hi: 7 });
        assert!(t.slot_interval(8).is_err());
    }

    #[test]
    fn rejects_bad_depths() {
        assert!(matches!(uniform_topology(0), Err(Error::Config(_))));
        assert!(matches!(uniform_topology(17), Err(Error::Config(_))));
        assert!(uniform_topology(16).is_ok());
    }

    #[test]
    fn nodes_partition_their_parents() {
        for d in [1u8, 2, 5, 8] {
            let t = uniform_topology(d).unwrap();
            let nodes = t.nodes();
            assert_eq!(nodes.len(), 2 * (1 << d) - 1);
            let explicit = nodes.iter().filter(|n| n.slot.is_some()).count();
            assert_eq!(explicit, 1 << d);
            let mut slots: Vec<_> = nodes.iter().filter_map(|n| n.slot).collect();
            let in_order = slots.clone();
            slots.sort_unstable();
            // Storage order equals pre-order.
            assert_eq!(slots, in_order);
            assert_eq!(slots, (0..1 << d).collect::<Vec<_>>());
            for n in &nodes {
                if n.is_leaf {
                    assert_eq!(n.id.width(), 1);
                    assert_eq!(n.depth, u32::from(d));
                }
            }
        }
    }

    #[test]
    fn slot_interval_agrees_with_node_listing() {
        let t = uniform_topology(6).unwrap();
        for n in t.nodes() {
            if let Some(slot) = n.slot {
                assert_eq!(t.slot_interval(slot).unwrap(), n.id);
            }
        }
    }

    #[test]
    fn walk_visits_left_nodes_of_the_path() {
        let t = uniform_topology(8).unwrap();
        let mut left = Vec::new();
        let cost = t.walk(0, |s| left.push(s));
        assert_eq!(left, (1..=8).collect::<Vec<_>>());
        assert_eq!(cost, PathCost { additions: 8, comparisons: 8 });

        left.clear();
        let cost = t.walk(255, |s| left.push(s));
        assert!(left.is_empty());
        assert_eq!(cost, PathCost { additions: 0, comparisons: 8 });
    }
}
