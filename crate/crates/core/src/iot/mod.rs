//! Implicit interval-occurrences trees.

mod topology;
mod tree;

pub use topology::{
    uniform_topology, IotTopology, NodeId, NodeInfo, Selection, TopologyMode, MAX_BIT_DEPTH,
};
pub use tree::Iot;
