//! Allocation rules for reserve systems: deferred acceptance, reverse
//! rejecting, maximum matching adjustment, and sequential category updating
//! (flow, compact-flow, and bipartite implementations), with axiom checkers
//! and a brute-force oracle for small instances.

pub mod axioms;
pub mod bench;
pub mod bipartite;
pub mod gen;
pub mod harness;
pub mod model;
pub mod netflow;
pub mod rules_basic;
pub mod rules_sequential;

pub use model::{
    AgentId, BaselineOrder, CategoryId, Instance, Matching, ModelError, PrecedenceOrder, PriorityRanking,
    ReserveSystem, SequentialReserveSystem,
};

/// Integer type used for flow capacities throughout the crate.
pub type Capacity = i64;
pub type FlowNetwork = netflow::BoundedFlowNetwork<Capacity>;
