//! Sequential category updating: categories are processed in precedence
//! order, and within a category agents are fixed in descending priority as
//! long as some matching that keeps every fixed assignment, places the
//! candidate, and attains both the maximum cardinality `m` and the maximum
//! beneficiary count `b` still exists.
//!
//! Three interchangeable implementations decide that predicate: a
//! lower-bounded flow on the per-agent network, the same on the grouped
//! network, and alternating-path surgery on a working matching.

use serde::Serialize;

use crate::bipartite::{
    apply_path, build_graph, find_alternating_path, maximum_matching, EligibilityGraph, GraphMatching,
    PathQuery,
};
use crate::model::{AgentId, CategoryId, Matching, SequentialReserveSystem};
use crate::netflow::{
    build_compact_network, build_reserve_network, compact_flow_to_matching, feasible_flow, flow_to_matching,
    CategoryClass, CompactReserveNetwork, ReserveNetwork, ResidualPolicy,
};
use crate::{Capacity, FlowNetwork};

/// A maximum matching that also places the most agents in preferential
/// categories: maximum on the preferential-only graph first, then augmented
/// in the full graph. Augmentation never lowers a category's load, so the
/// preferential count survives. Returns `(matching, b, m)`.
pub fn dual_maximum_matching(s: &SequentialReserveSystem) -> (GraphMatching, usize, usize) {
    let g = build_graph(s.base());
    let preferential = g.restricted(|c| s.is_preferential(c));
    let seed = maximum_matching(&preferential, None).expect("no seed");
    let b = seed.size();
    let full = maximum_matching(&g, Some(&seed)).expect("seed is valid in the full graph");
    let m = full.size();
    debug_assert_eq!(beneficiaries(s, &full), b);
    (full, b, m)
}

fn beneficiaries(s: &SequentialReserveSystem, m: &GraphMatching) -> usize {
    s.categories().filter(|&c| s.is_preferential(c)).map(|c| m.load(c)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScuImpl {
    ReferenceFlow,
    #[default]
    CompactFlow,
    Bipartite,
}

/// Progress of one run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScuState {
    /// Fixed assignments in the order they were made.
    pub x: Vec<(AgentId, CategoryId)>,
    pub in_x: Vec<bool>,
    /// Categories already processed, in processing order.
    pub y: Vec<CategoryId>,
    pub y_mask: Vec<bool>,
    /// A matching consistent with `x` that attains `b` and `m`.
    pub mu: Matching,
    pub b: usize,
    pub m: usize,
}

impl ScuState {
    pub fn new(s: &SequentialReserveSystem) -> Self {
        let (initial, b, m) = dual_maximum_matching(s);
        Self {
            x: Vec::new(),
            in_x: vec![false; s.num_agents()],
            y: Vec::new(),
            y_mask: vec![false; s.num_categories()],
            mu: initial.to_matching(),
            b,
            m,
        }
    }

    fn fix(&mut self, a: AgentId, c: CategoryId) {
        debug_assert!(!self.in_x[a.0]);
        self.x.push((a, c));
        self.in_x[a.0] = true;
    }

    fn fixed_in(&self, c: CategoryId) -> usize {
        self.x.iter().filter(|&&(_, d)| d == c).count()
    }
}

/// One candidate decision, as emitted to trace observers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScuEvent {
    pub category: CategoryId,
    pub agent: AgentId,
    pub accepted: bool,
}

/// The existence check on the per-agent network: lower bound 1 on every
/// fixed edge and on `(i, c)`, `b` on the preferential class edge and
/// `m - b` on the open one. Returns the witness matching when feasible.
pub fn scu_feasibility_check(
    s: &SequentialReserveSystem,
    state: &ScuState,
    i: AgentId,
    c: CategoryId,
) -> Option<Matching> {
    let mut net = build_reserve_network(s);
    pin_classes(&mut net.network, &net.layer, state.b, state.m);
    for &(x, d) in &state.x {
        pin_edge(&mut net, x, d);
    }
    reference_check(&net, i, c)
}

fn pin_classes(n: &mut FlowNetwork, layer: &crate::netflow::ClassLayer, b: usize, m: usize) {
    n.set_lower(layer.class_edge(CategoryClass::Preferential), b as Capacity);
    n.set_lower(layer.class_edge(CategoryClass::Open), (m - b) as Capacity);
}

fn pin_edge(net: &mut ReserveNetwork, a: AgentId, c: CategoryId) {
    let e = net.edge(a, c).expect("fixed pairs are eligible");
    net.network.set_lower(e, 1);
}

fn reference_check(net: &ReserveNetwork, i: AgentId, c: CategoryId) -> Option<Matching> {
    let e = net.edge(i, c)?;
    let mut trial = net.network.clone();
    trial.set_lower(e, 1);
    feasible_flow(&trial).map(|f| flow_to_matching(net, &f))
}

struct CompactChecker {
    net: CompactReserveNetwork,
    fixed: Vec<Vec<Capacity>>,
    ledger: Vec<(AgentId, CategoryId)>,
}

impl CompactChecker {
    fn new(s: &SequentialReserveSystem, b: usize, m: usize) -> Self {
        let mut net = build_compact_network(s);
        let layer = net.layer.clone();
        pin_classes(&mut net.network, &layer, b, m);
        let fixed = net.group_edges.iter().map(|edges| vec![0; edges.len()]).collect();
        Self { net, fixed, ledger: Vec::new() }
    }

    fn slot(&self, i: AgentId, c: CategoryId) -> Option<(usize, usize)> {
        let k = self.net.group_of[i.0];
        self.net.group_edges[k].iter().position(|&(d, _)| d == c).map(|j| (k, j))
    }

    /// Group members are interchangeable, so pinning agent `i` to `c` is the
    /// same as requiring one more unit on `(group(i), c)`.
    fn check(&self, i: AgentId, c: CategoryId) -> Option<Matching> {
        let (k, j) = self.slot(i, c)?;
        let mut trial = self.net.network.clone();
        for (g, edges) in self.net.group_edges.iter().enumerate() {
            for (idx, &(_, e)) in edges.iter().enumerate() {
                let extra = Capacity::from(g == k && idx == j);
                trial.set_lower(e, self.fixed[g][idx] + extra);
            }
        }
        let f = feasible_flow(&trial)?;
        let mut ledger = self.ledger.clone();
        ledger.push((i, c));
        Some(
            compact_flow_to_matching(&self.net, &f, &ledger, ResidualPolicy::AscendingIndex)
                .expect("flow covers every pinned unit"),
        )
    }

    fn commit(&mut self, i: AgentId, c: CategoryId) {
        let (k, j) = self.slot(i, c).expect("committed pairs are eligible");
        self.fixed[k][j] += 1;
        self.ledger.push((i, c));
    }
}

struct BipartiteChecker {
    g: EligibilityGraph,
    mu: GraphMatching,
    classes: Vec<bool>,
}

impl BipartiteChecker {
    fn new(s: &SequentialReserveSystem, initial: &Matching) -> Self {
        Self {
            g: build_graph(s.base()),
            mu: GraphMatching::from_matching(initial, s.num_categories()),
            classes: s.preferential_flags().to_vec(),
        }
    }
}

/// One candidate decision of the bipartite implementation. Updates the
/// working matching and `state` and reports whether `i` was fixed at `c`.
///
/// An agent already at `c` is fixed as is. An unmatched agent replaces the
/// lowest-priority unfixed occupant it outranks. Otherwise the agent is
/// moved along a closed alternating path that avoids fixed agents and
/// processed categories, ends where the agent came from, and only trades
/// load between categories of the same class.
pub fn scu_bipartite_step(
    s: &SequentialReserveSystem,
    state: &mut ScuState,
    i: AgentId,
    c: CategoryId,
) -> bool {
    let mut checker = BipartiteChecker::new(s, &state.mu);
    let ok = bipartite_step(s, &mut checker, state, i, c);
    state.mu = checker.mu.to_matching();
    ok
}

fn bipartite_step(
    s: &SequentialReserveSystem,
    checker: &mut BipartiteChecker,
    state: &mut ScuState,
    i: AgentId,
    c: CategoryId,
) -> bool {
    let mu = &mut checker.mu;
    if mu.get(i) == Some(c) {
        state.fix(i, c);
        return true;
    }
    if mu.get(i).is_none() {
        let lowest = mu.occupants(c).filter(|a| !state.in_x[a.0]).max_by_key(|&a| s.ranking(c).rank(a));
        if let Some(low) = lowest.filter(|&low| s.outranks(c, i, low)) {
            mu.assign(low, None);
            mu.assign(i, Some(c));
            state.fix(i, c);
            return true;
        }
    }
    let query = PathQuery {
        agent: i,
        category: c,
        frozen_agents: &state.in_x,
        frozen_categories: &state.y_mask,
        classes: Some(&checker.classes),
    };
    let Some(path) = find_alternating_path(&checker.g, mu, &query) else {
        return false;
    };
    *mu = apply_path(&checker.g, mu, &path).expect("search returns consistent paths");
    state.fix(i, c);
    true
}

enum Checker {
    Reference(ReserveNetwork),
    Compact(CompactChecker),
    Bipartite(BipartiteChecker),
}

/// Runs the rule, reporting each decision to `observe`. The returned state
/// holds the final matching in `mu`.
pub fn scu_run(
    s: &SequentialReserveSystem,
    implementation: ScuImpl,
    mut observe: impl FnMut(&ScuEvent, &ScuState),
) -> ScuState {
    let mut state = ScuState::new(s);
    let mut checker = match implementation {
        ScuImpl::ReferenceFlow => {
            let mut net = build_reserve_network(s);
            let layer = net.layer.clone();
            pin_classes(&mut net.network, &layer, state.b, state.m);
            Checker::Reference(net)
        }
        ScuImpl::CompactFlow => Checker::Compact(CompactChecker::new(s, state.b, state.m)),
        ScuImpl::Bipartite => Checker::Bipartite(BipartiteChecker::new(s, &state.mu)),
    };
    for c in s.precedence().strict_order() {
        let mut fixed = state.fixed_in(c);
        for &i in s.eligible_agents(c) {
            if fixed >= s.capacity(c) {
                break;
            }
            if state.in_x[i.0] {
                continue;
            }
            let accepted = match &mut checker {
                Checker::Reference(net) => match reference_check(net, i, c) {
                    Some(witness) => {
                        pin_edge(net, i, c);
                        state.fix(i, c);
                        state.mu = witness;
                        true
                    }
                    None => false,
                },
                Checker::Compact(cc) => match cc.check(i, c) {
                    Some(witness) => {
                        cc.commit(i, c);
                        state.fix(i, c);
                        state.mu = witness;
                        true
                    }
                    None => false,
                },
                Checker::Bipartite(bc) => {
                    let ok = bipartite_step(s, bc, &mut state, i, c);
                    state.mu = bc.mu.to_matching();
                    ok
                }
            };
            if accepted {
                fixed += 1;
            }
            observe(&ScuEvent { category: c, agent: i, accepted }, &state);
        }
        state.y.push(c);
        state.y_mask[c.0] = true;
    }
    let mut fixed = Matching::empty(s.num_agents());
    for &(a, c) in &state.x {
        fixed.set(a, Some(c));
    }
    assert_eq!(fixed, state.mu, "fixed agents are exactly the matched agents at termination");
    assert_eq!(fixed.size(), state.m, "cardinality preserved");
    assert_eq!(fixed.beneficiary_count(s), state.b, "beneficiary count preserved");
    state
}

pub fn scu_allocate(s: &SequentialReserveSystem, implementation: ScuImpl) -> Matching {
    scu_run(s, implementation, |_, _| {}).mu
}
