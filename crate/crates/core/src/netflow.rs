//! Flow networks with per-edge lower and upper bounds, and the layered
//! networks that encode reserve systems.
//!
//! The solver core is generic over any signed primitive integer; the
//! reserve-system builders use the crate-wide [`Capacity`](crate::Capacity).

use std::collections::VecDeque;
use std::fmt::{Display, Write as _};

use num_traits::{PrimInt, Signed};
use thiserror::Error;

use crate::model::{AgentId, CategoryId, Matching, SequentialReserveSystem};
use crate::Capacity;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeId(pub usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundedEdge<T> {
    pub from: usize,
    pub to: usize,
    pub lower: T,
    pub upper: T,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FlowError {
    #[error("no flow satisfies the lower bounds")]
    Infeasible,
    #[error("edge {edge} carries {value} outside [{lower}, {upper}]")]
    CapacityViolated { edge: usize, value: String, lower: String, upper: String },
    #[error("flow is not conserved at node {node}")]
    NotConserved { node: usize },
    #[error("group {group} sends {residual} unit(s) to category {category} that no ledger entry pins")]
    DecodeAmbiguity { group: usize, category: usize, residual: i64 },
    #[error("ledger pins {pinned} agent(s) of group {group} to category {category}, flow carries {flow}")]
    LedgerExceedsFlow { group: usize, category: usize, pinned: usize, flow: i64 },
}

/// Directed network with `lower <= f(e) <= upper` on every edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundedFlowNetwork<T> {
    labels: Vec<String>,
    pub source: usize,
    pub sink: usize,
    edges: Vec<BoundedEdge<T>>,
}

impl<T: PrimInt + Signed + Display> BoundedFlowNetwork<T> {
    /// An empty network holding only `s` (node 0) and `t` (node 1).
    pub fn new() -> Self {
        Self { labels: vec!["s".into(), "t".into()], source: 0, sink: 1, edges: Vec::new() }
    }

    pub fn add_node(&mut self, label: impl Into<String>) -> usize {
        self.labels.push(label.into());
        self.labels.len() - 1
    }

    pub fn add_edge(&mut self, from: usize, to: usize, lower: T, upper: T) -> EdgeId {
        assert!(from < self.labels.len() && to < self.labels.len(), "edge endpoint out of range");
        self.edges.push(BoundedEdge { from, to, lower, upper });
        EdgeId(self.edges.len() - 1)
    }

    pub fn num_nodes(&self) -> usize {
        self.labels.len()
    }

    pub fn label(&self, node: usize) -> &str {
        &self.labels[node]
    }

    pub fn edges(&self) -> &[BoundedEdge<T>] {
        &self.edges
    }

    pub fn edge(&self, e: EdgeId) -> &BoundedEdge<T> {
        &self.edges[e.0]
    }

    pub fn set_lower(&mut self, e: EdgeId, lower: T) {
        self.edges[e.0].lower = lower;
    }

    pub fn set_upper(&mut self, e: EdgeId, upper: T) {
        self.edges[e.0].upper = upper;
    }

    pub fn clear_lower_bounds(&mut self) {
        for e in &mut self.edges {
            e.lower = T::zero();
        }
    }

    /// Graphviz rendering; edges labeled `(lower,upper)` unless they are the
    /// common `(0,1)`.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph flow {\n  rankdir=LR;\n");
        for (i, label) in self.labels.iter().enumerate() {
            let _ = writeln!(out, "  n{i} [label=\"{label}\"];");
        }
        for e in &self.edges {
            if e.lower == T::zero() && e.upper == T::one() {
                let _ = writeln!(out, "  n{} -> n{};", e.from, e.to);
            } else {
                let _ = writeln!(out, "  n{} -> n{} [label=\"({},{})\"];", e.from, e.to, e.lower, e.upper);
            }
        }
        out.push_str("}\n");
        out
    }
}

impl<T: PrimInt + Signed + Display> Default for BoundedFlowNetwork<T> {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Flow<T> {
    pub value_per_edge: Vec<T>,
    /// Net flow leaving the source.
    pub total: T,
}

impl<T: PrimInt + Signed + Display> Flow<T> {
    pub fn value(&self, e: EdgeId) -> T {
        self.value_per_edge[e.0]
    }

    /// Checks the bound constraint on every edge and conservation at every
    /// node other than `s` and `t`.
    pub fn verify(&self, n: &BoundedFlowNetwork<T>) -> Result<(), FlowError> {
        let mut balance = vec![T::zero(); n.num_nodes()];
        for (i, (e, &f)) in n.edges.iter().zip(&self.value_per_edge).enumerate() {
            if f < e.lower || f > e.upper {
                return Err(FlowError::CapacityViolated {
                    edge: i,
                    value: f.to_string(),
                    lower: e.lower.to_string(),
                    upper: e.upper.to_string(),
                });
            }
            balance[e.from] = balance[e.from] - f;
            balance[e.to] = balance[e.to] + f;
        }
        for (v, b) in balance.iter().enumerate() {
            if v != n.source && v != n.sink && !b.is_zero() {
                return Err(FlowError::NotConserved { node: v });
            }
        }
        if -balance[n.source] != self.total {
            return Err(FlowError::NotConserved { node: n.source });
        }
        Ok(())
    }
}

struct Arc<T> {
    to: usize,
    cap: T,
}

/// Dinic's algorithm over a residual graph stored as paired arcs
/// (`2k` forward, `2k + 1` backward).
struct Dinic<T> {
    adj: Vec<Vec<usize>>,
    arcs: Vec<Arc<T>>,
    level: Vec<u32>,
    next: Vec<usize>,
}

impl<T: PrimInt + Signed> Dinic<T> {
    fn new(n: usize) -> Self {
        Self { adj: vec![Vec::new(); n], arcs: Vec::new(), level: vec![0; n], next: vec![0; n] }
    }

    fn add_arc(&mut self, from: usize, to: usize, cap: T) -> usize {
        let id = self.arcs.len();
        self.arcs.push(Arc { to, cap });
        self.arcs.push(Arc { to: from, cap: T::zero() });
        self.adj[from].push(id);
        self.adj[to].push(id + 1);
        id
    }

    /// Flow currently carried by forward arc `id`.
    fn flow_on(&self, id: usize) -> T {
        self.arcs[id + 1].cap
    }

    fn disable(&mut self, id: usize) {
        self.arcs[id].cap = T::zero();
        self.arcs[id + 1].cap = T::zero();
    }

    fn bfs(&mut self, s: usize, t: usize) -> bool {
        self.level.iter_mut().for_each(|l| *l = u32::MAX);
        self.level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            for &id in &self.adj[v] {
                let arc = &self.arcs[id];
                if arc.cap > T::zero() && self.level[arc.to] == u32::MAX {
                    self.level[arc.to] = self.level[v] + 1;
                    queue.push_back(arc.to);
                }
            }
        }
        self.level[t] != u32::MAX
    }

    fn dfs(&mut self, v: usize, t: usize, pushed: T) -> T {
        if v == t {
            return pushed;
        }
        while self.next[v] < self.adj[v].len() {
            let id = self.adj[v][self.next[v]];
            let (to, cap) = (self.arcs[id].to, self.arcs[id].cap);
            if cap > T::zero() && self.level[to] == self.level[v] + 1 {
                let got = self.dfs(to, t, pushed.min(cap));
                if got > T::zero() {
                    self.arcs[id].cap = self.arcs[id].cap - got;
                    self.arcs[id ^ 1].cap = self.arcs[id ^ 1].cap + got;
                    return got;
                }
            }
            self.next[v] += 1;
        }
        T::zero()
    }

    fn run(&mut self, s: usize, t: usize, infinity: T) -> T {
        let mut total = T::zero();
        while self.bfs(s, t) {
            self.next.iter_mut().for_each(|i| *i = 0);
            loop {
                let f = self.dfs(s, t, infinity);
                if f.is_zero() {
                    break;
                }
                total = total + f;
            }
        }
        total
    }
}

/// Residual state after routing the lower bounds: arc `edge_arc[e]` carries
/// `f(e) - lower(e)`.
struct Circulation<T> {
    dinic: Dinic<T>,
    edge_arc: Vec<usize>,
    closure: usize,
    super_arcs: Vec<usize>,
    infinity: T,
}

fn route_lower_bounds<T: PrimInt + Signed + Display>(n: &BoundedFlowNetwork<T>) -> Option<Circulation<T>> {
    let nodes = n.num_nodes();
    let (super_s, super_t) = (nodes, nodes + 1);
    let mut dinic = Dinic::new(nodes + 2);
    let mut excess = vec![T::zero(); nodes];
    let mut infinity = T::one();
    let mut edge_arc = Vec::with_capacity(n.edges.len());
    for e in &n.edges {
        if e.lower < T::zero() || e.lower > e.upper {
            return None;
        }
        infinity = infinity.saturating_add(e.upper);
        edge_arc.push(dinic.add_arc(e.from, e.to, e.upper - e.lower));
        excess[e.to] = excess[e.to] + e.lower;
        excess[e.from] = excess[e.from] - e.lower;
    }
    let closure = dinic.add_arc(n.sink, n.source, infinity);
    let mut demand = T::zero();
    let mut super_arcs = Vec::new();
    for (v, &x) in excess.iter().enumerate() {
        if x > T::zero() {
            super_arcs.push(dinic.add_arc(super_s, v, x));
            demand = demand + x;
        } else if x < T::zero() {
            super_arcs.push(dinic.add_arc(v, super_t, -x));
        }
    }
    let routed = dinic.run(super_s, super_t, infinity);
    (routed == demand).then_some(Circulation { dinic, edge_arc, closure, super_arcs, infinity })
}

fn extract<T: PrimInt + Signed + Display>(n: &BoundedFlowNetwork<T>, c: &Circulation<T>) -> Flow<T> {
    let value_per_edge: Vec<T> =
        n.edges.iter().zip(&c.edge_arc).map(|(e, &id)| e.lower + c.dinic.flow_on(id)).collect();
    let mut total = T::zero();
    for (e, &f) in n.edges.iter().zip(&value_per_edge) {
        if e.from == n.source {
            total = total + f;
        }
        if e.to == n.source {
            total = total - f;
        }
    }
    Flow { value_per_edge, total }
}

/// Some integral flow meeting every bound, or `None` when none exists.
pub fn feasible_flow<T: PrimInt + Signed + Display>(n: &BoundedFlowNetwork<T>) -> Option<Flow<T>> {
    let c = route_lower_bounds(n)?;
    let flow = extract(n, &c);
    debug_assert!(flow.verify(n).is_ok());
    Some(flow)
}

/// Maximum `s`–`t` flow subject to the lower bounds.
pub fn max_flow<T: PrimInt + Signed + Display>(n: &BoundedFlowNetwork<T>) -> Result<Flow<T>, FlowError> {
    let mut c = route_lower_bounds(n).ok_or(FlowError::Infeasible)?;
    c.dinic.disable(c.closure);
    for &id in &c.super_arcs {
        c.dinic.disable(id);
    }
    let infinity = c.infinity;
    c.dinic.run(n.source, n.sink, infinity);
    let flow = extract(n, &c);
    debug_assert!(flow.verify(n).is_ok());
    Ok(flow)
}

/// Index of the open and preferential class nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CategoryClass {
    Open = 0,
    Preferential = 1,
}

impl CategoryClass {
    pub fn of(s: &SequentialReserveSystem, c: CategoryId) -> Self {
        if s.is_preferential(c) {
            CategoryClass::Preferential
        } else {
            CategoryClass::Open
        }
    }
}

/// Class and sink layers shared by both reserve network shapes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassLayer {
    pub category_node: Vec<usize>,
    pub class_node: [usize; 2],
    /// `(category, class node)` edge per category.
    pub category_edges: Vec<EdgeId>,
    /// `(class node, t)` edge, indexed by [`CategoryClass`].
    pub class_edges: [EdgeId; 2],
}

impl ClassLayer {
    pub fn class_edge(&self, class: CategoryClass) -> EdgeId {
        self.class_edges[class as usize]
    }
}

fn build_category_layer(net: &mut BoundedFlowNetwork<Capacity>, s: &SequentialReserveSystem) -> ClassLayer {
    let category_node: Vec<usize> = s.categories().map(|c| net.add_node(format!("c{}", c.0 + 1))).collect();
    let class_node = [net.add_node("C0"), net.add_node("C*")];
    let category_edges = s
        .categories()
        .map(|c| {
            let class = CategoryClass::of(s, c) as usize;
            net.add_edge(category_node[c.0], class_node[class], 0, s.capacity(c) as Capacity)
        })
        .collect();
    // both class edges start at the total capacity; rules tighten them
    let total: Capacity = s.capacities().iter().map(|&q| q as Capacity).sum();
    let sink = net.sink;
    let class_edges =
        [net.add_edge(class_node[0], sink, 0, total), net.add_edge(class_node[1], sink, 0, total)];
    ClassLayer { category_node, class_node, category_edges, class_edges }
}

/// One node per agent: `s -> agent -> category -> class -> t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReserveNetwork {
    pub network: BoundedFlowNetwork<Capacity>,
    pub agent_node: Vec<usize>,
    pub source_edges: Vec<EdgeId>,
    /// Per agent, `(category, edge)` for every eligible category ascending.
    pub agent_edges: Vec<Vec<(CategoryId, EdgeId)>>,
    pub layer: ClassLayer,
}

impl ReserveNetwork {
    pub fn edge(&self, a: AgentId, c: CategoryId) -> Option<EdgeId> {
        self.agent_edges[a.0].iter().find(|(d, _)| *d == c).map(|&(_, e)| e)
    }
}

pub fn build_reserve_network(s: &SequentialReserveSystem) -> ReserveNetwork {
    let mut net = BoundedFlowNetwork::new();
    let agent_node: Vec<usize> = s.agents().map(|a| net.add_node(format!("i{}", a.0 + 1))).collect();
    let layer = build_category_layer(&mut net, s);
    let source = net.source;
    let source_edges = agent_node.iter().map(|&v| net.add_edge(source, v, 0, 1)).collect();
    let agent_edges = s
        .agents()
        .map(|a| {
            s.eligible_categories(a)
                .iter()
                .map(|&c| (c, net.add_edge(agent_node[a.0], layer.category_node[c.0], 0, 1)))
                .collect()
        })
        .collect();
    ReserveNetwork { network: net, agent_node, source_edges, agent_edges, layer }
}

/// Agents merged into one node per distinct eligibility set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompactReserveNetwork {
    pub network: BoundedFlowNetwork<Capacity>,
    pub group_of: Vec<usize>,
    /// Members of each group, ascending; groups are ordered by their
    /// smallest member.
    pub group_members: Vec<Vec<AgentId>>,
    pub group_node: Vec<usize>,
    pub source_edges: Vec<EdgeId>,
    pub group_edges: Vec<Vec<(CategoryId, EdgeId)>>,
    pub layer: ClassLayer,
}

impl CompactReserveNetwork {
    pub fn num_groups(&self) -> usize {
        self.group_members.len()
    }

    pub fn edge(&self, group: usize, c: CategoryId) -> Option<EdgeId> {
        self.group_edges[group].iter().find(|(d, _)| *d == c).map(|&(_, e)| e)
    }
}

pub fn build_compact_network(s: &SequentialReserveSystem) -> CompactReserveNetwork {
    let mut group_of = vec![usize::MAX; s.num_agents()];
    let mut group_members: Vec<Vec<AgentId>> = Vec::new();
    let mut keys: Vec<&[CategoryId]> = Vec::new();
    for a in s.agents() {
        let key = s.eligible_categories(a);
        let g = match keys.iter().position(|k| *k == key) {
            Some(g) => g,
            None => {
                keys.push(key);
                group_members.push(Vec::new());
                keys.len() - 1
            }
        };
        group_of[a.0] = g;
        group_members[g].push(a);
    }
    let mut net = BoundedFlowNetwork::new();
    let group_node: Vec<usize> =
        (0..group_members.len()).map(|k| net.add_node(format!("k{}", k + 1))).collect();
    let layer = build_category_layer(&mut net, s);
    let source = net.source;
    let mut source_edges = Vec::new();
    let mut group_edges = Vec::new();
    for (k, members) in group_members.iter().enumerate() {
        let size = members.len() as Capacity;
        source_edges.push(net.add_edge(source, group_node[k], 0, size));
        group_edges.push(
            keys[k]
                .iter()
                .map(|&c| (c, net.add_edge(group_node[k], layer.category_node[c.0], 0, size)))
                .collect(),
        );
    }
    CompactReserveNetwork {
        network: net,
        group_of,
        group_members,
        group_node,
        source_edges,
        group_edges,
        layer,
    }
}

/// Reads the assignment off a per-agent network flow.
pub fn flow_to_matching(n: &ReserveNetwork, f: &Flow<Capacity>) -> Matching {
    let mut m = Matching::empty(n.agent_node.len());
    for (a, edges) in n.agent_edges.iter().enumerate() {
        for &(c, e) in edges {
            if f.value(e) > 0 {
                m.set(AgentId(a), Some(c));
            }
        }
    }
    m
}

/// What to do with group flow that the ledger does not pin to agents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResidualPolicy {
    Reject,
    /// Hand remaining units to unpinned members in ascending index order.
    AscendingIndex,
}

/// Decodes a compact flow into a matching. `ledger` pins concrete agents to
/// categories; each unit on a group edge must be covered by a pin unless
/// `policy` allows filling the rest.
pub fn compact_flow_to_matching(
    n: &CompactReserveNetwork,
    f: &Flow<Capacity>,
    ledger: &[(AgentId, CategoryId)],
    policy: ResidualPolicy,
) -> Result<Matching, FlowError> {
    let mut m = Matching::empty(n.group_of.len());
    for &(a, c) in ledger {
        m.set(a, Some(c));
    }
    for (k, edges) in n.group_edges.iter().enumerate() {
        let unpinned: Vec<AgentId> =
            n.group_members[k].iter().copied().filter(|&a| !m.is_matched(a)).collect();
        let mut free = unpinned.into_iter();
        for &(c, e) in edges {
            let carried = f.value(e);
            let pinned = ledger.iter().filter(|&&(a, d)| d == c && n.group_of[a.0] == k).count();
            let residual = carried - pinned as Capacity;
            if residual < 0 {
                return Err(FlowError::LedgerExceedsFlow { group: k, category: c.0, pinned, flow: carried });
            }
            if residual > 0 {
                if policy == ResidualPolicy::Reject {
                    return Err(FlowError::DecodeAmbiguity { group: k, category: c.0, residual });
                }
                for _ in 0..residual {
                    let a = free.next().expect("group flow bounded by group size");
                    m.set(a, Some(c));
                }
            }
        }
    }
    Ok(m)
}
