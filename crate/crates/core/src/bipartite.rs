//! Eligibility graphs, capacitated maximum matching, and alternating-path
//! search over the matching's residual structure.

use std::collections::VecDeque;

use thiserror::Error;

use crate::model::{AgentId, CategoryId, Matching, ReserveSystem};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatchingError {
    #[error("seed assigns agent {agent} to category {category} it is not adjacent to")]
    InvalidSeedEdge { agent: usize, category: usize },
    #[error("seed puts {load} agents into category {category} of capacity {capacity}")]
    InvalidSeedLoad { category: usize, load: usize, capacity: usize },
    #[error("seed covers {found} agents, graph has {expected}")]
    InvalidSeedShape { found: usize, expected: usize },
    #[error("path edge ({agent}, {category}) does not match the matching it is applied to")]
    PathInconsistent { agent: usize, category: usize },
}

/// Bipartite agent–category graph with per-category capacity. Adjacency
/// lists are kept in ascending index order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EligibilityGraph {
    agent_adj: Vec<Vec<CategoryId>>,
    category_adj: Vec<Vec<AgentId>>,
    capacities: Vec<usize>,
}

pub fn build_graph(r: &ReserveSystem) -> EligibilityGraph {
    let agent_adj: Vec<Vec<CategoryId>> = r.agents().map(|a| r.eligible_categories(a).to_vec()).collect();
    let mut category_adj = vec![Vec::new(); r.num_categories()];
    for (a, cats) in agent_adj.iter().enumerate() {
        for c in cats {
            category_adj[c.0].push(AgentId(a));
        }
    }
    EligibilityGraph { agent_adj, category_adj, capacities: r.capacities().to_vec() }
}

impl EligibilityGraph {
    pub fn num_agents(&self) -> usize {
        self.agent_adj.len()
    }

    pub fn num_categories(&self) -> usize {
        self.capacities.len()
    }

    pub fn num_edges(&self) -> usize {
        self.agent_adj.iter().map(Vec::len).sum()
    }

    pub fn capacity(&self, c: CategoryId) -> usize {
        self.capacities[c.0]
    }

    pub fn neighbors(&self, a: AgentId) -> &[CategoryId] {
        &self.agent_adj[a.0]
    }

    pub fn agents_of(&self, c: CategoryId) -> &[AgentId] {
        &self.category_adj[c.0]
    }

    pub fn has_edge(&self, a: AgentId, c: CategoryId) -> bool {
        self.agent_adj[a.0].binary_search(&c).is_ok()
    }

    pub fn edges(&self) -> impl Iterator<Item = (AgentId, CategoryId)> + '_ {
        self.agent_adj.iter().enumerate().flat_map(|(a, cats)| cats.iter().map(move |&c| (AgentId(a), c)))
    }

    /// Keeps only the edges for which `keep` holds.
    pub fn retain_edges(&mut self, mut keep: impl FnMut(AgentId, CategoryId) -> bool) {
        for (a, cats) in self.agent_adj.iter_mut().enumerate() {
            cats.retain(|&c| keep(AgentId(a), c));
        }
        for (c, agents) in self.category_adj.iter_mut().enumerate() {
            agents.retain(|&a| self.agent_adj[a.0].binary_search(&CategoryId(c)).is_ok());
        }
    }

    /// The same vertex set with only edges into categories accepted by
    /// `keep`.
    pub fn restricted(&self, keep: impl Fn(CategoryId) -> bool) -> Self {
        let mut g = self.clone();
        g.retain_edges(|_, c| keep(c));
        g
    }

    pub fn remove_agent(&mut self, a: AgentId) {
        self.retain_edges(|b, _| b != a);
    }
}

/// A capacity-respecting matching in an [`EligibilityGraph`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GraphMatching {
    agent_to_category: Vec<Option<CategoryId>>,
    load: Vec<usize>,
}

impl GraphMatching {
    pub fn empty(num_agents: usize, num_categories: usize) -> Self {
        Self { agent_to_category: vec![None; num_agents], load: vec![0; num_categories] }
    }

    pub fn from_matching(m: &Matching, num_categories: usize) -> Self {
        let mut g = Self::empty(m.num_agents(), num_categories);
        for (a, c) in m.pairs() {
            g.assign(a, Some(c));
        }
        g
    }

    pub fn to_matching(&self) -> Matching {
        Matching::from_assignment(self.agent_to_category.clone())
    }

    #[inline]
    pub fn get(&self, a: AgentId) -> Option<CategoryId> {
        self.agent_to_category[a.0]
    }

    pub fn load(&self, c: CategoryId) -> usize {
        self.load[c.0]
    }

    pub fn loads(&self) -> &[usize] {
        &self.load
    }

    pub fn size(&self) -> usize {
        self.load.iter().sum()
    }

    pub fn num_agents(&self) -> usize {
        self.agent_to_category.len()
    }

    pub fn occupants(&self, c: CategoryId) -> impl Iterator<Item = AgentId> + '_ {
        self.agent_to_category.iter().enumerate().filter(move |(_, &d)| d == Some(c)).map(|(a, _)| AgentId(a))
    }

    /// Moves `a` to `c` (or unmatches it), keeping loads in sync.
    pub fn assign(&mut self, a: AgentId, c: Option<CategoryId>) {
        if let Some(old) = self.agent_to_category[a.0] {
            self.load[old.0] -= 1;
        }
        if let Some(new) = c {
            self.load[new.0] += 1;
        }
        self.agent_to_category[a.0] = c;
    }

    /// Checks that every matched pair is an edge of `g` and no category is
    /// over capacity.
    pub fn validate(&self, g: &EligibilityGraph) -> Result<(), MatchingError> {
        if self.agent_to_category.len() != g.num_agents() || self.load.len() != g.num_categories() {
            return Err(MatchingError::InvalidSeedShape {
                found: self.agent_to_category.len(),
                expected: g.num_agents(),
            });
        }
        for (a, c) in self.agent_to_category.iter().enumerate() {
            if let Some(c) = *c {
                if !g.has_edge(AgentId(a), c) {
                    return Err(MatchingError::InvalidSeedEdge { agent: a, category: c.0 });
                }
            }
        }
        for (c, &load) in self.load.iter().enumerate() {
            if load > g.capacities[c] {
                return Err(MatchingError::InvalidSeedLoad { category: c, load, capacity: g.capacities[c] });
            }
        }
        Ok(())
    }
}

const UNREACHED: u32 = u32::MAX;

struct HopcroftKarp<'g> {
    g: &'g EligibilityGraph,
    mate: Vec<Option<CategoryId>>,
    occupants: Vec<Vec<AgentId>>,
    dist: Vec<u32>,
    limit: u32,
}

impl<'g> HopcroftKarp<'g> {
    fn has_room(&self, c: CategoryId) -> bool {
        self.occupants[c.0].len() < self.g.capacities[c.0]
    }

    fn bfs(&mut self) -> bool {
        let mut queue = VecDeque::new();
        for a in 0..self.mate.len() {
            if self.mate[a].is_none() && !self.g.agent_adj[a].is_empty() {
                self.dist[a] = 0;
                queue.push_back(AgentId(a));
            } else {
                self.dist[a] = UNREACHED;
            }
        }
        self.limit = UNREACHED;
        while let Some(a) = queue.pop_front() {
            let d = self.dist[a.0];
            if d >= self.limit {
                continue;
            }
            for &c in &self.g.agent_adj[a.0] {
                if self.mate[a.0] == Some(c) {
                    continue;
                }
                if self.has_room(c) {
                    self.limit = self.limit.min(d + 1);
                } else {
                    for &b in &self.occupants[c.0] {
                        if self.dist[b.0] == UNREACHED {
                            self.dist[b.0] = d + 1;
                            queue.push_back(b);
                        }
                    }
                }
            }
        }
        self.limit != UNREACHED
    }

    fn dfs(&mut self, a: AgentId) -> bool {
        let d = self.dist[a.0];
        for idx in 0..self.g.agent_adj[a.0].len() {
            let c = self.g.agent_adj[a.0][idx];
            if self.mate[a.0] == Some(c) {
                continue;
            }
            if self.has_room(c) {
                self.move_agent(a, c);
                return true;
            }
            if d + 1 >= self.limit {
                continue;
            }
            let mut j = 0;
            while j < self.occupants[c.0].len() {
                let b = self.occupants[c.0][j];
                if self.dist[b.0] == d + 1 && self.dfs(b) {
                    self.move_agent(a, c);
                    return true;
                }
                j += 1;
            }
        }
        self.dist[a.0] = UNREACHED;
        false
    }

    fn move_agent(&mut self, a: AgentId, c: CategoryId) {
        if let Some(old) = self.mate[a.0] {
            let occ = &mut self.occupants[old.0];
            let pos = occ.iter().position(|&b| b == a).expect("occupant lists in sync");
            occ.remove(pos);
        }
        self.occupants[c.0].push(a);
        self.mate[a.0] = Some(c);
    }
}

/// Maximum-cardinality matching by capacitated Hopcroft–Karp. With a seed,
/// the result is reached by augmenting the seed, so every agent matched in
/// the seed stays matched.
pub fn maximum_matching(
    g: &EligibilityGraph,
    seed: Option<&GraphMatching>,
) -> Result<GraphMatching, MatchingError> {
    let mut hk = HopcroftKarp {
        g,
        mate: vec![None; g.num_agents()],
        occupants: vec![Vec::new(); g.num_categories()],
        dist: vec![UNREACHED; g.num_agents()],
        limit: UNREACHED,
    };
    if let Some(seed) = seed {
        seed.validate(g)?;
        for a in 0..g.num_agents() {
            if let Some(c) = seed.agent_to_category[a] {
                hk.move_agent(AgentId(a), c);
            }
        }
    }
    while hk.bfs() {
        for a in 0..g.num_agents() {
            if hk.mate[a].is_none() && hk.dist[a] == 0 {
                hk.dfs(AgentId(a));
            }
        }
    }
    let mut out = GraphMatching::empty(g.num_agents(), g.num_categories());
    for (a, c) in hk.mate.iter().enumerate() {
        out.assign(AgentId(a), *c);
    }
    Ok(out)
}

pub fn maximum_matching_size(g: &EligibilityGraph) -> usize {
    maximum_matching(g, None).expect("no seed").size()
}

/// One step of an [`AlternatingPath`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PathNode {
    Agent(AgentId),
    Category(CategoryId),
    /// Load moves between two categories of the same class (preferential
    /// when `true`): the category before the hop keeps an extra unit, the
    /// one after gives one up.
    Class(bool),
    /// The pool of unmatched agents: the agent before leaves the matching,
    /// the agent after enters it.
    Unmatched,
}

/// Node sequence whose consecutive agent/category pairs alternate between
/// edges to add and edges to remove, starting with an add.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AlternatingPath {
    pub nodes: Vec<PathNode>,
}

/// An edge of a path together with whether applying the path adds it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PathEdge {
    pub agent: AgentId,
    pub category: CategoryId,
    pub add: bool,
}

impl AlternatingPath {
    pub fn edges(&self) -> Vec<PathEdge> {
        let mut out = Vec::new();
        for w in self.nodes.windows(2) {
            let pair = match (w[0], w[1]) {
                (PathNode::Agent(a), PathNode::Category(c)) | (PathNode::Category(c), PathNode::Agent(a)) => {
                    (a, c)
                }
                _ => continue,
            };
            let add = out.len() % 2 == 0;
            out.push(PathEdge { agent: pair.0, category: pair.1, add });
        }
        out
    }

    pub fn agents(&self) -> impl Iterator<Item = AgentId> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            PathNode::Agent(a) => Some(*a),
            _ => None,
        })
    }

    pub fn categories(&self) -> impl Iterator<Item = CategoryId> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            PathNode::Category(c) => Some(*c),
            _ => None,
        })
    }
}

/// `M ⊕ P`. If the path's remove edges are in `m` and its add edges are not,
/// the path is applied forward; if the roles are swapped (the path was just
/// applied) it is undone. The result is validated against `g`.
pub fn apply_path(
    g: &EligibilityGraph,
    m: &GraphMatching,
    path: &AlternatingPath,
) -> Result<GraphMatching, MatchingError> {
    let edges = path.edges();
    let in_m = |e: &PathEdge| m.get(e.agent) == Some(e.category);
    let forward = edges.iter().all(|e| in_m(e) != e.add);
    let backward = edges.iter().all(|e| in_m(e) == e.add);
    if !forward && !backward {
        let bad =
            edges.iter().find(|e| in_m(e) == e.add).expect("some edge disagrees with the forward direction");
        return Err(MatchingError::PathInconsistent { agent: bad.agent.0, category: bad.category.0 });
    }
    let mut out = m.clone();
    for e in edges.iter().filter(|e| e.add != forward) {
        out.assign(e.agent, None);
    }
    for e in edges.iter().filter(|e| e.add == forward) {
        if out.get(e.agent).is_some() {
            return Err(MatchingError::PathInconsistent { agent: e.agent.0, category: e.category.0 });
        }
        out.assign(e.agent, Some(e.category));
    }
    out.validate(g)?;
    Ok(out)
}

/// Request to move `agent` into `category` while keeping every category's
/// load, except through class hops, and the number of matched agents
/// unchanged.
#[derive(Debug, Clone, Copy)]
pub struct PathQuery<'a> {
    pub agent: AgentId,
    pub category: CategoryId,
    pub frozen_agents: &'a [bool],
    pub frozen_categories: &'a [bool],
    /// Preferential flag per category. Categories of the same class may
    /// trade a unit of load; `None` forbids it.
    pub classes: Option<&'a [bool]>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Node {
    Agent(usize),
    Category(usize),
    Class(bool),
    Unmatched,
}

/// Finds a closed alternating path that puts `query.agent` into
/// `query.category` and closes back at the agent's current category (or at
/// the unmatched pool when the agent is unmatched). Frozen agents never
/// move, frozen categories are never touched, and per-class loads plus the
/// matched count are preserved. Breadth-first with ascending scans, so the
/// result is a shortest such path and deterministic.
pub fn find_alternating_path(
    g: &EligibilityGraph,
    m: &GraphMatching,
    query: &PathQuery<'_>,
) -> Option<AlternatingPath> {
    let mover = query.agent;
    let start = query.category;
    if query.frozen_agents[mover.0]
        || query.frozen_categories[start.0]
        || !g.has_edge(mover, start)
        || m.get(mover) == Some(start)
    {
        return None;
    }
    let na = g.num_agents();
    let nc = g.num_categories();
    let index = |n: Node| match n {
        Node::Agent(a) => a,
        Node::Category(c) => na + c,
        Node::Class(p) => na + nc + usize::from(p),
        Node::Unmatched => na + nc + 2,
    };
    let target = match m.get(mover) {
        Some(c) => Node::Category(c.0),
        None => Node::Unmatched,
    };
    let mut occupants = vec![Vec::new(); nc];
    for a in 0..na {
        if let Some(c) = m.get(AgentId(a)) {
            occupants[c.0].push(a);
        }
    }
    let movable = |a: usize| a != mover.0 && !query.frozen_agents[a];
    let open = |c: usize| !query.frozen_categories[c];

    let mut parent: Vec<Option<Node>> = vec![None; na + nc + 3];
    let mut seen = vec![false; na + nc + 3];
    let mut queue = VecDeque::new();
    seen[index(Node::Category(start.0))] = true;
    queue.push_back(Node::Category(start.0));
    let mut found = false;
    while let Some(node) = queue.pop_front() {
        if node == target {
            found = true;
            break;
        }
        let mut next: Vec<Node> = Vec::new();
        match node {
            Node::Category(c) => {
                next.extend(occupants[c].iter().filter(|&&a| movable(a)).map(|&a| Node::Agent(a)));
                if let Some(classes) = query.classes {
                    if m.load(CategoryId(c)) < g.capacities[c] {
                        next.push(Node::Class(classes[c]));
                    }
                }
            }
            Node::Agent(a) => {
                let here = m.get(AgentId(a));
                next.extend(
                    g.agent_adj[a]
                        .iter()
                        .filter(|&&c| Some(c) != here && open(c.0))
                        .map(|c| Node::Category(c.0)),
                );
                if here.is_some() {
                    next.push(Node::Unmatched);
                }
            }
            Node::Class(p) => {
                let classes = query.classes.expect("class nodes only reached with classes");
                next.extend(
                    (0..nc)
                        .filter(|&c| classes[c] == p && open(c) && m.load(CategoryId(c)) > 0)
                        .map(Node::Category),
                );
            }
            Node::Unmatched => {
                next.extend((0..na).filter(|&a| movable(a) && m.get(AgentId(a)).is_none()).map(Node::Agent));
            }
        }
        for n in next {
            let i = index(n);
            if !seen[i] {
                seen[i] = true;
                parent[i] = Some(node);
                queue.push_back(n);
            }
        }
    }
    if !found {
        return None;
    }
    let mut rev = vec![target];
    let mut cur = target;
    while let Some(p) = parent[index(cur)] {
        rev.push(p);
        cur = p;
    }
    let convert = |n: Node| match n {
        Node::Agent(a) => PathNode::Agent(AgentId(a)),
        Node::Category(c) => PathNode::Category(CategoryId(c)),
        Node::Class(p) => PathNode::Class(p),
        Node::Unmatched => PathNode::Unmatched,
    };
    let mut nodes = Vec::with_capacity(rev.len() + 2);
    if target == Node::Unmatched {
        nodes.push(PathNode::Unmatched);
    }
    nodes.push(PathNode::Agent(mover));
    nodes.extend(rev.into_iter().rev().map(convert));
    if target != Node::Unmatched {
        nodes.push(PathNode::Agent(mover));
    }
    Some(AlternatingPath { nodes })
}
