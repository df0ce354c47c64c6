//! Domain types for reserve systems: agents, categories, priority rankings,
//! precedence tiers, and matchings, plus the JSON instance and matching
//! file formats.
//!
//! Every type here is an immutable value once validated. Serialization goes
//! through dedicated `*File` structs so that the on-disk layout stays stable
//! and canonical (sorted keys, compact separators, trailing newline).

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CategoryId(pub usize);

impl AgentId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl CategoryId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for CategoryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("agent {agent} appears more than once in the ranking of category {category}")]
    DuplicateAgentInRanking { category: usize, agent: usize },
    #[error("ranking of category {category} lists {found} agents, expected {expected}")]
    RankingIncomplete { category: usize, found: usize, expected: usize },
    #[error("ranking of category {category} mentions unknown agent {agent}")]
    UnknownAgentInRanking { category: usize, agent: i64 },
    #[error("category {category} has negative capacity {capacity}")]
    NegativeCapacity { category: usize, capacity: i64 },
    #[error("eligible cutoff {cutoff} of category {category} is outside 0..={max}")]
    CutoffOutOfRange { category: usize, cutoff: i64, max: usize },
    #[error("preferential set names unknown category {category}")]
    UnknownCategoryInPreferential { category: i64 },
    #[error("tier list has {found} entries for {expected} categories")]
    TierCountMismatch { found: usize, expected: usize },
    #[error("category {category} has negative tier {tier}")]
    NegativeTier { category: usize, tier: i64 },
    #[error("negative agent count {0}")]
    NegativeAgentCount(i64),
    #[error("category entry at position {position} has id {id}; ids must be exactly 0..{count}")]
    CategoryIdMismatch { position: usize, id: i64, count: usize },
    #[error("matching assigns unknown agent {agent}")]
    UnknownAgentInMatching { agent: usize },
    #[error("matching assigns agent {agent} to unknown category {category}")]
    UnknownCategoryInMatching { agent: usize, category: usize },
    #[error("category {category} holds {load} agents but has capacity {capacity}")]
    CapacityExceeded { category: usize, load: usize, capacity: usize },
    #[error("baseline order is not a permutation of the {expected} agents")]
    InvalidBaseline { expected: usize },
    #[error("priority comparison of agent {0} with itself")]
    IdenticalAgents(usize),
    #[error("malformed JSON: {0}")]
    Json(String),
}

/// Strict ranking of all agents for one category, with the position of the
/// null element stored as `eligible_cutoff`: the first `eligible_cutoff`
/// entries are eligible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PriorityRanking {
    order: Vec<AgentId>,
    eligible_cutoff: usize,
    position: Vec<usize>,
}

impl PriorityRanking {
    pub fn new(order: Vec<AgentId>, eligible_cutoff: usize) -> Result<Self, ModelError> {
        Self::validated(
            0,
            order.len(),
            order.into_iter().map(|a| a.0 as i64).collect(),
            eligible_cutoff as i64,
        )
    }

    fn validated(category: usize, num_agents: usize, raw: Vec<i64>, cutoff: i64) -> Result<Self, ModelError> {
        let mut position = vec![usize::MAX; num_agents];
        let mut order = Vec::with_capacity(raw.len());
        for (pos, &a) in raw.iter().enumerate() {
            if a < 0 || a as usize >= num_agents {
                return Err(ModelError::UnknownAgentInRanking { category, agent: a });
            }
            let a = a as usize;
            if position[a] != usize::MAX {
                return Err(ModelError::DuplicateAgentInRanking { category, agent: a });
            }
            position[a] = pos;
            order.push(AgentId(a));
        }
        if order.len() != num_agents {
            return Err(ModelError::RankingIncomplete { category, found: order.len(), expected: num_agents });
        }
        if cutoff < 0 || cutoff as usize > num_agents {
            return Err(ModelError::CutoffOutOfRange { category, cutoff, max: num_agents });
        }
        Ok(Self { order, eligible_cutoff: cutoff as usize, position })
    }

    pub fn order(&self) -> &[AgentId] {
        &self.order
    }

    pub fn eligible_cutoff(&self) -> usize {
        self.eligible_cutoff
    }

    /// Eligible agents, highest priority first.
    pub fn eligible(&self) -> &[AgentId] {
        &self.order[..self.eligible_cutoff]
    }

    /// Zero-based rank; smaller is higher priority.
    #[inline]
    pub fn rank(&self, agent: AgentId) -> usize {
        self.position[agent.0]
    }

    #[inline]
    pub fn is_eligible(&self, agent: AgentId) -> bool {
        self.position[agent.0] < self.eligible_cutoff
    }

    #[inline]
    pub fn outranks(&self, a: AgentId, b: AgentId) -> bool {
        self.position[a.0] < self.position[b.0]
    }

    /// Moves `agent` one step up in the ranking over agents and the null
    /// element. An agent sitting right below the cutoff crosses it and
    /// becomes eligible; nobody else changes side. Returns `false` when the
    /// agent is already on top.
    pub fn promote(&mut self, agent: AgentId) -> bool {
        let p = self.position[agent.0];
        if p == self.eligible_cutoff {
            self.eligible_cutoff += 1;
            return true;
        }
        if p == 0 {
            return false;
        }
        let other = self.order[p - 1];
        self.order.swap(p - 1, p);
        self.position[agent.0] = p - 1;
        self.position[other.0] = p;
        true
    }

    /// Drops `agent` to just below the null element, leaving the relative
    /// order of everyone else intact. No-op for ineligible agents.
    pub fn demote_below_cutoff(&mut self, agent: AgentId) {
        let p = self.position[agent.0];
        if p >= self.eligible_cutoff {
            return;
        }
        let target = self.eligible_cutoff - 1;
        self.order[p..=target].rotate_left(1);
        for (offset, a) in self.order[p..=target].iter().enumerate() {
            self.position[a.0] = p + offset;
        }
        self.eligible_cutoff -= 1;
    }
}

/// The basic reserve system: capacities and one priority ranking per
/// category over a dense set of agents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReserveSystem {
    num_agents: usize,
    capacities: Vec<usize>,
    rankings: Vec<PriorityRanking>,
    eligible_categories: Vec<Vec<CategoryId>>,
}

impl ReserveSystem {
    pub fn new(
        num_agents: usize,
        capacities: Vec<usize>,
        rankings: Vec<PriorityRanking>,
    ) -> Result<Self, ModelError> {
        if capacities.len() != rankings.len() {
            return Err(ModelError::TierCountMismatch { found: capacities.len(), expected: rankings.len() });
        }
        for (c, r) in rankings.iter().enumerate() {
            if r.order.len() != num_agents {
                return Err(ModelError::RankingIncomplete {
                    category: c,
                    found: r.order.len(),
                    expected: num_agents,
                });
            }
        }
        let mut system = Self { num_agents, capacities, rankings, eligible_categories: Vec::new() };
        system.reindex();
        Ok(system)
    }

    /// Builds an instance from per-category `(capacity, ranking, cutoff)`
    /// triples. Handy for hand-written fixtures.
    pub fn from_parts(
        num_agents: usize,
        categories: &[(usize, &[usize], usize)],
    ) -> Result<Self, ModelError> {
        let mut caps = Vec::with_capacity(categories.len());
        let mut ranks = Vec::with_capacity(categories.len());
        for (c, (cap, order, cutoff)) in categories.iter().enumerate() {
            caps.push(*cap);
            ranks.push(PriorityRanking::validated(
                c,
                num_agents,
                order.iter().map(|&a| a as i64).collect(),
                *cutoff as i64,
            )?);
        }
        Self::new(num_agents, caps, ranks)
    }

    fn reindex(&mut self) {
        let mut elig = vec![Vec::new(); self.num_agents];
        for (c, r) in self.rankings.iter().enumerate() {
            for &a in r.eligible() {
                elig[a.0].push(CategoryId(c));
            }
        }
        self.eligible_categories = elig;
    }

    pub fn num_agents(&self) -> usize {
        self.num_agents
    }

    pub fn num_categories(&self) -> usize {
        self.capacities.len()
    }

    pub fn agents(&self) -> impl Iterator<Item = AgentId> + Clone {
        (0..self.num_agents).map(AgentId)
    }

    pub fn categories(&self) -> impl Iterator<Item = CategoryId> + Clone {
        (0..self.capacities.len()).map(CategoryId)
    }

    pub fn capacity(&self, c: CategoryId) -> usize {
        self.capacities[c.0]
    }

    pub fn capacities(&self) -> &[usize] {
        &self.capacities
    }

    pub fn ranking(&self, c: CategoryId) -> &PriorityRanking {
        &self.rankings[c.0]
    }

    pub fn is_eligible(&self, a: AgentId, c: CategoryId) -> bool {
        self.rankings[c.0].is_eligible(a)
    }

    /// Categories `a` is eligible for, ascending.
    pub fn eligible_categories(&self, a: AgentId) -> &[CategoryId] {
        &self.eligible_categories[a.0]
    }

    /// Eligible agents of `c` in descending priority.
    pub fn eligible_agents(&self, c: CategoryId) -> &[AgentId] {
        self.rankings[c.0].eligible()
    }

    /// `Greater` means `a` has higher priority than `b` at `c`.
    pub fn compare_priority(&self, c: CategoryId, a: AgentId, b: AgentId) -> Result<Ordering, ModelError> {
        if a == b {
            return Err(ModelError::IdenticalAgents(a.0));
        }
        let r = &self.rankings[c.0];
        Ok(r.rank(b).cmp(&r.rank(a)))
    }

    pub fn outranks(&self, c: CategoryId, a: AgentId, b: AgentId) -> bool {
        self.rankings[c.0].outranks(a, b)
    }

    pub fn promote(&mut self, c: CategoryId, a: AgentId) -> bool {
        let changed = self.rankings[c.0].promote(a);
        self.reindex();
        changed
    }

    pub fn hide(&mut self, a: AgentId, c: CategoryId) {
        self.rankings[c.0].demote_below_cutoff(a);
        self.reindex();
    }

    pub fn num_edges(&self) -> usize {
        self.rankings.iter().map(|r| r.eligible_cutoff).sum()
    }
}

/// Weak precedence over categories as integer tiers; smaller tiers are
/// processed earlier, equal tiers simultaneously.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrecedenceOrder {
    tier_of: Vec<u32>,
}

impl PrecedenceOrder {
    pub fn new(tier_of: Vec<u32>) -> Self {
        Self { tier_of }
    }

    pub fn uniform(num_categories: usize) -> Self {
        Self { tier_of: vec![0; num_categories] }
    }

    pub fn tiers(&self) -> &[u32] {
        &self.tier_of
    }

    pub fn tier(&self, c: CategoryId) -> u32 {
        self.tier_of[c.0]
    }

    /// `c` is processed strictly before `d`.
    pub fn precedes(&self, c: CategoryId, d: CategoryId) -> bool {
        self.tier_of[c.0] < self.tier_of[d.0]
    }

    /// Same as [`precedes`](Self::precedes) with "unmatched" ranked below
    /// every category.
    pub fn precedes_or_unmatched(&self, c: CategoryId, d: Option<CategoryId>) -> bool {
        match d {
            None => true,
            Some(d) => self.precedes(c, d),
        }
    }

    /// Processing sequence: by tier, ties broken by smaller index.
    pub fn strict_order(&self) -> Vec<CategoryId> {
        let mut order: Vec<CategoryId> = (0..self.tier_of.len()).map(CategoryId).collect();
        order.sort_by_key(|c| (self.tier_of[c.0], c.0));
        order
    }

    pub fn is_strict(&self) -> bool {
        let mut seen = self.tier_of.clone();
        seen.sort_unstable();
        seen.windows(2).all(|w| w[0] != w[1])
    }

    /// The tie-broken strict order, re-expressed as distinct tiers.
    pub fn linearized(&self) -> Self {
        let mut tier_of = vec![0; self.tier_of.len()];
        for (rank, c) in self.strict_order().into_iter().enumerate() {
            tier_of[c.0] = rank as u32;
        }
        Self { tier_of }
    }
}

/// A reserve system with a preferential-treatment set and a precedence
/// order over categories.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequentialReserveSystem {
    base: ReserveSystem,
    preferential: Vec<bool>,
    precedence: PrecedenceOrder,
}

impl SequentialReserveSystem {
    pub fn new(
        base: ReserveSystem,
        preferential: &[CategoryId],
        precedence: PrecedenceOrder,
    ) -> Result<Self, ModelError> {
        let n = base.num_categories();
        if precedence.tier_of.len() != n {
            return Err(ModelError::TierCountMismatch { found: precedence.tier_of.len(), expected: n });
        }
        let mut flags = vec![false; n];
        for c in preferential {
            if c.0 >= n {
                return Err(ModelError::UnknownCategoryInPreferential { category: c.0 as i64 });
            }
            flags[c.0] = true;
        }
        Ok(Self { base, preferential: flags, precedence })
    }

    /// Basic systems run through sequential rules with no preferential
    /// categories and a single tier.
    pub fn from_basic(base: ReserveSystem) -> Self {
        let n = base.num_categories();
        Self { base, preferential: vec![false; n], precedence: PrecedenceOrder::uniform(n) }
    }

    pub fn base(&self) -> &ReserveSystem {
        &self.base
    }

    pub fn base_mut(&mut self) -> &mut ReserveSystem {
        &mut self.base
    }

    pub fn precedence(&self) -> &PrecedenceOrder {
        &self.precedence
    }

    pub fn is_preferential(&self, c: CategoryId) -> bool {
        self.preferential[c.0]
    }

    pub fn preferential_flags(&self) -> &[bool] {
        &self.preferential
    }

    pub fn preferential(&self) -> Vec<CategoryId> {
        (0..self.preferential.len()).filter(|&c| self.preferential[c]).map(CategoryId).collect()
    }

    /// Copy with the tie-broken precedence made explicit.
    pub fn linearized(&self) -> Self {
        Self {
            base: self.base.clone(),
            preferential: self.preferential.clone(),
            precedence: self.precedence.linearized(),
        }
    }

    pub fn with_precedence(&self, precedence: PrecedenceOrder) -> Result<Self, ModelError> {
        Self::new(self.base.clone(), &self.preferential(), precedence)
    }
}

impl std::ops::Deref for SequentialReserveSystem {
    type Target = ReserveSystem;

    fn deref(&self) -> &ReserveSystem {
        &self.base
    }
}

/// A validated instance file: plain or sequential.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Instance {
    Basic(ReserveSystem),
    Sequential(SequentialReserveSystem),
}

impl Instance {
    pub fn base(&self) -> &ReserveSystem {
        match self {
            Instance::Basic(r) => r,
            Instance::Sequential(s) => s.base(),
        }
    }

    pub fn into_sequential(self) -> SequentialReserveSystem {
        match self {
            Instance::Basic(r) => SequentialReserveSystem::from_basic(r),
            Instance::Sequential(s) => s,
        }
    }

    pub fn to_sequential(&self) -> SequentialReserveSystem {
        self.clone().into_sequential()
    }
}

/// Agent-to-category assignment; `None` means unmatched.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Matching {
    assignment: Vec<Option<CategoryId>>,
}

impl Matching {
    pub fn empty(num_agents: usize) -> Self {
        Self { assignment: vec![None; num_agents] }
    }

    pub fn from_assignment(assignment: Vec<Option<CategoryId>>) -> Self {
        Self { assignment }
    }

    /// Shorthand for fixtures: `(agent, category)` index pairs.
    pub fn from_pairs(num_agents: usize, pairs: &[(usize, usize)]) -> Self {
        let mut m = Self::empty(num_agents);
        for &(a, c) in pairs {
            m.assignment[a] = Some(CategoryId(c));
        }
        m
    }

    pub fn num_agents(&self) -> usize {
        self.assignment.len()
    }

    pub fn assignment(&self) -> &[Option<CategoryId>] {
        &self.assignment
    }

    #[inline]
    pub fn get(&self, a: AgentId) -> Option<CategoryId> {
        self.assignment[a.0]
    }

    pub fn set(&mut self, a: AgentId, c: Option<CategoryId>) {
        self.assignment[a.0] = c;
    }

    pub fn is_matched(&self, a: AgentId) -> bool {
        self.assignment[a.0].is_some()
    }

    pub fn size(&self) -> usize {
        self.assignment.iter().filter(|c| c.is_some()).count()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (AgentId, CategoryId)> + '_ {
        self.assignment.iter().enumerate().filter_map(|(a, c)| c.map(|c| (AgentId(a), c)))
    }

    pub fn matched_agents(&self) -> Vec<AgentId> {
        self.pairs().map(|(a, _)| a).collect()
    }

    pub fn load(&self, c: CategoryId) -> usize {
        self.assignment.iter().filter(|&&x| x == Some(c)).count()
    }

    pub fn loads(&self, num_categories: usize) -> Vec<usize> {
        let mut loads = vec![0; num_categories];
        for c in self.assignment.iter().flatten() {
            loads[c.0] += 1;
        }
        loads
    }

    /// Agents assigned to `c`, ascending.
    pub fn occupants(&self, c: CategoryId) -> Vec<AgentId> {
        self.pairs().filter(|&(_, d)| d == c).map(|(a, _)| a).collect()
    }

    pub fn beneficiary_count(&self, s: &SequentialReserveSystem) -> usize {
        self.assignment.iter().flatten().filter(|c| s.is_preferential(**c)).count()
    }

    /// Checks agent/category ranges and capacities against `r`. Eligibility
    /// is an axiom, not a structural requirement, so it is not checked here.
    pub fn validate(&self, r: &ReserveSystem) -> Result<(), ModelError> {
        if self.assignment.len() != r.num_agents() {
            return Err(ModelError::UnknownAgentInMatching {
                agent: self.assignment.len().max(r.num_agents()) - 1,
            });
        }
        let mut loads = vec![0usize; r.num_categories()];
        for (a, c) in self.pairs() {
            if c.0 >= r.num_categories() {
                return Err(ModelError::UnknownCategoryInMatching { agent: a.0, category: c.0 });
            }
            loads[c.0] += 1;
        }
        for (c, &load) in loads.iter().enumerate() {
            if load > r.capacity(CategoryId(c)) {
                return Err(ModelError::CapacityExceeded {
                    category: c,
                    load,
                    capacity: r.capacity(CategoryId(c)),
                });
            }
        }
        Ok(())
    }
}

/// Exogenous total order over agents, first element highest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BaselineOrder {
    order: Vec<AgentId>,
}

impl BaselineOrder {
    pub fn new(order: Vec<AgentId>, num_agents: usize) -> Result<Self, ModelError> {
        let mut seen = vec![false; num_agents];
        if order.len() != num_agents {
            return Err(ModelError::InvalidBaseline { expected: num_agents });
        }
        for a in &order {
            if a.0 >= num_agents || seen[a.0] {
                return Err(ModelError::InvalidBaseline { expected: num_agents });
            }
            seen[a.0] = true;
        }
        Ok(Self { order })
    }

    pub fn identity(num_agents: usize) -> Self {
        Self { order: (0..num_agents).map(AgentId).collect() }
    }

    pub fn order(&self) -> &[AgentId] {
        &self.order
    }
}

// ---------------------------------------------------------------------------
// File formats
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryFile {
    pub capacity: i64,
    pub eligible_cutoff: i64,
    pub id: i64,
    pub ranking: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub agents: i64,
    pub categories: Vec<CategoryFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preferential: Option<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tiers: Option<Vec<i64>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatchingFile {
    pub assignment: BTreeMap<usize, Option<usize>>,
}

/// Turns a parsed instance file into a validated instance. Files without
/// `preferential` and `tiers` yield a basic system.
pub fn validate_instance(raw: &InstanceFile) -> Result<Instance, ModelError> {
    if raw.agents < 0 {
        return Err(ModelError::NegativeAgentCount(raw.agents));
    }
    let n = raw.agents as usize;
    let count = raw.categories.len();
    let mut slots: Vec<Option<&CategoryFile>> = vec![None; count];
    for (position, cat) in raw.categories.iter().enumerate() {
        if cat.id < 0 || cat.id as usize >= count || slots[cat.id as usize].is_some() {
            return Err(ModelError::CategoryIdMismatch { position, id: cat.id, count });
        }
        slots[cat.id as usize] = Some(cat);
    }
    let mut caps = Vec::with_capacity(count);
    let mut ranks = Vec::with_capacity(count);
    for (c, cat) in slots.into_iter().enumerate() {
        let cat = cat.expect("every slot filled");
        if cat.capacity < 0 {
            return Err(ModelError::NegativeCapacity { category: c, capacity: cat.capacity });
        }
        caps.push(cat.capacity as usize);
        ranks.push(PriorityRanking::validated(c, n, cat.ranking.clone(), cat.eligible_cutoff)?);
    }
    let base = ReserveSystem::new(n, caps, ranks)?;
    if raw.preferential.is_none() && raw.tiers.is_none() {
        return Ok(Instance::Basic(base));
    }
    let mut preferential = Vec::new();
    for &c in raw.preferential.iter().flatten() {
        if c < 0 || c as usize >= count {
            return Err(ModelError::UnknownCategoryInPreferential { category: c });
        }
        preferential.push(CategoryId(c as usize));
    }
    let tiers = match &raw.tiers {
        None => vec![0; count],
        Some(t) => {
            if t.len() != count {
                return Err(ModelError::TierCountMismatch { found: t.len(), expected: count });
            }
            let mut tiers = Vec::with_capacity(count);
            for (c, &tier) in t.iter().enumerate() {
                if tier < 0 || tier > u32::MAX as i64 {
                    return Err(ModelError::NegativeTier { category: c, tier });
                }
                tiers.push(tier as u32);
            }
            tiers
        }
    };
    Ok(Instance::Sequential(SequentialReserveSystem::new(base, &preferential, PrecedenceOrder::new(tiers))?))
}

impl Instance {
    pub fn parse(text: &str) -> Result<Self, ModelError> {
        let raw: InstanceFile = serde_json::from_str(text).map_err(|e| ModelError::Json(e.to_string()))?;
        validate_instance(&raw)
    }

    pub fn to_file(&self) -> InstanceFile {
        let r = self.base();
        let categories = r
            .categories()
            .map(|c| {
                let rank = r.ranking(c);
                CategoryFile {
                    capacity: r.capacity(c) as i64,
                    eligible_cutoff: rank.eligible_cutoff() as i64,
                    id: c.0 as i64,
                    ranking: rank.order().iter().map(|a| a.0 as i64).collect(),
                }
            })
            .collect();
        let (preferential, tiers) = match self {
            Instance::Basic(_) => (None, None),
            Instance::Sequential(s) => (
                Some(s.preferential().into_iter().map(|c| c.0 as i64).collect()),
                Some(s.precedence().tiers().iter().map(|&t| t as i64).collect()),
            ),
        };
        InstanceFile { agents: r.num_agents() as i64, categories, preferential, tiers }
    }

    /// Canonical text: compact JSON, keys in sorted order, trailing newline.
    pub fn to_canonical_json(&self) -> String {
        let mut s = serde_json::to_string(&self.to_file()).expect("instance serializes");
        s.push('\n');
        s
    }
}

impl Matching {
    pub fn to_file(&self) -> MatchingFile {
        MatchingFile {
            assignment: self.assignment.iter().enumerate().map(|(a, c)| (a, c.map(|c| c.0))).collect(),
        }
    }

    /// Reads a matching for an instance with `num_agents` agents. Agents
    /// missing from the file are unmatched.
    pub fn from_file(file: &MatchingFile, num_agents: usize) -> Result<Self, ModelError> {
        let mut m = Self::empty(num_agents);
        for (&a, &c) in &file.assignment {
            if a >= num_agents {
                return Err(ModelError::UnknownAgentInMatching { agent: a });
            }
            m.assignment[a] = c.map(CategoryId);
        }
        Ok(m)
    }

    pub fn parse(text: &str, num_agents: usize) -> Result<Self, ModelError> {
        let file: MatchingFile = serde_json::from_str(text).map_err(|e| ModelError::Json(e.to_string()))?;
        Self::from_file(&file, num_agents)
    }

    pub fn to_canonical_json(&self) -> String {
        let mut s = serde_json::to_string(&self.to_file()).expect("matching serializes");
        s.push('\n');
        s
    }
}
