//! Rules for basic reserve systems: deferred acceptance, reverse rejecting,
//! and maximum matching adjustment.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::bipartite::{build_graph, maximum_matching, maximum_matching_size, GraphMatching, MatchingError};
use crate::model::{AgentId, BaselineOrder, CategoryId, Matching, ReserveSystem};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuleError {
    #[error("preferences of agent {agent} list category {category}, which is not eligible")]
    PrefsNotEligible { agent: usize, category: usize },
    #[error("preferences of agent {agent} list category {category} twice")]
    PrefsDuplicate { agent: usize, category: usize },
    #[error("preferences cover {found} agents, instance has {expected}")]
    PrefsShape { found: usize, expected: usize },
    #[error("initial matching has size {found}, maximum is {maximum}")]
    NotMaximumSeed { found: usize, maximum: usize },
    #[error("agent order is not a permutation of the {0} agents")]
    InvalidAgentOrder(usize),
    #[error(transparent)]
    Matching(#[from] MatchingError),
}

/// Strict preference list per agent over (a subset of) its eligible
/// categories, most preferred first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentPreferences {
    lists: Vec<Vec<CategoryId>>,
}

impl AgentPreferences {
    pub fn new(r: &ReserveSystem, lists: Vec<Vec<CategoryId>>) -> Result<Self, RuleError> {
        if lists.len() != r.num_agents() {
            return Err(RuleError::PrefsShape { found: lists.len(), expected: r.num_agents() });
        }
        for (a, list) in lists.iter().enumerate() {
            let mut seen = BTreeSet::new();
            for &c in list {
                if c.0 >= r.num_categories() || !r.is_eligible(AgentId(a), c) {
                    return Err(RuleError::PrefsNotEligible { agent: a, category: c.0 });
                }
                if !seen.insert(c) {
                    return Err(RuleError::PrefsDuplicate { agent: a, category: c.0 });
                }
            }
        }
        Ok(Self { lists })
    }

    /// Every eligible category in ascending index order.
    pub fn ascending(r: &ReserveSystem) -> Self {
        Self { lists: r.agents().map(|a| r.eligible_categories(a).to_vec()).collect() }
    }

    pub fn list(&self, a: AgentId) -> &[CategoryId] {
        &self.lists[a.0]
    }
}

/// Deferred acceptance: unmatched agents propose down their lists; each
/// category keeps its best `q_c` among held and new applicants.
pub fn da_allocate(r: &ReserveSystem, prefs: Option<&AgentPreferences>) -> Result<Matching, RuleError> {
    let default;
    let prefs = match prefs {
        Some(p) => {
            AgentPreferences::new(r, p.lists.clone())?;
            p
        }
        None => {
            default = AgentPreferences::ascending(r);
            &default
        }
    };
    let mut next = vec![0usize; r.num_agents()];
    let mut held: Vec<Vec<AgentId>> = vec![Vec::new(); r.num_categories()];
    let mut matched = vec![false; r.num_agents()];
    loop {
        let mut applicants: Vec<Vec<AgentId>> = vec![Vec::new(); r.num_categories()];
        let mut any = false;
        for a in r.agents() {
            if !matched[a.0] && next[a.0] < prefs.list(a).len() {
                let c = prefs.list(a)[next[a.0]];
                next[a.0] += 1;
                applicants[c.0].push(a);
                any = true;
            }
        }
        if !any {
            break;
        }
        for c in r.categories() {
            if applicants[c.0].is_empty() {
                continue;
            }
            let mut pool = std::mem::take(&mut held[c.0]);
            pool.append(&mut applicants[c.0]);
            let rank = r.ranking(c);
            pool.sort_by_key(|&a| rank.rank(a));
            let keep = r.capacity(c).min(pool.len());
            for &a in &pool[keep..] {
                matched[a.0] = false;
            }
            pool.truncate(keep);
            for &a in &pool {
                matched[a.0] = true;
            }
            held[c.0] = pool;
        }
    }
    let mut m = Matching::empty(r.num_agents());
    for (c, agents) in held.iter().enumerate() {
        for &a in agents {
            m.set(a, Some(CategoryId(c)));
        }
    }
    Ok(m)
}

/// Reverse rejecting: walk the baseline from the bottom and drop each agent
/// whose removal, together with the edges of agents it outranks, still
/// leaves a maximum matching of the original size.
pub fn rev_allocate(r: &ReserveSystem, pi: &BaselineOrder) -> Matching {
    let mut g = build_graph(r);
    let m = maximum_matching_size(&g);
    for &i in pi.order().iter().rev() {
        let mut gi = g.clone();
        gi.retain_edges(|j, c| j != i && !(r.is_eligible(i, c) && r.outranks(c, i, j)));
        if maximum_matching_size(&gi) == m {
            g = gi;
        }
    }
    maximum_matching(&g, None).expect("no seed").to_matching()
}

/// Order in which an unmatched agent tries categories.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum CategoryOrder {
    #[default]
    Ascending,
    /// One order shared by every agent; ineligible entries are skipped.
    Global(Vec<CategoryId>),
    PerAgent(Vec<Vec<CategoryId>>),
}

impl CategoryOrder {
    fn list(&self, r: &ReserveSystem, a: AgentId) -> Vec<CategoryId> {
        match self {
            CategoryOrder::Ascending => r.eligible_categories(a).to_vec(),
            CategoryOrder::Global(order) => order.iter().copied().filter(|&c| r.is_eligible(a, c)).collect(),
            CategoryOrder::PerAgent(lists) => {
                lists[a.0].iter().copied().filter(|&c| r.is_eligible(a, c)).collect()
            }
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct MmaOptions {
    /// Must be a maximum matching; computed when absent.
    pub initial: Option<Matching>,
    /// Scan order over unmatched agents; ascending index when absent.
    pub agent_order: Option<Vec<AgentId>>,
    pub category_order: CategoryOrder,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProposalOutcome {
    /// The proposer took the seat of this agent.
    Displaced(AgentId),
    /// The lowest occupant outranks the proposer.
    Rejected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Proposal {
    pub agent: AgentId,
    pub category: CategoryId,
    pub outcome: ProposalOutcome,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MmaTrace {
    pub initial: Matching,
    pub log: Vec<Proposal>,
}

impl MmaTrace {
    /// Rebuilds the output by applying every displacement to the initial
    /// matching.
    pub fn replay(&self) -> Matching {
        let mut m = self.initial.clone();
        for p in &self.log {
            if let ProposalOutcome::Displaced(out) = p.outcome {
                m.set(out, None);
                m.set(p.agent, Some(p.category));
            }
        }
        m
    }
}

/// Maximum matching adjustment: starting from a maximum matching, an
/// unmatched agent proposes to its categories in order and replaces the
/// lowest-priority occupant it outranks. The scan over unmatched agents
/// restarts after each displacement.
pub fn mma_allocate(r: &ReserveSystem, options: &MmaOptions) -> Result<(Matching, MmaTrace), RuleError> {
    let g = build_graph(r);
    let initial = match &options.initial {
        Some(m) => {
            let seed = GraphMatching::from_matching(m, r.num_categories());
            seed.validate(&g)?;
            let maximum = maximum_matching(&g, Some(&seed))?.size();
            if seed.size() != maximum {
                return Err(RuleError::NotMaximumSeed { found: seed.size(), maximum });
            }
            m.clone()
        }
        None => maximum_matching(&g, None)?.to_matching(),
    };
    let agent_order = match &options.agent_order {
        Some(order) => BaselineOrder::new(order.clone(), r.num_agents())
            .map_err(|_| RuleError::InvalidAgentOrder(r.num_agents()))?
            .order()
            .to_vec(),
        None => r.agents().collect(),
    };
    let lists: Vec<Vec<CategoryId>> = r.agents().map(|a| options.category_order.list(r, a)).collect();

    let mut m = initial.clone();
    let mut seats: Vec<BTreeSet<(usize, AgentId)>> = vec![BTreeSet::new(); r.num_categories()];
    for (a, c) in m.pairs() {
        seats[c.0].insert((r.ranking(c).rank(a), a));
    }
    let mut next = vec![0usize; r.num_agents()];
    let mut log = Vec::new();
    // Unmatched agents keyed by scan position. Always serving the smallest
    // position reproduces a scan that restarts after each displacement.
    let mut position = vec![0usize; r.num_agents()];
    for (k, &a) in agent_order.iter().enumerate() {
        position[a.0] = k;
    }
    let mut pending: BTreeSet<usize> =
        agent_order.iter().enumerate().filter(|&(_, &a)| !m.is_matched(a)).map(|(k, _)| k).collect();
    while let Some(k) = pending.pop_first() {
        let a = agent_order[k];
        while next[a.0] < lists[a.0].len() {
            let c = lists[a.0][next[a.0]];
            next[a.0] += 1;
            let rank = r.ranking(c).rank(a);
            match seats[c.0].last().copied() {
                Some((low_rank, low)) if rank < low_rank => {
                    seats[c.0].remove(&(low_rank, low));
                    seats[c.0].insert((rank, a));
                    m.set(low, None);
                    m.set(a, Some(c));
                    log.push(Proposal { agent: a, category: c, outcome: ProposalOutcome::Displaced(low) });
                    pending.insert(position[low.0]);
                    break;
                }
                _ => log.push(Proposal { agent: a, category: c, outcome: ProposalOutcome::Rejected }),
            }
        }
    }
    Ok((m, MmaTrace { initial, log }))
}

/// A maximum matching grown from a random greedy seed, so different seeds
/// reach different maximum matchings.
pub fn random_maximum_matching<R: Rng>(r: &ReserveSystem, rng: &mut R) -> Matching {
    let g = build_graph(r);
    let mut seed = GraphMatching::empty(r.num_agents(), r.num_categories());
    let mut agents: Vec<AgentId> = r.agents().collect();
    agents.shuffle(rng);
    for a in agents {
        let open: Vec<CategoryId> =
            r.eligible_categories(a).iter().copied().filter(|&c| seed.load(c) < r.capacity(c)).collect();
        if let Some(&c) = open.choose(rng) {
            seed.assign(a, Some(c));
        }
    }
    maximum_matching(&g, Some(&seed)).expect("greedy seed is valid").to_matching()
}

/// MMA from a seeded random initial maximum matching with a seeded random
/// agent scan order.
pub fn mma_allocate_seeded(r: &ReserveSystem, seed: u64) -> Matching {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let initial = random_maximum_matching(r, &mut rng);
    let mut order: Vec<AgentId> = r.agents().collect();
    order.shuffle(&mut rng);
    let options = MmaOptions { initial: Some(initial), agent_order: Some(order), ..Default::default() };
    mma_allocate(r, &options).expect("random seed is maximum").0
}
