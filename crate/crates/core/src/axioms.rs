//! Per-matching axiom verdicts. Each failing verdict carries a witness that
//! can be replayed against the definition.

use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::bipartite::maximum_matching_size;
use crate::harness::{MatchingSpace, SpaceTooLarge};
use crate::model::{AgentId, CategoryId, Matching, ReserveSystem, SequentialReserveSystem};
use crate::netflow::{build_reserve_network, feasible_flow, flow_to_matching, CategoryClass};
use crate::rules_sequential::dual_maximum_matching;
use crate::Capacity;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axiom {
    Eligibility,
    RespectPriorities,
    NonWasteful,
    MaxCardinality,
    MaxBeneficiary,
    OrderPreservationSwap,
    RespectPrecedence,
    OrderPreservationHybrid,
}

impl Axiom {
    pub const ALL: [Axiom; 8] = [
        Axiom::Eligibility,
        Axiom::RespectPriorities,
        Axiom::NonWasteful,
        Axiom::MaxCardinality,
        Axiom::MaxBeneficiary,
        Axiom::OrderPreservationSwap,
        Axiom::RespectPrecedence,
        Axiom::OrderPreservationHybrid,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Axiom::Eligibility => "eligibility",
            Axiom::RespectPriorities => "respect-priorities",
            Axiom::NonWasteful => "non-wasteful",
            Axiom::MaxCardinality => "max-cardinality",
            Axiom::MaxBeneficiary => "max-beneficiary",
            Axiom::OrderPreservationSwap => "order-preservation-swap",
            Axiom::RespectPrecedence => "respect-precedence",
            Axiom::OrderPreservationHybrid => "order-preservation-hybrid",
        }
    }
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axiom {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Axiom::ALL.into_iter().find(|a| a.name() == s).ok_or_else(|| format!("unknown axiom `{s}`"))
    }
}

fn serialize_matching<S: Serializer>(m: &Matching, s: S) -> Result<S::Ok, S::Error> {
    m.to_file().serialize(s)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    Ineligible {
        agent: AgentId,
        category: CategoryId,
    },
    /// `unmatched` outranks `matched` at `category`.
    PriorityInversion {
        unmatched: AgentId,
        matched: AgentId,
        category: CategoryId,
    },
    Waste {
        agent: AgentId,
        category: CategoryId,
        load: usize,
        capacity: usize,
    },
    Count {
        found: usize,
        expected: usize,
    },
    /// `i` outranks `j` at `j`'s earlier category and the two could swap.
    Swap {
        i: AgentId,
        j: AgentId,
    },
    Precedence {
        i: AgentId,
        j: AgentId,
        #[serde(serialize_with = "serialize_matching")]
        alternative: Matching,
    },
    Hybrid {
        i: AgentId,
        j: AgentId,
        clause: u8,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AxiomVerdict {
    pub axiom: Axiom,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

impl AxiomVerdict {
    fn from(axiom: Axiom, witness: Option<Witness>) -> Self {
        Self { axiom, pass: witness.is_none(), witness }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AxiomError {
    #[error(transparent)]
    OracleBoundExceeded(#[from] SpaceTooLarge),
    #[error("instance is not a hybrid layout: {0}")]
    NotHybridInstance(String),
}

pub fn check_eligibility(r: &ReserveSystem, mu: &Matching) -> AxiomVerdict {
    let w = mu
        .pairs()
        .find(|&(a, c)| !r.is_eligible(a, c))
        .map(|(agent, category)| Witness::Ineligible { agent, category });
    AxiomVerdict::from(Axiom::Eligibility, w)
}

pub fn check_respect_priorities(r: &ReserveSystem, mu: &Matching) -> AxiomVerdict {
    for (matched, c) in mu.pairs() {
        let rank = r.ranking(c);
        let above = &rank.order()[..rank.rank(matched)];
        if let Some(&unmatched) = above.iter().find(|&&a| !mu.is_matched(a)) {
            return AxiomVerdict::from(
                Axiom::RespectPriorities,
                Some(Witness::PriorityInversion { unmatched, matched, category: c }),
            );
        }
    }
    AxiomVerdict::from(Axiom::RespectPriorities, None)
}

pub fn check_nonwasteful(r: &ReserveSystem, mu: &Matching) -> AxiomVerdict {
    let loads = mu.loads(r.num_categories());
    for a in r.agents().filter(|&a| !mu.is_matched(a)) {
        if let Some(&c) = r.eligible_categories(a).iter().find(|c| loads[c.0] < r.capacity(**c)) {
            return AxiomVerdict::from(
                Axiom::NonWasteful,
                Some(Witness::Waste { agent: a, category: c, load: loads[c.0], capacity: r.capacity(c) }),
            );
        }
    }
    AxiomVerdict::from(Axiom::NonWasteful, None)
}

pub fn check_max_cardinality(mu: &Matching, max_size: usize) -> AxiomVerdict {
    let found = mu.size();
    let w = (found != max_size).then_some(Witness::Count { found, expected: max_size });
    AxiomVerdict::from(Axiom::MaxCardinality, w)
}

pub fn check_max_beneficiary(s: &SequentialReserveSystem, mu: &Matching, b: usize) -> AxiomVerdict {
    let found = mu.beneficiary_count(s);
    let w = (found != b).then_some(Witness::Count { found, expected: b });
    AxiomVerdict::from(Axiom::MaxBeneficiary, w)
}

/// The four fundamental axioms against a known maximum size.
pub fn check_fundamental(r: &ReserveSystem, mu: &Matching, max_size: usize) -> Vec<AxiomVerdict> {
    vec![
        check_eligibility(r, mu),
        check_respect_priorities(r, mu),
        check_nonwasteful(r, mu),
        check_max_cardinality(mu, max_size),
    ]
}

pub fn satisfies_fundamental(r: &ReserveSystem, mu: &Matching, max_size: usize) -> bool {
    check_fundamental(r, mu, max_size).iter().all(|v| v.pass)
}

/// `mu(j)` is a category processed strictly before `mu(i)`, with an
/// unmatched `i` counting as last.
fn earlier(s: &SequentialReserveSystem, mu: &Matching, i: AgentId, j: AgentId) -> Option<CategoryId> {
    let cj = mu.get(j)?;
    s.precedence().precedes_or_unmatched(cj, mu.get(i)).then_some(cj)
}

pub fn check_order_preservation_swap(s: &SequentialReserveSystem, mu: &Matching) -> AxiomVerdict {
    for j in s.agents() {
        for i in s.agents() {
            if i == j {
                continue;
            }
            let Some(cj) = earlier(s, mu, i, j) else { continue };
            let Some(ci) = mu.get(i) else { continue };
            if s.outranks(cj, i, j) && s.is_eligible(j, ci) && s.is_eligible(i, cj) {
                return AxiomVerdict::from(Axiom::OrderPreservationSwap, Some(Witness::Swap { i, j }));
            }
        }
    }
    AxiomVerdict::from(Axiom::OrderPreservationSwap, None)
}

/// How the existential part of respect for precedence is decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrecedenceSearch {
    /// Enumerate every eligibility-compliant matching, up to `bound`.
    Oracle { bound: u64 },
    /// Encode the kept assignments as lower bounds and test feasibility.
    Flow,
}

/// Pairs `(i, j)` that meet the first condition: `mu(j)` is processed
/// before `mu(i)` and `i` outranks the eligible `j` there.
fn precedence_candidates(s: &SequentialReserveSystem, mu: &Matching) -> Vec<(AgentId, AgentId, CategoryId)> {
    let mut out = Vec::new();
    for j in s.agents() {
        for i in s.agents() {
            if i == j {
                continue;
            }
            if let Some(cj) = earlier(s, mu, i, j) {
                if s.is_eligible(j, cj) && s.outranks(cj, i, j) {
                    out.push((i, j, cj));
                }
            }
        }
    }
    out
}

/// Agents whose assignment the alternative must keep: everyone in a
/// category processed before `cj`, plus occupants of `cj` ranked above `i`.
fn kept_agents(
    s: &SequentialReserveSystem,
    mu: &Matching,
    i: AgentId,
    cj: CategoryId,
) -> Vec<(AgentId, CategoryId)> {
    mu.pairs().filter(|&(k, c)| s.precedence().precedes(c, cj) || (c == cj && s.outranks(cj, k, i))).collect()
}

/// Oracle form of the precedence check against a precomputed list of
/// matchings attaining both maxima.
pub fn check_respect_precedence_among(
    s: &SequentialReserveSystem,
    mu: &Matching,
    dual_maxima: &[Matching],
) -> AxiomVerdict {
    for (i, j, cj) in precedence_candidates(s, mu) {
        let kept = kept_agents(s, mu, i, cj);
        let alt = dual_maxima
            .iter()
            .find(|alt| alt.get(i) == Some(cj) && kept.iter().all(|&(k, c)| alt.get(k) == Some(c)));
        if let Some(alt) = alt {
            let w = Witness::Precedence { i, j, alternative: alt.clone() };
            return AxiomVerdict::from(Axiom::RespectPrecedence, Some(w));
        }
    }
    AxiomVerdict::from(Axiom::RespectPrecedence, None)
}

pub fn check_respect_precedence(
    s: &SequentialReserveSystem,
    mu: &Matching,
    search: PrecedenceSearch,
) -> Result<AxiomVerdict, AxiomError> {
    let candidates = precedence_candidates(s, mu);
    let (_, b, m) = dual_maximum_matching(s);
    match search {
        PrecedenceSearch::Oracle { bound } => {
            let space = MatchingSpace::new(s.base(), bound)?;
            let maxima: Vec<Matching> =
                space.iter().filter(|x| x.size() == m && x.beneficiary_count(s) == b).cloned().collect();
            return Ok(check_respect_precedence_among(s, mu, &maxima));
        }
        PrecedenceSearch::Flow => {
            let mut base = build_reserve_network(s);
            base.network.set_lower(base.layer.class_edge(CategoryClass::Preferential), b as Capacity);
            base.network.set_lower(base.layer.class_edge(CategoryClass::Open), (m - b) as Capacity);
            for (i, j, cj) in candidates {
                let mut net = base.network.clone();
                let kept = kept_agents(s, mu, i, cj);
                let pins = kept.iter().copied().chain(std::iter::once((i, cj)));
                let mut ok = true;
                for (k, c) in pins {
                    match base.edge(k, c) {
                        Some(e) => net.set_lower(e, 1),
                        None => ok = false,
                    }
                }
                if !ok {
                    continue;
                }
                if let Some(f) = feasible_flow(&net) {
                    let alternative = flow_to_matching(&base, &f);
                    let w = Witness::Precedence { i, j, alternative };
                    return Ok(AxiomVerdict::from(Axiom::RespectPrecedence, Some(w)));
                }
            }
        }
    }
    Ok(AxiomVerdict::from(Axiom::RespectPrecedence, None))
}

/// A sequential system shaped as open / preferential / open: one open
/// category processed first, every other category but one preferential and
/// processed together, and a final open category. Both open categories
/// admit every agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HybridLayout {
    pub first_open: CategoryId,
    pub second_open: CategoryId,
}

impl HybridLayout {
    pub fn validate(&self, s: &SequentialReserveSystem) -> Result<(), AxiomError> {
        let bad = |msg: &str| Err(AxiomError::NotHybridInstance(msg.to_string()));
        let (f, l) = (self.first_open, self.second_open);
        if f == l || f.0 >= s.num_categories() || l.0 >= s.num_categories() {
            return bad("open categories must be two distinct valid categories");
        }
        for c in s.categories() {
            let open = c == f || c == l;
            if open == s.is_preferential(c) {
                return bad("every category other than the two open ones must be preferential");
            }
        }
        for open in [f, l] {
            if s.ranking(open).eligible_cutoff() != s.num_agents() {
                return bad("open categories must admit every agent");
            }
        }
        let p = s.precedence();
        let mid: Vec<u32> = s.preferential().iter().map(|&c| p.tier(c)).collect();
        if mid.windows(2).any(|w| w[0] != w[1]) {
            return bad("preferential categories must share one tier");
        }
        let ordered = match mid.first() {
            Some(&t) => p.tier(f) < t && t < p.tier(l),
            None => p.tier(f) < p.tier(l),
        };
        if !ordered {
            return bad("tiers must run first open, preferential, second open");
        }
        Ok(())
    }
}

pub fn check_order_preservation_hybrid(
    s: &SequentialReserveSystem,
    layout: &HybridLayout,
    mu: &Matching,
) -> Result<AxiomVerdict, AxiomError> {
    layout.validate(s)?;
    let is_first = |c: Option<CategoryId>| c == Some(layout.first_open);
    let is_second = |c: Option<CategoryId>| c == Some(layout.second_open);
    for j in s.agents() {
        let Some(cj) = mu.get(j) else { continue };
        for i in s.agents() {
            if i == j || !s.outranks(cj, i, j) {
                continue;
            }
            let ci = mu.get(i);
            // Clause 1: i sits in a later class and j could take i's seat.
            if let Some(ci) = ci.filter(|&c| c != layout.first_open) {
                if s.is_eligible(j, ci) && is_first(Some(cj)) {
                    return Ok(AxiomVerdict::from(
                        Axiom::OrderPreservationHybrid,
                        Some(Witness::Hybrid { i, j, clause: 1 }),
                    ));
                }
            }
            // Clause 2: j sits in an earlier class that i is eligible for.
            if !is_second(Some(cj)) && s.is_eligible(i, cj) && is_second(ci) {
                return Ok(AxiomVerdict::from(
                    Axiom::OrderPreservationHybrid,
                    Some(Witness::Hybrid { i, j, clause: 2 }),
                ));
            }
        }
    }
    Ok(AxiomVerdict::from(Axiom::OrderPreservationHybrid, None))
}

/// Every applicable verdict for `mu`. The hybrid check runs only when a
/// layout is supplied.
pub fn check_all(
    s: &SequentialReserveSystem,
    mu: &Matching,
    search: PrecedenceSearch,
    hybrid: Option<&HybridLayout>,
) -> Result<Vec<AxiomVerdict>, AxiomError> {
    let (_, b, m) = dual_maximum_matching(s);
    debug_assert_eq!(m, maximum_matching_size(&crate::bipartite::build_graph(s.base())));
    let mut out = check_fundamental(s.base(), mu, m);
    out.push(check_max_beneficiary(s, mu, b));
    out.push(check_order_preservation_swap(s, mu));
    out.push(check_respect_precedence(s, mu, search)?);
    if let Some(layout) = hybrid {
        out.push(check_order_preservation_hybrid(s, layout, mu)?);
    }
    Ok(out)
}

/// A single verdict by name.
pub fn check_one(
    s: &SequentialReserveSystem,
    mu: &Matching,
    axiom: Axiom,
    search: PrecedenceSearch,
    hybrid: Option<&HybridLayout>,
) -> Result<AxiomVerdict, AxiomError> {
    let (_, b, m) = dual_maximum_matching(s);
    Ok(match axiom {
        Axiom::Eligibility => check_eligibility(s.base(), mu),
        Axiom::RespectPriorities => check_respect_priorities(s.base(), mu),
        Axiom::NonWasteful => check_nonwasteful(s.base(), mu),
        Axiom::MaxCardinality => check_max_cardinality(mu, m),
        Axiom::MaxBeneficiary => check_max_beneficiary(s, mu, b),
        Axiom::OrderPreservationSwap => check_order_preservation_swap(s, mu),
        Axiom::RespectPrecedence => check_respect_precedence(s, mu, search)?,
        Axiom::OrderPreservationHybrid => {
            let layout = hybrid
                .ok_or_else(|| AxiomError::NotHybridInstance("no hybrid layout supplied".to_string()))?;
            check_order_preservation_hybrid(s, layout, mu)?
        }
    })
}
