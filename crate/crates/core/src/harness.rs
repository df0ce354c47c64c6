//! Brute-force oracle over all eligibility-compliant matchings, and
//! perturbation tests for rule-level properties (hiding, improvements,
//! consistency, baseline independence).

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::axioms::satisfies_fundamental;
use crate::model::{
    AgentId, BaselineOrder, CategoryId, Instance, InstanceFile, Matching, SequentialReserveSystem,
};
use crate::ReserveSystem;

pub const DEFAULT_SPACE_BOUND: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("matching space estimate {estimate} exceeds bound {bound}")]
pub struct SpaceTooLarge {
    pub estimate: u128,
    pub bound: u64,
}

/// Every capacity- and eligibility-respecting matching of an instance,
/// enumerated once and held in memory.
#[derive(Debug, Clone)]
pub struct MatchingSpace {
    matchings: Vec<Matching>,
}

impl MatchingSpace {
    /// Upper bound on the space size: product over agents of one plus the
    /// number of eligible categories.
    pub fn estimate(r: &ReserveSystem) -> u128 {
        r.agents()
            .map(|a| 1 + r.eligible_categories(a).len() as u128)
            .fold(1u128, |acc, x| acc.saturating_mul(x))
    }

    pub fn new(r: &ReserveSystem, bound: u64) -> Result<Self, SpaceTooLarge> {
        let estimate = Self::estimate(r);
        if estimate > bound as u128 {
            return Err(SpaceTooLarge { estimate, bound });
        }
        let mut matchings = Vec::new();
        let mut current = Matching::empty(r.num_agents());
        let mut load = vec![0usize; r.num_categories()];
        enumerate(r, 0, &mut current, &mut load, &mut matchings);
        Ok(Self { matchings })
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Matching> {
        self.matchings.iter()
    }

    pub fn len(&self) -> usize {
        self.matchings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matchings.is_empty()
    }
}

fn enumerate(
    r: &ReserveSystem,
    a: usize,
    current: &mut Matching,
    load: &mut [usize],
    out: &mut Vec<Matching>,
) {
    if a == r.num_agents() {
        out.push(current.clone());
        return;
    }
    enumerate(r, a + 1, current, load, out);
    for &c in r.eligible_categories(AgentId(a)) {
        if load[c.0] < r.capacity(c) {
            load[c.0] += 1;
            current.set(AgentId(a), Some(c));
            enumerate(r, a + 1, current, load, out);
            current.set(AgentId(a), None);
            load[c.0] -= 1;
        }
    }
}

/// Exact optima of an instance by enumeration.
#[derive(Debug, Clone)]
pub struct OracleMaxima {
    pub m: usize,
    pub b: usize,
    pub maximum_cardinality: Vec<Matching>,
    pub maximum_beneficiary: Vec<Matching>,
    /// Matchings attaining both `m` and `b`.
    pub dual: Vec<Matching>,
    pub four_axiom: Vec<Matching>,
}

pub fn oracle_maxima(s: &SequentialReserveSystem, bound: u64) -> Result<OracleMaxima, SpaceTooLarge> {
    let space = MatchingSpace::new(s.base(), bound)?;
    let m = space.iter().map(Matching::size).max().unwrap_or(0);
    let b = space.iter().map(|x| x.beneficiary_count(s)).max().unwrap_or(0);
    let pick = |f: &dyn Fn(&Matching) -> bool| space.iter().filter(|x| f(x)).cloned().collect();
    Ok(OracleMaxima {
        m,
        b,
        maximum_cardinality: pick(&|x| x.size() == m),
        maximum_beneficiary: pick(&|x| x.beneficiary_count(s) == b),
        dual: pick(&|x| x.size() == m && x.beneficiary_count(s) == b),
        four_axiom: pick(&|x| satisfies_fundamental(s.base(), x, m)),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Property {
    NoIncentiveToHide,
    RespectImprovements,
    ConsistentMatching,
    ConsistentMatchedAgents,
    IndependenceOfBaseline,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub original: InstanceFile,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub perturbed: Option<InstanceFile>,
    pub agent: AgentId,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PerturbationReport {
    pub property: Property,
    pub trials: usize,
    pub counterexamples: Vec<Counterexample>,
}

impl PerturbationReport {
    fn new(property: Property) -> Self {
        Self { property, trials: 0, counterexamples: Vec::new() }
    }

    pub fn holds(&self) -> bool {
        self.counterexamples.is_empty()
    }

    pub fn merge(&mut self, other: PerturbationReport) {
        debug_assert_eq!(self.property, other.property);
        self.trials += other.trials;
        self.counterexamples.extend(other.counterexamples);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trials {
    Exhaustive,
    Sampled { count: usize, seed: u64 },
}

fn file(s: &SequentialReserveSystem) -> InstanceFile {
    Instance::Sequential(s.clone()).to_file()
}

/// Hiding a set of eligible categories never turns an unmatched agent into
/// a matched one. Exhaustive mode tries every nonempty subset of every
/// unmatched agent's categories.
pub fn test_no_incentive_to_hide(
    rule: &dyn Fn(&SequentialReserveSystem) -> Matching,
    s: &SequentialReserveSystem,
    trials: Trials,
) -> PerturbationReport {
    let mut report = PerturbationReport::new(Property::NoIncentiveToHide);
    let original = rule(s);
    let unmatched: Vec<AgentId> = s.agents().filter(|&a| !original.is_matched(a)).collect();
    let attempt = |a: AgentId, hidden: &[CategoryId], report: &mut PerturbationReport| {
        let mut perturbed = s.clone();
        for &c in hidden {
            perturbed.base_mut().hide(a, c);
        }
        report.trials += 1;
        if rule(&perturbed).is_matched(a) {
            report.counterexamples.push(Counterexample {
                original: file(s),
                perturbed: Some(file(&perturbed)),
                agent: a,
                detail: format!("hiding {:?} gets the agent matched", ids(hidden)),
            });
        }
    };
    match trials {
        Trials::Exhaustive => {
            for &a in &unmatched {
                let cats = s.eligible_categories(a).to_vec();
                for mask in 1u32..(1 << cats.len()) {
                    let hidden: Vec<CategoryId> =
                        (0..cats.len()).filter(|&k| mask & (1 << k) != 0).map(|k| cats[k]).collect();
                    attempt(a, &hidden, &mut report);
                }
            }
        }
        Trials::Sampled { count, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let candidates: Vec<AgentId> =
                unmatched.iter().copied().filter(|&a| !s.eligible_categories(a).is_empty()).collect();
            for _ in 0..count {
                let Some(&a) = candidates.choose(&mut rng) else { break };
                let cats = s.eligible_categories(a);
                let mut hidden: Vec<CategoryId> =
                    cats.iter().copied().filter(|_| rng.gen_bool(0.5)).collect();
                if hidden.is_empty() {
                    hidden.push(*cats.choose(&mut rng).expect("nonempty"));
                }
                attempt(a, &hidden, &mut report);
            }
        }
    }
    report
}

fn ids(cats: &[CategoryId]) -> Vec<usize> {
    cats.iter().map(|c| c.0).collect()
}

/// Promoting a matched agent by one position in one category never leaves
/// it unmatched. A promotion swaps the agent with the one directly above,
/// or lifts it across the eligibility cutoff when it sits just below.
pub fn test_respect_improvements(
    rule: &dyn Fn(&SequentialReserveSystem) -> Matching,
    s: &SequentialReserveSystem,
    trials: Trials,
) -> PerturbationReport {
    let mut report = PerturbationReport::new(Property::RespectImprovements);
    let original = rule(s);
    let matched: Vec<AgentId> = original.matched_agents();
    let attempt = |a: AgentId, c: CategoryId, report: &mut PerturbationReport| {
        let mut perturbed = s.clone();
        if !perturbed.base_mut().promote(c, a) {
            return;
        }
        report.trials += 1;
        if !rule(&perturbed).is_matched(a) {
            report.counterexamples.push(Counterexample {
                original: file(s),
                perturbed: Some(file(&perturbed)),
                agent: a,
                detail: format!("promotion at category {} leaves the agent unmatched", c.0),
            });
        }
    };
    match trials {
        Trials::Exhaustive => {
            for &a in &matched {
                for c in s.categories() {
                    attempt(a, c, &mut report);
                }
            }
        }
        Trials::Sampled { count, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            if s.num_categories() > 0 {
                for _ in 0..count {
                    let Some(&a) = matched.choose(&mut rng) else { break };
                    let c = CategoryId(rng.gen_range(0..s.num_categories()));
                    attempt(a, c, &mut report);
                }
            }
        }
    }
    report
}

/// Runs the rule twice on the same input. Returns the consistent-matching
/// and consistent-matched-agents reports, in that order.
pub fn test_consistency(
    rule: &mut dyn FnMut(&SequentialReserveSystem) -> Matching,
    s: &SequentialReserveSystem,
) -> [PerturbationReport; 2] {
    let first = rule(s);
    let second = rule(s);
    let mut outcome = PerturbationReport::new(Property::ConsistentMatching);
    let mut agents = PerturbationReport::new(Property::ConsistentMatchedAgents);
    outcome.trials = 1;
    agents.trials = 1;
    if let Some(a) = s.agents().find(|&a| first.get(a) != second.get(a)) {
        outcome.counterexamples.push(Counterexample {
            original: file(s),
            perturbed: None,
            agent: a,
            detail: format!("assigned {:?} then {:?}", first.get(a).map(|c| c.0), second.get(a).map(|c| c.0)),
        });
    }
    if let Some(a) = s.agents().find(|&a| first.is_matched(a) != second.is_matched(a)) {
        agents.counterexamples.push(Counterexample {
            original: file(s),
            perturbed: None,
            agent: a,
            detail: "matched in one run only".to_string(),
        });
    }
    [outcome, agents]
}

/// Compares matched-agent sets across baselines: all permutations when
/// exhaustive, otherwise random pairs.
pub fn test_independence_of_baseline(
    rule: &dyn Fn(&SequentialReserveSystem, &BaselineOrder) -> Matching,
    s: &SequentialReserveSystem,
    trials: Trials,
) -> PerturbationReport {
    let mut report = PerturbationReport::new(Property::IndependenceOfBaseline);
    let n = s.num_agents();
    let reference = BaselineOrder::identity(n);
    let base_out = rule(s, &reference);
    let compare = |pi: Vec<AgentId>, report: &mut PerturbationReport| {
        let pi = BaselineOrder::new(pi, n).expect("permutation");
        let out = rule(s, &pi);
        report.trials += 1;
        if let Some(a) = s.agents().find(|&a| base_out.is_matched(a) != out.is_matched(a)) {
            report.counterexamples.push(Counterexample {
                original: file(s),
                perturbed: None,
                agent: a,
                detail: format!(
                    "baseline {:?} vs {:?} changes whether the agent is matched",
                    reference.order().iter().map(|a| a.0).collect::<Vec<_>>(),
                    pi.order().iter().map(|a| a.0).collect::<Vec<_>>()
                ),
            });
        }
    };
    match trials {
        Trials::Exhaustive => {
            let mut perm: Vec<AgentId> = s.agents().collect();
            for_each_permutation(&mut perm, 0, &mut |p| compare(p.to_vec(), &mut report));
        }
        Trials::Sampled { count, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..count {
                let mut p: Vec<AgentId> = s.agents().collect();
                p.shuffle(&mut rng);
                compare(p, &mut report);
            }
        }
    }
    report
}

/// Heap-free recursive permutation walk, in lexicographic-swap order.
pub fn for_each_permutation<T: Clone>(items: &mut [T], k: usize, f: &mut dyn FnMut(&[T])) {
    if k == items.len() {
        f(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        for_each_permutation(items, k + 1, f);
        items.swap(k, i);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PrecedenceOrder;
    use crate::rules_basic::{mma_allocate_seeded, rev_allocate};
    use crate::rules_sequential::{scu_allocate, ScuImpl};

    fn example1() -> SequentialReserveSystem {
        SequentialReserveSystem::from_basic(
            ReserveSystem::from_parts(3, &[(1, &[1, 0, 2], 2), (1, &[1, 2, 0], 2)]).unwrap(),
        )
    }

    fn example4() -> SequentialReserveSystem {
        let base = ReserveSystem::from_parts(
            6,
            &[(1, &[1, 0, 2, 3, 4, 5], 3), (1, &[1, 3, 5, 2, 4, 0], 6), (1, &[4, 3, 5, 0, 1, 2], 3)],
        )
        .unwrap();
        SequentialReserveSystem::new(
            base,
            &[CategoryId(0), CategoryId(2)],
            PrecedenceOrder::new(vec![0, 1, 2]),
        )
        .unwrap()
    }

    #[test]
    fn example1_oracle() {
        let o = oracle_maxima(&example1(), DEFAULT_SPACE_BOUND).unwrap();
        assert_eq!(o.m, 2);
        let mut maxima = o.maximum_cardinality.clone();
        maxima.sort();
        let mut expected = vec![
            Matching::from_pairs(3, &[(0, 0), (2, 1)]),
            Matching::from_pairs(3, &[(1, 0), (2, 1)]),
            Matching::from_pairs(3, &[(0, 0), (1, 1)]),
        ];
        expected.sort();
        assert_eq!(maxima, expected);
        let mut four = o.four_axiom.clone();
        four.sort();
        let mut expected =
            vec![Matching::from_pairs(3, &[(1, 0), (2, 1)]), Matching::from_pairs(3, &[(0, 0), (1, 1)])];
        expected.sort();
        assert_eq!(four, expected);
    }

    #[test]
    fn example4_oracle() {
        let o = oracle_maxima(&example4(), DEFAULT_SPACE_BOUND).unwrap();
        assert_eq!((o.m, o.b), (3, 2));
    }

    #[test]
    fn empty_instance_oracle() {
        let s = SequentialReserveSystem::from_basic(ReserveSystem::from_parts(0, &[]).unwrap());
        let o = oracle_maxima(&s, DEFAULT_SPACE_BOUND).unwrap();
        assert_eq!((o.m, o.b), (0, 0));
        assert_eq!(o.four_axiom.len(), 1);
    }

    #[test]
    fn space_bound_is_enforced() {
        let err = MatchingSpace::new(example4().base(), 10).unwrap_err();
        assert_eq!(err.bound, 10);
        assert_eq!(err.estimate, 3 * 3 * 3 * 3 * 3 * 3);
    }

    #[test]
    fn scu_example4_has_no_hiding_incentive() {
        let rule = |s: &SequentialReserveSystem| scu_allocate(s, ScuImpl::CompactFlow);
        let report = test_no_incentive_to_hide(&rule, &example4(), Trials::Exhaustive);
        assert!(report.trials > 0);
        assert!(report.holds());
    }

    /// Matches only agents with a single eligible category, so narrowing
    /// eligibility can pay off.
    #[test]
    fn strawman_rule_rewards_hiding() {
        let rule = |s: &SequentialReserveSystem| {
            let mut m = Matching::empty(s.num_agents());
            for a in s.agents() {
                if let [c] = s.eligible_categories(a) {
                    if m.load(*c) < s.capacity(*c) {
                        m.set(a, Some(*c));
                    }
                }
            }
            m
        };
        let s = SequentialReserveSystem::from_basic(
            ReserveSystem::from_parts(1, &[(1, &[0], 1), (1, &[0], 1)]).unwrap(),
        );
        let report = test_no_incentive_to_hide(&rule, &s, Trials::Exhaustive);
        assert_eq!(report.trials, 3);
        assert_eq!(report.counterexamples.len(), 2);
        assert_eq!(report.counterexamples[0].agent, AgentId(0));
    }

    #[test]
    fn promotion_of_top_agent_is_skipped() {
        let rule = |s: &SequentialReserveSystem| scu_allocate(s, ScuImpl::ReferenceFlow);
        let s = SequentialReserveSystem::from_basic(ReserveSystem::from_parts(1, &[(1, &[0], 1)]).unwrap());
        let report = test_respect_improvements(&rule, &s, Trials::Exhaustive);
        assert_eq!(report.trials, 0);
        assert!(report.holds());
    }

    #[test]
    fn rev_baseline_dependence_on_example1() {
        let rule = |s: &SequentialReserveSystem, pi: &BaselineOrder| rev_allocate(s.base(), pi);
        let report = test_independence_of_baseline(&rule, &example1(), Trials::Exhaustive);
        assert_eq!(report.trials, 6);
        assert!(!report.holds());
    }

    #[test]
    fn seeded_mma_differs_across_seeds_but_not_in_matched_set_size() {
        let s = example1();
        let mut seed = 0u64;
        let mut differs = false;
        for _ in 0..20 {
            let mut rule = |s: &SequentialReserveSystem| {
                seed += 1;
                mma_allocate_seeded(s.base(), seed)
            };
            let [outcome, _] = test_consistency(&mut rule, &s);
            differs |= !outcome.holds();
        }
        assert!(differs);
    }
}
