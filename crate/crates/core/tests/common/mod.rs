#![allow(dead_code)]

use proptest::prelude::*;
use reserve_core::{
    AgentId, CategoryId, PrecedenceOrder, PriorityRanking, ReserveSystem, SequentialReserveSystem,
};

/// Random sequential systems with up to `max_n` agents, `max_k` categories
/// and capacities up to `max_q`.
pub fn system(max_n: usize, max_k: usize, max_q: usize) -> impl Strategy<Value = SequentialReserveSystem> {
    (1..=max_n, 1..=max_k).prop_flat_map(move |(n, k)| {
        let category = (0..=max_q, Just((0..n).map(AgentId).collect::<Vec<_>>()).prop_shuffle(), 0..=n);
        (
            Just(n),
            proptest::collection::vec(category, k),
            proptest::collection::vec(any::<bool>(), k),
            proptest::collection::vec(0..k as u32, k),
        )
            .prop_map(|(n, cats, pref, tiers)| {
                let caps = cats.iter().map(|c| c.0).collect();
                let rankings = cats
                    .into_iter()
                    .map(|(_, order, cutoff)| PriorityRanking::new(order, cutoff).unwrap())
                    .collect();
                let base = ReserveSystem::new(n, caps, rankings).unwrap();
                let preferential: Vec<CategoryId> =
                    pref.iter().enumerate().filter(|(_, &p)| p).map(|(c, _)| CategoryId(c)).collect();
                SequentialReserveSystem::new(base, &preferential, PrecedenceOrder::new(tiers)).unwrap()
            })
    })
}
