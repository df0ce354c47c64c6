use std::cell::Cell;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use reserve_core::gen::{random_sweep, SweepBounds};
use reserve_core::harness::{
    test_consistency, test_independence_of_baseline, test_no_incentive_to_hide, test_respect_improvements,
    Counterexample, PerturbationReport, Property, Trials,
};
use reserve_core::rules_basic::{da_allocate, mma_allocate, mma_allocate_seeded, rev_allocate, MmaOptions};
use reserve_core::rules_sequential::{scu_allocate, ScuImpl};
use reserve_core::{BaselineOrder, Matching, SequentialReserveSystem};
use serde::Serialize;

use crate::io;
use crate::solve::Rule;
use crate::{Format, Status};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Sweep {
    /// Random instances with at most 5 agents, tested exhaustively.
    Small,
    /// Every instance file in `--corpus`, tested exhaustively.
    Corpus,
    /// Random instances with at most 12 agents, sampled perturbations.
    Random,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub rule: Rule,
    #[arg(long, value_enum, default_value_t = Sweep::Small)]
    pub sweep: Sweep,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of generated instances for `small` and `random` sweeps.
    #[arg(long, default_value_t = 200)]
    pub count: usize,
    /// Directory of instance files for the `corpus` sweep.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Counterexamples kept per property in the report.
    #[arg(long, default_value_t = 3)]
    pub max_examples: usize,
}

/// What the rule is known to do for a property.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Expectation {
    Holds,
    Fails,
    Unclaimed,
}

#[derive(Debug, Serialize)]
struct PropertyResult {
    property: Property,
    expectation: Expectation,
    trials: usize,
    counterexamples: usize,
    examples: Vec<Counterexample>,
}

#[derive(Debug, Serialize)]
struct VerifyReport {
    rule: &'static str,
    sweep: Sweep,
    seed: u64,
    instances: usize,
    properties: Vec<PropertyResult>,
    /// A property expected to hold produced a counterexample.
    unexpected: bool,
}

fn expectation(rule: Rule, property: Property) -> Option<Expectation> {
    use Expectation::*;
    use Property::*;
    Some(match (rule, property) {
        (Rule::Scu | Rule::Da, IndependenceOfBaseline) => return None,
        (Rule::Scu | Rule::Da, _) => Holds,
        (Rule::Rev, NoIncentiveToHide | RespectImprovements | ConsistentMatchedAgents) => Holds,
        (Rule::Rev, IndependenceOfBaseline) => Fails,
        (Rule::Rev, ConsistentMatching) => Unclaimed,
        (Rule::Mma, IndependenceOfBaseline) => return None,
        (Rule::Mma, ConsistentMatching | ConsistentMatchedAgents) => Fails,
        (Rule::Mma, NoIncentiveToHide | RespectImprovements) => Unclaimed,
    })
}

fn rule_name(rule: Rule) -> &'static str {
    match rule {
        Rule::Da => "da",
        Rule::Rev => "rev",
        Rule::Mma => "mma",
        Rule::Scu => "scu",
    }
}

fn instances(args: &VerifyArgs) -> Result<(Vec<SequentialReserveSystem>, Trials)> {
    Ok(match args.sweep {
        Sweep::Small => (
            random_sweep(
                SweepBounds { max_agents: 5, max_categories: 3, max_capacity: 2 },
                args.count,
                args.seed,
            ),
            Trials::Exhaustive,
        ),
        Sweep::Random => (
            random_sweep(
                SweepBounds { max_agents: 12, max_categories: 4, max_capacity: 3 },
                args.count,
                args.seed,
            ),
            Trials::Sampled { count: 25, seed: args.seed },
        ),
        Sweep::Corpus => {
            let Some(dir) = &args.corpus else { bail!("the corpus sweep needs --corpus DIR") };
            let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
                .with_context(|| format!("reading {}", dir.display()))?
                .map(|e| e.map(|e| e.path()))
                .collect::<std::io::Result<_>>()?;
            paths.retain(|p| p.extension().is_some_and(|e| e == "json"));
            paths.sort();
            let list = paths
                .iter()
                .map(|p| io::read_instance(p).map(|i| i.into_sequential()))
                .collect::<Result<_>>()?;
            (list, Trials::Exhaustive)
        }
    })
}

pub fn run(args: VerifyArgs, format: Format) -> Result<Status> {
    let (sweep, trials) = instances(&args)?;
    let rule = args.rule;
    let deterministic = move |s: &SequentialReserveSystem| -> Matching {
        match rule {
            Rule::Da => da_allocate(s.base(), None).expect("default preferences"),
            Rule::Rev => rev_allocate(s.base(), &BaselineOrder::identity(s.num_agents())),
            Rule::Mma => mma_allocate(s.base(), &MmaOptions::default()).expect("default options").0,
            Rule::Scu => scu_allocate(s, ScuImpl::CompactFlow),
        }
    };
    // MMA consistency runs draw a fresh initial matching each call.
    let draws = Cell::new(args.seed);
    let mut repeated = |s: &SequentialReserveSystem| -> Matching {
        if rule == Rule::Mma {
            draws.set(draws.get() + 1);
            mma_allocate_seeded(s.base(), draws.get())
        } else {
            deterministic(s)
        }
    };
    let with_baseline = |s: &SequentialReserveSystem, pi: &BaselineOrder| rev_allocate(s.base(), pi);

    let mut merged: Vec<PerturbationReport> = Vec::new();
    let mut add = |r: PerturbationReport| match merged.iter_mut().find(|m| m.property == r.property) {
        Some(m) => m.merge(r),
        None => merged.push(r),
    };
    for s in &sweep {
        add(test_no_incentive_to_hide(&deterministic, s, trials));
        add(test_respect_improvements(&deterministic, s, trials));
        for r in test_consistency(&mut repeated, s) {
            add(r);
        }
        if rule == Rule::Rev {
            add(test_independence_of_baseline(&with_baseline, s, trials));
        }
    }
    let properties: Vec<PropertyResult> = merged
        .into_iter()
        .filter_map(|r| {
            let expectation = expectation(rule, r.property)?;
            Some(PropertyResult {
                property: r.property,
                expectation,
                trials: r.trials,
                counterexamples: r.counterexamples.len(),
                examples: r.counterexamples.into_iter().take(args.max_examples).collect(),
            })
        })
        .collect();
    let unexpected = properties.iter().any(|p| p.expectation == Expectation::Holds && p.counterexamples > 0);
    let report = VerifyReport {
        rule: rule_name(rule),
        sweep: args.sweep,
        seed: args.seed,
        instances: sweep.len(),
        properties,
        unexpected,
    };
    match format {
        Format::Json => io::print_json(&report)?,
        Format::Text => {
            let sweep = serde_json::to_value(report.sweep)?;
            println!(
                "{} on {} instances ({} sweep, seed {})",
                report.rule,
                report.instances,
                sweep.as_str().unwrap_or_default(),
                report.seed
            );
            for p in &report.properties {
                println!(
                    "{:<28} {:<9} {:>7} trials {:>5} counterexamples",
                    serde_json::to_value(p.property)?.as_str().unwrap_or_default(),
                    serde_json::to_value(p.expectation)?.as_str().unwrap_or_default(),
                    p.trials,
                    p.counterexamples
                );
            }
        }
    }
    Ok(if unexpected { Status::Failed } else { Status::Success })
}
