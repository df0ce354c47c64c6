use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use reserve_core::gen::{CapacityDist, GeneratorSpec, TierScheme};
use reserve_core::Instance;

use crate::io;
use crate::Status;

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub agents: usize,
    #[arg(long)]
    pub categories: usize,
    /// Fixed capacity `N` or uniform range `LO..HI` (inclusive).
    #[arg(long, default_value = "1")]
    pub capacity: String,
    /// Eligibility density: each agent is eligible with this probability.
    #[arg(long, default_value_t = 0.5)]
    pub density: f64,
    /// Fraction of categories marked preferential.
    #[arg(long, default_value_t = 0.0)]
    pub preferential: f64,
    /// `equal`, `strict`, or `random:K`.
    #[arg(long, default_value = "equal")]
    pub tiers: String,
    /// Derive every ranking from one shared permutation.
    #[arg(long)]
    pub correlated: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: GenArgs) -> Result<Status> {
    let spec = GeneratorSpec {
        num_agents: args.agents,
        num_categories: args.categories,
        capacity: parse_capacity(&args.capacity)?,
        density: args.density,
        preferential_fraction: args.preferential,
        tiers: parse_tiers(&args.tiers)?,
        correlated: args.correlated,
        seed: args.seed,
    };
    let s = spec.generate()?;
    let flat = s.preferential().is_empty() && s.precedence().tiers().windows(2).all(|w| w[0] == w[1]);
    let instance = if flat { Instance::Basic(s.base().clone()) } else { Instance::Sequential(s) };
    let text = instance.to_canonical_json();
    match &args.out {
        Some(path) => io::write(path, &text)?,
        None => print!("{text}"),
    }
    Ok(Status::Success)
}

fn parse_capacity(text: &str) -> Result<CapacityDist> {
    match text.split_once("..") {
        Some((lo, hi)) => Ok(CapacityDist::Uniform {
            lo: lo.trim().parse().context("bad capacity range")?,
            hi: hi.trim().parse().context("bad capacity range")?,
        }),
        None => Ok(CapacityDist::Fixed { value: text.trim().parse().context("bad capacity")? }),
    }
}

fn parse_tiers(text: &str) -> Result<TierScheme> {
    match text {
        "equal" => Ok(TierScheme::AllEqual),
        "strict" => Ok(TierScheme::Strict),
        _ => match text.strip_prefix("random:") {
            Some(k) => Ok(TierScheme::RandomK { k: k.parse().context("bad tier count")? }),
            None => bail!("unknown tier scheme `{text}`"),
        },
    }
}
