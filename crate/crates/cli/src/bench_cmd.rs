use anyhow::{Context, Result};
use clap::Args;
use reserve_core::bench::{run_bench, BenchConfig, BenchRule};

use crate::io::{self, parse_list};
use crate::{Format, Status};

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value = "500,1000,2000")]
    pub sizes: String,
    /// Any of `da`, `rev`, `mma`, `scu`.
    #[arg(long, default_value = "mma,rev")]
    pub rules: String,
    #[arg(long, default_value_t = 5)]
    pub repetitions: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub categories: usize,
    #[arg(long, default_value_t = 0.1)]
    pub density: f64,
    /// Runs slower than this are counted in the report.
    #[arg(long)]
    pub timeout_ms: Option<f64>,
}

fn parse_rule(token: &str) -> Result<BenchRule> {
    serde_json::from_value(serde_json::Value::String(token.trim().to_string()))
        .with_context(|| format!("unknown rule `{token}`"))
}

pub fn run(args: BenchArgs, format: Format) -> Result<Status> {
    let sizes = parse_list(&args.sizes, |t| t.trim().parse::<usize>().context("bad size"))?;
    let rules = parse_list(&args.rules, parse_rule)?;
    let mut config = BenchConfig::new(sizes, rules, args.repetitions, args.seed);
    config.num_categories = args.categories;
    config.density = args.density;
    config.timeout_ms = args.timeout_ms;
    let report = run_bench(&config);
    match format {
        Format::Json => io::print_json(&report)?,
        Format::Text => {
            println!("{:<5} {:>7} {:>12} {:>8}", "rule", "size", "median ms", "slow");
            for row in &report.rows {
                let name = serde_json::to_value(row.rule)?;
                println!(
                    "{:<5} {:>7} {:>12.3} {:>8}",
                    name.as_str().unwrap_or_default(),
                    row.size,
                    row.median_ms,
                    row.timed_out
                );
            }
            for r in &report.ratios {
                println!("rev/mma at {}: {:.1}", r.size, r.rev_over_mma);
            }
        }
    }
    if !report.ratio_increases() {
        eprintln!("rev/mma ratio does not increase with size");
        return Ok(Status::Failed);
    }
    Ok(Status::Success)
}
