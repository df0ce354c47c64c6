use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, ValueEnum};
use reserve_core::axioms::{
    check_all, check_one, Axiom, AxiomVerdict, HybridLayout, PrecedenceSearch, Witness,
};
use reserve_core::harness::DEFAULT_SPACE_BOUND;

use crate::io::{self, agent_label, category_label, parse_category, parse_list};
use crate::{Format, Status};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Search {
    Oracle,
    Flow,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long)]
    pub matching: PathBuf,
    /// Axiom names, comma separated or repeated; `all` runs every
    /// applicable check.
    #[arg(long, default_value = "all")]
    pub axiom: Vec<String>,
    /// How respect for precedence searches for an alternative matching.
    #[arg(long, value_enum, default_value_t = Search::Flow)]
    pub search: Search,
    /// Size bound for oracle enumeration.
    #[arg(long, default_value_t = DEFAULT_SPACE_BOUND)]
    pub oracle_bound: u64,
    /// First and second open categories of a hybrid layout, e.g. `c1,c4`.
    #[arg(long)]
    pub hybrid: Option<String>,
}

pub fn run(args: CheckArgs, format: Format) -> Result<Status> {
    let instance = io::read_instance(&args.instance)?;
    let s = instance.to_sequential();
    let mu = io::read_matching(&args.matching, s.num_agents())?;
    mu.validate(s.base())?;
    let search = match args.search {
        Search::Oracle => PrecedenceSearch::Oracle { bound: args.oracle_bound },
        Search::Flow => PrecedenceSearch::Flow,
    };
    let hybrid = match &args.hybrid {
        Some(list) => {
            let cats = parse_list(list, |t| parse_category(t, s.num_categories()))?;
            let [first_open, second_open] = cats[..] else {
                anyhow::bail!("--hybrid takes exactly two categories");
            };
            let layout = HybridLayout { first_open, second_open };
            layout.validate(&s)?;
            Some(layout)
        }
        None => None,
    };
    let names: Vec<String> = args
        .axiom
        .iter()
        .flat_map(|a| a.split(',').map(|t| t.trim().to_string()))
        .filter(|t| !t.is_empty())
        .collect();
    let verdicts = if names.iter().any(|n| n == "all") {
        check_all(&s, &mu, search, hybrid.as_ref())?
    } else {
        let mut out = Vec::new();
        for name in &names {
            let axiom: Axiom = name.parse().map_err(anyhow::Error::msg)?;
            out.push(check_one(&s, &mu, axiom, search, hybrid.as_ref())?);
        }
        out
    };
    match format {
        Format::Json => io::print_json(&verdicts)?,
        Format::Text => {
            for v in &verdicts {
                println!("{}", render(v));
            }
        }
    }
    Ok(if verdicts.iter().all(|v| v.pass) { Status::Success } else { Status::Failed })
}

fn render(v: &AxiomVerdict) -> String {
    let tag = if v.pass { "PASS" } else { "FAIL" };
    let detail = match &v.witness {
        None => String::new(),
        Some(w) => format!(": {}", describe(w)),
    };
    format!("{tag} {}{detail}", v.axiom)
}

fn describe(w: &Witness) -> String {
    let a = |x| agent_label(x);
    let c = |x| category_label(x);
    match w {
        Witness::Ineligible { agent, category } => {
            format!("{} is not eligible for {}", a(*agent), c(*category))
        }
        Witness::PriorityInversion { unmatched, matched, category } => {
            format!("unmatched {} outranks {} at {}", a(*unmatched), a(*matched), c(*category))
        }
        Witness::Waste { agent, category, load, capacity } => {
            format!("{} is unmatched while {} holds {load} of {capacity}", a(*agent), c(*category))
        }
        Witness::Count { found, expected } => format!("found {found}, maximum {expected}"),
        Witness::Swap { i, j } => format!("{} and {} should swap", a(*i), a(*j)),
        Witness::Precedence { i, j, alternative } => {
            let pairs: Vec<String> =
                alternative.pairs().map(|(x, y)| format!("{}->{}", a(x), c(y))).collect();
            format!("{} should displace {}; alternative {{{}}}", a(*i), a(*j), pairs.join(", "))
        }
        Witness::Hybrid { i, j, clause } => format!("clause {clause} with {} over {}", a(*i), a(*j)),
    }
}
