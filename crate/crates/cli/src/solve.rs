use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use reserve_core::netflow::{build_compact_network, build_reserve_network};
use reserve_core::rules_basic::{
    da_allocate, mma_allocate, random_maximum_matching, rev_allocate, AgentPreferences, CategoryOrder,
    MmaOptions, MmaTrace,
};
use reserve_core::rules_sequential::{scu_run, ScuImpl};
use reserve_core::{BaselineOrder, CategoryId, Matching, SequentialReserveSystem};
use serde::Serialize;
use serde_json::json;

use crate::io::{self, agent_label, category_label, parse_agent, parse_category, parse_list};
use crate::{Format, Status};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Rule {
    Da,
    Rev,
    Mma,
    Scu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Impl {
    Flow,
    Compact,
    Bipartite,
}

impl From<Impl> for ScuImpl {
    fn from(i: Impl) -> Self {
        match i {
            Impl::Flow => ScuImpl::ReferenceFlow,
            Impl::Compact => ScuImpl::CompactFlow,
            Impl::Bipartite => ScuImpl::Bipartite,
        }
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long, value_enum)]
    pub rule: Rule,
    /// SCU implementation.
    #[arg(long = "impl", value_enum, default_value_t = Impl::Compact)]
    pub implementation: Impl,
    /// REV baseline, highest first, e.g. `i1,i2,i3`.
    #[arg(long)]
    pub baseline: Option<String>,
    /// MMA initial matching file; must be a maximum matching.
    #[arg(long)]
    pub seed_matching: Option<PathBuf>,
    /// MMA category order shared by all agents, e.g. `c2,c1`.
    #[arg(long)]
    pub order: Option<String>,
    /// MMA scan order over agents.
    #[arg(long)]
    pub agent_order: Option<String>,
    /// MMA random initial matching drawn from this seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// DA preference lists: JSON array with one array of category ids per
    /// agent, most preferred first.
    #[arg(long)]
    pub prefs: Option<PathBuf>,
    /// Write the matching file here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write per-step JSON lines (SCU decisions or MMA proposals).
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Write the flow network in DOT format.
    #[arg(long)]
    pub dot: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct Summary {
    matched: usize,
    beneficiaries: usize,
    loads: Vec<usize>,
}

pub fn run(args: SolveArgs, format: Format) -> Result<Status> {
    let instance = io::read_instance(&args.instance)?;
    let s = instance.to_sequential();
    let (mu, trace) = allocate(&s, &args)?;
    if let Some(path) = &args.out {
        io::write(path, &mu.to_canonical_json())?;
    }
    if let (Some(path), Some(lines)) = (&args.trace, trace) {
        io::write(path, &lines)?;
    }
    if let Some(path) = &args.dot {
        let dot = if args.rule == Rule::Scu && args.implementation == Impl::Compact {
            build_compact_network(&s).network.to_dot()
        } else {
            build_reserve_network(&s).network.to_dot()
        };
        io::write(path, &dot)?;
    }
    let summary = Summary {
        matched: mu.size(),
        beneficiaries: mu.beneficiary_count(&s),
        loads: mu.loads(s.num_categories()),
    };
    match format {
        Format::Json => io::print_json(&json!({ "matching": mu.to_file(), "summary": summary }))?,
        Format::Text => print!("{}", render_text(&mu, &summary)),
    }
    Ok(Status::Success)
}

fn render_text(mu: &Matching, summary: &Summary) -> String {
    let mut out = String::new();
    for (a, c) in mu.pairs() {
        writeln!(out, "{} -> {}", agent_label(a), category_label(c)).unwrap();
    }
    writeln!(out, "matched {}, beneficiaries {}", summary.matched, summary.beneficiaries).unwrap();
    let loads: Vec<String> = summary
        .loads
        .iter()
        .enumerate()
        .map(|(c, l)| format!("{}={l}", category_label(CategoryId(c))))
        .collect();
    writeln!(out, "loads {}", loads.join(" ")).unwrap();
    out
}

fn allocate(s: &SequentialReserveSystem, args: &SolveArgs) -> Result<(Matching, Option<String>)> {
    let n = s.num_agents();
    match args.rule {
        Rule::Da => {
            let prefs = match &args.prefs {
                Some(path) => {
                    let text = std::fs::read_to_string(path)
                        .with_context(|| format!("reading {}", path.display()))?;
                    let raw: Vec<Vec<usize>> =
                        serde_json::from_str(&text).context("invalid preference file")?;
                    let lists = raw.into_iter().map(|l| l.into_iter().map(CategoryId).collect()).collect();
                    Some(AgentPreferences::new(s.base(), lists)?)
                }
                None => None,
            };
            Ok((da_allocate(s.base(), prefs.as_ref())?, None))
        }
        Rule::Rev => {
            let Some(list) = &args.baseline else { bail!("rev requires --baseline") };
            let order = parse_list(list, |t| parse_agent(t, n))?;
            let pi = BaselineOrder::new(order, n)?;
            Ok((rev_allocate(s.base(), &pi), None))
        }
        Rule::Mma => {
            let mut options = MmaOptions::default();
            if let Some(path) = &args.seed_matching {
                options.initial = Some(io::read_matching(path, n)?);
            }
            if let Some(seed) = args.seed {
                use rand::SeedableRng;
                if options.initial.is_some() {
                    bail!("--seed and --seed-matching are exclusive");
                }
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                options.initial = Some(random_maximum_matching(s.base(), &mut rng));
            }
            if let Some(list) = &args.order {
                options.category_order =
                    CategoryOrder::Global(parse_list(list, |t| parse_category(t, s.num_categories()))?);
            }
            if let Some(list) = &args.agent_order {
                options.agent_order = Some(parse_list(list, |t| parse_agent(t, n))?);
            }
            let (mu, trace) = mma_allocate(s.base(), &options)?;
            Ok((mu, Some(mma_trace_lines(&trace)?)))
        }
        Rule::Scu => {
            let mut lines = String::new();
            let mut step = 0usize;
            let state = scu_run(s, args.implementation.into(), |event, state| {
                step += 1;
                let line = json!({
                    "step": step,
                    "category": event.category,
                    "agent": event.agent,
                    "accepted": event.accepted,
                    "x": state.x,
                    "y": state.y,
                    "mu": state.mu.to_file().assignment,
                });
                lines.push_str(&line.to_string());
                lines.push('\n');
            });
            Ok((state.mu, Some(lines)))
        }
    }
}

fn mma_trace_lines(trace: &MmaTrace) -> Result<String> {
    let mut out = serde_json::to_string(&json!({ "initial": trace.initial.to_file().assignment }))?;
    out.push('\n');
    for p in &trace.log {
        out.push_str(&serde_json::to_string(p)?);
        out.push('\n');
    }
    Ok(out)
}
