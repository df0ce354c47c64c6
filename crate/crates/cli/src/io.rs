use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use reserve_core::{AgentId, CategoryId, Instance, Matching};

pub fn read_instance(path: &Path) -> Result<Instance> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Instance::parse(&text).with_context(|| format!("invalid instance {}", path.display()))
}

pub fn read_matching(path: &Path, num_agents: usize) -> Result<Matching> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Matching::parse(&text, num_agents).with_context(|| format!("invalid matching {}", path.display()))
}

pub fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

/// `i3` is the third agent (one-based label); a bare number is a
/// zero-based id.
pub fn parse_agent(token: &str, num_agents: usize) -> Result<AgentId> {
    let id = parse_id(token, 'i')?;
    if id >= num_agents {
        bail!("agent `{token}` out of range for {num_agents} agents");
    }
    Ok(AgentId(id))
}

pub fn parse_category(token: &str, num_categories: usize) -> Result<CategoryId> {
    let id = parse_id(token, 'c')?;
    if id >= num_categories {
        bail!("category `{token}` out of range for {num_categories} categories");
    }
    Ok(CategoryId(id))
}

fn parse_id(token: &str, prefix: char) -> Result<usize> {
    let token = token.trim();
    match token.strip_prefix(prefix) {
        Some(rest) => {
            let k: usize = rest.parse().with_context(|| format!("bad label `{token}`"))?;
            if k == 0 {
                bail!("labels are one-based: `{token}`");
            }
            Ok(k - 1)
        }
        None => token.parse().with_context(|| format!("bad id `{token}`")),
    }
}

pub fn parse_list<T>(list: &str, item: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    list.split(',').filter(|t| !t.trim().is_empty()).map(item).collect()
}

pub fn agent_label(a: AgentId) -> String {
    format!("i{}", a.0 + 1)
}

pub fn category_label(c: CategoryId) -> String {
    format!("c{}", c.0 + 1)
}

pub fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string(value)?);
    Ok(())
}
