//! Wall-clock timing of the allocation rules on generated instances.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::gen::{CapacityDist, GeneratorSpec};
use crate::model::{BaselineOrder, SequentialReserveSystem};
use crate::rules_basic::{da_allocate, mma_allocate, rev_allocate, MmaOptions};
use crate::rules_sequential::{scu_allocate, ScuImpl};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchRule {
    Da,
    Rev,
    Mma,
    Scu,
}

impl BenchRule {
    pub fn run(self, s: &SequentialReserveSystem) {
        match self {
            BenchRule::Da => {
                da_allocate(s.base(), None).expect("default preferences");
            }
            BenchRule::Rev => {
                rev_allocate(s.base(), &BaselineOrder::identity(s.num_agents()));
            }
            BenchRule::Mma => {
                mma_allocate(s.base(), &MmaOptions::default()).expect("default options");
            }
            BenchRule::Scu => {
                scu_allocate(s, ScuImpl::CompactFlow);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub sizes: Vec<usize>,
    pub rules: Vec<BenchRule>,
    pub repetitions: usize,
    pub seed: u64,
    pub num_categories: usize,
    pub density: f64,
    /// Runs slower than this are flagged in the report.
    pub timeout_ms: Option<f64>,
}

impl BenchConfig {
    pub fn new(sizes: Vec<usize>, rules: Vec<BenchRule>, repetitions: usize, seed: u64) -> Self {
        Self { sizes, rules, repetitions, seed, num_categories: 10, density: 0.1, timeout_ms: None }
    }

    /// Instance for one repetition. Each category holds a twentieth of the
    /// agents, so about half of them can be matched at full eligibility.
    pub fn instance(&self, size: usize, rep: usize) -> SequentialReserveSystem {
        let mut spec =
            GeneratorSpec::new(size, self.num_categories, self.seed ^ ((size as u64) << 20) ^ rep as u64);
        spec.density = self.density;
        spec.capacity = CapacityDist::Fixed { value: (size / 20).max(1) };
        spec.generate().expect("bench spec is valid")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub rule: BenchRule,
    pub size: usize,
    pub samples_ms: Vec<f64>,
    pub median_ms: f64,
    pub timed_out: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub size: usize,
    pub rev_over_mma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub config: BenchConfig,
    pub rows: Vec<BenchRow>,
    /// Filled only when both REV and MMA were timed.
    pub ratios: Vec<RatioRow>,
}

impl BenchReport {
    pub fn median(&self, rule: BenchRule, size: usize) -> Option<f64> {
        self.rows.iter().find(|r| r.rule == rule && r.size == size).map(|r| r.median_ms)
    }

    /// True when the REV/MMA ratio strictly increases with size. Vacuously
    /// true with fewer than two ratio rows.
    pub fn ratio_increases(&self) -> bool {
        self.ratios.windows(2).all(|w| w[1].rev_over_mma > w[0].rev_over_mma)
    }
}

pub fn median(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        return f64::NAN;
    }
    let mut v = samples.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let k = v.len() / 2;
    if v.len() % 2 == 1 {
        v[k]
    } else {
        (v[k - 1] + v[k]) / 2.0
    }
}

pub fn time_once(rule: BenchRule, s: &SequentialReserveSystem) -> Duration {
    let start = Instant::now();
    rule.run(s);
    start.elapsed()
}

pub fn run_bench(config: &BenchConfig) -> BenchReport {
    let mut rows = Vec::new();
    if config.repetitions > 0 {
        for &size in &config.sizes {
            let instances: Vec<_> = (0..config.repetitions).map(|rep| config.instance(size, rep)).collect();
            for &rule in &config.rules {
                let samples_ms: Vec<f64> =
                    instances.iter().map(|s| time_once(rule, s).as_secs_f64() * 1e3).collect();
                let timed_out =
                    config.timeout_ms.map_or(0, |limit| samples_ms.iter().filter(|&&t| t > limit).count());
                rows.push(BenchRow { rule, size, median_ms: median(&samples_ms), samples_ms, timed_out });
            }
        }
    }
    let mut report = BenchReport { config: config.clone(), rows, ratios: Vec::new() };
    if config.rules.contains(&BenchRule::Rev)
        && config.rules.contains(&BenchRule::Mma)
        && config.repetitions > 0
    {
        report.ratios = config
            .sizes
            .iter()
            .map(|&size| RatioRow {
                size,
                rev_over_mma: report.median(BenchRule::Rev, size).unwrap()
                    / report.median(BenchRule::Mma, size).unwrap(),
            })
            .collect();
    }
    report
}
