//! Machine-readable reports written by `--format record`.

use ruleprob::approx::BoundedPosterior;
use ruleprob::exact::{Distribution, InferenceStats};
use ruleprob::scalar::round_sig;
use ruleprob::{Context, RuleBase};
use serde::{Deserialize, Serialize};

/// Significant digits kept for every probability in a report.
pub const DIGITS: i32 = 12;

pub fn prob(x: f64) -> f64 {
    round_sig(x, DIGITS)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub variable: String,
    pub value: String,
}

pub fn assignments(rb: &RuleBase, ctx: &Context) -> Vec<Assignment> {
    ctx.iter()
        .map(|(v, x)| {
            let var = rb.variable(v);
            Assignment {
                variable: var.name.clone(),
                value: var.values[x].clone(),
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValueProb {
    pub value: String,
    pub probability: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValueBounds {
    pub value: String,
    pub low: f64,
    pub high: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Posterior {
    Distribution {
        values: Vec<ValueProb>,
    },
    Bounds {
        values: Vec<ValueBounds>,
        /// Oracle posterior, present when the model is exact and small enough.
        exact: Option<Vec<ValueProb>>,
        contains_exact: Option<bool>,
    },
}

pub fn distribution(rb: &RuleBase, d: &Distribution) -> Vec<ValueProb> {
    let var = rb.variable(d.variable);
    d.probs
        .iter()
        .zip(&var.values)
        .map(|(p, v)| ValueProb {
            value: v.clone(),
            probability: prob(*p),
        })
        .collect()
}

pub fn bounds(rb: &RuleBase, b: &BoundedPosterior) -> Vec<ValueBounds> {
    let var = rb.variable(b.variable);
    (0..b.len())
        .map(|i| ValueBounds {
            value: var.values[i].clone(),
            low: prob(b.low[i]),
            high: prob(b.high[i]),
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Step {
    /// `None` for the evidence pass or the final product.
    pub variable: Option<String>,
    pub rules_created: usize,
    pub rules_active: usize,
    pub factor_entries: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub steps: Vec<Step>,
    pub max_rules_created: usize,
    pub max_rules_active: usize,
    pub max_factor_entries: usize,
}

impl Stats {
    pub fn new(rb: &RuleBase, s: &InferenceStats) -> Self {
        Stats {
            steps: s
                .steps
                .iter()
                .map(|st| Step {
                    variable: st.variable.map(|v| rb.variable(v).name.clone()),
                    rules_created: st.rules_created,
                    rules_active: st.rules_active,
                    factor_entries: st.factor_entries,
                })
                .collect(),
            max_rules_created: s.max_rules_created,
            max_rules_active: s.max_rules_active,
            max_factor_entries: s.max_factor_entries,
        }
    }
}

/// Output of `infer` and `bounds`. `wall_time_ms` is the only field that
/// varies between identical invocations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: Vec<String>,
    pub input_sha256: String,
    pub engine: String,
    pub query: String,
    pub evidence: Vec<Assignment>,
    pub ordering: Vec<String>,
    pub result: Posterior,
    pub stats: Option<Stats>,
    pub wall_time_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: String,
    pub detail: String,
    /// Invocation that reruns the failing trial.
    pub reproduce: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidateReport {
    pub command: Vec<String>,
    pub input_sha256: String,
    pub valid: bool,
    pub method: String,
    pub violations: Vec<Violation>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompressRow {
    pub variable: String,
    /// `None` when the rules do not expand back into a table.
    pub table_rows: Option<usize>,
    pub table_entries: Option<usize>,
    pub rules_exact: usize,
    pub rules_threshold: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompressReport {
    pub command: Vec<String>,
    pub input_sha256: String,
    pub threshold: f64,
    pub extreme_guard: bool,
    pub rows: Vec<CompressRow>,
    pub total_table_entries: Option<usize>,
    pub total_rules_exact: usize,
    pub total_rules_threshold: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub command: Vec<String>,
    pub input_sha256: String,
    pub seed: u64,
    pub trials: usize,
    pub threshold: f64,
    pub strategy: String,
    pub engines: Vec<String>,
    pub checked: usize,
    pub skipped: usize,
    pub max_engine_diff: f64,
    pub max_bound_width: f64,
    pub violations: Vec<Violation>,
}
