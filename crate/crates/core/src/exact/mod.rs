//! Exact posterior computation: dense-factor variable elimination and
//! rule-based partial evaluation.

mod factor;
mod order;
mod partial;

pub use factor::{ve_posterior, Factor};
pub use order::EliminationOrdering;
pub use partial::{
    apply_evidence, combine_for_variable, compute_belief, eliminate_variable, PartialEvaluator,
    DEFAULT_STEP_CAP,
};

use crate::error::{Error, Result};
use crate::model::{Context, VarId, Variable};
use crate::scalar::{compensated_sum, Prob};

/// Posterior over the values of one variable, indexed by value.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution<P = f64> {
    pub variable: VarId,
    pub probs: Vec<P>,
}

impl<P: Prob> Distribution<P> {
    /// Normalises unnormalised masses. A zero total means the evidence is impossible.
    pub fn normalize(variable: VarId, masses: Vec<P>) -> Result<Self> {
        let total = compensated_sum(masses.iter().cloned());
        if total == P::zero() {
            return Err(Error::ImpossibleEvidence);
        }
        let probs = masses.into_iter().map(|m| m / total.clone()).collect();
        Ok(Distribution { variable, probs })
    }

    pub fn get(&self, value: usize) -> &P {
        &self.probs[value]
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Largest absolute difference to another distribution over the same variable.
    pub fn max_abs_diff(&self, other: &Distribution<P>) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| a.abs_diff(b).to_f64())
            .fold(0.0, f64::max)
    }
}

/// Work done while eliminating one variable.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StepStats {
    pub variable: Option<VarId>,
    /// Rules emitted by the combine and sum-out steps.
    pub rules_created: usize,
    /// Rules in the working set after the step.
    pub rules_active: usize,
    /// Entries of the product factor built before summing out.
    pub factor_entries: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct InferenceStats {
    pub steps: Vec<StepStats>,
    pub max_rules_created: usize,
    pub max_rules_active: usize,
    pub max_factor_entries: usize,
}

impl InferenceStats {
    pub fn record(&mut self, step: StepStats) {
        self.max_rules_created = self.max_rules_created.max(step.rules_created);
        self.max_rules_active = self.max_rules_active.max(step.rules_active);
        self.max_factor_entries = self.max_factor_entries.max(step.factor_entries);
        self.steps.push(step);
    }
}

/// Rejects queries that are observed, unknown, or evidence outside a domain.
pub(crate) fn check_query(vars: &[Variable], query: VarId, evidence: &Context) -> Result<()> {
    if query.0 >= vars.len() {
        return Err(Error::InvalidQuery(format!("unknown variable {}", query)));
    }
    if evidence.contains_var(query) {
        return Err(Error::InvalidQuery(format!(
            "query variable {} is observed",
            vars[query.0].name
        )));
    }
    for (v, val) in evidence.iter() {
        if v.0 >= vars.len() || val >= vars[v.0].domain_size() {
            return Err(Error::InvalidQuery(format!(
                "evidence {}={} out of range",
                v, val
            )));
        }
    }
    Ok(())
}
