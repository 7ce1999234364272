//! Approximating rule bases: widening operators, greedy simplification and
//! posterior bounds.

mod ops;
mod simplify;

pub use ops::{drop_condition, resolve_on};
pub use simplify::{simplify, simplify_rules, SimplifyConfig, SimplifyStrategy};

use crate::error::{Error, Result};
use crate::exact::{
    check_query, Distribution, EliminationOrdering, InferenceStats, PartialEvaluator,
};
use crate::model::{Assignments, Context, Interval, RuleBase, VarId};
use crate::scalar::{compensated_sum, Prob};

/// Per query value, an interval on the posterior.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundedPosterior<P = f64> {
    pub variable: VarId,
    pub low: Vec<P>,
    pub high: Vec<P>,
}

impl<P: Prob> BoundedPosterior<P> {
    /// Bounds from the lower and upper unnormalised masses `P(query=v & e)`:
    /// `low(v) = L_v / (L_v + sum_{w != v} U_w)` and
    /// `high(v) = U_v / (U_v + sum_{w != v} L_w)`. A zero denominator gives
    /// `low = 0`, `high = 1`.
    pub fn from_masses(variable: VarId, masses: Vec<Interval<P>>) -> Result<Self> {
        let upper_total = compensated_sum(masses.iter().map(|m| m.hi.clone()));
        if upper_total <= P::zero() {
            return Err(Error::ImpossibleEvidence);
        }
        let n = masses.len();
        let others = |v: usize, pick: fn(&Interval<P>) -> P| {
            compensated_sum((0..n).filter(|&w| w != v).map(|w| pick(&masses[w])))
        };
        let clamp = |p: P| P::max_of(P::zero(), P::min_of(P::one(), p));
        let mut low = Vec::with_capacity(n);
        let mut high = Vec::with_capacity(n);
        for (v, m) in masses.iter().enumerate() {
            let l = m.lo.clone();
            let u = m.hi.clone();
            let den_low = l.clone() + others(v, |m| m.hi.clone());
            let den_high = u.clone() + others(v, |m| m.lo.clone());
            low.push(if den_low == P::zero() {
                P::zero()
            } else {
                clamp(l / den_low)
            });
            high.push(if den_high == P::zero() {
                P::one()
            } else {
                clamp(u / den_high)
            });
        }
        Ok(BoundedPosterior {
            variable,
            low,
            high,
        })
    }

    pub fn len(&self) -> usize {
        self.low.len()
    }

    pub fn is_empty(&self) -> bool {
        self.low.is_empty()
    }

    pub fn interval(&self, value: usize) -> Interval<P> {
        Interval::new(self.low[value].clone(), self.high[value].clone())
    }

    /// Whether every value's posterior lies in its interval, up to `tol`.
    pub fn contains(&self, d: &Distribution<P>, tol: f64) -> bool {
        (0..self.len()).all(|v| self.interval(v).contains(d.get(v), tol))
    }

    /// Whether every interval of `other` lies inside this one's, up to `tol`.
    pub fn contains_bounds(&self, other: &BoundedPosterior<P>, tol: f64) -> bool {
        (0..self.len()).all(|v| self.interval(v).contains_interval(&other.interval(v), tol))
    }

    pub fn max_width(&self) -> f64 {
        (0..self.len())
            .map(|v| self.interval(v).width().to_f64())
            .fold(0.0, f64::max)
    }

    /// Largest distance between the two ends of any interval and `d`.
    pub fn max_abs_diff(&self, d: &Distribution<P>) -> f64 {
        (0..self.len())
            .map(|v| {
                let a = self.low[v].abs_diff(d.get(v)).to_f64();
                let b = self.high[v].abs_diff(d.get(v)).to_f64();
                a.max(b)
            })
            .fold(0.0, f64::max)
    }
}

/// Checks by enumeration that every complete context's interval product
/// under `arb` contains its exact probability under `rb`. Returns a
/// witnessing context when it does not.
pub fn check_approximates<P: Prob>(
    arb: &RuleBase<P>,
    rb: &RuleBase<P>,
    max_enum: u128,
) -> Result<Option<Context>> {
    if arb.variables() != rb.variables() {
        return Err(Error::MalformedRuleBase(
            "the rule bases have different variables".to_string(),
        ));
    }
    let needed = rb.joint_space();
    if needed > max_enum {
        return Err(Error::EnumerationBudgetExceeded {
            needed,
            cap: max_enum,
        });
    }
    let all: Vec<VarId> = rb.var_ids().collect();
    for ctx in Assignments::over(rb, &all, Context::new()) {
        let exact = rb.complete_context_probability(&ctx)?;
        let bounds = arb.complete_context_probability(&ctx)?;
        if !bounds.contains_interval(&exact, P::SLACK) {
            return Ok(Some(ctx));
        }
    }
    Ok(None)
}

/// Posterior bounds by one elimination run carrying (lower, upper) pairs.
pub fn bounded_posterior<P: Prob>(
    arb: &RuleBase<P>,
    query: VarId,
    evidence: &Context,
    order: &EliminationOrdering,
) -> Result<(BoundedPosterior<P>, InferenceStats)> {
    bounded_posterior_with(arb, query, evidence, order, None)
}

/// As [`bounded_posterior`], optionally simplifying the working rules after
/// each elimination step.
pub fn bounded_posterior_with<P: Prob>(
    arb: &RuleBase<P>,
    query: VarId,
    evidence: &Context,
    order: &EliminationOrdering,
    per_step: Option<&SimplifyConfig>,
) -> Result<(BoundedPosterior<P>, InferenceStats)> {
    check_query(arb.variables(), query, evidence)?;
    order.check(arb.num_vars(), query, evidence)?;
    let mut run = PartialEvaluator::new(arb, evidence)?;
    for &e in order.as_slice() {
        run.eliminate(e)?;
        if let Some(cfg) = per_step {
            let rules = simplify_rules(run.rules(), run.variables(), cfg);
            run.replace_rules(rules);
        }
    }
    let masses = run.joint(query)?;
    Ok((
        BoundedPosterior::from_masses(query, masses)?,
        run.into_stats(),
    ))
}
