//! Brute-force reference computations by enumerating complete contexts.

use crate::approx::BoundedPosterior;
use crate::error::{Error, Result};
use crate::exact::{check_query, Distribution, PartialEvaluator};
use crate::model::{joint_space, Assignments, Context, Interval, RuleBase, VarId};
use crate::scalar::{compensated_sum, Prob};

/// Default limit on the number of complete contexts enumerated per call.
pub const DEFAULT_CAP: u128 = 1 << 22;

fn free_vars<P: Prob>(rb: &RuleBase<P>, fixed: &Context, cap: u128) -> Result<Vec<VarId>> {
    let free: Vec<VarId> = rb.var_ids().filter(|v| !fixed.contains_var(*v)).collect();
    let needed = joint_space(free.iter().map(|&v| rb.domain_size(v)));
    if needed > cap {
        return Err(Error::EnumerationBudgetExceeded { needed, cap });
    }
    Ok(free)
}

/// Sum of interval products over the complete contexts extending `ctx`:
/// the lower and upper unnormalised probability of the conjunction.
pub fn conjunction_mass<P: Prob>(rb: &RuleBase<P>, ctx: &Context) -> Result<Interval<P>> {
    conjunction_mass_capped(rb, ctx, DEFAULT_CAP)
}

pub fn conjunction_mass_capped<P: Prob>(
    rb: &RuleBase<P>,
    ctx: &Context,
    cap: u128,
) -> Result<Interval<P>> {
    let free = free_vars(rb, ctx, cap)?;
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    for c in Assignments::over(rb, &free, ctx.clone()) {
        let p = rb.complete_context_probability(&c)?;
        lo.push(p.lo);
        hi.push(p.hi);
    }
    Ok(Interval::new(compensated_sum(lo), compensated_sum(hi)))
}

fn masses<P: Prob>(
    rb: &RuleBase<P>,
    query: VarId,
    evidence: &Context,
    cap: u128,
) -> Result<Vec<Interval<P>>> {
    check_query(rb.variables(), query, evidence)?;
    (0..rb.domain_size(query))
        .map(|v| {
            let ctx = evidence.with(query, v).expect("query is unobserved");
            conjunction_mass_capped(rb, &ctx, cap)
        })
        .collect()
}

/// Exact posterior of `query` given `evidence` by summing joint probabilities.
pub fn enumerate_posterior<P: Prob>(
    rb: &RuleBase<P>,
    query: VarId,
    evidence: &Context,
) -> Result<Distribution<P>> {
    enumerate_posterior_capped(rb, query, evidence, DEFAULT_CAP)
}

pub fn enumerate_posterior_capped<P: Prob>(
    rb: &RuleBase<P>,
    query: VarId,
    evidence: &Context,
    cap: u128,
) -> Result<Distribution<P>> {
    if !rb.is_exact() {
        return Err(Error::MalformedRuleBase(
            "exact enumeration needs an exact rule base".to_string(),
        ));
    }
    let m = masses(rb, query, evidence, cap)?;
    Distribution::normalize(query, m.into_iter().map(|i| i.lo).collect())
}

/// Posterior bounds from enumerated lower and upper masses.
pub fn enumerate_bounds<P: Prob>(
    arb: &RuleBase<P>,
    query: VarId,
    evidence: &Context,
) -> Result<BoundedPosterior<P>> {
    enumerate_bounds_capped(arb, query, evidence, DEFAULT_CAP)
}

pub fn enumerate_bounds_capped<P: Prob>(
    arb: &RuleBase<P>,
    query: VarId,
    evidence: &Context,
    cap: u128,
) -> Result<BoundedPosterior<P>> {
    BoundedPosterior::from_masses(query, masses(arb, query, evidence, cap)?)
}

/// Shifts both bounds of one rule by `delta`. Sums to one are not rechecked.
pub fn perturb_parameter<P: Prob>(
    rb: &RuleBase<P>,
    rule_id: usize,
    delta: P,
) -> Result<RuleBase<P>> {
    let Some(rule) = rb.rules().get(rule_id) else {
        return Err(Error::OutOfRange(format!("no rule {}", rule_id)));
    };
    let lo = rule.lower.clone() + delta.clone();
    let hi = rule.upper.clone() + delta;
    if lo < P::zero() || hi > P::one() {
        return Err(Error::OutOfRange(format!(
            "rule {} would leave [0, 1]: [{}, {}]",
            rule_id,
            lo.to_f64(),
            hi.to_f64()
        )));
    }
    let mut rules = rb.rules().to_vec();
    rules[rule_id].set_bounds(Interval::new(lo, hi));
    Ok(rb.with_rules(rules, rb.kind()))
}

/// Audits an elimination state against `rb`: for every assignment `c` to the
/// remaining variables the product of the applicable working rules must be
/// `P(c & evidence)` within `tol`, and each remaining variable must be in the
/// head of exactly one applicable rule. Returns the first discrepancy found.
pub fn check_loop_invariant<P: Prob>(
    rb: &RuleBase<P>,
    run: &PartialEvaluator<P>,
    tol: f64,
) -> Result<Option<String>> {
    let remaining = run.remaining();
    for c in Assignments::over(rb, &remaining, Context::new()) {
        let full = c.union(run.evidence()).expect("disjoint variables");
        let want = conjunction_mass(rb, &full)?;
        let got = run.applicable_product(&c);
        if !got.lo.near(&want.lo, tol) || !got.hi.near(&want.hi, tol) {
            return Ok(Some(format!(
                "in {}: rules give [{}, {}], enumeration gives [{}, {}]",
                rb.show_context(&c),
                got.lo.to_f64(),
                got.hi.to_f64(),
                want.lo.to_f64(),
                want.hi.to_f64()
            )));
        }
        for &x in &remaining {
            let n = run
                .rules()
                .iter()
                .filter(|r| r.head.contains_var(x) && r.applies_in(&c))
                .count();
            if n != 1 {
                return Ok(Some(format!(
                    "in {}: {} applicable rules for {}",
                    rb.show_context(&c),
                    n,
                    rb.variable(x).name
                )));
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{cpt_to_rules, Cpt, TabularNetwork};
    use crate::model::Variable;

    fn chain(pa: f64, pb: [f64; 2]) -> RuleBase {
        let net = TabularNetwork::new(
            vec![Variable::binary("a"), Variable::binary("b")],
            vec![
                Cpt {
                    parents: vec![],
                    rows: vec![vec![pa, 1.0 - pa]],
                },
                Cpt {
                    parents: vec![VarId(0)],
                    rows: vec![vec![pb[0], 1.0 - pb[0]], vec![pb[1], 1.0 - pb[1]]],
                },
            ],
        )
        .unwrap();
        cpt_to_rules(&net)
    }

    #[test]
    fn chain_marginal_by_hand() {
        let d = enumerate_posterior(&chain(0.3, [0.9, 0.2]), VarId(1), &Context::new()).unwrap();
        assert!((d.get(0) - (0.9 * 0.3 + 0.2 * 0.7)).abs() < 1e-15);
    }

    #[test]
    fn uniform_bits_are_even() {
        let d = enumerate_posterior(&chain(0.5, [0.5, 0.5]), VarId(0), &Context::new()).unwrap();
        assert_eq!(d.probs, vec![0.5, 0.5]);
    }

    #[test]
    fn deterministic_contradiction_is_impossible() {
        let rb = chain(1.0, [1.0, 0.5]);
        let ev = Context::single(VarId(1), 1);
        assert!(matches!(
            enumerate_posterior(&rb, VarId(0), &ev),
            Err(Error::ImpossibleEvidence)
        ));
    }

    #[test]
    fn degenerate_bounds_match_posterior() {
        let rb = chain(0.3, [0.9, 0.2]);
        let ev = Context::single(VarId(1), 0);
        let d = enumerate_posterior(&rb, VarId(0), &ev).unwrap();
        let b = enumerate_bounds(&rb, VarId(0), &ev).unwrap();
        assert!(b.max_abs_diff(&d) < 1e-15);
    }

    #[test]
    fn perturbation_checks_range() {
        let rb = chain(0.3, [0.9, 0.2]);
        assert_eq!(perturb_parameter(&rb, 0, 0.0).unwrap(), rb);
        assert!(matches!(
            perturb_parameter(&rb, 2, 0.2),
            Err(Error::OutOfRange(_))
        ));
        let up = perturb_parameter(&rb, 0, 0.1).unwrap();
        let ctx = Context::single(VarId(1), 0);
        assert!(conjunction_mass(&up, &ctx).unwrap().lo > conjunction_mass(&rb, &ctx).unwrap().lo);
    }

    #[test]
    fn cap_is_enforced() {
        let rb = chain(0.3, [0.9, 0.2]);
        assert!(matches!(
            conjunction_mass_capped(&rb, &Context::new(), 3),
            Err(Error::EnumerationBudgetExceeded { needed: 4, cap: 3 })
        ));
    }
}
