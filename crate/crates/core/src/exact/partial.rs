use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::exact::{check_query, Distribution, EliminationOrdering, InferenceStats, StepStats};
use crate::model::{Context, Interval, Rule, RuleBase, VarId, Variable, PROB_TOLERANCE};
use crate::scalar::Prob;

/// Most rules a single combine or sum-out step may emit.
pub const DEFAULT_STEP_CAP: usize = 1_000_000;

/// Conditions rules on the evidence: a rule contradicting it is removed, and
/// observed assignments leave bodies and heads (a head left empty means `true`).
pub fn apply_evidence<P: Prob>(rules: &[Rule<P>], evidence: &Context) -> Vec<Rule<P>> {
    rules
        .iter()
        .filter(|r| r.head.compatible(evidence) && r.body.compatible(evidence))
        .map(|r| {
            let mut r = r.clone();
            r.head = r.head.minus_vars(evidence);
            r.body = r.body.minus_vars(evidence);
            r
        })
        .collect()
}

/// Depth-first refinement of the space of assignments to all variables but the
/// excluded one. `ctxs[i]` is candidate `i`'s context with that variable removed.
/// A node is a leaf once every candidate compatible with it is decided by it;
/// `leaf` then receives the node's partial assignment and those candidates.
/// Branches on the unassigned variable most common among undecided
/// candidates, ties to the smallest id.
fn split<F>(ctxs: &[Context], vars: &[Variable], leaf: &mut F) -> Result<()>
where
    F: FnMut(&Context, &[usize]) -> Result<()>,
{
    fn go<F>(
        ctxs: &[Context],
        vars: &[Variable],
        pi: &mut Context,
        active: Vec<usize>,
        leaf: &mut F,
    ) -> Result<()>
    where
        F: FnMut(&Context, &[usize]) -> Result<()>,
    {
        let mut counts: BTreeMap<VarId, usize> = BTreeMap::new();
        for &i in &active {
            if !pi.entails(&ctxs[i]) {
                for v in ctxs[i].vars().filter(|v| !pi.contains_var(*v)) {
                    *counts.entry(v).or_default() += 1;
                }
            }
        }
        let mut pick: Option<(VarId, usize)> = None;
        for (v, c) in counts {
            if pick.is_none_or(|(_, best)| c > best) {
                pick = Some((v, c));
            }
        }
        let Some((var, _)) = pick else {
            return leaf(pi, &active);
        };
        for val in 0..vars[var.0].domain_size() {
            pi.insert(var, val);
            let next = active
                .iter()
                .copied()
                .filter(|&i| ctxs[i].get(var).is_none_or(|x| x == val))
                .collect();
            go(ctxs, vars, pi, next, leaf)?;
            pi.remove(var);
        }
        Ok(())
    }
    go(
        ctxs,
        vars,
        &mut Context::new(),
        (0..ctxs.len()).collect(),
        leaf,
    )
}

fn bump(created: &mut usize, cap: usize) -> Result<()> {
    *created += 1;
    if *created > cap {
        return Err(Error::ResourceLimit(format!(
            "a single step emitted more than {} rules",
            cap
        )));
    }
    Ok(())
}

/// Replaces the rules with `e` in the body by products over compatible rules.
///
/// For each value `v` of `e` the space is split into regions where a fixed set
/// of the `e=v` rules applies; each region with a non-empty set yields one rule
/// whose head is the union of their heads and whose probability is their
/// product. The new rules are pairwise incompatible and cover exactly the
/// cases the originals covered.
pub fn combine_for_variable<P: Prob>(
    rules: &[Rule<P>],
    e: VarId,
    vars: &[Variable],
) -> Result<Vec<Rule<P>>> {
    combine_capped(rules, e, vars, DEFAULT_STEP_CAP).map(|(r, _)| r)
}

fn combine_capped<P: Prob>(
    rules: &[Rule<P>],
    e: VarId,
    vars: &[Variable],
    cap: usize,
) -> Result<(Vec<Rule<P>>, usize)> {
    let (with_e, mut out): (Vec<&Rule<P>>, Vec<&Rule<P>>) =
        rules.iter().partition(|r| r.body.contains_var(e));
    let mut out: Vec<Rule<P>> = out.drain(..).cloned().collect();
    let mut created = 0;
    for v in 0..vars[e.0].domain_size() {
        let group: Vec<&Rule<P>> = with_e
            .iter()
            .copied()
            .filter(|r| r.body.get(e) == Some(v))
            .collect();
        let ctxs: Vec<Context> = group.iter().map(|r| r.context().without(e)).collect();
        split(&ctxs, vars, &mut |pi, active| {
            if active.is_empty() {
                return Ok(());
            }
            let mut head = Context::new();
            let mut p = Interval::one();
            for &i in active {
                head = head.union(&group[i].head).expect("decided by one region");
                p = p.mul(&group[i].bounds());
            }
            let body = pi
                .with(e, v)
                .expect("e is never split on")
                .minus_vars(&head);
            bump(&mut created, cap)?;
            out.push(Rule::interval(head, body, p.lo, p.hi));
            Ok(())
        })?;
    }
    Ok((out, created))
}

/// Sums `e` out of the rules mentioning it.
///
/// The space of the other variables is split into regions where a fixed set
/// of those rules applies for each value of `e`; each region yields one rule
/// whose probability is the sum over values of the product of that value's
/// rules. Its head holds the region's assignments to variables that were in
/// those rules' heads. Empty-head results equal to 1 are dropped.
pub fn eliminate_variable<P: Prob>(
    rules: &[Rule<P>],
    e: VarId,
    vars: &[Variable],
) -> Result<Vec<Rule<P>>> {
    eliminate_capped(rules, e, vars, DEFAULT_STEP_CAP).map(|(r, _)| r)
}

fn eliminate_capped<P: Prob>(
    rules: &[Rule<P>],
    e: VarId,
    vars: &[Variable],
    cap: usize,
) -> Result<(Vec<Rule<P>>, usize)> {
    let (with_e, rest): (Vec<&Rule<P>>, Vec<&Rule<P>>) = rules.iter().partition(|r| r.mentions(e));
    let mut out: Vec<Rule<P>> = rest.into_iter().cloned().collect();
    let ctxs: Vec<Context> = with_e.iter().map(|r| r.context().without(e)).collect();
    let evals: Vec<usize> = with_e
        .iter()
        .map(|r| r.context().get(e).expect("rule mentions e"))
        .collect();
    let show = |ctx: &Context| crate::model::show_context(vars, ctx);
    let mut created = 0;
    split(&ctxs, vars, &mut |pi, active| {
        let mut sum = Interval::zero();
        for v in 0..vars[e.0].domain_size() {
            let mut p = Interval::one();
            let mut owners = 0;
            for &i in active.iter().filter(|&&i| evals[i] == v) {
                p = p.mul(&with_e[i].bounds());
                owners += usize::from(with_e[i].head.contains_var(e));
            }
            if owners != 1 {
                return Err(Error::MalformedRuleBase(format!(
                    "{} rules for {}={} apply in {}",
                    owners,
                    vars[e.0].name,
                    vars[e.0].values[v],
                    show(pi)
                )));
            }
            sum = sum.add(&p);
        }
        let head = pi.restrict(|x| active.iter().any(|&i| with_e[i].head.contains_var(x)));
        let body = pi.minus_vars(&head);
        if head.is_empty()
            && sum.lo.near(&P::one(), PROB_TOLERANCE)
            && sum.hi.near(&P::one(), PROB_TOLERANCE)
        {
            return Ok(());
        }
        bump(&mut created, cap)?;
        out.push(Rule::interval(head, body, sum.lo, sum.hi));
        Ok(())
    })?;
    Ok((out, created))
}

/// Working state of one rule-based elimination run. Rules carry intervals, so
/// a run on an approximating base computes lower and upper products together.
#[derive(Clone, Debug)]
pub struct PartialEvaluator<P = f64> {
    variables: Vec<Variable>,
    evidence: Context,
    rules: Vec<Rule<P>>,
    eliminated: Vec<VarId>,
    stats: InferenceStats,
    cap: usize,
}

impl<P: Prob> PartialEvaluator<P> {
    pub fn new(rb: &RuleBase<P>, evidence: &Context) -> Result<Self> {
        for (v, val) in evidence.iter() {
            if v.0 >= rb.num_vars() || val >= rb.domain_size(v) {
                return Err(Error::InvalidQuery(format!(
                    "evidence {}={} out of range",
                    v, val
                )));
            }
        }
        let rules = apply_evidence(rb.rules(), evidence);
        let mut stats = InferenceStats::default();
        stats.record(StepStats {
            rules_active: rules.len(),
            ..StepStats::default()
        });
        Ok(PartialEvaluator {
            variables: rb.variables().to_vec(),
            evidence: evidence.clone(),
            rules,
            eliminated: Vec::new(),
            stats,
            cap: DEFAULT_STEP_CAP,
        })
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = cap;
        self
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn evidence(&self) -> &Context {
        &self.evidence
    }

    pub fn rules(&self) -> &[Rule<P>] {
        &self.rules
    }

    pub fn eliminated(&self) -> &[VarId] {
        &self.eliminated
    }

    pub fn stats(&self) -> &InferenceStats {
        &self.stats
    }

    pub fn into_stats(self) -> InferenceStats {
        self.stats
    }

    /// Unobserved variables not yet summed out.
    pub fn remaining(&self) -> Vec<VarId> {
        (0..self.variables.len())
            .map(VarId)
            .filter(|v| !self.evidence.contains_var(*v) && !self.eliminated.contains(v))
            .collect()
    }

    /// Swaps in a rewritten working set, e.g. a simplified one.
    pub fn replace_rules(&mut self, rules: Vec<Rule<P>>) {
        self.rules = rules;
    }

    fn check_remaining(&self, e: VarId) -> Result<()> {
        if e.0 >= self.variables.len() || !self.remaining().contains(&e) {
            return Err(Error::InvalidOrdering(format!(
                "{} is observed, unknown or already eliminated",
                e
            )));
        }
        Ok(())
    }

    /// Runs only the combine step for `e`; returns the number of rules emitted.
    pub fn combine(&mut self, e: VarId) -> Result<usize> {
        self.check_remaining(e)?;
        let (rules, created) = combine_capped(&self.rules, e, &self.variables, self.cap)?;
        self.rules = rules;
        Ok(created)
    }

    /// Combines and then sums out `e`.
    pub fn eliminate(&mut self, e: VarId) -> Result<()> {
        let combined = self.combine(e)?;
        let (rules, created) = eliminate_capped(&self.rules, e, &self.variables, self.cap)?;
        self.rules = rules;
        self.eliminated.push(e);
        self.stats.record(StepStats {
            variable: Some(e),
            rules_created: combined + created,
            rules_active: self.rules.len(),
            factor_entries: 0,
        });
        Ok(())
    }

    /// Product of the working rules applicable in `ctx`.
    pub fn applicable_product(&self, ctx: &Context) -> Interval<P> {
        crate::model::applicable_product(&self.rules, ctx)
    }

    /// Unnormalised `P(query=v & evidence)` per value, once only `query` remains.
    pub fn joint(&self, query: VarId) -> Result<Vec<Interval<P>>> {
        let remaining = self.remaining();
        if remaining != [query] {
            return Err(Error::InvalidOrdering(format!(
                "variables other than the query remain: {:?}",
                remaining
            )));
        }
        Ok((0..self.variables[query.0].domain_size())
            .map(|v| self.applicable_product(&Context::single(query, v)))
            .collect())
    }
}

/// Posterior of `query` by rule-based elimination over an exact rule base.
pub fn compute_belief<P: Prob>(
    rb: &RuleBase<P>,
    query: VarId,
    evidence: &Context,
    order: &EliminationOrdering,
) -> Result<(Distribution<P>, InferenceStats)> {
    if !rb.is_exact() {
        return Err(Error::MalformedRuleBase(
            "exact inference needs an exact rule base".to_string(),
        ));
    }
    check_query(rb.variables(), query, evidence)?;
    order.check(rb.num_vars(), query, evidence)?;
    let mut run = PartialEvaluator::new(rb, evidence)?;
    for &e in order.as_slice() {
        run.eliminate(e)?;
    }
    let masses = run.joint(query)?.into_iter().map(|i| i.lo).collect();
    Ok((Distribution::normalize(query, masses)?, run.into_stats()))
}
