use std::cmp::Ordering;

use crate::approx::ops::{family, widen};
use crate::ingest::CompressOptions;
use crate::model::{Context, Interval, Rule, RuleBase, RuleBaseKind, VarId, Variable};
use crate::scalar::{compensated_sum, Prob};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SimplifyStrategy {
    Drop,
    Resolve,
    Both,
}

impl SimplifyStrategy {
    fn drops(self) -> bool {
        matches!(self, SimplifyStrategy::Drop | SimplifyStrategy::Both)
    }

    fn resolves(self) -> bool {
        matches!(self, SimplifyStrategy::Resolve | SimplifyStrategy::Both)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimplifyConfig {
    pub threshold: f64,
    pub strategy: SimplifyStrategy,
    pub extreme_guard: bool,
}

impl SimplifyConfig {
    pub fn new(threshold: f64, strategy: SimplifyStrategy) -> Self {
        SimplifyConfig {
            threshold,
            strategy,
            extreme_guard: false,
        }
    }

    /// Whether a rule with this interval may be produced.
    pub fn accepts<P: Prob>(&self, iv: &Interval<P>) -> bool {
        CompressOptions {
            threshold: self.threshold,
            extreme_guard: self.extreme_guard,
        }
        .accepts(iv)
    }
}

/// Greedy simplification by dropping conditions and/or resolving.
///
/// Each round tries every candidate step and applies the one producing the
/// narrowest new interval (then the largest drop in rule count, then the
/// smallest rule id and variable id). A step is allowed only if the new
/// interval passes the threshold, the rule count does not grow, and either the
/// count shrinks or the total interval width grows.
pub fn simplify<P: Prob>(rb: &RuleBase<P>, cfg: &SimplifyConfig) -> RuleBase<P> {
    let rules = simplify_rules(rb.rules(), rb.variables(), cfg);
    rb.with_rules(rules, RuleBaseKind::Approximating)
}

/// Heads eligible for simplification: non-empty, and no other head shares a
/// variable with them while having a different variable set. Such heads can
/// be simplified independently of each other.
fn clean_heads<P: Prob>(rules: &[Rule<P>]) -> Vec<Context> {
    let mut heads: Vec<Context> = Vec::new();
    for r in rules {
        if !r.head.is_empty() && !heads.contains(&r.head) {
            heads.push(r.head.clone());
        }
    }
    heads
        .iter()
        .filter(|h| {
            !heads
                .iter()
                .any(|g| g.shares_var(h) && g.vars().ne(h.vars()))
        })
        .cloned()
        .collect()
}

/// [`simplify`] over a bare rule list, e.g. an intermediate elimination state.
pub fn simplify_rules<P: Prob>(
    rules: &[Rule<P>],
    vars: &[Variable],
    cfg: &SimplifyConfig,
) -> Vec<Rule<P>> {
    let heads = clean_heads(rules);
    let mut done = vec![false; heads.len()];
    let mut out = Vec::with_capacity(rules.len());
    for r in rules {
        match heads.iter().position(|h| *h == r.head) {
            None => out.push(r.clone()),
            Some(k) => {
                if !done[k] {
                    let group: Vec<Rule<P>> =
                        rules.iter().filter(|s| s.head == r.head).cloned().collect();
                    out.extend(simplify_group(group, vars, &heads[k], cfg));
                    done[k] = true;
                }
            }
        }
    }
    out
}

/// Smallest region a resolution on `e` anchored at `anchor` can produce:
/// the union of the bodies (less `e`) of the first rule per other value of
/// `e` compatible with the anchor.
fn resolvent_body<P: Prob>(
    group: &[Rule<P>],
    vars: &[Variable],
    anchor: &Rule<P>,
    e: VarId,
) -> Option<Context> {
    let own = anchor.body.get(e)?;
    let base = anchor.body.without(e);
    let mut target = base.clone();
    for v in (0..vars[e.0].domain_size()).filter(|&v| v != own) {
        let mate = group
            .iter()
            .find(|r| r.body.get(e) == Some(v) && r.body.without(e).compatible(&base))?;
        target = target.union(&mate.body.without(e))?;
    }
    Some(target)
}

struct Candidate<P> {
    width: P,
    delta: isize,
    id: (usize, VarId, u8),
    rules: Vec<Rule<P>>,
}

impl<P: Prob> Candidate<P> {
    fn better_than(&self, other: &Candidate<P>) -> bool {
        match self.width.partial_cmp(&other.width) {
            Some(Ordering::Less) => true,
            Some(Ordering::Greater) => false,
            _ => (self.delta, self.id) < (other.delta, other.id),
        }
    }
}

fn total_width<P: Prob>(rules: &[Rule<P>]) -> P {
    compensated_sum(rules.iter().map(|r| r.width()))
}

fn simplify_group<P: Prob>(
    mut group: Vec<Rule<P>>,
    vars: &[Variable],
    head: &Context,
    cfg: &SimplifyConfig,
) -> Vec<Rule<P>> {
    // Each step shrinks the group or widens it by more than the slack, so
    // this bound is never reached in practice.
    let mut budget = 64 * (group.len() + 16);
    while budget > 0 {
        budget -= 1;
        let before = total_width(&group);
        let mut best: Option<Candidate<P>> = None;
        let consider =
            |region: Context, id: (usize, VarId, u8), best: &mut Option<Candidate<P>>| {
                let Ok((rules, hull)) = widen(&group, vars, head, &region) else {
                    return;
                };
                if !cfg.accepts(&hull) || rules.len() > group.len() {
                    return;
                }
                if rules.len() == group.len()
                    && total_width(&rules) <= before.clone() + P::from_f64(P::SLACK)
                {
                    return;
                }
                let cand = Candidate {
                    width: hull.width(),
                    delta: rules.len() as isize - group.len() as isize,
                    id,
                    rules,
                };
                if best.as_ref().is_none_or(|b| cand.better_than(b)) {
                    *best = Some(cand);
                }
            };
        for (i, r) in group.iter().enumerate() {
            for e in r.body.vars() {
                if cfg.strategy.drops() {
                    consider(r.body.without(e), (i, e, 0), &mut best);
                }
                if cfg.strategy.resolves() {
                    if let Some(target) = resolvent_body(&group, vars, r, e) {
                        if family(&group, vars, head, &target, e).is_ok() {
                            consider(target, (i, e, 1), &mut best);
                        }
                    }
                }
            }
        }
        match best {
            Some(c) => group = c.rules,
            None => break,
        }
    }
    group
}
