use crate::error::{Error, Result};
use crate::model::{Context, Interval, Rule, RuleBase, RuleBaseKind, VarId, Variable};
use crate::scalar::Prob;

/// Pieces of `body` lying outside `region`, for a `body` compatible with it.
/// The assignments of `region` missing from `body` are negated one at a time,
/// each piece fixing the earlier ones, so the pieces are pairwise disjoint.
pub(crate) fn outside(body: &Context, region: &Context, vars: &[Variable]) -> Vec<Context> {
    let mut pieces = Vec::new();
    let mut prefix = body.clone();
    for (y, w) in region.iter().filter(|(y, _)| !body.contains_var(*y)) {
        for other in (0..vars[y.0].domain_size()).filter(|&o| o != w) {
            pieces.push(prefix.with(y, other).expect("y is unassigned in prefix"));
        }
        prefix.insert(y, w);
    }
    pieces
}

/// Replaces the rules with head `head` over the region `region` by one rule
/// `head <- region` whose interval is the hull of every same-head rule
/// compatible with the region. Same-head rules inside the region are removed;
/// those straddling it keep only their pieces outside it. The new rule takes
/// the place of the first removed rule.
///
/// Fails when a rule whose head shares a variable with `head` but has a
/// different shape overlaps the region, since the same-head rules then do not
/// account for every case there.
pub(crate) fn widen<P: Prob>(
    rules: &[Rule<P>],
    vars: &[Variable],
    head: &Context,
    region: &Context,
) -> Result<(Vec<Rule<P>>, Interval<P>)> {
    let scope = head.union(region);
    let Some(scope) = scope.filter(|_| !head.shares_var(region)) else {
        return Err(Error::InvalidTarget("head and body overlap".to_string()));
    };
    let mut hull: Option<Interval<P>> = None;
    for r in rules {
        if r.head == *head {
            if r.body.compatible(region) {
                hull = Some(match hull {
                    Some(h) => h.hull(&r.bounds()),
                    None => r.bounds(),
                });
            }
        } else if r.head.shares_var(head)
            && r.head.vars().ne(head.vars())
            && r.context().compatible(&scope)
        {
            return Err(Error::InvalidTarget(
                "a rule with a different head shape overlaps the region".to_string(),
            ));
        }
    }
    let Some(hull) = hull else {
        return Err(Error::InvalidTarget(
            "no rule covers the region".to_string(),
        ));
    };
    let mut out = Vec::with_capacity(rules.len());
    let mut placed = false;
    for r in rules {
        if r.head != *head || !r.body.compatible(region) {
            out.push(r.clone());
        } else if r.body.entails(region) {
            if !placed {
                out.push(Rule::interval(
                    head.clone(),
                    region.clone(),
                    hull.lo.clone(),
                    hull.hi.clone(),
                ));
                placed = true;
            }
        } else {
            for body in outside(&r.body, region, vars) {
                let mut piece = r.clone();
                piece.body = body;
                out.push(piece);
            }
        }
    }
    if !placed {
        out.push(Rule::interval(
            head.clone(),
            region.clone(),
            hull.lo.clone(),
            hull.hi.clone(),
        ));
    }
    Ok((out, hull))
}

/// Removes the condition on `var` from rule `rule_id`, widening its interval
/// to cover every same-head rule it now overlaps.
pub fn drop_condition<P: Prob>(
    rb: &RuleBase<P>,
    rule_id: usize,
    var: VarId,
) -> Result<RuleBase<P>> {
    let Some(rule) = rb.rules().get(rule_id) else {
        return Err(Error::InvalidTarget(format!("no rule {}", rule_id)));
    };
    if !rule.body.contains_var(var) {
        return Err(Error::InvalidTarget(format!(
            "{} is not in the body of rule {}",
            rb.variable(var).name,
            rule_id
        )));
    }
    let (rules, _) = widen(
        rb.rules(),
        rb.variables(),
        &rule.head,
        &rule.body.without(var),
    )?;
    Ok(rb.with_rules(rules, RuleBaseKind::Approximating))
}

/// For each value `v` of `e`, the first rule with head `head` whose body
/// assigns `e=v` and otherwise lies within `body`.
pub(crate) fn family<P: Prob>(
    rules: &[Rule<P>],
    vars: &[Variable],
    head: &Context,
    body: &Context,
    e: VarId,
) -> Result<Vec<usize>> {
    (0..vars[e.0].domain_size())
        .map(|v| {
            let fits = |r: &Rule<P>| {
                r.head == *head && r.body.get(e) == Some(v) && body.entails(&r.body.without(e))
            };
            rules
                .iter()
                .position(|r| fits(r) && r.body.len() == body.len() + 1)
                .or_else(|| rules.iter().position(fits))
                .ok_or_else(|| Error::IncompleteFamily {
                    variable: vars[e.0].name.clone(),
                    value: vars[e.0].values[v].clone(),
                })
        })
        .collect()
}

/// Resolves on `e`: rules `head <- b_v & e=v` with every `b_v` within `body`,
/// one per value, become `head <- body` with the hull of their intervals.
/// Same-head rules that straddle `body` keep their pieces outside it.
pub fn resolve_on<P: Prob>(
    rb: &RuleBase<P>,
    head: &Context,
    body: &Context,
    e: VarId,
) -> Result<RuleBase<P>> {
    if body.contains_var(e) || head.contains_var(e) {
        return Err(Error::InvalidTarget(format!(
            "{} must not appear in the resolvent",
            rb.variable(e).name
        )));
    }
    family(rb.rules(), rb.variables(), head, body, e)?;
    let (rules, _) = widen(rb.rules(), rb.variables(), head, body)?;
    Ok(rb.with_rules(rules, RuleBaseKind::Approximating))
}
