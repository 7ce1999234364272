use std::collections::BTreeMap;

use crate::model::{Context, Interval, Rule, RuleBase, RuleBaseKind, VarId};
use crate::scalar::Prob;

/// Half-width of the neighbourhoods of 0 and 1 that the extreme guard protects.
pub const EXTREME_EPS: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompressOptions {
    pub threshold: f64,
    /// Refuse merges whose interval straddles the edge of the neighbourhood
    /// of 0 or 1.
    pub extreme_guard: bool,
}

impl CompressOptions {
    pub fn new(threshold: f64) -> Self {
        CompressOptions {
            threshold,
            extreme_guard: false,
        }
    }

    /// Whether a merged interval may be kept.
    pub fn accepts<P: Prob>(&self, merged: &Interval<P>) -> bool {
        let width = merged.width();
        let ok = if self.threshold <= 0.0 {
            width == P::zero()
        } else {
            width <= P::from_f64(self.threshold + P::SLACK)
        };
        ok && !(self.extreme_guard && merged.crosses_extreme(EXTREME_EPS))
    }
}

/// Greedy restricted resolution.
///
/// Repeatedly finds a family `{h <- b & e=v : [l_v, u_v] | v in val(e)}` with
/// one identical head `h` and one identical rest-of-body `b`, and replaces it
/// by `h <- b : [min l_v, max u_v]` when that interval's width is at most
/// `threshold`. Families are tried by head variable, then rule position, then
/// `e`. With threshold 0 only equal probabilities merge, so every complete
/// context keeps its probability.
///
/// The choice is myopic: an earlier merge can block a later, larger one.
pub fn extract_structure<P: Prob>(rb: &RuleBase<P>, threshold: f64) -> RuleBase<P> {
    extract_structure_with(rb, CompressOptions::new(threshold))
}

type Indexed<P> = Vec<(usize, Rule<P>)>;

pub fn extract_structure_with<P: Prob>(rb: &RuleBase<P>, opts: CompressOptions) -> RuleBase<P> {
    // Merges never cross heads, so each head is compressed on its own.
    let mut groups: BTreeMap<(Option<VarId>, Context), Indexed<P>> = BTreeMap::new();
    for (i, r) in rb.rules().iter().enumerate() {
        groups
            .entry((r.head.vars().next(), r.head.clone()))
            .or_default()
            .push((i, r.clone()));
    }
    let mut out: Vec<(usize, Rule<P>)> = Vec::with_capacity(rb.rules().len());
    for (_, mut group) in groups {
        while let Some((members, merged)) = find_merge(rb, &group, &opts) {
            let pos = group[members[0]].0;
            for &m in members.iter().rev() {
                group.remove(m);
            }
            let at = group.partition_point(|(p, _)| *p < pos);
            group.insert(at, (pos, merged));
        }
        out.extend(group);
    }
    out.sort_by_key(|(p, _)| *p);
    let kind = if rb.is_exact() && opts.threshold <= 0.0 {
        RuleBaseKind::Exact
    } else {
        RuleBaseKind::Approximating
    };
    rb.with_rules(out.into_iter().map(|(_, r)| r).collect(), kind)
}

/// First acceptable family in the group, as (sorted member indices, merged rule).
fn find_merge<P: Prob>(
    rb: &RuleBase<P>,
    group: &[(usize, Rule<P>)],
    opts: &CompressOptions,
) -> Option<(Vec<usize>, Rule<P>)> {
    for (_, r) in group {
        for (e, _) in r.body.iter() {
            let rest = r.body.without(e);
            let mut family: Vec<Option<usize>> = vec![None; rb.domain_size(e)];
            let mut clash = false;
            for (j, (_, s)) in group.iter().enumerate() {
                let Some(v) = s.body.get(e) else { continue };
                if s.body.len() == r.body.len() && s.body.without(e) == rest {
                    clash |= family[v].replace(j).is_some();
                }
            }
            if clash || family.iter().any(Option::is_none) {
                continue;
            }
            let mut members: Vec<usize> = family.into_iter().flatten().collect();
            members.sort_unstable();
            let merged = members
                .iter()
                .map(|&j| group[j].1.bounds())
                .reduce(|a, b| a.hull(&b))
                .expect("non-empty family");
            if opts.accepts(&merged) {
                let mut rule = Rule::exact(r.head.clone(), rest, merged.lo.clone());
                rule.set_bounds(merged);
                return Some((members, rule));
            }
        }
    }
    None
}

/// Rules per head variable, in variable order.
pub fn rule_counts<P: Prob>(rb: &RuleBase<P>) -> Vec<usize> {
    rb.var_ids().map(|v| rb.rules_for(v).len()).collect()
}
