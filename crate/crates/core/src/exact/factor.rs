use crate::error::Result;
use crate::exact::{check_query, Distribution, EliminationOrdering, InferenceStats, StepStats};
use crate::ingest::TabularNetwork;
use crate::model::{Assignments, Context, VarId};
use crate::scalar::Prob;

/// Dense table over a scope sorted by variable id; the last variable varies fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct Factor<P = f64> {
    scope: Vec<(VarId, usize)>,
    table: Vec<P>,
}

impl<P: Prob> Factor<P> {
    /// `scope` must be sorted by id and `table` hold one entry per assignment.
    pub fn new(scope: Vec<(VarId, usize)>, table: Vec<P>) -> Self {
        debug_assert!(scope.windows(2).all(|w| w[0].0 < w[1].0));
        debug_assert_eq!(table.len(), scope.iter().map(|s| s.1).product::<usize>());
        Factor { scope, table }
    }

    pub fn constant(p: P) -> Self {
        Factor::new(Vec::new(), vec![p])
    }

    /// The table of `var` as a factor over its family.
    pub fn from_cpt(net: &TabularNetwork<P>, var: VarId) -> Self {
        let mut vars: Vec<VarId> = net.cpt(var).parents.clone();
        vars.push(var);
        vars.sort();
        let scope: Vec<(VarId, usize)> = vars.iter().map(|&v| (v, net.domain_size(v))).collect();
        let table = Assignments::new(scope.clone(), Context::new())
            .map(|ctx| net.conditional(var, &ctx).expect("family is assigned"))
            .collect();
        Factor::new(scope, table)
    }

    pub fn scope(&self) -> impl Iterator<Item = VarId> + '_ {
        self.scope.iter().map(|s| s.0)
    }

    pub fn table(&self) -> &[P] {
        &self.table
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn mentions(&self, var: VarId) -> bool {
        self.scope.iter().any(|s| s.0 == var)
    }

    fn index(&self, ctx: &Context) -> usize {
        self.scope.iter().fold(0, |idx, &(v, n)| {
            idx * n + ctx.get(v).expect("context covers the scope")
        })
    }

    /// Entry for the scope's assignment in `ctx`.
    pub fn value(&self, ctx: &Context) -> &P {
        &self.table[self.index(ctx)]
    }

    fn build(scope: Vec<(VarId, usize)>, f: impl Fn(&Context) -> P) -> Self {
        let table = Assignments::new(scope.clone(), Context::new())
            .map(|ctx| f(&ctx))
            .collect();
        Factor::new(scope, table)
    }

    pub fn product(&self, other: &Factor<P>) -> Factor<P> {
        let mut scope = self.scope.clone();
        scope.extend(other.scope.iter().copied());
        scope.sort();
        scope.dedup();
        Factor::build(scope, |ctx| {
            self.value(ctx).clone() * other.value(ctx).clone()
        })
    }

    pub fn sum_out(&self, var: VarId) -> Factor<P> {
        let Some(&(_, n)) = self.scope.iter().find(|s| s.0 == var) else {
            return self.clone();
        };
        let scope: Vec<(VarId, usize)> =
            self.scope.iter().copied().filter(|s| s.0 != var).collect();
        Factor::build(scope, |ctx| {
            (0..n).fold(P::zero(), |acc, val| {
                let full = ctx.with(var, val).expect("var left the scope");
                acc + self.value(&full).clone()
            })
        })
    }

    /// Fixes the observed variables and drops them from the scope.
    pub fn restrict(&self, evidence: &Context) -> Factor<P> {
        if !self.scope.iter().any(|s| evidence.contains_var(s.0)) {
            return self.clone();
        }
        let scope: Vec<(VarId, usize)> = self
            .scope
            .iter()
            .copied()
            .filter(|s| !evidence.contains_var(s.0))
            .collect();
        Factor::build(scope, |ctx| {
            let full = ctx.union(evidence).expect("disjoint scopes");
            self.value(&full).clone()
        })
    }
}

/// Baseline variable elimination over the network's tables.
pub fn ve_posterior<P: Prob>(
    net: &TabularNetwork<P>,
    query: VarId,
    evidence: &Context,
    order: &EliminationOrdering,
) -> Result<(Distribution<P>, InferenceStats)> {
    check_query(net.variables(), query, evidence)?;
    order.check(net.num_vars(), query, evidence)?;
    let mut factors: Vec<Factor<P>> = net
        .var_ids()
        .map(|v| Factor::from_cpt(net, v).restrict(evidence))
        .collect();
    let mut stats = InferenceStats::default();
    for &e in order.as_slice() {
        let (mentioning, rest): (Vec<_>, Vec<_>) = factors.into_iter().partition(|f| f.mentions(e));
        let joined = mentioning
            .iter()
            .fold(Factor::constant(P::one()), |acc, f| acc.product(f));
        let entries = joined.len();
        factors = rest;
        factors.push(joined.sum_out(e));
        stats.record(StepStats {
            variable: Some(e),
            rules_created: 0,
            rules_active: 0,
            factor_entries: entries,
        });
    }
    let joint = factors
        .iter()
        .fold(Factor::constant(P::one()), |acc, f| acc.product(f));
    stats.record(StepStats {
        variable: None,
        rules_created: 0,
        rules_active: 0,
        factor_entries: joint.len(),
    });
    let masses = (0..net.domain_size(query))
        .map(|v| joint.value(&Context::single(query, v)).clone())
        .collect();
    Ok((Distribution::normalize(query, masses)?, stats))
}
