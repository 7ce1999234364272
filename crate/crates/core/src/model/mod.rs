//! Core domain types: variables, contexts, rules, and rule bases.

mod context;
mod rule;
mod validate;

pub use context::{Context, VarId};
pub use rule::{are_compatible, is_applicable, Interval, Rule};
pub use validate::{
    validate, Strategy as ValidationStrategy, ValidationReport, Violation, DEFAULT_MAX_ENUM,
};

use crate::error::{Error, Result};
use crate::scalar::{product, Prob};

/// Tolerance on the upper end of a probability (`upper <= 1 + tol`).
pub const PROB_TOLERANCE: f64 = 1e-9;
/// Absolute tolerance for sum-to-one checks.
pub const SUM_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    pub values: Vec<String>,
}

impl Variable {
    pub fn new(name: impl Into<String>, values: &[&str]) -> Self {
        Variable {
            name: name.into(),
            values: values.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn binary(name: impl Into<String>) -> Self {
        Variable::new(name, &["t", "f"])
    }

    pub fn domain_size(&self) -> usize {
        self.values.len()
    }

    pub fn value_index(&self, value: &str) -> Option<usize> {
        self.values.iter().position(|v| v == value)
    }
}

pub(crate) fn check_variables(vars: &[Variable]) -> Result<()> {
    for (i, v) in vars.iter().enumerate() {
        if v.values.len() < 2 {
            return Err(Error::MalformedRuleBase(format!(
                "variable {} needs at least two values",
                v.name
            )));
        }
        for (j, a) in v.values.iter().enumerate() {
            if v.values[..j].contains(a) {
                return Err(Error::MalformedRuleBase(format!(
                    "duplicate value {} in domain of {}",
                    a, v.name
                )));
            }
        }
        if vars[..i].iter().any(|w| w.name == v.name) {
            return Err(Error::MalformedRuleBase(format!(
                "duplicate variable {}",
                v.name
            )));
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RuleBaseKind {
    Exact,
    Approximating,
}

/// A variable ordering plus a set of rules. Rule ids are positions in `rules`.
#[derive(Clone, Debug, PartialEq)]
pub struct RuleBase<P = f64> {
    variables: Vec<Variable>,
    rules: Vec<Rule<P>>,
    kind: RuleBaseKind,
}

impl<P: Prob> RuleBase<P> {
    /// Checks the per-rule invariants. Global ones (exclusivity, coverage,
    /// sums) are the job of [`validate`].
    pub fn new(variables: Vec<Variable>, rules: Vec<Rule<P>>, kind: RuleBaseKind) -> Result<Self> {
        check_variables(&variables)?;
        let rb = RuleBase {
            variables,
            rules,
            kind,
        };
        for (id, r) in rb.rules.iter().enumerate() {
            rb.check_rule(id, r)?;
        }
        Ok(rb)
    }

    fn check_rule(&self, id: usize, r: &Rule<P>) -> Result<()> {
        for (var, val) in r.head.iter().chain(r.body.iter()) {
            let v = self.variables.get(var.0).ok_or_else(|| {
                Error::MalformedRuleBase(format!("rule {} mentions unknown variable {}", id, var))
            })?;
            if val >= v.domain_size() {
                return Err(Error::MalformedRuleBase(format!(
                    "rule {} assigns out-of-domain value to {}",
                    id, v.name
                )));
            }
        }
        if r.head.shares_var(&r.body) {
            return Err(Error::MalformedRuleBase(format!(
                "rule {} mentions a variable in both head and body",
                id
            )));
        }
        let one = P::one() + P::from_f64(PROB_TOLERANCE);
        if r.lower < P::zero() || r.upper > one || r.lower > r.upper {
            return Err(Error::MalformedRuleBase(format!(
                "rule {} has invalid bounds [{:?}, {:?}]",
                id, r.lower, r.upper
            )));
        }
        if self.kind == RuleBaseKind::Exact && r.lower != r.upper {
            return Err(Error::MalformedRuleBase(format!(
                "rule {} is an interval in an exact rule base",
                id
            )));
        }
        Ok(())
    }

    /// Same variables, new rules; skips the per-rule checks.
    pub(crate) fn with_rules(&self, rules: Vec<Rule<P>>, kind: RuleBaseKind) -> RuleBase<P> {
        RuleBase {
            variables: self.variables.clone(),
            rules,
            kind,
        }
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, id: VarId) -> &Variable {
        &self.variables[id.0]
    }

    pub fn var_ids(&self) -> impl Iterator<Item = VarId> {
        (0..self.variables.len()).map(VarId)
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.variables
            .iter()
            .position(|v| v.name == name)
            .map(VarId)
    }

    pub fn domain_size(&self, id: VarId) -> usize {
        self.variables[id.0].domain_size()
    }

    pub fn rules(&self) -> &[Rule<P>] {
        &self.rules
    }

    pub fn rule(&self, id: usize) -> &Rule<P> {
        &self.rules[id]
    }

    pub fn into_rules(self) -> Vec<Rule<P>> {
        self.rules
    }

    pub fn kind(&self) -> RuleBaseKind {
        self.kind
    }

    pub fn is_exact(&self) -> bool {
        self.kind == RuleBaseKind::Exact
    }

    /// Ids of rules with `var` in the head.
    pub fn rules_for(&self, var: VarId) -> Vec<usize> {
        self.rules
            .iter()
            .enumerate()
            .filter(|(_, r)| r.head.contains_var(var))
            .map(|(i, _)| i)
            .collect()
    }

    /// Number of complete contexts, saturating.
    pub fn joint_space(&self) -> u128 {
        joint_space(self.variables.iter().map(|v| v.domain_size()))
    }

    /// Parses `name=value`.
    pub fn assignment(&self, name: &str, value: &str) -> Option<(VarId, usize)> {
        let var = self.var_by_name(name)?;
        let val = self.variables[var.0].value_index(value)?;
        Some((var, val))
    }

    pub fn show_context(&self, ctx: &Context) -> String {
        show_context(&self.variables, ctx)
    }

    pub fn show_rule(&self, r: &Rule<P>) -> String {
        let head = if r.head.is_empty() {
            "true".to_string()
        } else {
            self.show_context(&r.head)
        };
        let nums = if r.is_exact() && self.is_exact() {
            r.lower.to_decimal()
        } else {
            format!("{}, {}", r.lower.to_decimal(), r.upper.to_decimal())
        };
        let body = self.show_context(&r.body);
        if body.is_empty() {
            format!("{} <- : {}", head, nums)
        } else {
            format!("{} <- {} : {}", head, body, nums)
        }
    }

    /// Converts the scalar type of every rule.
    pub fn map_prob<Q: Prob>(&self, f: impl Fn(&P) -> Q) -> RuleBase<Q> {
        RuleBase {
            variables: self.variables.clone(),
            rules: self.rules.iter().map(|r| r.map_prob(&f)).collect(),
            kind: self.kind,
        }
    }

    /// Interval product over every rule applicable in `ctx`, in rule-id order.
    pub fn applicable_product(&self, ctx: &Context) -> Interval<P> {
        applicable_product(&self.rules, ctx)
    }

    /// Probability interval of a complete context: the product of the one
    /// applicable rule per variable.
    pub fn complete_context_probability(&self, ctx: &Context) -> Result<Interval<P>> {
        if ctx.len() != self.variables.len() {
            return Err(Error::MalformedRuleBase(
                "context is not complete".to_string(),
            ));
        }
        let applicable: Vec<usize> = self
            .rules
            .iter()
            .enumerate()
            .filter(|(_, r)| r.applies_in(ctx))
            .map(|(i, _)| i)
            .collect();
        for var in self.var_ids() {
            let n = applicable
                .iter()
                .filter(|&&i| self.rules[i].head.contains_var(var))
                .count();
            if n != 1 {
                return Err(Error::MalformedRuleBase(format!(
                    "{} rules for {} apply in {}",
                    n,
                    self.variables[var.0].name,
                    self.show_context(ctx)
                )));
            }
        }
        let rules = applicable.iter().map(|&i| &self.rules[i]);
        let lo = product(rules.clone().map(|r| r.lower.clone()));
        let hi = product(rules.map(|r| r.upper.clone()));
        Ok(Interval::new(lo, hi))
    }
}

pub fn show_context(vars: &[Variable], ctx: &Context) -> String {
    ctx.iter()
        .map(|(v, x)| format!("{}={}", vars[v.0].name, vars[v.0].values[x]))
        .collect::<Vec<_>>()
        .join(" & ")
}

pub fn applicable_product<P: Prob>(rules: &[Rule<P>], ctx: &Context) -> Interval<P> {
    let mut acc = Interval::one();
    for r in rules.iter().filter(|r| r.applies_in(ctx)) {
        acc = acc.mul(&r.bounds());
    }
    acc
}

pub fn joint_space<I: IntoIterator<Item = usize>>(sizes: I) -> u128 {
    sizes
        .into_iter()
        .fold(1u128, |acc, s| acc.saturating_mul(s as u128))
}

/// Odometer over every assignment of a list of variables; the last variable
/// varies fastest. Each item extends `base`.
pub struct Assignments {
    vars: Vec<(VarId, usize)>,
    digits: Vec<usize>,
    base: Context,
    done: bool,
}

impl Assignments {
    pub fn new(vars: Vec<(VarId, usize)>, base: Context) -> Self {
        let done = vars.iter().any(|&(_, n)| n == 0);
        Assignments {
            digits: vec![0; vars.len()],
            vars,
            base,
            done,
        }
    }

    pub fn over<P: Prob>(rb: &RuleBase<P>, vars: &[VarId], base: Context) -> Self {
        Assignments::new(vars.iter().map(|&v| (v, rb.domain_size(v))).collect(), base)
    }
}

impl Iterator for Assignments {
    type Item = Context;

    fn next(&mut self) -> Option<Context> {
        if self.done {
            return None;
        }
        let mut ctx = self.base.clone();
        for (i, &(v, _)) in self.vars.iter().enumerate() {
            ctx.set(v, self.digits[i]);
        }
        let mut i = self.vars.len();
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            self.digits[i] += 1;
            if self.digits[i] < self.vars[i].1 {
                break;
            }
            self.digits[i] = 0;
        }
        Some(ctx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> RuleBase {
        let vars = vec![Variable::binary("a"), Variable::binary("b")];
        let (a, b) = (VarId(0), VarId(1));
        let r = |h: (VarId, usize), body: &[(VarId, usize)], p: f64| {
            Rule::exact(
                Context::single(h.0, h.1),
                Context::from_pairs(body.iter().copied()).unwrap(),
                p,
            )
        };
        let rules = vec![
            r((a, 0), &[], 0.3),
            r((a, 1), &[], 0.7),
            r((b, 0), &[(a, 0)], 0.9),
            r((b, 1), &[(a, 0)], 0.1),
            r((b, 0), &[(a, 1)], 0.2),
            r((b, 1), &[(a, 1)], 0.8),
        ];
        RuleBase::new(vars, rules, RuleBaseKind::Exact).unwrap()
    }

    #[test]
    fn single_prior_probability() {
        let vars = vec![Variable::binary("x")];
        let x = VarId(0);
        let rb = RuleBase::new(
            vars,
            vec![
                Rule::exact(Context::single(x, 0), Context::new(), 0.7),
                Rule::exact(Context::single(x, 1), Context::new(), 0.3),
            ],
            RuleBaseKind::Exact,
        )
        .unwrap();
        let p = rb
            .complete_context_probability(&Context::single(x, 0))
            .unwrap();
        assert_eq!(p, Interval::point(0.7));
    }

    #[test]
    fn chain_context_probability() {
        let rb = chain();
        let ctx = Context::from_pairs([(VarId(0), 0), (VarId(1), 0)]).unwrap();
        let p = rb.complete_context_probability(&ctx).unwrap();
        assert!((p.lo - 0.27).abs() < 1e-15 && p.is_point());
        let total: f64 = Assignments::over(&rb, &[VarId(0), VarId(1)], Context::new())
            .map(|c| rb.complete_context_probability(&c).unwrap().lo)
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn approximating_interval_product() {
        let vars = vec![Variable::binary("a"), Variable::binary("b")];
        let (a, b) = (VarId(0), VarId(1));
        let rules = vec![
            Rule::interval(Context::single(a, 0), Context::new(), 0.4, 0.8),
            Rule::interval(Context::single(a, 1), Context::new(), 0.2, 0.6),
            Rule::interval(Context::single(b, 0), Context::single(a, 0), 0.5, 0.5),
            Rule::interval(Context::single(b, 1), Context::single(a, 0), 0.5, 0.5),
            Rule::interval(Context::single(b, 0), Context::single(a, 1), 0.5, 0.5),
            Rule::interval(Context::single(b, 1), Context::single(a, 1), 0.5, 0.5),
        ];
        let rb: RuleBase = RuleBase::new(vars, rules, RuleBaseKind::Approximating).unwrap();
        let ctx = Context::from_pairs([(a, 0), (b, 0)]).unwrap();
        let p = rb.complete_context_probability(&ctx).unwrap();
        assert!((p.lo - 0.2).abs() < 1e-15 && (p.hi - 0.4).abs() < 1e-15);
    }

    #[test]
    fn missing_rule_is_malformed() {
        let rb = chain();
        let mut rules = rb.rules().to_vec();
        rules.remove(2);
        let broken = rb.with_rules(rules, RuleBaseKind::Exact);
        let ctx = Context::from_pairs([(VarId(0), 0), (VarId(1), 0)]).unwrap();
        assert!(matches!(
            broken.complete_context_probability(&ctx),
            Err(Error::MalformedRuleBase(_))
        ));
    }

    #[test]
    fn rejects_bad_bounds_and_overlap() {
        let vars = vec![Variable::binary("a"), Variable::binary("b")];
        let bad = Rule::interval(Context::single(VarId(0), 0), Context::new(), 0.6, 0.4);
        assert!(RuleBase::new(vars.clone(), vec![bad], RuleBaseKind::Approximating).is_err());
        let overlap = Rule::exact(
            Context::single(VarId(0), 0),
            Context::single(VarId(0), 0),
            0.5,
        );
        assert!(RuleBase::new(vars.clone(), vec![overlap], RuleBaseKind::Exact).is_err());
        let unary = vec![Variable::new("u", &["only"])];
        assert!(RuleBase::<f64>::new(unary, vec![], RuleBaseKind::Exact).is_err());
    }

    #[test]
    fn odometer_covers_space() {
        let all: Vec<Context> = Assignments::new(
            vec![(VarId(0), 2), (VarId(2), 3)],
            Context::single(VarId(1), 1),
        )
        .collect();
        assert_eq!(all.len(), 6);
        assert_eq!(all[1].get(VarId(2)), Some(1));
        assert!(all.iter().all(|c| c.get(VarId(1)) == Some(1)));
        assert_eq!(Assignments::new(vec![], Context::new()).count(), 1);
    }
}
