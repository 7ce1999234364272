use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::model::{Assignments, Context, RuleBase, VarId, PROB_TOLERANCE, SUM_TOLERANCE};
use crate::scalar::{compensated_sum, Prob};

/// Joint-space size up to which [`validate`] enumerates complete contexts.
pub const DEFAULT_MAX_ENUM: u128 = 1 << 16;

/// Node budget for the symbolic check, per variable.
const SYMBOLIC_BUDGET: usize = 1 << 22;

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    BadBounds {
        rule: usize,
    },
    /// A body variable does not precede the head variable in the ordering.
    OrderViolation {
        rule: usize,
        body_var: VarId,
        head_var: VarId,
    },
    NoApplicableRule {
        var: VarId,
        witness: Context,
    },
    OverlappingRules {
        var: VarId,
        rules: (usize, usize),
        witness: Context,
    },
    SumMismatch {
        var: VarId,
        witness: Context,
        sum: f64,
    },
}

impl Violation {
    pub fn witness(&self) -> Option<&Context> {
        match self {
            Violation::NoApplicableRule { witness, .. }
            | Violation::OverlappingRules { witness, .. }
            | Violation::SumMismatch { witness, .. } => Some(witness),
            _ => None,
        }
    }

    fn key(&self) -> (u8, usize) {
        match self {
            Violation::BadBounds { rule } => (0, *rule),
            Violation::OrderViolation { rule, .. } => (1, *rule),
            Violation::NoApplicableRule { var, .. } => (2, var.0),
            Violation::OverlappingRules { var, .. } => (3, var.0),
            Violation::SumMismatch { var, .. } => (4, var.0),
        }
    }

    /// Short snake-case label for reports.
    pub fn name(&self) -> &'static str {
        match self {
            Violation::BadBounds { .. } => "bad_bounds",
            Violation::OrderViolation { .. } => "order",
            Violation::NoApplicableRule { .. } => "no_applicable_rule",
            Violation::OverlappingRules { .. } => "overlapping_rules",
            Violation::SumMismatch { .. } => "sum_mismatch",
        }
    }

    pub fn describe<P: Prob>(&self, rb: &RuleBase<P>) -> String {
        let name = |v: &VarId| rb.variable(*v).name.clone();
        match self {
            Violation::BadBounds { rule } => {
                format!("rule {} has bounds outside 0 <= lower <= upper <= 1", rule)
            }
            Violation::OrderViolation {
                rule,
                body_var,
                head_var,
            } => format!(
                "rule {}: body variable {} does not precede head variable {}",
                rule,
                name(body_var),
                name(head_var)
            ),
            Violation::NoApplicableRule { var, witness } => format!(
                "no rule for {} applies in {}",
                name(var),
                rb.show_context(witness)
            ),
            Violation::OverlappingRules {
                var,
                rules,
                witness,
            } => format!(
                "rules {} and {} for {} both apply in {}",
                rules.0,
                rules.1,
                name(var),
                rb.show_context(witness)
            ),
            Violation::SumMismatch { var, witness, sum } => format!(
                "probabilities for {} sum to {} in {}",
                name(var),
                sum,
                rb.show_context(witness)
            ),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    Enumeration,
    Symbolic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub strategy: Strategy,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks every rule-base invariant. Complete contexts are enumerated when
/// there are at most `max_enum` of them; otherwise each variable's rules are
/// checked for exclusivity and coverage by splitting on the variables their
/// conditions mention. At most one witness is reported per variable and kind.
pub fn validate<P: Prob>(rb: &RuleBase<P>, max_enum: u128) -> Result<ValidationReport> {
    validate_with(rb, max_enum, true)
}

/// As [`validate`]; `check_order` toggles the body-precedes-head check, which
/// intermediate rule sets are exempt from.
pub fn validate_with<P: Prob>(
    rb: &RuleBase<P>,
    max_enum: u128,
    check_order: bool,
) -> Result<ValidationReport> {
    let mut out = Collector::default();
    let one = P::one() + P::from_f64(PROB_TOLERANCE);
    for (id, r) in rb.rules().iter().enumerate() {
        if r.lower < P::zero() || r.upper > one || r.lower > r.upper {
            out.push(Violation::BadBounds { rule: id });
        }
        if check_order {
            for h in r.head.vars() {
                if let Some(b) = r.body.vars().find(|&b| b >= h) {
                    out.push(Violation::OrderViolation {
                        rule: id,
                        body_var: b,
                        head_var: h,
                    });
                }
            }
        }
    }
    let strategy = if rb.joint_space() <= max_enum {
        enumerate_check(rb, &mut out);
        Strategy::Enumeration
    } else {
        for var in rb.var_ids() {
            symbolic_check(rb, var, &mut out)?;
        }
        Strategy::Symbolic
    };
    let mut violations = out.items;
    violations.sort_by_key(|v| v.key());
    Ok(ValidationReport {
        strategy,
        violations,
    })
}

#[derive(Default)]
struct Collector {
    items: Vec<Violation>,
    seen: BTreeSet<(u8, usize)>,
}

impl Collector {
    fn push(&mut self, v: Violation) {
        if self.seen.insert(v.key()) {
            self.items.push(v);
        }
    }
}

fn single_headed<P: Prob>(rb: &RuleBase<P>, var: VarId) -> bool {
    rb.rules()
        .iter()
        .filter(|r| r.head.contains_var(var))
        .all(|r| r.head.len() == 1)
}

fn enumerate_check<P: Prob>(rb: &RuleBase<P>, out: &mut Collector) {
    let vars: Vec<VarId> = rb.var_ids().collect();
    let sum_vars: Vec<bool> = vars
        .iter()
        .map(|&v| rb.is_exact() && single_headed(rb, v))
        .collect();
    for ctx in Assignments::over(rb, &vars, Context::new()) {
        for &var in &vars {
            let applicable: Vec<usize> = rb
                .rules()
                .iter()
                .enumerate()
                .filter(|(_, r)| r.head.contains_var(var) && r.applies_in(&ctx))
                .map(|(i, _)| i)
                .collect();
            match applicable.len() {
                0 => out.push(Violation::NoApplicableRule {
                    var,
                    witness: ctx.clone(),
                }),
                1 => {}
                _ => out.push(Violation::OverlappingRules {
                    var,
                    rules: (applicable[0], applicable[1]),
                    witness: ctx.clone(),
                }),
            }
        }
        for (&var, &check) in vars.iter().zip(&sum_vars) {
            // one sum per assignment of the other variables
            if !check || ctx.get(var) != Some(0) {
                continue;
            }
            let mut probs = Vec::new();
            for val in 0..rb.domain_size(var) {
                let c = {
                    let mut c = ctx.clone();
                    c.set(var, val);
                    c
                };
                let mut it = rb
                    .rules()
                    .iter()
                    .filter(|r| r.head.contains_var(var) && r.applies_in(&c));
                match (it.next(), it.next()) {
                    (Some(r), None) => probs.push(r.lower.clone()),
                    _ => break,
                }
            }
            if probs.len() == rb.domain_size(var) {
                let sum = compensated_sum(probs);
                if !sum.near(&P::one(), SUM_TOLERANCE) {
                    out.push(Violation::SumMismatch {
                        var,
                        witness: ctx.clone(),
                        sum: sum.to_f64(),
                    });
                }
            }
        }
    }
}

struct Symbolic<'a, P> {
    rb: &'a RuleBase<P>,
    var: VarId,
    /// (rule id, condition without `var`, value of `var`)
    rules: Vec<(usize, Context, usize)>,
    check_sum: bool,
    nodes: usize,
}

fn complete_witness<P: Prob>(rb: &RuleBase<P>, partial: &Context) -> Context {
    let mut c = partial.clone();
    for v in rb.var_ids() {
        if !c.contains_var(v) {
            c.set(v, 0);
        }
    }
    c
}

fn symbolic_check<P: Prob>(rb: &RuleBase<P>, var: VarId, out: &mut Collector) -> Result<()> {
    let rules = rb
        .rules()
        .iter()
        .enumerate()
        .filter_map(|(i, r)| {
            r.head
                .get(var)
                .map(|val| (i, r.context().without(var), val))
        })
        .collect();
    let mut s = Symbolic {
        rb,
        var,
        rules,
        check_sum: rb.is_exact() && single_headed(rb, var),
        nodes: 0,
    };
    s.visit(&Context::new(), out)
}

impl<P: Prob> Symbolic<'_, P> {
    fn visit(&mut self, partial: &Context, out: &mut Collector) -> Result<()> {
        self.nodes += 1;
        if self.nodes > SYMBOLIC_BUDGET {
            return Err(Error::EnumerationBudgetExceeded {
                needed: self.nodes as u128,
                cap: SYMBOLIC_BUDGET as u128,
            });
        }
        let arity = self.rb.domain_size(self.var);
        let mut leaf = true;
        let mut broken = false;
        let mut branch_on: Option<VarId> = None;
        let mut chosen = Vec::with_capacity(arity);
        for val in 0..arity {
            let cands: Vec<&(usize, Context, usize)> = self
                .rules
                .iter()
                .filter(|(_, cond, v)| *v == val && cond.compatible(partial))
                .collect();
            let witness = || complete_witness(self.rb, &partial.with(self.var, val).unwrap());
            if cands.is_empty() {
                out.push(Violation::NoApplicableRule {
                    var: self.var,
                    witness: witness(),
                });
                broken = true;
                continue;
            }
            let entailed: Vec<usize> = cands
                .iter()
                .filter(|(_, cond, _)| partial.entails(cond))
                .map(|(i, _, _)| *i)
                .collect();
            if entailed.len() >= 2 {
                out.push(Violation::OverlappingRules {
                    var: self.var,
                    rules: (entailed[0], entailed[1]),
                    witness: witness(),
                });
                broken = true;
                continue;
            }
            if entailed.len() == 1 && cands.len() == 1 {
                chosen.push(entailed[0]);
                continue;
            }
            leaf = false;
            for (_, cond, _) in &cands {
                if let Some(v) = cond.vars().find(|v| !partial.contains_var(*v)) {
                    branch_on = Some(branch_on.map_or(v, |b| b.min(v)));
                }
            }
        }
        if broken && leaf {
            return Ok(());
        }
        if leaf {
            if self.check_sum {
                let sum = compensated_sum(chosen.iter().map(|&i| self.rb.rule(i).lower.clone()));
                if !sum.near(&P::one(), SUM_TOLERANCE) {
                    out.push(Violation::SumMismatch {
                        var: self.var,
                        witness: complete_witness(self.rb, &partial.with(self.var, 0).unwrap()),
                        sum: sum.to_f64(),
                    });
                }
            }
            return Ok(());
        }
        let split = branch_on.expect("non-leaf node has an unassigned condition variable");
        for val in 0..self.rb.domain_size(split) {
            self.visit(&partial.with(split, val).unwrap(), out)?;
        }
        Ok(())
    }
}
