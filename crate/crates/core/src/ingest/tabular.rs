use crate::error::{Error, Result};
use crate::model::{
    check_variables, Context, Rule, RuleBase, RuleBaseKind, VarId, Variable, SUM_TOLERANCE,
};
use crate::scalar::{compensated_sum, Prob};

/// Conditional probability table of one variable. Rows are row-major over the
/// parents' domains in parent-list order (last parent varies fastest); each
/// row holds one probability per child value.
#[derive(Clone, Debug, PartialEq)]
pub struct Cpt<P = f64> {
    pub parents: Vec<VarId>,
    pub rows: Vec<Vec<P>>,
}

/// A Bayesian network with dense tables. Variable ids give the total order.
#[derive(Clone, Debug, PartialEq)]
pub struct TabularNetwork<P = f64> {
    variables: Vec<Variable>,
    cpts: Vec<Cpt<P>>,
}

impl<P: Prob> TabularNetwork<P> {
    pub fn new(variables: Vec<Variable>, cpts: Vec<Cpt<P>>) -> Result<Self> {
        check_variables(&variables).map_err(|e| Error::InvalidNetwork(e.to_string()))?;
        if cpts.len() != variables.len() {
            return Err(Error::InvalidNetwork(format!(
                "{} tables for {} variables",
                cpts.len(),
                variables.len()
            )));
        }
        let net = TabularNetwork { variables, cpts };
        for (i, cpt) in net.cpts.iter().enumerate() {
            net.check_cpt(VarId(i), cpt)?;
        }
        Ok(net)
    }

    fn check_cpt(&self, var: VarId, cpt: &Cpt<P>) -> Result<()> {
        let name = &self.variables[var.0].name;
        for (k, p) in cpt.parents.iter().enumerate() {
            if *p >= var {
                return Err(Error::InvalidNetwork(format!(
                    "parent {} of {} does not precede it",
                    p, name
                )));
            }
            if cpt.parents[..k].contains(p) {
                return Err(Error::InvalidNetwork(format!(
                    "duplicate parent of {}",
                    name
                )));
            }
        }
        let rows: usize = cpt
            .parents
            .iter()
            .map(|p| self.variables[p.0].domain_size())
            .product();
        if cpt.rows.len() != rows {
            return Err(Error::InvalidNetwork(format!(
                "table of {} has {} rows, expected {}",
                name,
                cpt.rows.len(),
                rows
            )));
        }
        let arity = self.variables[var.0].domain_size();
        for (r, row) in cpt.rows.iter().enumerate() {
            if row.len() != arity {
                return Err(Error::InvalidNetwork(format!(
                    "row {} of {} has {} entries, expected {}",
                    r,
                    name,
                    row.len(),
                    arity
                )));
            }
            if row.iter().any(|p| *p < P::zero() || *p > P::one()) {
                return Err(Error::InvalidNetwork(format!(
                    "row {} of {} has a probability outside [0, 1]",
                    r, name
                )));
            }
            let sum = compensated_sum(row.iter().cloned());
            if !sum.near(&P::one(), SUM_TOLERANCE) {
                return Err(Error::InvalidNetwork(format!(
                    "row {} of {} sums to {}",
                    r,
                    name,
                    sum.to_f64()
                )));
            }
        }
        Ok(())
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn cpts(&self) -> &[Cpt<P>] {
        &self.cpts
    }

    pub fn cpt(&self, var: VarId) -> &Cpt<P> {
        &self.cpts[var.0]
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn var_ids(&self) -> impl Iterator<Item = VarId> {
        (0..self.variables.len()).map(VarId)
    }

    pub fn domain_size(&self, var: VarId) -> usize {
        self.variables[var.0].domain_size()
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.variables
            .iter()
            .position(|v| v.name == name)
            .map(VarId)
    }

    /// Row index of the parent assignment found in `ctx`.
    pub fn row_index(&self, var: VarId, ctx: &Context) -> Option<usize> {
        let mut idx = 0;
        for p in &self.cpts[var.0].parents {
            idx = idx * self.domain_size(*p) + ctx.get(*p)?;
        }
        Some(idx)
    }

    /// Parent assignment of a row index.
    pub fn row_context(&self, var: VarId, mut row: usize) -> Context {
        let parents = &self.cpts[var.0].parents;
        let mut vals = vec![0; parents.len()];
        for (k, p) in parents.iter().enumerate().rev() {
            let n = self.domain_size(*p);
            vals[k] = row % n;
            row /= n;
        }
        Context::from_pairs(parents.iter().copied().zip(vals)).expect("distinct parents")
    }

    /// `P(var = ctx[var] | parents)` read from `ctx`.
    pub fn conditional(&self, var: VarId, ctx: &Context) -> Option<P> {
        let row = self.row_index(var, ctx)?;
        Some(self.cpts[var.0].rows[row][ctx.get(var)?].clone())
    }

    /// Product of table entries for a complete context.
    pub fn joint(&self, ctx: &Context) -> Option<P> {
        let mut acc = P::one();
        for v in self.var_ids() {
            acc = acc * self.conditional(v, ctx)?;
        }
        Some(acc)
    }

    pub fn map_prob<Q: Prob>(&self, f: impl Fn(&P) -> Q) -> TabularNetwork<Q> {
        TabularNetwork {
            variables: self.variables.clone(),
            cpts: self
                .cpts
                .iter()
                .map(|c| Cpt {
                    parents: c.parents.clone(),
                    rows: c.rows.iter().map(|r| r.iter().map(&f).collect()).collect(),
                })
                .collect(),
        }
    }

    /// Table size per variable as (rows, rows x child values).
    pub fn table_size(&self, var: VarId) -> (usize, usize) {
        let rows = self.cpts[var.0].rows.len();
        (rows, rows * self.domain_size(var))
    }
}

/// One exact rule per (row, child value): `x=v <- row : P(x=v | row)`.
pub fn cpt_to_rules<P: Prob>(net: &TabularNetwork<P>) -> RuleBase<P> {
    let mut rules = Vec::new();
    for var in net.var_ids() {
        for (r, row) in net.cpt(var).rows.iter().enumerate() {
            let body = net.row_context(var, r);
            for (val, p) in row.iter().enumerate() {
                rules.push(Rule::exact(
                    Context::single(var, val),
                    body.clone(),
                    p.clone(),
                ));
            }
        }
    }
    RuleBase::new(net.variables().to_vec(), rules, RuleBaseKind::Exact)
        .expect("rules from a valid network are well formed")
}

/// Expands an exact rule base with single-variable heads back into tables.
/// Each variable's parents are the union of its rules' body variables.
pub fn rules_to_network<P: Prob>(rb: &RuleBase<P>) -> Result<TabularNetwork<P>> {
    if !rb.is_exact() {
        return Err(Error::InvalidNetwork(
            "only exact rule bases convert to tables".to_string(),
        ));
    }
    let mut cpts = Vec::with_capacity(rb.num_vars());
    for var in rb.var_ids() {
        let ids = rb.rules_for(var);
        let mut parents: Vec<VarId> = Vec::new();
        for &i in &ids {
            let r = rb.rule(i);
            if r.head.len() != 1 {
                return Err(Error::InvalidNetwork(format!(
                    "rule {} has a multi-variable head",
                    i
                )));
            }
            parents.extend(r.body.vars());
        }
        parents.sort();
        parents.dedup();
        let sizes: Vec<(VarId, usize)> = parents.iter().map(|&p| (p, rb.domain_size(p))).collect();
        let mut rows = Vec::new();
        for ctx in crate::model::Assignments::new(sizes, Context::new()) {
            let mut row = Vec::with_capacity(rb.domain_size(var));
            for val in 0..rb.domain_size(var) {
                let c = ctx.with(var, val).expect("var is not its own parent");
                let mut hits = ids.iter().filter(|&&i| rb.rule(i).applies_in(&c));
                match (hits.next(), hits.next()) {
                    (Some(&i), None) => row.push(rb.rule(i).lower.clone()),
                    _ => {
                        return Err(Error::MalformedRuleBase(format!(
                            "no unique rule for {} in {}",
                            rb.variable(var).name,
                            rb.show_context(&c)
                        )))
                    }
                }
            }
            rows.push(row);
        }
        cpts.push(Cpt { parents, rows });
    }
    TabularNetwork::new(rb.variables().to_vec(), cpts)
}
