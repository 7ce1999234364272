use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::ingest::TabularNetwork;
use crate::model::{Context, RuleBase, VarId};
use crate::scalar::Prob;

/// The variables to sum out, in order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EliminationOrdering(Vec<VarId>);

impl EliminationOrdering {
    pub fn new(vars: Vec<VarId>) -> Self {
        EliminationOrdering(vars)
    }

    pub fn as_slice(&self) -> &[VarId] {
        &self.0
    }

    /// Must be a permutation of the variables that are neither the query nor observed.
    pub fn check(&self, num_vars: usize, query: VarId, evidence: &Context) -> Result<()> {
        let expected: BTreeSet<VarId> = (0..num_vars)
            .map(VarId)
            .filter(|&v| v != query && !evidence.contains_var(v))
            .collect();
        let given: BTreeSet<VarId> = self.0.iter().copied().collect();
        if given.len() != self.0.len() {
            return Err(Error::InvalidOrdering(
                "a variable appears twice".to_string(),
            ));
        }
        if given != expected {
            let missing: Vec<String> = expected.difference(&given).map(|v| v.to_string()).collect();
            let extra: Vec<String> = given.difference(&expected).map(|v| v.to_string()).collect();
            return Err(Error::InvalidOrdering(format!(
                "missing [{}], unexpected [{}]",
                missing.join(", "),
                extra.join(", ")
            )));
        }
        Ok(())
    }

    /// Greedy minimum degree on the rules' interaction graph; ties by id.
    pub fn min_degree<P: Prob>(rb: &RuleBase<P>, query: VarId, evidence: &Context) -> Self {
        let cliques = rb
            .rules()
            .iter()
            .map(|r| r.context().vars().collect::<Vec<_>>());
        Self::greedy(rb.num_vars(), cliques, query, evidence)
    }

    /// Greedy minimum degree on the moral graph of a network.
    pub fn min_degree_network<P: Prob>(
        net: &TabularNetwork<P>,
        query: VarId,
        evidence: &Context,
    ) -> Self {
        let cliques = net.var_ids().map(|v| {
            let mut family = net.cpt(v).parents.clone();
            family.push(v);
            family
        });
        Self::greedy(net.num_vars(), cliques, query, evidence)
    }

    fn greedy<I: IntoIterator<Item = Vec<VarId>>>(
        n: usize,
        cliques: I,
        query: VarId,
        evidence: &Context,
    ) -> Self {
        let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        for clique in cliques {
            let live: Vec<usize> = clique
                .into_iter()
                .filter(|v| !evidence.contains_var(*v))
                .map(|v| v.0)
                .collect();
            for &a in &live {
                for &b in &live {
                    if a != b {
                        adj[a].insert(b);
                    }
                }
            }
        }
        let mut todo: BTreeSet<usize> = (0..n)
            .filter(|&v| v != query.0 && !evidence.contains_var(VarId(v)))
            .collect();
        let mut order = Vec::with_capacity(todo.len());
        while let Some(&v) = todo.iter().min_by_key(|&&v| (adj[v].len(), v)) {
            let nbrs: Vec<usize> = adj[v].iter().copied().collect();
            for &a in &nbrs {
                adj[a].remove(&v);
                for &b in &nbrs {
                    if a != b {
                        adj[a].insert(b);
                    }
                }
            }
            adj[v].clear();
            todo.remove(&v);
            order.push(VarId(v));
        }
        EliminationOrdering(order)
    }
}
