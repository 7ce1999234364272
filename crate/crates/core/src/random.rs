//! Seeded random networks, queries and documents for testing and `compare`.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::exact::EliminationOrdering;
use crate::ingest::{cpt_to_rules, extract_structure, Cpt, Model, TabularNetwork};
use crate::model::{Context, Rule, RuleBase, RuleBaseKind, VarId, Variable};

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Parent lists of a random DAG over `n` variables in id order.
pub fn random_parents<R: Rng>(rng: &mut R, n: usize, max_parents: usize) -> Vec<Vec<VarId>> {
    (0..n)
        .map(|i| {
            let k = rng.gen_range(0..=max_parents.min(i));
            let mut ps: Vec<VarId> = (0..i).map(VarId).collect::<Vec<_>>();
            ps.shuffle(rng);
            ps.truncate(k);
            ps.sort();
            ps
        })
        .collect()
}

/// Binary network with `P(x=t | row)` uniform in `[0.01, 0.99]`.
pub fn random_network<R: Rng>(rng: &mut R, n: usize, max_parents: usize) -> TabularNetwork {
    let parents = random_parents(rng, n, max_parents);
    let variables = (0..n)
        .map(|i| Variable::binary(format!("x{}", i)))
        .collect();
    let cpts = parents
        .into_iter()
        .map(|parents| {
            let rows = (0..1usize << parents.len())
                .map(|_| {
                    let p = rng.gen_range(0.01..=0.99);
                    vec![p, 1.0 - p]
                })
                .collect();
            Cpt { parents, rows }
        })
        .collect();
    TabularNetwork::new(variables, cpts).expect("generated tables are valid")
}

/// Makes one variable's table ignore one of its parents by copying rows, so
/// exact compression has something to merge. `None` if no variable has a parent.
pub fn inject_redundancy<R: Rng>(rng: &mut R, net: &TabularNetwork) -> Option<TabularNetwork> {
    let with_parents: Vec<VarId> = net
        .var_ids()
        .filter(|&v| !net.cpt(v).parents.is_empty())
        .collect();
    let &var = with_parents.choose(rng)?;
    let cpt = net.cpt(var);
    let k = rng.gen_range(0..cpt.parents.len());
    let parent = cpt.parents[k];
    let mut rows = cpt.rows.clone();
    for (r, row) in rows.iter_mut().enumerate() {
        let mut base = net.row_context(var, r);
        base.set(parent, 0);
        *row = cpt.rows[net.row_index(var, &base).expect("row assigns parents")].clone();
    }
    let mut cpts = net.cpts().to_vec();
    cpts[var.0].rows = rows;
    Some(TabularNetwork::new(net.variables().to_vec(), cpts).expect("copied rows stay valid"))
}

/// A query variable and evidence on roughly `density` of the others.
pub fn random_query<R: Rng>(rng: &mut R, vars: &[Variable], density: f64) -> (VarId, Context) {
    let query = VarId(rng.gen_range(0..vars.len()));
    let mut evidence = Context::new();
    for (i, v) in vars.iter().enumerate() {
        if i != query.0 && rng.gen_bool(density) {
            evidence.set(VarId(i), rng.gen_range(0..v.domain_size()));
        }
    }
    (query, evidence)
}

/// A uniformly random valid elimination ordering.
pub fn random_order<R: Rng>(
    rng: &mut R,
    n: usize,
    query: VarId,
    evidence: &Context,
) -> EliminationOrdering {
    let mut vars: Vec<VarId> = (0..n)
        .map(VarId)
        .filter(|&v| v != query && !evidence.contains_var(v))
        .collect();
    vars.shuffle(rng);
    EliminationOrdering::new(vars)
}

const NAMES: &[&str] = &[
    "a",
    "rain",
    "Wet_grass",
    "x1",
    "_hidden",
    "b2b",
    "Sprinkler",
    "z",
];
const VALUES: &[&str] = &["t", "f", "low", "mid", "high", "on", "off_2"];

/// Splits 1000 into `n` positive parts, as thousandths.
fn thousandths<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let mut cuts: Vec<u32> = (0..n - 1).map(|_| rng.gen_range(1..1000)).collect();
    cuts.sort();
    let mut parts = Vec::with_capacity(n);
    let mut prev = 0;
    for c in cuts.into_iter().chain([1000]) {
        parts.push(f64::from(c - prev) / 1000.0);
        prev = c;
    }
    parts
}

/// A random model for round-trip tests: up to six variables with two or
/// three values, given as tables or as (possibly compressed, possibly
/// interval) rules.
pub fn random_model<R: Rng>(rng: &mut R) -> Model {
    let n = rng.gen_range(1..=6);
    let mut names: Vec<&str> = NAMES.to_vec();
    names.shuffle(rng);
    let variables: Vec<Variable> = names[..n]
        .iter()
        .map(|name| {
            let k = rng.gen_range(2..=3);
            let mut vals: Vec<&str> = VALUES.to_vec();
            vals.shuffle(rng);
            Variable::new(*name, &vals[..k])
        })
        .collect();
    let parents = random_parents(rng, n, 2);
    let cpts = parents
        .into_iter()
        .enumerate()
        .map(|(i, parents)| {
            let rows: usize = parents
                .iter()
                .map(|p| variables[p.0].domain_size())
                .product();
            let rows = (0..rows)
                .map(|_| thousandths(rng, variables[i].domain_size()))
                .collect();
            Cpt { parents, rows }
        })
        .collect();
    let net = TabularNetwork::new(variables, cpts).expect("generated tables are valid");
    match rng.gen_range(0..3) {
        0 => Model::Network(net),
        1 => Model::Rules(extract_structure(&cpt_to_rules(&net), 0.0)),
        _ => {
            let rb = cpt_to_rules(&net);
            let rules: Vec<Rule> = rb
                .rules()
                .iter()
                .map(|r| {
                    let d = f64::from(rng.gen_range(0..50u32)) / 1000.0;
                    let mut r = r.clone();
                    r.lower = (r.lower - d).max(0.0);
                    r.upper = (r.upper + d).min(1.0);
                    r
                })
                .collect();
            Model::Rules(
                RuleBase::new(rb.variables().to_vec(), rules, RuleBaseKind::Approximating)
                    .expect("widened rules are well formed"),
            )
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate;

    #[test]
    fn networks_are_valid_and_seeded() {
        let a = random_network(&mut rng(7), 8, 3);
        let b = random_network(&mut rng(7), 8, 3);
        assert_eq!(a, b);
        assert!(validate(&cpt_to_rules(&a), 1 << 10).unwrap().is_valid());
    }

    #[test]
    fn redundancy_removes_a_parent_dependence() {
        let mut r = rng(3);
        let net = random_network(&mut r, 5, 2);
        let red = inject_redundancy(&mut r, &net).unwrap();
        let before = cpt_to_rules(&red).rules().len();
        assert!(extract_structure(&cpt_to_rules(&red), 0.0).rules().len() < before);
    }

    #[test]
    fn models_round_trip_through_validation() {
        let mut r = rng(11);
        for _ in 0..20 {
            let rb = random_model(&mut r).to_rule_base();
            assert!(validate(&rb, 1 << 12).unwrap().is_valid());
        }
    }
}
