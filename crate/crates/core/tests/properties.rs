use proptest::prelude::*;
use rand::Rng;
use ruleprob::approx::{
    bounded_posterior, check_approximates, drop_condition, resolve_on, simplify, SimplifyConfig,
    SimplifyStrategy,
};
use ruleprob::exact::{compute_belief, ve_posterior, EliminationOrdering};
use ruleprob::ingest::{cpt_to_rules, extract_structure, parse_model, render};
use ruleprob::model::{are_compatible, validate, Assignments};
use ruleprob::oracle::{
    conjunction_mass, enumerate_bounds, enumerate_posterior, perturb_parameter,
};
use ruleprob::random::{random_model, random_network, random_order, random_query, rng};
use ruleprob::{Context, RuleBase, VarId};

fn context(pairs: Vec<(usize, usize)>) -> Context {
    let mut ctx = Context::new();
    for (v, x) in pairs {
        ctx.set(VarId(v), x);
    }
    ctx
}

fn any_context() -> impl Strategy<Value = Context> {
    prop::collection::vec((0..6usize, 0..3usize), 0..6).prop_map(context)
}

fn all_contexts(rb: &RuleBase) -> Vec<Context> {
    let all: Vec<VarId> = rb.var_ids().collect();
    Assignments::over(rb, &all, Context::new()).collect()
}

/// A seeded binary network as rules, with a query, evidence and ordering.
fn setup(seed: u64, n: usize) -> (RuleBase, VarId, Context, EliminationOrdering) {
    let mut r = rng(seed);
    let net = random_network(&mut r, n, 3);
    let (q, ev) = random_query(&mut r, net.variables(), 0.3);
    let order = random_order(&mut r, n, q, &ev);
    (cpt_to_rules(&net), q, ev, order)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn compatibility_is_symmetric_and_reflexive(a in any_context(), b in any_context()) {
        prop_assert!(are_compatible(&a, &a));
        prop_assert_eq!(are_compatible(&a, &b), are_compatible(&b, &a));
        match a.conflict(&b) {
            Some(v) => {
                prop_assert!(!are_compatible(&a, &b));
                prop_assert!(a.get(v).is_some() && b.get(v).is_some() && a.get(v) != b.get(v));
            }
            None => prop_assert!(are_compatible(&a, &b)),
        }
    }

    #[test]
    fn exact_bases_define_a_distribution(seed in any::<u64>(), n in 1..7usize) {
        let (rb, ..) = setup(seed, n);
        prop_assert!(validate(&rb, 1 << 12).unwrap().is_valid());
        let mut total = 0.0;
        for c in all_contexts(&rb) {
            let p = rb.complete_context_probability(&c).unwrap();
            prop_assert!(p.is_point());
            total += p.lo;
            for v in rb.var_ids() {
                let n = rb.rules().iter().filter(|r| r.head.contains_var(v) && r.applies_in(&c)).count();
                prop_assert_eq!(n, 1);
            }
        }
        prop_assert!((total - 1.0).abs() <= 1e-6);
    }

    #[test]
    fn rules_reproduce_the_tables(seed in any::<u64>(), n in 1..7usize) {
        let mut r = rng(seed);
        let net = random_network(&mut r, n, 3);
        let rb = cpt_to_rules(&net);
        for c in all_contexts(&rb) {
            let want = net.joint(&c).unwrap();
            prop_assert!((rb.complete_context_probability(&c).unwrap().lo - want).abs() <= 1e-12);
        }
    }

    #[test]
    fn compression_approximates_its_input(seed in any::<u64>(), n in 2..7usize, th in 0.0..0.5f64) {
        let (rb, ..) = setup(seed, n);
        let small = extract_structure(&rb, th);
        prop_assert!(small.rules().len() <= rb.rules().len());
        prop_assert!(check_approximates(&small, &rb, 1 << 12).unwrap().is_none());
        let exact = extract_structure(&rb, 0.0);
        for c in all_contexts(&rb) {
            let a = rb.complete_context_probability(&c).unwrap();
            let b = exact.complete_context_probability(&c).unwrap();
            prop_assert!((a.lo - b.lo).abs() <= 1e-12 && b.is_point());
        }
    }

    #[test]
    fn engines_agree_for_any_order(seed in any::<u64>(), n in 2..8usize) {
        let (rb, q, ev, order) = setup(seed, n);
        let en = enumerate_posterior(&rb, q, &ev).unwrap();
        let (rules, _) = compute_belief(&rb, q, &ev, &order).unwrap();
        prop_assert!(rules.max_abs_diff(&en) <= 1e-9);
        let sum: f64 = rules.probs.iter().sum();
        prop_assert!((sum - 1.0).abs() <= 1e-9);
        prop_assert!(rules.probs.iter().all(|p| (0.0..=1.0).contains(p)));
        let min_degree = EliminationOrdering::min_degree(&rb, q, &ev);
        let (again, _) = compute_belief(&rb, q, &ev, &min_degree).unwrap();
        prop_assert!(again.max_abs_diff(&en) <= 1e-9);
    }

    #[test]
    fn baseline_stats_are_reproducible(seed in any::<u64>(), n in 2..8usize) {
        let mut r = rng(seed);
        let net = random_network(&mut r, n, 3);
        let (q, ev) = random_query(&mut r, net.variables(), 0.3);
        let order = random_order(&mut r, n, q, &ev);
        let (a, sa) = ve_posterior(&net, q, &ev, &order).unwrap();
        let (b, sb) = ve_posterior(&net, q, &ev, &order).unwrap();
        prop_assert_eq!(a, b);
        prop_assert_eq!(sa.max_factor_entries, sb.max_factor_entries);
        let step_max = sa.steps.iter().map(|s| s.factor_entries).max().unwrap_or(0);
        prop_assert_eq!(sa.max_factor_entries, step_max);
    }

    #[test]
    fn bounds_contain_the_posterior(
        seed in any::<u64>(),
        n in 2..8usize,
        th in prop::sample::select(vec![0.05, 0.1, 0.2]),
        strategy in prop::sample::select(vec![SimplifyStrategy::Drop, SimplifyStrategy::Resolve, SimplifyStrategy::Both]),
    ) {
        let (rb, q, ev, order) = setup(seed, n);
        let exact = enumerate_posterior(&rb, q, &ev).unwrap();
        let arb = simplify(&rb, &SimplifyConfig::new(th, strategy));
        prop_assert!(check_approximates(&arb, &rb, 1 << 12).unwrap().is_none());
        let (b, _) = bounded_posterior(&arb, q, &ev, &order).unwrap();
        prop_assert!(b.contains(&exact, 1e-9));
        for v in 0..b.len() {
            prop_assert!(b.low[v] <= b.high[v]);
        }
        let enumerated = enumerate_bounds(&arb, q, &ev).unwrap();
        for v in 0..b.len() {
            prop_assert!((b.low[v] - enumerated.low[v]).abs() <= 1e-9);
            prop_assert!((b.high[v] - enumerated.high[v]).abs() <= 1e-9);
        }
    }

    #[test]
    fn threshold_zero_bounds_are_degenerate(seed in any::<u64>(), n in 2..8usize) {
        let (rb, q, ev, order) = setup(seed, n);
        let (belief, _) = compute_belief(&rb, q, &ev, &order).unwrap();
        let arb = simplify(&rb, &SimplifyConfig::new(0.0, SimplifyStrategy::Both));
        let (b, _) = bounded_posterior(&arb, q, &ev, &order).unwrap();
        prop_assert!(b.max_abs_diff(&belief) <= 1e-9);
    }

    #[test]
    fn operators_only_widen(seed in any::<u64>(), n in 2..6usize, pick in any::<prop::sample::Index>()) {
        let (rb, ..) = setup(seed, n);
        let id = pick.index(rb.rules().len());
        let rule = rb.rule(id).clone();
        let Some(var) = rule.body.vars().next() else { return Ok(()); };
        let mut outputs = Vec::new();
        if let Ok(out) = drop_condition(&rb, id, var) {
            outputs.push(out);
        }
        if let Ok(out) = resolve_on(&rb, &rule.head, &rule.body.without(var), var) {
            outputs.push(out);
        }
        for out in outputs {
            prop_assert!(check_approximates(&out, &rb, 1 << 12).unwrap().is_none());
            // every input context is still covered by an interval at least as wide
            for c in all_contexts(&rb) {
                let before = rb.complete_context_probability(&c).unwrap();
                let after = out.complete_context_probability(&c).unwrap();
                prop_assert!(after.contains_interval(&before, 1e-12));
            }
        }
    }

    #[test]
    fn raising_a_parameter_never_lowers_a_conjunction(
        seed in any::<u64>(),
        n in 2..6usize,
        pick in any::<prop::sample::Index>(),
        conj in any_context(),
    ) {
        let (rb, ..) = setup(seed, n);
        let id = pick.index(rb.rules().len());
        let room = 1.0 - rb.rule(id).upper;
        let up = perturb_parameter(&rb, id, room * rng(seed).gen_range(0.0..=1.0)).unwrap();
        let conj = conj.restrict(|v| v.0 < n);
        let conj = Context::from_pairs(conj.iter().map(|(v, x)| (v, x % 2))).unwrap();
        let before = conjunction_mass(&rb, &conj).unwrap().lo;
        let after = conjunction_mass(&up, &conj).unwrap().lo;
        prop_assert!(after >= before - 1e-15);
    }

    #[test]
    fn render_then_parse_is_identity(seed in any::<u64>()) {
        let model = random_model(&mut rng(seed));
        let text = render(&model);
        let doc = parse_model::<f64>(&text).unwrap();
        prop_assert_eq!(render(&doc.model), text);
        prop_assert_eq!(doc.model, model);
    }
}
