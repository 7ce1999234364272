//! Acceptance suite. Runs every criterion, prints one line each, and exits
//! non-zero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::Rng;
use ruleprob::approx::{
    bounded_posterior, drop_condition, resolve_on, simplify, SimplifyConfig, SimplifyStrategy,
};
use ruleprob::exact::{compute_belief, ve_posterior, EliminationOrdering, PartialEvaluator};
use ruleprob::ingest::{
    cpt_to_rules, extract_structure, parse_model, render, Cpt, Model, TabularNetwork,
};
use ruleprob::model::Assignments;
use ruleprob::oracle::{check_loop_invariant, conjunction_mass, enumerate_posterior};
use ruleprob::random::{
    inject_redundancy, random_model, random_network, random_order, random_parents, random_query,
    rng,
};
use ruleprob::{Context, Rational, Rule, RuleBase, VarId, Variable};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------------------
// 1. worked operator examples

const EXAMPLE: &str = "
variable b {t, f}
variable c {t, f}
variable d {t, f}
variable e {t, f}
variable a {t, f}
rule a=t <- b=t & c=t : 0.6
rule a=t <- b=t & c=f & d=t : 0.8
rule a=t <- b=t & c=f & d=f : 0.4
rule a=t <- b=f & e=t : 0.06
rule a=t <- b=f & e=f & c=t : 0.96
rule a=t <- b=f & e=f & c=f : 0.16
";

fn example() -> RuleBase {
    match parse_model::<f64>(EXAMPLE).expect("example parses").model {
        Model::Rules(rb) => rb,
        Model::Network(_) => unreachable!(),
    }
}

fn lits(rb: &RuleBase, s: &str) -> Context {
    let mut ctx = Context::new();
    for lit in s.split_whitespace() {
        let (name, val) = lit.strip_prefix('!').map_or((lit, "t"), |n| (n, "f"));
        let (v, x) = rb.assignment(name, val).expect("known literal");
        ctx.set(v, x);
    }
    ctx
}

/// Compares the a=t rules of `rb` with `(body, lower, upper)` triples, in order.
fn expect_rules(rb: &RuleBase, want: &[(&str, f64, f64)]) -> Result<(), String> {
    let head = lits(rb, "a");
    let got: Vec<&Rule> = rb.rules().iter().filter(|r| r.head == head).collect();
    let show = || {
        got.iter()
            .map(|r| rb.show_rule(r))
            .collect::<Vec<_>>()
            .join("; ")
    };
    ensure(got.len() == want.len(), || format!("got {}", show()))?;
    for (r, (body, lo, hi)) in got.iter().zip(want) {
        let ok = r.body == lits(rb, body)
            && (r.lower - lo).abs() <= 1e-12
            && (r.upper - hi).abs() <= 1e-12;
        ensure(ok, || format!("got {}", show()))?;
    }
    Ok(())
}

fn worked_examples() -> Check {
    let rb = example();
    let c = rb.var_by_name("c").unwrap();
    let b = rb.var_by_name("b").unwrap();
    let d = rb.var_by_name("d").unwrap();
    let head = lits(&rb, "a");

    let dropped_c = drop_condition(&rb, 0, c).map_err(|e| e.to_string())?;
    expect_rules(
        &dropped_c,
        &[
            ("b", 0.4, 0.8),
            ("!b e", 0.06, 0.06),
            ("!b !e c", 0.96, 0.96),
            ("!b !e !c", 0.16, 0.16),
        ],
    )
    .map_err(|e| format!("dropping c: {}", e))?;

    let dropped_b = drop_condition(&rb, 0, b).map_err(|e| e.to_string())?;
    expect_rules(
        &dropped_b,
        &[
            ("c", 0.06, 0.96),
            ("b !c d", 0.8, 0.8),
            ("b !c !d", 0.4, 0.4),
            ("!b e !c", 0.06, 0.06),
            ("!b !e !c", 0.16, 0.16),
        ],
    )
    .map_err(|e| format!("dropping b: {}", e))?;

    let on_d = resolve_on(&rb, &head, &lits(&rb, "b d"), c).map_err(|e| e.to_string())?;
    let on_both = resolve_on(&on_d, &head, &lits(&rb, "b !d"), c).map_err(|e| e.to_string())?;
    expect_rules(
        &on_both,
        &[
            ("b !d", 0.4, 0.6),
            ("b d", 0.6, 0.8),
            ("!b e", 0.06, 0.06),
            ("!b !e c", 0.96, 0.96),
            ("!b !e !c", 0.16, 0.16),
        ],
    )
    .map_err(|e| format!("resolving c under each d: {}", e))?;
    let merged = resolve_on(&on_both, &head, &lits(&rb, "b"), d).map_err(|e| e.to_string())?;
    expect_rules(
        &merged,
        &[
            ("b", 0.4, 0.8),
            ("!b e", 0.06, 0.06),
            ("!b !e c", 0.96, 0.96),
            ("!b !e !c", 0.16, 0.16),
        ],
    )
    .map_err(|e| format!("resolving d: {}", e))?;
    Ok("drop c, drop b, resolve c then d all exact".into())
}

// ---------------------------------------------------------------------------
// 2 and 4 share their networks.

const NETS: u64 = 200;

fn shared_net(i: u64) -> (TabularNetwork, VarId, Context, EliminationOrdering) {
    let mut r = rng(10_000 + i);
    let n = r.gen_range(2..=10);
    let net = random_network(&mut r, n, 3);
    let (q, ev) = random_query(&mut r, net.variables(), 0.3);
    let order = random_order(&mut r, n, q, &ev);
    (net, q, ev, order)
}

fn engine_equivalence() -> Check {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for i in 0..NETS {
        let (net, q, ev, order) = shared_net(i);
        let rb = cpt_to_rules(&net);
        let (ve, _) =
            ve_posterior(&net, q, &ev, &order).map_err(|e| format!("net {}: {}", i, e))?;
        let (pe, _) =
            compute_belief(&rb, q, &ev, &order).map_err(|e| format!("net {}: {}", i, e))?;
        let en = enumerate_posterior(&rb, q, &ev).map_err(|e| format!("net {}: {}", i, e))?;
        let diff = ve.max_abs_diff(&en).max(pe.max_abs_diff(&en));
        worst = worst.max(diff);
        ensure(diff <= 1e-9, || {
            format!(
                "net {}: ve {:?}, rules {:?}, enum {:?}",
                i, ve.probs, pe.probs, en.probs
            )
        })?;
    }
    let took = start.elapsed();
    ensure(took < Duration::from_secs(60), || {
        format!("took {:.1?}", took)
    })?;
    Ok(format!(
        "{} networks, max diff {:.1e}, {:.1?}",
        NETS, worst, took
    ))
}

// ---------------------------------------------------------------------------
// 3

fn permutations(items: &[VarId]) -> Vec<Vec<VarId>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

fn ordering_invariance() -> Check {
    let mut orders = 0;
    let mut worst = 0.0f64;
    for i in 0..20u64 {
        let mut r = rng(20_000 + i);
        let net = random_network(&mut r, 6, 3);
        let rb = cpt_to_rules(&net);
        let (q, ev) = random_query(&mut r, net.variables(), 0.2);
        let elim: Vec<VarId> = rb
            .var_ids()
            .filter(|&v| v != q && !ev.contains_var(v))
            .collect();
        let mut reference = None;
        for perm in permutations(&elim) {
            let order = EliminationOrdering::new(perm);
            let (d, _) = compute_belief(&rb, q, &ev, &order).map_err(|e| e.to_string())?;
            orders += 1;
            let base = reference.get_or_insert_with(|| d.clone());
            let diff = d.max_abs_diff(base);
            worst = worst.max(diff);
            ensure(diff <= 1e-9, || {
                format!(
                    "net {}: order {:?} gives {:?}, first gave {:?}",
                    i, order, d.probs, base.probs
                )
            })?;
        }
    }
    Ok(format!(
        "20 networks, {} orderings, max diff {:.1e}",
        orders, worst
    ))
}

// ---------------------------------------------------------------------------
// 4

fn bound_soundness() -> Check {
    let strategies = [
        SimplifyStrategy::Resolve,
        SimplifyStrategy::Drop,
        SimplifyStrategy::Both,
    ];
    let mut runs = 0;
    let mut widest = 0.0f64;
    let mut worst_zero = 0.0f64;
    for i in 0..NETS {
        let (net, q, ev, order) = shared_net(i);
        let rb = cpt_to_rules(&net);
        let exact = enumerate_posterior(&rb, q, &ev).map_err(|e| e.to_string())?;
        let strategy = strategies[i as usize % strategies.len()];
        for th in [0.05, 0.1, 0.2] {
            let arb = simplify(&rb, &SimplifyConfig::new(th, strategy));
            let (b, _) = bounded_posterior(&arb, q, &ev, &order).map_err(|e| e.to_string())?;
            runs += 1;
            widest = widest.max(b.max_width());
            ensure(b.contains(&exact, 1e-9), || {
                format!(
                    "net {} threshold {} {:?}: [{:?}, {:?}] misses {:?}",
                    i, th, strategy, b.low, b.high, exact.probs
                )
            })?;
        }
        let arb = simplify(&rb, &SimplifyConfig::new(0.0, strategy));
        let (b, _) = bounded_posterior(&arb, q, &ev, &order).map_err(|e| e.to_string())?;
        let diff = b.max_abs_diff(&exact);
        worst_zero = worst_zero.max(diff);
        ensure(diff <= 1e-9, || {
            format!("net {}: threshold 0 gives [{:?}, {:?}]", i, b.low, b.high)
        })?;
    }
    Ok(format!(
        "{} bounded runs contain the posterior (widest {:.3}); threshold 0 max diff {:.1e}",
        runs, widest, worst_zero
    ))
}

// ---------------------------------------------------------------------------
// 5

fn rational_network<R: Rng>(r: &mut R, n: usize) -> TabularNetwork<Rational> {
    let parents = random_parents(r, n, 2);
    let variables = (0..n)
        .map(|i| Variable::binary(format!("x{}", i)))
        .collect();
    let cpts = parents
        .into_iter()
        .map(|parents| {
            let rows = (0..1usize << parents.len())
                .map(|_| {
                    let p = Rational::new(r.gen_range(1..1000).into(), 1000.into());
                    vec![p.clone(), Rational::from_integer(1.into()) - p]
                })
                .collect();
            Cpt { parents, rows }
        })
        .collect();
    TabularNetwork::new(variables, cpts).expect("valid tables")
}

fn random_conjunction<R: Rng>(r: &mut R, n: usize) -> Context {
    let mut ctx = Context::new();
    for v in 0..n {
        if r.gen_bool(0.4) {
            ctx.set(VarId(v), r.gen_range(0..2));
        }
    }
    ctx
}

fn monotonicity() -> Check {
    let mut r = rng(50_000);
    let mut checks = 0;
    for trial in 0..1000 {
        let n = r.gen_range(2..=6);
        let rb = cpt_to_rules(&rational_network(&mut r, n));
        let id = r.gen_range(0..rb.rules().len());
        let p = rb.rule(id).lower.clone();
        let one = Rational::from_integer(1.into());
        let scale = |room: Rational, r: &mut rand_chacha::ChaCha8Rng| {
            room * Rational::new(r.gen_range(1..=1000).into(), 1000.into())
        };
        let up = scale(one.clone() - p.clone(), &mut r);
        let down = -scale(p.clone(), &mut r);
        let conj: Vec<Context> = (0..4).map(|_| random_conjunction(&mut r, n)).collect();
        for (delta, rising) in [(up, true), (down, false)] {
            let moved =
                ruleprob::oracle::perturb_parameter(&rb, id, delta).map_err(|e| e.to_string())?;
            for c in &conj {
                let before = conjunction_mass(&rb, c).map_err(|e| e.to_string())?.lo;
                let after = conjunction_mass(&moved, c).map_err(|e| e.to_string())?.lo;
                checks += 1;
                let ok = if rising {
                    after >= before
                } else {
                    after <= before
                };
                ensure(ok, || {
                    format!(
                        "trial {}: rule {} conjunction {} went {} -> {}",
                        trial,
                        id,
                        rb.show_context(c),
                        before,
                        after
                    )
                })?;
            }
        }
    }
    Ok(format!(
        "1000 perturbations each way, {} exact comparisons",
        checks
    ))
}

// ---------------------------------------------------------------------------
// 6

fn compression_exactness() -> Check {
    let mut contexts = 0u64;
    let mut saved = 0usize;
    for i in 0..100u64 {
        let mut r = rng(60_000 + i);
        let n = r.gen_range(2..=10);
        let base = random_network(&mut r, n, 3);
        let (net, injected) = match inject_redundancy(&mut r, &base) {
            Some(net) => (net, true),
            None => (base, false),
        };
        let rb = cpt_to_rules(&net);
        let small = extract_structure(&rb, 0.0);
        ensure(!injected || small.rules().len() < rb.rules().len(), || {
            format!(
                "net {}: redundancy injected but {} rules stayed {}",
                i,
                rb.rules().len(),
                small.rules().len()
            )
        })?;
        saved += rb.rules().len() - small.rules().len();
        let all: Vec<VarId> = rb.var_ids().collect();
        for c in Assignments::over(&rb, &all, Context::new()) {
            let want = rb
                .complete_context_probability(&c)
                .map_err(|e| e.to_string())?;
            let got = small
                .complete_context_probability(&c)
                .map_err(|e| e.to_string())?;
            contexts += 1;
            ensure(
                (want.lo - got.lo).abs() <= 1e-12 && (want.hi - got.hi).abs() <= 1e-12,
                || {
                    format!(
                        "net {}: {} changed from {} to {}",
                        i,
                        rb.show_context(&c),
                        want.lo,
                        got.lo
                    )
                },
            )?;
        }
    }
    Ok(format!(
        "100 networks, {} contexts preserved, {} rules removed",
        contexts, saved
    ))
}

// ---------------------------------------------------------------------------
// 7

fn loop_invariant() -> Check {
    let mut audits = 0;
    for i in 0..50u64 {
        let mut r = rng(70_000 + i);
        let net = random_network(&mut r, 6, 3);
        let rb = cpt_to_rules(&net);
        let (q, ev) = random_query(&mut r, net.variables(), 0.25);
        let order = random_order(&mut r, 6, q, &ev);
        let mut run = PartialEvaluator::new(&rb, &ev).map_err(|e| e.to_string())?;
        let mut audit = |run: &PartialEvaluator, when: &str| -> Result<(), String> {
            audits += 1;
            match check_loop_invariant(&rb, run, 1e-9).map_err(|e| e.to_string())? {
                None => Ok(()),
                Some(msg) => Err(format!("net {} {}: {}", i, when, msg)),
            }
        };
        audit(&run, "after evidence")?;
        for &e in order.as_slice() {
            run.combine(e).map_err(|e| e.to_string())?;
            audit(&run, "after combining")?;
            run.eliminate(e).map_err(|e| e.to_string())?;
            audit(&run, "after eliminating")?;
        }
    }
    Ok(format!("50 networks, {} audited states", audits))
}

// ---------------------------------------------------------------------------
// 8

/// Re-spaces a canonical document and sprinkles comments without changing tokens.
fn scramble<R: Rng>(r: &mut R, text: &str) -> String {
    let mut out = String::from("# generated\n");
    for tok in text.split_whitespace() {
        out.push_str(tok);
        match r.gen_range(0..4) {
            0 => out.push_str("\n  "),
            1 => out.push_str(" # note\n"),
            2 => out.push('\t'),
            _ => out.push(' '),
        }
    }
    out
}

const ERROR_CASES: &[(&str, usize, usize)] = &[
    ("variable a {t f}", 1, 15),
    ("variable a {t,f}\nrule a=t < : 0.3", 2, 10),
    ("variable a {t,f}\nrule a=t <- : ", 2, 15),
    ("variable a {t,f}\nrule a=t <- : 0.3 0.4", 2, 19),
    ("variable a {t,f}\nrule a=t <- : 1.5", 2, 15),
    ("variable a {t,f}\nrule a=t <- : 0.8, 0.3", 2, 15),
    ("variable a {t,f}\nrule b=t <- : 0.3", 2, 6),
    ("variable a {t,f}\nrule a=x <- : 0.3", 2, 8),
    ("variable a {t,f}\nvariable a {t,f}", 2, 10),
    ("variable a {t,t}", 1, 15),
    ("variable a {t}", 1, 10),
    (
        "variable a {t,f}\nvariable b {t,f}\nrule a=t <- a=f : 0.3",
        3,
        10,
    ),
    ("variable a {t,f}\ncpt a | { : 0.3 0.6 }", 2, 11),
    (
        "variable a {t,f}\nvariable b {t,f}\ncpt a | b { t : 0.5 0.5 f : 0.5 0.5 }",
        3,
        9,
    ),
    (
        "variable a {t,f}\nrule a=t <- : 0.3\ncpt a | { : 0.3 0.7 }",
        3,
        1,
    ),
    ("variable a {t,f}\nwhat", 2, 1),
    ("variable a {t,f} rule a=t <- : 0.3 @", 1, 36),
];

fn parser_round_trip() -> Check {
    let mut r = rng(80_000);
    for i in 0..100 {
        let model = random_model(&mut r);
        let text = render(&model);
        let doc =
            parse_model::<f64>(&text).map_err(|e| format!("document {}: {}\n{}", i, e, text))?;
        ensure(doc.model == model, || {
            format!("document {} changed on reparse:\n{}", i, text)
        })?;
        ensure(render(&doc.model) == text, || {
            format!("document {} renders differently", i)
        })?;
        let messy = scramble(&mut r, &text);
        let again =
            parse_model::<f64>(&messy).map_err(|e| format!("document {} scrambled: {}", i, e))?;
        ensure(again.model == model, || {
            format!("document {} changed after re-spacing", i)
        })?;
    }
    for (text, line, col) in ERROR_CASES {
        match parse_model::<f64>(text) {
            Ok(_) => return Err(format!("accepted {:?}", text)),
            Err(e) => ensure(e.position() == Some((*line, *col)), || {
                format!(
                    "{:?}: {} at {:?}, expected ({}, {})",
                    text,
                    e,
                    e.position(),
                    line,
                    col
                )
            })?,
        }
    }
    Ok(format!(
        "100 documents round-trip; {} error cases positioned",
        ERROR_CASES.len()
    ))
}

// ---------------------------------------------------------------------------

fn main() {
    let criteria: [Criterion; 8] = [
        ("worked operator examples", worked_examples),
        ("engine equivalence", engine_equivalence),
        ("ordering invariance", ordering_invariance),
        ("bound soundness", bound_soundness),
        ("monotonicity in parameters", monotonicity),
        ("compression exactness", compression_exactness),
        ("loop invariant audit", loop_invariant),
        ("parser round trip", parser_round_trip),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!(
            "criterion {} {}: {} ({}; {:.2?})",
            i + 1,
            name,
            tag,
            detail,
            start.elapsed()
        );
    }
    if failed > 0 {
        println!("{} of {} criteria failed", failed, criteria.len());
        std::process::exit(1);
    }
    println!("all {} criteria passed", criteria.len());
}
