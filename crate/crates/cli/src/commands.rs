use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ruleprob::approx::{bounded_posterior, simplify, BoundedPosterior, SimplifyConfig};
use ruleprob::exact::{compute_belief, ve_posterior, Distribution, EliminationOrdering};
use ruleprob::ingest::{
    cpt_to_rules, extract_structure_with, parse_model, render_network, render_rules, rule_counts,
    rules_to_network, CompressOptions, Model, TabularNetwork,
};
use ruleprob::model::{self, ValidationStrategy, DEFAULT_MAX_ENUM};
use ruleprob::oracle::{enumerate_bounds, enumerate_posterior, DEFAULT_CAP};
use ruleprob::random::{random_order, random_query, rng};
use ruleprob::{Context, Error, RuleBase, VarId};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::report::{self, prob, Posterior, RunReport, Stats};
use crate::{
    BoundsArgs, CompareArgs, CompressArgs, ConvertArgs, Engine, Failure, Format, InferArgs, Query,
    Simplify, ValidateArgs,
};

/// Engines must agree to this absolute tolerance.
const AGREEMENT: f64 = 1e-9;

struct Loaded {
    path: PathBuf,
    digest: String,
    model: Model,
}

impl Loaded {
    fn rules(&self) -> RuleBase {
        self.model.to_rule_base()
    }

    fn network(&self) -> Result<TabularNetwork, Failure> {
        match &self.model {
            Model::Network(net) => Ok(net.clone()),
            Model::Rules(rb) => Ok(rules_to_network(rb)?),
        }
    }
}

fn load(path: &Path) -> Result<Loaded, Failure> {
    let bytes = fs::read(path)
        .map_err(|e| Failure::Input(format!("cannot read {}: {}", path.display(), e)))?;
    let digest = format!("{:x}", Sha256::digest(&bytes));
    let text = String::from_utf8(bytes)
        .map_err(|_| Failure::Input(format!("{} is not UTF-8", path.display())))?;
    let doc = parse_model::<f64>(&text)
        .map_err(|e| Failure::Input(format!("{}:{}", path.display(), e)))?;
    Ok(Loaded {
        path: path.to_path_buf(),
        digest,
        model: doc.model,
    })
}

fn require_valid(rb: &RuleBase) -> Result<(), Failure> {
    let report = model::validate(rb, DEFAULT_MAX_ENUM)?;
    if report.is_valid() {
        return Ok(());
    }
    let lines: Vec<String> = report.violations.iter().map(|v| v.describe(rb)).collect();
    Err(Failure::Violation(format!(
        "the model is not a valid rule base:\n  {}",
        lines.join("\n  ")
    )))
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text)
        .map_err(|e| Failure::Input(format!("cannot write {}: {}", path.display(), e)))
}

fn record<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn emit<T: Serialize>(
    format: Format,
    value: &T,
    table: impl FnOnce() -> String,
    out: Option<&PathBuf>,
) -> Result<(), Failure> {
    let rec = record(value);
    match format {
        Format::Record => print!("{}", rec),
        Format::Table => print!("{}", table()),
    }
    match out {
        Some(path) => write_file(path, &rec),
        None => Ok(()),
    }
}

fn lookup(rb: &RuleBase, name: &str) -> Result<VarId, Failure> {
    rb.var_by_name(name)
        .ok_or_else(|| Failure::Input(format!("unknown variable {}", name)))
}

fn parse_evidence(rb: &RuleBase, items: &[String]) -> Result<Context, Failure> {
    let mut ctx = Context::new();
    for item in items {
        let Some((name, value)) = item.split_once('=') else {
            return Err(Failure::Input(format!(
                "evidence {:?} is not VAR=VAL",
                item
            )));
        };
        let var = lookup(rb, name.trim())?;
        let (_, val) = rb.assignment(name.trim(), value.trim()).ok_or_else(|| {
            Failure::Input(format!("{} has no value {}", name.trim(), value.trim()))
        })?;
        if !ctx.insert(var, val) {
            return Err(Failure::Input(format!("{} is observed twice", name.trim())));
        }
    }
    Ok(ctx)
}

/// `None` for `auto`.
fn parse_order(rb: &RuleBase, list: &str) -> Result<Option<EliminationOrdering>, Failure> {
    if list.trim() == "auto" {
        return Ok(None);
    }
    let vars = list
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|name| lookup(rb, name))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Some(EliminationOrdering::new(vars)))
}

fn names(rb: &RuleBase, order: &EliminationOrdering) -> Vec<String> {
    order
        .as_slice()
        .iter()
        .map(|&v| rb.variable(v).name.clone())
        .collect()
}

fn show_evidence(rb: &RuleBase, ev: &Context) -> String {
    if ev.is_empty() {
        "no evidence".to_string()
    } else {
        rb.show_context(ev)
    }
}

fn stats_table(s: &Stats, factors: bool) -> String {
    if factors {
        format!("max factor entries {}\n", s.max_factor_entries)
    } else {
        format!(
            "max rules created {}, max rules active {}\n",
            s.max_rules_created, s.max_rules_active
        )
    }
}

fn elapsed_ms(start: Instant) -> f64 {
    (start.elapsed().as_secs_f64() * 1e3 * 1e3).round() / 1e3
}

pub fn validate(args: &ValidateArgs, argv: &[String]) -> Result<u8, Failure> {
    let loaded = load(&args.model)?;
    let rb = loaded.rules();
    let result = model::validate(&rb, DEFAULT_MAX_ENUM)?;
    let rep = report::ValidateReport {
        command: argv.to_vec(),
        input_sha256: loaded.digest.clone(),
        valid: result.is_valid(),
        method: match result.strategy {
            ValidationStrategy::Enumeration => "enumeration",
            ValidationStrategy::Symbolic => "symbolic",
        }
        .to_string(),
        violations: result
            .violations
            .iter()
            .map(|v| report::Violation {
                kind: v.name().to_string(),
                detail: v.describe(&rb),
                reproduce: None,
            })
            .collect(),
    };
    let table = || {
        let mut s = String::new();
        if rep.valid {
            let _ = writeln!(
                s,
                "{}: valid ({} rules, checked by {})",
                loaded.path.display(),
                rb.rules().len(),
                rep.method
            );
        } else {
            let _ = writeln!(
                s,
                "{}: {} violation(s)",
                loaded.path.display(),
                rep.violations.len()
            );
            for v in &rep.violations {
                let _ = writeln!(s, "  {}", v.detail);
            }
        }
        s
    };
    emit(args.output.format, &rep, table, None)?;
    Ok(if rep.valid { 0 } else { 1 })
}

pub fn convert(args: &ConvertArgs) -> Result<u8, Failure> {
    let loaded = load(&args.model)?;
    let text = match &loaded.model {
        Model::Network(net) => render_rules(&cpt_to_rules(net)),
        Model::Rules(rb) => {
            require_valid(rb)?;
            render_network(&rules_to_network(rb)?)
        }
    };
    match &args.out {
        Some(path) => write_file(path, &text)?,
        None => print!("{}", text),
    }
    Ok(0)
}

pub fn compress(args: &CompressArgs, argv: &[String]) -> Result<u8, Failure> {
    if args.threshold.is_nan() || args.threshold < 0.0 {
        return Err(Failure::Input("threshold must be non-negative".to_string()));
    }
    let loaded = load(&args.model)?;
    let rb = loaded.rules();
    require_valid(&rb)?;
    let opts = CompressOptions {
        threshold: args.threshold,
        extreme_guard: args.extreme_guard,
    };
    let exact = extract_structure_with(
        &rb,
        CompressOptions {
            threshold: 0.0,
            ..opts
        },
    );
    let merged = extract_structure_with(&rb, opts);
    let net = loaded.network().ok();
    let (r0, rt) = (rule_counts(&exact), rule_counts(&merged));
    let rows: Vec<report::CompressRow> = rb
        .var_ids()
        .map(|v| {
            let size = net.as_ref().map(|n| n.table_size(v));
            report::CompressRow {
                variable: rb.variable(v).name.clone(),
                table_rows: size.map(|s| s.0),
                table_entries: size.map(|s| s.1),
                rules_exact: r0[v.0],
                rules_threshold: rt[v.0],
            }
        })
        .collect();
    let rep = report::CompressReport {
        command: argv.to_vec(),
        input_sha256: loaded.digest.clone(),
        threshold: args.threshold,
        extreme_guard: args.extreme_guard,
        total_table_entries: net
            .as_ref()
            .map(|_| rows.iter().filter_map(|r| r.table_entries).sum()),
        total_rules_exact: r0.iter().sum(),
        total_rules_threshold: rt.iter().sum(),
        rows,
    };
    let table = || {
        let opt = |x: Option<usize>| x.map_or("-".to_string(), |n| n.to_string());
        let width = rep
            .rows
            .iter()
            .map(|r| r.variable.len())
            .max()
            .unwrap_or(0)
            .max(8);
        let th = format!("R({})", args.threshold);
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<width$}  {:>6}  {:>7}  {:>6}  {:>8}",
            "variable", "rows", "entries", "R(0)", th
        );
        for r in &rep.rows {
            let _ = writeln!(
                s,
                "{:<width$}  {:>6}  {:>7}  {:>6}  {:>8}",
                r.variable,
                opt(r.table_rows),
                opt(r.table_entries),
                r.rules_exact,
                r.rules_threshold
            );
        }
        let _ = writeln!(
            s,
            "{:<width$}  {:>6}  {:>7}  {:>6}  {:>8}",
            "total",
            "",
            opt(rep.total_table_entries),
            rep.total_rules_exact,
            rep.total_rules_threshold
        );
        s
    };
    emit(args.output.format, &rep, table, None)?;
    if let Some(path) = &args.out {
        write_file(path, &render_rules(&merged))?;
    }
    Ok(0)
}

struct Prepared {
    loaded: Loaded,
    rb: RuleBase,
    query: VarId,
    evidence: Context,
    order: Option<EliminationOrdering>,
}

fn prepare(model: &Path, q: &Query) -> Result<Prepared, Failure> {
    let loaded = load(model)?;
    let rb = loaded.rules();
    require_valid(&rb)?;
    let query = lookup(&rb, &q.query)?;
    let evidence = parse_evidence(&rb, &q.evidence)?;
    if evidence.contains_var(query) {
        return Err(Failure::Input(format!(
            "{} is both queried and observed",
            q.query
        )));
    }
    let order = parse_order(&rb, &q.order)?;
    Ok(Prepared {
        loaded,
        rb,
        query,
        evidence,
        order,
    })
}

pub fn infer(args: &InferArgs, argv: &[String]) -> Result<u8, Failure> {
    let p = prepare(&args.model, &args.query)?;
    let start = Instant::now();
    let (dist, stats, order): (Distribution, _, Vec<String>) = match args.engine {
        Engine::Ve => {
            let net = p.loaded.network()?;
            let order = p.order.clone().unwrap_or_else(|| {
                EliminationOrdering::min_degree_network(&net, p.query, &p.evidence)
            });
            let (d, s) = ve_posterior(&net, p.query, &p.evidence, &order)?;
            (d, Some(s), names(&p.rb, &order))
        }
        Engine::Rules => {
            let order = p
                .order
                .clone()
                .unwrap_or_else(|| EliminationOrdering::min_degree(&p.rb, p.query, &p.evidence));
            let (d, s) = compute_belief(&p.rb, p.query, &p.evidence, &order)?;
            (d, Some(s), names(&p.rb, &order))
        }
        Engine::Enum => (
            enumerate_posterior(&p.rb, p.query, &p.evidence)?,
            None,
            Vec::new(),
        ),
    };
    let rep = RunReport {
        command: argv.to_vec(),
        input_sha256: p.loaded.digest.clone(),
        engine: format!("{:?}", args.engine).to_lowercase(),
        query: args.query.query.clone(),
        evidence: report::assignments(&p.rb, &p.evidence),
        ordering: order,
        result: Posterior::Distribution {
            values: report::distribution(&p.rb, &dist),
        },
        stats: stats.map(|s| Stats::new(&p.rb, &s)),
        wall_time_ms: elapsed_ms(start),
    };
    let table = || {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "P({} | {})  engine {}",
            rep.query,
            show_evidence(&p.rb, &p.evidence),
            rep.engine
        );
        if !rep.ordering.is_empty() {
            let _ = writeln!(s, "order {}", rep.ordering.join(","));
        }
        if let Posterior::Distribution { values } = &rep.result {
            for v in values {
                let _ = writeln!(s, "  {:<12} {}", v.value, v.probability);
            }
        }
        if let Some(st) = &rep.stats {
            s.push_str(&stats_table(st, args.engine == Engine::Ve));
        }
        s
    };
    emit(args.output.format, &rep, table, args.out.as_ref())?;
    Ok(0)
}

fn config(s: &Simplify) -> Result<SimplifyConfig, Failure> {
    if s.threshold.is_nan() || s.threshold < 0.0 {
        return Err(Failure::Input("threshold must be non-negative".to_string()));
    }
    Ok(SimplifyConfig {
        threshold: s.threshold,
        strategy: s.strategy.core(),
        extreme_guard: s.extreme_guard,
    })
}

/// The exact posterior by enumeration when the model is exact and small.
fn oracle(
    rb: &RuleBase,
    query: VarId,
    evidence: &Context,
) -> Result<Option<Distribution>, Failure> {
    if !rb.is_exact() || rb.joint_space() > DEFAULT_CAP {
        return Ok(None);
    }
    Ok(Some(enumerate_posterior(rb, query, evidence)?))
}

pub fn bounds(args: &BoundsArgs, argv: &[String]) -> Result<u8, Failure> {
    let cfg = config(&args.simplify)?;
    let p = prepare(&args.model, &args.query)?;
    let start = Instant::now();
    let arb = simplify(&p.rb, &cfg);
    let order = p
        .order
        .clone()
        .unwrap_or_else(|| EliminationOrdering::min_degree(&arb, p.query, &p.evidence));
    let (b, stats) = bounded_posterior(&arb, p.query, &p.evidence, &order)?;
    let wall = elapsed_ms(start);
    let exact = oracle(&p.rb, p.query, &p.evidence)?;
    let contains = exact.as_ref().map(|d| b.contains(d, AGREEMENT));
    let rep = RunReport {
        command: argv.to_vec(),
        input_sha256: p.loaded.digest.clone(),
        engine: "bounds".to_string(),
        query: args.query.query.clone(),
        evidence: report::assignments(&p.rb, &p.evidence),
        ordering: names(&p.rb, &order),
        result: Posterior::Bounds {
            values: report::bounds(&p.rb, &b),
            exact: exact.as_ref().map(|d| report::distribution(&p.rb, d)),
            contains_exact: contains,
        },
        stats: Some(Stats::new(&p.rb, &stats)),
        wall_time_ms: wall,
    };
    let table = || {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "P({} | {})  threshold {}  strategy {}  ({} of {} rules)",
            rep.query,
            show_evidence(&p.rb, &p.evidence),
            cfg.threshold,
            args.simplify.strategy.name(),
            arb.rules().len(),
            p.rb.rules().len()
        );
        let _ = writeln!(s, "order {}", rep.ordering.join(","));
        if let Posterior::Bounds {
            values,
            exact,
            contains_exact,
        } = &rep.result
        {
            for (i, v) in values.iter().enumerate() {
                let _ = write!(s, "  {:<12} {} : {}", v.value, v.low, v.high);
                if let Some(e) = exact {
                    let _ = write!(s, "   exact {}", e[i].probability);
                }
                s.push('\n');
            }
            match contains_exact {
                Some(true) => s.push_str("bounds contain the exact posterior\n"),
                Some(false) => s.push_str("BOUNDS MISS THE EXACT POSTERIOR\n"),
                None => {}
            }
        }
        if let Some(st) = &rep.stats {
            s.push_str(&stats_table(st, false));
        }
        s
    };
    emit(args.output.format, &rep, table, args.out.as_ref())?;
    Ok(if contains == Some(false) { 1 } else { 0 })
}

/// Moves each interval to the far side of `reference`.
fn corrupt(b: &mut BoundedPosterior, reference: &[f64]) {
    for (v, &r) in reference.iter().enumerate() {
        let far = if r < 0.5 { 1.0 } else { 0.0 };
        b.low[v] = far;
        b.high[v] = far;
    }
}

fn reproduce(
    loaded: &Loaded,
    rb: &RuleBase,
    command: &str,
    query: VarId,
    evidence: &Context,
    order: &EliminationOrdering,
    extra: &str,
) -> String {
    let mut s = format!(
        "ruleprob {} --model {} --query {}",
        command,
        loaded.path.display(),
        rb.variable(query).name
    );
    for a in report::assignments(rb, evidence) {
        let _ = write!(s, " --evidence {}={}", a.variable, a.value);
    }
    let _ = write!(s, " --order '{}'{}", names(rb, order).join(","), extra);
    s
}

pub fn compare(args: &CompareArgs, argv: &[String]) -> Result<u8, Failure> {
    let cfg = config(&args.simplify)?;
    let loaded = load(&args.model)?;
    let rb = loaded.rules();
    require_valid(&rb)?;
    let exact = rb.is_exact();
    let net = if exact { loaded.network().ok() } else { None };
    let small = rb.joint_space() <= DEFAULT_CAP;
    let mut engines = Vec::new();
    if exact {
        engines.push("rules");
        if net.is_some() {
            engines.push("ve");
        }
    }
    if small {
        engines.push("enum");
    }
    engines.push("bounds");
    let arb = if exact {
        simplify(&rb, &cfg)
    } else {
        rb.clone()
    };
    let bounds_extra = format!(
        " --threshold {} --strategy {}{}",
        cfg.threshold,
        args.simplify.strategy.name(),
        if cfg.extreme_guard {
            " --extreme-guard"
        } else {
            ""
        }
    );

    let mut r = rng(args.seed);
    let mut checked = 0;
    let mut skipped = 0;
    let mut max_diff = 0.0f64;
    let mut max_width = 0.0f64;
    let mut violations = Vec::new();
    for trial in 0..args.trials {
        let (q, ev) = random_query(&mut r, rb.variables(), 0.3);
        let order = random_order(&mut r, rb.num_vars(), q, &ev);
        let tag = format!("trial {} (seed {})", trial, args.seed);
        let mut reference: Option<Vec<f64>> = None;
        let mut impossible = false;
        if exact {
            let mut results: Vec<(&str, Distribution)> = Vec::new();
            match compute_belief(&rb, q, &ev, &order) {
                Ok((d, _)) => results.push(("rules", d)),
                Err(Error::ImpossibleEvidence) => impossible = true,
                Err(e) => return Err(e.into()),
            }
            if let (Some(net), false) = (&net, impossible) {
                results.push(("ve", ve_posterior(net, q, &ev, &order)?.0));
            }
            if small && !impossible {
                results.push(("enum", enumerate_posterior(&rb, q, &ev)?));
            }
            for (name, d) in results.iter().skip(1) {
                let diff = d.max_abs_diff(&results[0].1);
                max_diff = max_diff.max(diff);
                if diff > AGREEMENT {
                    violations.push(report::Violation {
                        kind: "engine_mismatch".to_string(),
                        detail: format!(
                            "{}: rules gives {:?}, {} gives {:?}",
                            tag, results[0].1.probs, name, d.probs
                        ),
                        reproduce: Some(reproduce(
                            &loaded,
                            &rb,
                            "infer",
                            q,
                            &ev,
                            &order,
                            &format!(" --engine {}", name),
                        )),
                    });
                }
            }
            reference = results.last().map(|(_, d)| d.probs.clone());
        }
        if impossible {
            skipped += 1;
            continue;
        }
        let mut b = match bounded_posterior(&arb, q, &ev, &order) {
            Ok((b, _)) => b,
            Err(Error::ImpossibleEvidence) => {
                skipped += 1;
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        max_width = max_width.max(b.max_width());
        let enumerated = if !exact && small {
            Some(enumerate_bounds(&arb, q, &ev)?)
        } else {
            None
        };
        if args.corrupt_bounds {
            let mid: Vec<f64> = match (&reference, &enumerated) {
                (Some(d), _) => d.clone(),
                (None, Some(e)) => (0..e.len()).map(|v| (e.low[v] + e.high[v]) / 2.0).collect(),
                (None, None) => (0..b.len()).map(|v| (b.low[v] + b.high[v]) / 2.0).collect(),
            };
            corrupt(&mut b, &mid);
        }
        let miss = match (&reference, &enumerated) {
            (Some(d), _) => {
                let d = Distribution::normalize(q, d.clone())?;
                (!b.contains(&d, AGREEMENT)).then(|| {
                    format!(
                        "{}: bounds {:?} : {:?} miss {:?}",
                        tag, b.low, b.high, d.probs
                    )
                })
            }
            (None, Some(e)) => {
                let same = (0..b.len()).all(|v| {
                    (b.low[v] - e.low[v]).abs() <= AGREEMENT
                        && (b.high[v] - e.high[v]).abs() <= AGREEMENT
                });
                (!same).then(|| {
                    format!(
                        "{}: elimination gives {:?} : {:?}, enumeration {:?} : {:?}",
                        tag, b.low, b.high, e.low, e.high
                    )
                })
            }
            (None, None) => None,
        };
        if let Some(detail) = miss {
            violations.push(report::Violation {
                kind: "bounds".to_string(),
                detail,
                reproduce: Some(reproduce(
                    &loaded,
                    &rb,
                    "bounds",
                    q,
                    &ev,
                    &order,
                    &bounds_extra,
                )),
            });
        }
        checked += 1;
    }

    let rep = report::CompareReport {
        command: argv.to_vec(),
        input_sha256: loaded.digest.clone(),
        seed: args.seed,
        trials: args.trials,
        threshold: cfg.threshold,
        strategy: args.simplify.strategy.name().to_string(),
        engines: engines.iter().map(|s| s.to_string()).collect(),
        checked,
        skipped,
        max_engine_diff: max_diff,
        max_bound_width: prob(max_width),
        violations,
    };
    let table = || {
        let mut s = String::new();
        let _ = writeln!(s, "engines {}", rep.engines.join(", "));
        let _ = writeln!(
            s,
            "{} trials: {} checked, {} skipped (impossible evidence)",
            rep.trials, rep.checked, rep.skipped
        );
        let _ = writeln!(s, "max engine difference {:.3e}", rep.max_engine_diff);
        let _ = writeln!(s, "max bound width {}", rep.max_bound_width);
        if rep.violations.is_empty() {
            s.push_str("no violations\n");
        } else {
            let _ = writeln!(s, "{} violation(s)", rep.violations.len());
            for v in &rep.violations {
                let _ = writeln!(s, "  {}", v.detail);
                if let Some(cmd) = &v.reproduce {
                    let _ = writeln!(s, "    reproduce: {}", cmd);
                }
            }
        }
        s
    };
    emit(args.output.format, &rep, table, args.out.as_ref())?;
    Ok(if rep.violations.is_empty() { 0 } else { 1 })
}
