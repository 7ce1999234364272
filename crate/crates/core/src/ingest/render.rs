use std::fmt::Write;

use crate::ingest::parse::Model;
use crate::ingest::tabular::TabularNetwork;
use crate::model::{RuleBase, Variable};
use crate::scalar::Prob;

fn render_variables(out: &mut String, vars: &[Variable]) {
    for v in vars {
        let _ = writeln!(out, "variable {} {{{}}}", v.name, v.values.join(", "));
    }
}

/// Canonical text of a rule base. Exact bases print one number per rule,
/// approximating bases two.
pub fn render_rules<P: Prob>(rb: &RuleBase<P>) -> String {
    let mut out = String::new();
    render_variables(&mut out, rb.variables());
    for r in rb.rules() {
        let _ = writeln!(out, "rule {}", rb.show_rule(r));
    }
    out
}

pub fn render_network<P: Prob>(net: &TabularNetwork<P>) -> String {
    let mut out = String::new();
    let vars = net.variables();
    render_variables(&mut out, vars);
    for var in net.var_ids() {
        let cpt = net.cpt(var);
        let parents: Vec<&str> = cpt
            .parents
            .iter()
            .map(|p| vars[p.0].name.as_str())
            .collect();
        let _ = write!(out, "cpt {} |", vars[var.0].name);
        for p in &parents {
            let _ = write!(out, " {}", p);
        }
        out.push_str(" {\n");
        for (r, row) in cpt.rows.iter().enumerate() {
            let ctx = net.row_context(var, r);
            out.push_str("  ");
            for p in &cpt.parents {
                let val = ctx.get(*p).expect("row assigns every parent");
                let _ = write!(out, "{} ", vars[p.0].values[val]);
            }
            out.push(':');
            for x in row {
                let _ = write!(out, " {}", x.to_decimal());
            }
            out.push('\n');
        }
        out.push_str("}\n");
    }
    out
}

pub fn render<P: Prob>(model: &Model<P>) -> String {
    match model {
        Model::Rules(rb) => render_rules(rb),
        Model::Network(net) => render_network(net),
    }
}
