//! Reading, writing and compressing models.

pub mod compress;
pub mod parse;
pub mod render;
pub mod tabular;

pub use compress::{extract_structure, extract_structure_with, rule_counts, CompressOptions};
pub use parse::{parse_model, DeclKind, DeclSpan, Model, ModelDocument};
pub use render::{render, render_network, render_rules};
pub use tabular::{cpt_to_rules, rules_to_network, Cpt, TabularNetwork};
