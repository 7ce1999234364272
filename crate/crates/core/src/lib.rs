//! Probabilistic inference over context-specific rule bases.
//!
//! Models are Bayesian networks whose conditional probabilities are given as
//! rules `head <- body : p` (or intervals `[l, u]`). Exact posteriors come
//! from rule-based variable elimination, checked against a dense-factor
//! eliminator and brute-force enumeration; approximating rule bases with
//! interval probabilities yield guaranteed posterior bounds.
//!
//! Everything numeric is generic over [`Prob`]: `f64`, `f32` and exact
//! rationals.

pub mod approx;
pub mod error;
pub mod exact;
pub mod ingest;
pub mod model;
pub mod oracle;
pub mod random;
pub mod scalar;

pub use error::{Error, Result};
pub use model::{Context, Interval, Rule, RuleBase, RuleBaseKind, VarId, Variable};
pub use num_rational::BigRational as Rational;
pub use scalar::Prob;

pub type RuleBaseF32 = RuleBase<f32>;
pub type RationalRuleBase = RuleBase<Rational>;
pub type RationalRule = Rule<Rational>;
pub type Network = ingest::TabularNetwork<f64>;
pub type RationalNetwork = ingest::TabularNetwork<Rational>;
