use crate::model::context::Context;
use crate::scalar::Prob;

/// A closed probability interval `[lo, hi]`. Exact values have `lo == hi`.
#[derive(Clone, Debug, PartialEq)]
pub struct Interval<P = f64> {
    pub lo: P,
    pub hi: P,
}

impl<P: Prob> Interval<P> {
    pub fn new(lo: P, hi: P) -> Self {
        Interval { lo, hi }
    }

    pub fn point(p: P) -> Self {
        Interval {
            lo: p.clone(),
            hi: p,
        }
    }

    pub fn one() -> Self {
        Self::point(P::one())
    }

    pub fn zero() -> Self {
        Self::point(P::zero())
    }

    pub fn mul(&self, other: &Self) -> Self {
        Interval {
            lo: self.lo.clone() * other.lo.clone(),
            hi: self.hi.clone() * other.hi.clone(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Interval {
            lo: self.lo.clone() + other.lo.clone(),
            hi: self.hi.clone() + other.hi.clone(),
        }
    }

    /// Smallest interval containing both.
    pub fn hull(&self, other: &Self) -> Self {
        Interval {
            lo: P::min_of(self.lo.clone(), other.lo.clone()),
            hi: P::max_of(self.hi.clone(), other.hi.clone()),
        }
    }

    pub fn width(&self) -> P {
        if self.hi >= self.lo {
            self.hi.clone() - self.lo.clone()
        } else {
            P::zero()
        }
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    /// `lo - tol <= other.lo` and `other.hi <= hi + tol`.
    pub fn contains_interval(&self, other: &Self, tol: f64) -> bool {
        let t = P::from_f64(tol);
        self.lo.clone() <= other.lo.clone() + t.clone() && other.hi.clone() <= self.hi.clone() + t
    }

    /// Non-degenerate and straddling the edge of the `eps`-neighbourhood of
    /// 0 or of 1, i.e. mixing near-extreme and ordinary probabilities.
    pub fn crosses_extreme(&self, eps: f64) -> bool {
        if self.is_point() {
            return false;
        }
        let low = P::from_f64(eps);
        let high = P::one() - P::from_f64(eps);
        (self.lo <= low && self.hi > low) || (self.hi >= high && self.lo < high)
    }

    pub fn contains(&self, p: &P, tol: f64) -> bool {
        self.contains_interval(&Interval::point(p.clone()), tol)
    }
}

/// `head <- body : [lower, upper]`.
///
/// An empty head stands for `true`. Head and body mention disjoint variables.
#[derive(Clone, Debug, PartialEq)]
pub struct Rule<P = f64> {
    pub head: Context,
    pub body: Context,
    pub lower: P,
    pub upper: P,
}

impl<P: Prob> Rule<P> {
    pub fn exact(head: Context, body: Context, p: P) -> Self {
        Rule {
            head,
            body,
            lower: p.clone(),
            upper: p,
        }
    }

    pub fn interval(head: Context, body: Context, lower: P, upper: P) -> Self {
        Rule {
            head,
            body,
            lower,
            upper,
        }
    }

    pub fn bounds(&self) -> Interval<P> {
        Interval::new(self.lower.clone(), self.upper.clone())
    }

    pub fn set_bounds(&mut self, b: Interval<P>) {
        self.lower = b.lo;
        self.upper = b.hi;
    }

    pub fn width(&self) -> P {
        self.bounds().width()
    }

    pub fn is_exact(&self) -> bool {
        self.lower == self.upper
    }

    /// Head and body together.
    pub fn context(&self) -> Context {
        self.head
            .union(&self.body)
            .expect("rule head and body are disjoint")
    }

    /// Every assignment of the rule, head and body, holds in `ctx`.
    pub fn applies_in(&self, ctx: &Context) -> bool {
        ctx.entails(&self.body) && ctx.entails(&self.head)
    }

    /// Every body assignment holds in `ctx`.
    pub fn body_holds(&self, ctx: &Context) -> bool {
        ctx.entails(&self.body)
    }

    pub fn compatible_with(&self, other: &Rule<P>) -> bool {
        self.head.compatible(&other.head)
            && self.head.compatible(&other.body)
            && self.body.compatible(&other.head)
            && self.body.compatible(&other.body)
    }

    pub fn compatible_with_context(&self, ctx: &Context) -> bool {
        self.head.compatible(ctx) && self.body.compatible(ctx)
    }

    pub fn mentions(&self, var: crate::model::VarId) -> bool {
        self.head.contains_var(var) || self.body.contains_var(var)
    }

    pub fn map_prob<Q: Prob>(&self, f: impl Fn(&P) -> Q) -> Rule<Q> {
        Rule {
            head: self.head.clone(),
            body: self.body.clone(),
            lower: f(&self.lower),
            upper: f(&self.upper),
        }
    }
}

/// Is the rule applicable in `ctx` (Def. of applicability: all head and body
/// assignments hold)?
pub fn is_applicable<P: Prob>(rule: &Rule<P>, ctx: &Context) -> bool {
    rule.applies_in(ctx)
}

pub fn are_compatible(a: &Context, b: &Context) -> bool {
    a.compatible(b)
}
