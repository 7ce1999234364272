use std::fmt;

/// Identity of a variable: its position in the global total ordering.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0)
    }
}

/// A partial assignment of values to variables, kept sorted by variable id.
///
/// Values are indices into the variable's domain. The empty context doubles
/// as the `true` head of a rule.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Context {
    items: Vec<(VarId, usize)>,
}

impl Context {
    pub fn new() -> Self {
        Context { items: Vec::new() }
    }

    /// Builds a context from pairs; `None` if a variable gets two different values.
    pub fn from_pairs<I: IntoIterator<Item = (VarId, usize)>>(pairs: I) -> Option<Self> {
        let mut ctx = Context::new();
        for (var, val) in pairs {
            if !ctx.insert(var, val) {
                return None;
            }
        }
        Some(ctx)
    }

    pub fn single(var: VarId, val: usize) -> Self {
        Context {
            items: vec![(var, val)],
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarId, usize)> + '_ {
        self.items.iter().copied()
    }

    pub fn vars(&self) -> impl Iterator<Item = VarId> + '_ {
        self.items.iter().map(|&(v, _)| v)
    }

    pub fn get(&self, var: VarId) -> Option<usize> {
        self.items
            .binary_search_by_key(&var, |&(v, _)| v)
            .ok()
            .map(|i| self.items[i].1)
    }

    pub fn contains_var(&self, var: VarId) -> bool {
        self.get(var).is_some()
    }

    /// Adds `var = val`. Returns false (and leaves the context unchanged) on conflict.
    pub fn insert(&mut self, var: VarId, val: usize) -> bool {
        match self.items.binary_search_by_key(&var, |&(v, _)| v) {
            Ok(i) => self.items[i].1 == val,
            Err(i) => {
                self.items.insert(i, (var, val));
                true
            }
        }
    }

    /// Sets `var = val`, overwriting any previous value.
    pub fn set(&mut self, var: VarId, val: usize) {
        match self.items.binary_search_by_key(&var, |&(v, _)| v) {
            Ok(i) => self.items[i].1 = val,
            Err(i) => self.items.insert(i, (var, val)),
        }
    }

    pub fn with(&self, var: VarId, val: usize) -> Option<Context> {
        let mut c = self.clone();
        c.insert(var, val).then_some(c)
    }

    pub fn remove(&mut self, var: VarId) -> Option<usize> {
        match self.items.binary_search_by_key(&var, |&(v, _)| v) {
            Ok(i) => Some(self.items.remove(i).1),
            Err(_) => None,
        }
    }

    pub fn without(&self, var: VarId) -> Context {
        let mut c = self.clone();
        c.remove(var);
        c
    }

    /// First variable assigned differently in `self` and `other`.
    pub fn conflict(&self, other: &Context) -> Option<VarId> {
        let (mut i, mut j) = (0, 0);
        while i < self.items.len() && j < other.items.len() {
            let (a, av) = self.items[i];
            let (b, bv) = other.items[j];
            if a < b {
                i += 1;
            } else if b < a {
                j += 1;
            } else {
                if av != bv {
                    return Some(a);
                }
                i += 1;
                j += 1;
            }
        }
        None
    }

    pub fn compatible(&self, other: &Context) -> bool {
        self.conflict(other).is_none()
    }

    /// Union of two compatible contexts; `None` if they conflict.
    pub fn union(&self, other: &Context) -> Option<Context> {
        let mut out = Vec::with_capacity(self.items.len() + other.items.len());
        let (mut i, mut j) = (0, 0);
        while i < self.items.len() && j < other.items.len() {
            let (a, av) = self.items[i];
            let (b, bv) = other.items[j];
            if a < b {
                out.push((a, av));
                i += 1;
            } else if b < a {
                out.push((b, bv));
                j += 1;
            } else {
                if av != bv {
                    return None;
                }
                out.push((a, av));
                i += 1;
                j += 1;
            }
        }
        out.extend_from_slice(&self.items[i..]);
        out.extend_from_slice(&other.items[j..]);
        Some(Context { items: out })
    }

    /// `self` restricted to the variables not assigned in `other`.
    pub fn minus_vars(&self, other: &Context) -> Context {
        Context {
            items: self
                .items
                .iter()
                .copied()
                .filter(|&(v, _)| !other.contains_var(v))
                .collect(),
        }
    }

    /// True iff every assignment of `other` also appears in `self`.
    pub fn entails(&self, other: &Context) -> bool {
        other.items.iter().all(|&(v, val)| self.get(v) == Some(val))
    }

    pub fn restrict<F: Fn(VarId) -> bool>(&self, keep: F) -> Context {
        Context {
            items: self
                .items
                .iter()
                .copied()
                .filter(|&(v, _)| keep(v))
                .collect(),
        }
    }

    pub fn shares_var(&self, other: &Context) -> bool {
        self.vars().any(|v| other.contains_var(v))
    }
}
