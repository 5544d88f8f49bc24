use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Dense index of an indeterminate in a [`VariableTable`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Var(pub u32);

impl Var {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

/// Role of a variable within a larger computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VarKind {
    /// Primitive (transition) probability.
    Parameter,
    /// Joint probability of an atom, `p(...)` or `t_x`.
    Atom,
    /// Observable quantity `b_y`.
    Manifest,
    /// Semiparametric box parameter such as `r32`.
    Auxiliary,
    /// Helper indeterminate introduced for elimination (e.g. `l`).
    Dummy,
    /// Quantity whose identifiability is being studied.
    Effect,
}

/// Append-only symbol table. Indices are dense and never reused, so
/// polynomials built against an earlier state stay valid.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VariableTable {
    names: Vec<String>,
    kinds: Vec<VarKind>,
    index: HashMap<String, Var>,
}

impl VariableTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the existing variable called `name`, or registers a new one.
    pub fn intern(&mut self, name: &str, kind: VarKind) -> Var {
        if let Some(&v) = self.index.get(name) {
            return v;
        }
        let v = Var(self.names.len() as u32);
        self.names.push(name.to_string());
        self.kinds.push(kind);
        self.index.insert(name.to_string(), v);
        v
    }

    pub fn get(&self, name: &str) -> Option<Var> {
        self.index.get(name).copied()
    }

    pub fn name(&self, var: Var) -> &str {
        &self.names[var.index()]
    }

    pub fn try_name(&self, var: Var) -> Option<&str> {
        self.names.get(var.index()).map(String::as_str)
    }

    pub fn kind(&self, var: Var) -> VarKind {
        self.kinds[var.index()]
    }

    pub fn set_kind(&mut self, var: Var, kind: VarKind) {
        self.kinds[var.index()] = kind;
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Var, &str, VarKind)> + '_ {
        self.names
            .iter()
            .zip(&self.kinds)
            .enumerate()
            .map(|(i, (n, k))| (Var(i as u32), n.as_str(), *k))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interning_is_idempotent_and_dense() {
        let mut t = VariableTable::new();
        let a = t.intern("pi(X3=1|X1=2,X2=1)", VarKind::Parameter);
        let b = t.intern("l", VarKind::Dummy);
        assert_eq!(t.intern("pi(X3=1|X1=2,X2=1)", VarKind::Atom), a);
        assert_eq!((a, b), (Var(0), Var(1)));
        assert_eq!(t.kind(a), VarKind::Parameter);
        assert_eq!(t.name(b), "l");
        assert_eq!(t.len(), 2);
    }
}
