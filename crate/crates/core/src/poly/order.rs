use std::cmp::Ordering;
use std::collections::HashMap;

use super::{Monomial, Var};

/// Lex order given by a variable priority list. The first listed variable
/// is the most significant; variables that are not listed rank below all
/// listed ones, by table index. An empty priority is the table's own
/// index order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MonomialOrder {
    priority: Vec<Var>,
    rank: HashMap<Var, u32>,
}

impl MonomialOrder {
    /// Lex by table index: `Var(0) > Var(1) > ...`.
    pub fn index_lex() -> Self {
        Self::default()
    }

    /// Lex with the given priority. Duplicates keep their first position.
    pub fn lex(priority: impl IntoIterator<Item = Var>) -> Self {
        let mut order = Self::default();
        for v in priority {
            if !order.rank.contains_key(&v) {
                order.rank.insert(v, order.priority.len() as u32);
                order.priority.push(v);
            }
        }
        order
    }

    /// Block order: every variable of `first` outranks every variable of
    /// `second`; within blocks the relative order of `self` is kept.
    pub fn block(&self, first: &[Var], second: &[Var]) -> Self {
        let mut a = first.to_vec();
        let mut b = second.to_vec();
        a.sort_by_key(|&v| self.rank(v));
        b.sort_by_key(|&v| self.rank(v));
        Self::lex(a.into_iter().chain(b))
    }

    pub fn priority(&self) -> &[Var] {
        &self.priority
    }

    pub fn rank(&self, v: Var) -> u64 {
        match self.rank.get(&v) {
            Some(&r) => r as u64,
            None => self.priority.len() as u64 + v.0 as u64,
        }
    }

    /// Compares monomials under this order.
    pub fn cmp(&self, a: &Monomial, b: &Monomial) -> Ordering {
        if self.priority.is_empty() {
            return a.cmp(b);
        }
        self.to_ranked(a).cmp(&self.to_ranked(b))
    }

    /// Renames a monomial into rank space, where the intrinsic lex order of
    /// [`Monomial`] coincides with this order.
    pub(crate) fn to_ranked(&self, m: &Monomial) -> Monomial {
        m.rename(|v| Var(self.rank(v) as u32))
    }

    /// Forward and inverse renamings between table variables and rank space
    /// for the given variable set.
    pub(crate) fn renaming(&self, vars: impl IntoIterator<Item = Var>) -> (HashMap<Var, Var>, HashMap<Var, Var>) {
        let mut vs: Vec<Var> = vars.into_iter().collect();
        vs.sort_by_key(|&v| self.rank(v));
        vs.dedup();
        let fwd: HashMap<Var, Var> = vs.iter().enumerate().map(|(i, &v)| (v, Var(i as u32))).collect();
        let back = fwd.iter().map(|(&k, &v)| (v, k)).collect();
        (fwd, back)
    }
}
