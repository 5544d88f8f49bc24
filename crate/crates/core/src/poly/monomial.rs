use std::cmp::Ordering;

use super::Var;

/// Power product of variables, stored sparsely as `(variable, exponent)`
/// pairs sorted by variable index. No zero exponents are stored.
///
/// The intrinsic [`Ord`] is pure lex with `Var(0)` the most significant
/// variable. Other lex orders are realised by renaming variables
/// (see [`super::MonomialOrder`]).
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Monomial {
    exps: Vec<(Var, u32)>,
}

impl Monomial {
    pub fn one() -> Self {
        Self::default()
    }

    pub fn var(v: Var) -> Self {
        Self { exps: vec![(v, 1)] }
    }

    /// Builds a monomial from arbitrary `(var, exp)` pairs, merging repeats
    /// and dropping zero exponents.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (Var, u32)>) -> Self {
        let mut exps: Vec<(Var, u32)> = pairs.into_iter().filter(|&(_, e)| e > 0).collect();
        exps.sort_by_key(|&(v, _)| v);
        let mut merged: Vec<(Var, u32)> = Vec::with_capacity(exps.len());
        for (v, e) in exps {
            match merged.last_mut() {
                Some((lv, le)) if *lv == v => *le += e,
                _ => merged.push((v, e)),
            }
        }
        Self { exps: merged }
    }

    pub fn is_one(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.exps.iter().map(|&(_, e)| e).sum()
    }

    pub fn exponent(&self, v: Var) -> u32 {
        self.exps
            .binary_search_by_key(&v, |&(w, _)| w)
            .map(|i| self.exps[i].1)
            .unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Var, u32)> + '_ {
        self.exps.iter().copied()
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        self.exps.iter().map(|&(v, _)| v)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::with_capacity(self.exps.len() + other.exps.len());
        let (mut i, mut j) = (0, 0);
        while i < self.exps.len() && j < other.exps.len() {
            let (a, b) = (self.exps[i], other.exps[j]);
            match a.0.cmp(&b.0) {
                Ordering::Less => {
                    out.push(a);
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b);
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((a.0, a.1 + b.1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.exps[i..]);
        out.extend_from_slice(&other.exps[j..]);
        Monomial { exps: out }
    }

    /// True when `self` divides `other`.
    pub fn divides(&self, other: &Monomial) -> bool {
        let mut j = 0;
        for &(v, e) in &self.exps {
            while j < other.exps.len() && other.exps[j].0 < v {
                j += 1;
            }
            if j == other.exps.len() || other.exps[j].0 != v || other.exps[j].1 < e {
                return false;
            }
            j += 1;
        }
        true
    }

    /// `other / self`, assuming `self` divides `other`.
    pub fn quotient_of(&self, other: &Monomial) -> Monomial {
        debug_assert!(self.divides(other));
        let mut out = Vec::with_capacity(other.exps.len());
        let mut i = 0;
        for &(v, e) in &other.exps {
            if i < self.exps.len() && self.exps[i].0 == v {
                let d = e - self.exps[i].1;
                if d > 0 {
                    out.push((v, d));
                }
                i += 1;
            } else {
                out.push((v, e));
            }
        }
        Monomial { exps: out }
    }

    pub fn lcm(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::with_capacity(self.exps.len() + other.exps.len());
        let (mut i, mut j) = (0, 0);
        while i < self.exps.len() && j < other.exps.len() {
            let (a, b) = (self.exps[i], other.exps[j]);
            match a.0.cmp(&b.0) {
                Ordering::Less => {
                    out.push(a);
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b);
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((a.0, a.1.max(b.1)));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.exps[i..]);
        out.extend_from_slice(&other.exps[j..]);
        Monomial { exps: out }
    }

    /// True when the two monomials share no variable.
    pub fn coprime(&self, other: &Monomial) -> bool {
        let (mut i, mut j) = (0, 0);
        while i < self.exps.len() && j < other.exps.len() {
            match self.exps[i].0.cmp(&other.exps[j].0) {
                Ordering::Less => i += 1,
                Ordering::Greater => j += 1,
                Ordering::Equal => return false,
            }
        }
        true
    }

    /// Renames every variable through `f`. The map must be injective on the
    /// variables of `self`.
    pub fn rename(&self, f: impl Fn(Var) -> Var) -> Monomial {
        Monomial::from_pairs(self.exps.iter().map(|&(v, e)| (f(v), e)))
    }

    /// Removes `v` and returns its exponent alongside the cofactor.
    pub fn split_var(&self, v: Var) -> (u32, Monomial) {
        let e = self.exponent(v);
        let rest = Monomial {
            exps: self.exps.iter().copied().filter(|&(w, _)| w != v).collect(),
        };
        (e, rest)
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        for (a, b) in self.exps.iter().zip(&other.exps) {
            if a.0 != b.0 {
                // The monomial containing the more significant variable wins.
                return b.0.cmp(&a.0);
            }
            if a.1 != b.1 {
                return a.1.cmp(&b.1);
            }
        }
        self.exps.len().cmp(&other.exps.len())
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(pairs: &[(u32, u32)]) -> Monomial {
        Monomial::from_pairs(pairs.iter().map(|&(v, e)| (Var(v), e)))
    }

    #[test]
    fn lex_with_var0_most_significant() {
        assert!(m(&[(0, 1)]) > m(&[(1, 5)]));
        assert!(m(&[(0, 1), (1, 1)]) > m(&[(0, 1)]));
        assert!(m(&[(0, 1), (1, 1)]) > m(&[(0, 1), (2, 3)]));
        assert!(m(&[(0, 2)]) > m(&[(0, 1), (1, 1)]));
        assert!(m(&[]) < m(&[(9, 1)]));
    }

    #[test]
    fn division_and_lcm() {
        let a = m(&[(0, 1), (2, 2)]);
        let b = m(&[(0, 2), (1, 1), (2, 2)]);
        assert!(a.divides(&b));
        assert!(!b.divides(&a));
        assert_eq!(a.quotient_of(&b), m(&[(0, 1), (1, 1)]));
        assert_eq!(a.lcm(&m(&[(1, 3)])), m(&[(0, 1), (1, 3), (2, 2)]));
        assert!(m(&[(0, 1)]).coprime(&m(&[(1, 1)])));
        assert!(!a.coprime(&b));
        assert_eq!(a.mul(&a).degree(), 6);
        assert_eq!(m(&[(1, 1), (1, 2)]), m(&[(1, 3)]));
    }
}
