use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use super::{field::is_one, Field, Monomial, MonomialOrder, PolyError, Var, VariableTable};

/// Sparse multivariate polynomial.
///
/// Terms are kept strictly descending under the intrinsic lex order of
/// [`Monomial`] with no zero coefficients, so structural equality is
/// mathematical equality.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial<C> {
    terms: Vec<(Monomial, C)>,
}

impl<C: Field + Eq> Eq for Polynomial<C> {}

impl<C: Field> Default for Polynomial<C> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<C: Field> Polynomial<C> {
    pub fn zero() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn one() -> Self {
        Self::constant(C::one())
    }

    pub fn constant(c: C) -> Self {
        Self::term(Monomial::one(), c)
    }

    pub fn var(v: Var) -> Self {
        Self::term(Monomial::var(v), C::one())
    }

    pub fn term(m: Monomial, c: C) -> Self {
        if c.is_zero() {
            Self::zero()
        } else {
            Self { terms: vec![(m, c)] }
        }
    }

    /// Collects arbitrary terms, combining like monomials.
    pub fn from_terms(terms: impl IntoIterator<Item = (Monomial, C)>) -> Self {
        let mut acc: BTreeMap<Monomial, C> = BTreeMap::new();
        for (m, c) in terms {
            accumulate(&mut acc, m, c);
        }
        Self::from_map(acc)
    }

    fn from_map(acc: BTreeMap<Monomial, C>) -> Self {
        Self {
            terms: acc.into_iter().rev().filter(|(_, c)| !c.is_zero()).collect(),
        }
    }

    /// Wraps terms that are already strictly descending and nonzero.
    pub(crate) fn from_sorted_unchecked(terms: Vec<(Monomial, C)>) -> Self {
        debug_assert!(terms.windows(2).all(|w| w[0].0 > w[1].0));
        debug_assert!(terms.iter().all(|(_, c)| !c.is_zero()));
        Self { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in canonical (descending index-lex) order.
    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &C)> + '_ {
        self.terms.iter().map(|(m, c)| (m, c))
    }

    /// Terms sorted descending under `order`.
    pub fn terms_in(&self, order: &MonomialOrder) -> Vec<(&Monomial, &C)> {
        let mut ts: Vec<_> = self.terms().collect();
        ts.sort_by(|a, b| order.cmp(b.0, a.0));
        ts
    }

    /// Leading term under the intrinsic lex order.
    pub fn leading(&self) -> Option<(&Monomial, &C)> {
        self.terms.first().map(|(m, c)| (m, c))
    }

    pub fn leading_in(&self, order: &MonomialOrder) -> Option<(&Monomial, &C)> {
        self.terms().max_by(|a, b| order.cmp(a.0, b.0))
    }

    pub fn constant_value(&self) -> Option<C> {
        match self.terms.as_slice() {
            [] => Some(C::zero()),
            [(m, c)] if m.is_one() => Some(c.clone()),
            _ => None,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.constant_value().is_some()
    }

    /// Total degree; the zero polynomial has degree 0.
    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|(m, _)| m.degree()).max().unwrap_or(0)
    }

    pub fn degree_in(&self, v: Var) -> u32 {
        self.terms.iter().map(|(m, _)| m.exponent(v)).max().unwrap_or(0)
    }

    /// True for a single term with coefficient one.
    pub fn is_monic_monomial(&self) -> bool {
        matches!(self.terms.as_slice(), [(_, c)] if is_one(c))
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.terms.iter().flat_map(|(m, _)| m.vars()).collect()
    }

    pub fn scale(&self, c: &C) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self {
            terms: self
                .terms
                .iter()
                .map(|(m, d)| (m.clone(), d.clone() * c.clone()))
                .collect(),
        }
    }

    pub fn mul_term(&self, m: &Monomial, c: &C) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self {
            terms: self
                .terms
                .iter()
                .map(|(n, d)| (n.mul(m), d.clone() * c.clone()))
                .collect(),
        }
    }

    /// Divides through by the leading coefficient of the intrinsic order.
    pub fn monic(&self) -> Self {
        match self.leading() {
            Some((_, c)) if !is_one(c) => {
                let inv = C::one() / c.clone();
                self.scale(&inv)
            }
            _ => self.clone(),
        }
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// Exact evaluation. Every variable of `self` must be assigned.
    pub fn evaluate<F>(&self, assign: F) -> Result<C, PolyError>
    where
        F: Fn(Var) -> Option<C>,
    {
        let mut cache: BTreeMap<Var, C> = BTreeMap::new();
        let mut total = C::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (v, e) in m.iter() {
                let x = match cache.get(&v) {
                    Some(x) => x.clone(),
                    None => {
                        let x = assign(v).ok_or_else(|| PolyError::MissingAssignment(v.to_string()))?;
                        cache.insert(v, x.clone());
                        x
                    }
                };
                for _ in 0..e {
                    t = t * x.clone();
                }
            }
            total = total + t;
        }
        Ok(total)
    }

    /// Replaces each mapped variable by a polynomial, leaving others alone.
    pub fn substitute(&self, map: &BTreeMap<Var, Polynomial<C>>) -> Self {
        if map.is_empty() || !self.vars().iter().any(|v| map.contains_key(v)) {
            return self.clone();
        }
        let mut powers: BTreeMap<(Var, u32), Polynomial<C>> = BTreeMap::new();
        let mut acc: BTreeMap<Monomial, C> = BTreeMap::new();
        for (m, c) in &self.terms {
            let mut kept = Vec::new();
            let mut factor = Polynomial::constant(c.clone());
            for (v, e) in m.iter() {
                match map.get(&v) {
                    Some(p) => {
                        let pe = powers.entry((v, e)).or_insert_with(|| p.pow(e));
                        factor = &factor * &*pe;
                    }
                    None => kept.push((v, e)),
                }
            }
            let kept = Monomial::from_pairs(kept);
            for (n, d) in factor.terms {
                accumulate(&mut acc, n.mul(&kept), d);
            }
        }
        Self::from_map(acc)
    }

    /// Substitutes constants for some variables.
    pub fn partial_eval(&self, values: &BTreeMap<Var, C>) -> Self {
        let map = values
            .iter()
            .map(|(v, c)| (*v, Polynomial::constant(c.clone())))
            .collect();
        self.substitute(&map)
    }

    /// Renames variables. The map must be injective on `self.vars()`.
    pub fn rename(&self, f: impl Fn(Var) -> Var) -> Self {
        Self::from_terms(self.terms.iter().map(|(m, c)| (m.rename(&f), c.clone())))
    }

    /// Coefficients of `self` viewed as a univariate polynomial in `v`;
    /// entry `k` multiplies `v^k`.
    pub fn coefficients_in(&self, v: Var) -> Vec<Polynomial<C>> {
        let deg = self.degree_in(v) as usize;
        let mut parts: Vec<Vec<(Monomial, C)>> = vec![Vec::new(); deg + 1];
        for (m, c) in &self.terms {
            let (e, rest) = m.split_var(v);
            parts[e as usize].push((rest, c.clone()));
        }
        parts.into_iter().map(Polynomial::from_terms).collect()
    }

    pub fn display<'a>(&'a self, table: &'a VariableTable) -> DisplayPoly<'a, C> {
        DisplayPoly { poly: self, table, order: None }
    }

    pub fn display_in<'a>(&'a self, table: &'a VariableTable, order: &'a MonomialOrder) -> DisplayPoly<'a, C> {
        DisplayPoly { poly: self, table, order: Some(order) }
    }
}

fn accumulate<C: Field>(acc: &mut BTreeMap<Monomial, C>, m: Monomial, c: C) {
    if c.is_zero() {
        return;
    }
    match acc.get_mut(&m) {
        Some(d) => {
            let s = d.clone() + c;
            if s.is_zero() {
                acc.remove(&m);
            } else {
                *d = s;
            }
        }
        None => {
            acc.insert(m, c);
        }
    }
}

fn merge<C: Field>(
    a: impl Iterator<Item = (Monomial, C)>,
    b: impl Iterator<Item = (Monomial, C)>,
    both: impl Fn(C, C) -> C,
    only_b: impl Fn(C) -> C,
) -> Polynomial<C> {
    let mut a = a.peekable();
    let mut b = b.peekable();
    let mut out = Vec::new();
    loop {
        let ord = match (a.peek(), b.peek()) {
            (None, None) => break,
            (Some(_), None) => Ordering::Greater,
            (None, Some(_)) => Ordering::Less,
            (Some(x), Some(y)) => x.0.cmp(&y.0),
        };
        match ord {
            Ordering::Greater => out.push(a.next().unwrap()),
            Ordering::Less => {
                let (m, c) = b.next().unwrap();
                out.push((m, only_b(c)));
            }
            Ordering::Equal => {
                let (m, x) = a.next().unwrap();
                let (_, y) = b.next().unwrap();
                let s = both(x, y);
                if !s.is_zero() {
                    out.push((m, s));
                }
            }
        }
    }
    Polynomial { terms: out }
}

impl<C: Field> Add for &Polynomial<C> {
    type Output = Polynomial<C>;
    fn add(self, rhs: &Polynomial<C>) -> Polynomial<C> {
        merge(self.terms.iter().cloned(), rhs.terms.iter().cloned(), |a, b| a + b, |b| b)
    }
}

impl<C: Field> Sub for &Polynomial<C> {
    type Output = Polynomial<C>;
    fn sub(self, rhs: &Polynomial<C>) -> Polynomial<C> {
        merge(self.terms.iter().cloned(), rhs.terms.iter().cloned(), |a, b| a - b, |b| -b)
    }
}

impl<C: Field> Mul for &Polynomial<C> {
    type Output = Polynomial<C>;
    fn mul(self, rhs: &Polynomial<C>) -> Polynomial<C> {
        if self.is_zero() || rhs.is_zero() {
            return Polynomial::zero();
        }
        let mut acc = BTreeMap::new();
        for (m, c) in &self.terms {
            for (n, d) in &rhs.terms {
                accumulate(&mut acc, m.mul(n), c.clone() * d.clone());
            }
        }
        Polynomial::from_map(acc)
    }
}

impl<C: Field> Neg for &Polynomial<C> {
    type Output = Polynomial<C>;
    fn neg(self) -> Polynomial<C> {
        Polynomial {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect(),
        }
    }
}

macro_rules! owned_ops {
    ($($tr:ident $f:ident),*) => {$(
        impl<C: Field> $tr for Polynomial<C> {
            type Output = Polynomial<C>;
            fn $f(self, rhs: Polynomial<C>) -> Polynomial<C> { (&self).$f(&rhs) }
        }
        impl<C: Field> $tr<&Polynomial<C>> for Polynomial<C> {
            type Output = Polynomial<C>;
            fn $f(self, rhs: &Polynomial<C>) -> Polynomial<C> { (&self).$f(rhs) }
        }
    )*};
}
owned_ops!(Add add, Sub sub, Mul mul);

impl<C: Field> Neg for Polynomial<C> {
    type Output = Polynomial<C>;
    fn neg(self) -> Polynomial<C> {
        -&self
    }
}

impl<C: Field> std::iter::Sum for Polynomial<C> {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::zero(), |a, b| &a + &b)
    }
}

impl<C: Field> std::iter::Product for Polynomial<C> {
    fn product<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::one(), |a, b| &a * &b)
    }
}

/// Human-readable rendering that re-parses to the same polynomial.
pub struct DisplayPoly<'a, C> {
    poly: &'a Polynomial<C>,
    table: &'a VariableTable,
    order: Option<&'a MonomialOrder>,
}

impl<C: Field> fmt::Display for DisplayPoly<'_, C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.poly.is_zero() {
            return f.write_str("0");
        }
        let terms: Vec<(&Monomial, &C)> = match self.order {
            Some(o) => self.poly.terms_in(o),
            None => self.poly.terms().collect(),
        };
        for (i, (m, c)) in terms.into_iter().enumerate() {
            let neg = *c < C::zero();
            let mag = if neg { -c.clone() } else { c.clone() };
            match (i, neg) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            let mut parts = Vec::new();
            if !is_one(&mag) || m.is_one() {
                parts.push(mag.to_string());
            }
            for (v, e) in m.iter() {
                let name = match self.table.try_name(v) {
                    Some(n) => n.to_string(),
                    None => v.to_string(),
                };
                if e == 1 {
                    parts.push(name);
                } else {
                    parts.push(format!("{name}^{e}"));
                }
            }
            f.write_str(&parts.join("*"))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{rat, Poly};

    fn x(i: u32) -> Poly {
        Poly::var(Var(i))
    }

    #[test]
    fn difference_of_squares() {
        let (s1, s2) = (x(0), x(1));
        let lhs = &(&s1 + &s2) * &(&s1 - &s2);
        let rhs = &(&s1 * &s1) - &(&s2 * &s2);
        assert_eq!(lhs, rhs);
        assert_eq!(lhs.len(), 2);
    }

    #[test]
    fn mu_coordinate_expands() {
        let (s1, s2) = (x(0), x(1));
        let lhs = &s1 * &(&Poly::one() - &s2);
        assert_eq!(lhs, &s1 - &(&s1 * &s2));
    }

    #[test]
    fn cancellation_is_structural() {
        let a = &x(0) * &x(1) + Poly::constant(rat(1, 3));
        assert!((&a - &a).is_zero());
    }

    #[test]
    fn evaluate_and_substitute() {
        let f = &x(0) * &x(1);
        let v = f.evaluate(|v| Some(if v == Var(0) { rat(1, 2) } else { rat(1, 3) }));
        assert_eq!(v, Ok(rat(1, 6)));
        assert_eq!(
            f.evaluate(|v| (v == Var(0)).then(|| rat(1, 2))),
            Err(PolyError::MissingAssignment("v1".into()))
        );
        let map = BTreeMap::from([(Var(1), &Poly::one() - &x(0))]);
        assert_eq!(f.substitute(&map), &x(0) - &(&x(0) * &x(0)));
    }

    #[test]
    fn coefficients_in_variable() {
        // (x1 + 2) * x0^2 + x1
        let f = &(&x(1) + &Poly::constant(rat(2, 1))) * &x(0).pow(2) + x(1);
        let cs = f.coefficients_in(Var(0));
        assert_eq!(cs.len(), 3);
        assert_eq!(cs[0], x(1));
        assert!(cs[1].is_zero());
        assert_eq!(cs[2], &x(1) + &Poly::constant(rat(2, 1)));
    }

    #[test]
    fn generic_over_f64() {
        let p: Polynomial<f64> = &Polynomial::var(Var(0)) + &Polynomial::constant(0.5);
        assert_eq!(p.evaluate(|_| Some(2.0)), Ok(2.5));
    }
}
