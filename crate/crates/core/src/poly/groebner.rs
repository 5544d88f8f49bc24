use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::{AtomicBool, Ordering as AtomicOrdering};

use super::{Field, Monomial, MonomialOrder, PolyError, Polynomial, Var};

/// Default budget of S-pair reductions per Gröbner computation.
pub const DEFAULT_STEP_LIMIT: usize = 1_000_000;

/// Cooperative cancellation flag, checked once per S-pair.
pub type Cancel<'a> = Option<&'a AtomicBool>;

/// Finitely generated ideal together with the order used to compute with it.
#[derive(Debug, Clone, PartialEq)]
pub struct Ideal<C> {
    generators: Vec<Polynomial<C>>,
    order: MonomialOrder,
}

impl<C: Field> Ideal<C> {
    /// Zero generators are dropped.
    pub fn new(generators: impl IntoIterator<Item = Polynomial<C>>, order: MonomialOrder) -> Self {
        Self {
            generators: generators.into_iter().filter(|g| !g.is_zero()).collect(),
            order,
        }
    }

    pub fn generators(&self) -> &[Polynomial<C>] {
        &self.generators
    }

    pub fn order(&self) -> &MonomialOrder {
        &self.order
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.generators.iter().flat_map(|g| g.vars()).collect()
    }

    pub fn with_order(self, order: MonomialOrder) -> Self {
        Self { order, ..self }
    }

    /// Sum of ideals; the order of `self` is kept.
    pub fn plus(&self, other: &Ideal<C>) -> Self {
        Self::new(
            self.generators.iter().chain(&other.generators).cloned(),
            self.order.clone(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroebnerBasis<C> {
    basis: Vec<Polynomial<C>>,
    order: MonomialOrder,
    reduced: bool,
}

impl<C: Field> GroebnerBasis<C> {
    /// Basis elements, monic, sorted by descending leading monomial.
    pub fn basis(&self) -> &[Polynomial<C>] {
        &self.basis
    }

    pub fn order(&self) -> &MonomialOrder {
        &self.order
    }

    pub fn is_reduced(&self) -> bool {
        self.reduced
    }

    pub fn into_ideal(self) -> Ideal<C> {
        Ideal::new(self.basis, self.order)
    }

    pub fn reduce(&self, f: &Polynomial<C>) -> Polynomial<C> {
        normal_form(f, &self.basis, &self.order)
    }

    /// Ideal membership.
    pub fn contains(&self, f: &Polynomial<C>) -> bool {
        self.reduce(f).is_zero()
    }

    /// True when the basis generates the unit ideal.
    pub fn is_unit(&self) -> bool {
        self.basis.iter().any(|g| g.is_constant() && !g.is_zero())
    }

    /// Checks Buchberger's criterion directly: every S-polynomial of a pair
    /// of basis elements reduces to zero.
    pub fn satisfies_buchberger_criterion(&self) -> bool {
        for i in 0..self.basis.len() {
            for j in i + 1..self.basis.len() {
                let s = s_polynomial(&self.basis[i], &self.basis[j], &self.order);
                if !self.reduce(&s).is_zero() {
                    return false;
                }
            }
        }
        true
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GroebnerOptions<'a> {
    /// Maximum number of S-pair reductions.
    pub step_limit: usize,
    /// Produce the reduced basis; otherwise a minimal basis (monic, no
    /// leading monomial divisible by another) without tail reduction.
    pub reduced: bool,
    pub cancel: Cancel<'a>,
}

impl Default for GroebnerOptions<'_> {
    fn default() -> Self {
        Self {
            step_limit: DEFAULT_STEP_LIMIT,
            reduced: true,
            cancel: None,
        }
    }
}

/// Full multivariate division remainder of `f` by `divisors` under `order`.
/// The first divisor (in list order) whose leading monomial divides the
/// current leading monomial is always used.
pub fn normal_form<C: Field>(f: &Polynomial<C>, divisors: &[Polynomial<C>], order: &MonomialOrder) -> Polynomial<C> {
    let vars = divisors.iter().flat_map(|g| g.vars()).chain(f.vars());
    let (fwd, back) = order.renaming(vars);
    let ranked: Vec<Polynomial<C>> = divisors
        .iter()
        .filter(|g| !g.is_zero())
        .map(|g| g.rename(|v| fwd[&v]))
        .collect();
    let refs: Vec<&Polynomial<C>> = ranked.iter().collect();
    nf_ranked(&f.rename(|v| fwd[&v]), &refs).rename(|v| back[&v])
}

/// S-polynomial of `f` and `g` under `order`.
pub fn s_polynomial<C: Field>(f: &Polynomial<C>, g: &Polynomial<C>, order: &MonomialOrder) -> Polynomial<C> {
    let (fwd, back) = order.renaming(f.vars().into_iter().chain(g.vars()));
    let f = f.rename(|v| fwd[&v]);
    let g = g.rename(|v| fwd[&v]);
    spoly_ranked(&f, &g).rename(|v| back[&v])
}

/// Reduced Gröbner basis of `ideal` under its order.
pub fn buchberger<C: Field>(ideal: &Ideal<C>, step_limit: usize) -> Result<GroebnerBasis<C>, PolyError> {
    buchberger_with(
        ideal,
        GroebnerOptions {
            step_limit,
            ..Default::default()
        },
    )
}

pub fn buchberger_with<C: Field>(ideal: &Ideal<C>, opts: GroebnerOptions<'_>) -> Result<GroebnerBasis<C>, PolyError> {
    let (fwd, back) = ideal.order.renaming(ideal.vars());
    let gens = ideal.generators.iter().map(|g| g.rename(|v| fwd[&v])).collect();
    let basis = Engine::new(opts).run(gens)?;
    Ok(GroebnerBasis {
        basis: basis.into_iter().map(|g| g.rename(|v| back[&v])).collect(),
        order: ideal.order.clone(),
        reduced: opts.reduced,
    })
}

/// Generators of `ideal ∩ K[keep]`: the reduced basis under the block lex
/// order that ranks every other variable above `keep`, filtered to the
/// elements free of eliminated variables.
pub fn elimination_ideal<C: Field>(
    ideal: &Ideal<C>,
    keep: &BTreeSet<Var>,
    step_limit: usize,
) -> Result<Ideal<C>, PolyError> {
    let (_, elim) = elimination_ideal_with(
        ideal,
        keep,
        GroebnerOptions {
            step_limit,
            ..Default::default()
        },
    )?;
    Ok(elim)
}

/// Like [`elimination_ideal`], also returning the full block-order basis.
pub fn elimination_ideal_with<C: Field>(
    ideal: &Ideal<C>,
    keep: &BTreeSet<Var>,
    opts: GroebnerOptions<'_>,
) -> Result<(GroebnerBasis<C>, Ideal<C>), PolyError> {
    let vars = ideal.vars();
    let eliminated: Vec<Var> = vars.iter().copied().filter(|v| !keep.contains(v)).collect();
    let kept: Vec<Var> = keep.iter().copied().collect();
    let order = ideal.order.block(&eliminated, &kept);
    let gb = buchberger_with(&ideal.clone().with_order(order), opts)?;
    let gens: Vec<Polynomial<C>> = gb
        .basis()
        .iter()
        .filter(|g| g.vars().is_subset(keep))
        .cloned()
        .collect();
    Ok((gb, Ideal::new(gens, ideal.order.clone())))
}

impl<C: Field> Polynomial<C> {
    fn lm(&self) -> &Monomial {
        self.leading().expect("nonzero polynomial").0
    }

    fn lc(&self) -> &C {
        self.leading().expect("nonzero polynomial").1
    }

    fn without_leading(&self) -> Polynomial<C> {
        Polynomial::from_sorted_unchecked(self.terms().skip(1).map(|(m, c)| (m.clone(), c.clone())).collect())
    }
}

fn nf_ranked<C: Field>(f: &Polynomial<C>, divisors: &[&Polynomial<C>]) -> Polynomial<C> {
    // Pending terms keyed by monomial; the largest is always reduced next.
    let mut p: BTreeMap<Monomial, C> = f.terms().map(|(m, c)| (m.clone(), c.clone())).collect();
    let mut rem: Vec<(Monomial, C)> = Vec::new();
    while let Some((m, c)) = p.pop_last() {
        let Some(g) = divisors.iter().filter(|g| g.lm().divides(&m)).min_by(|a, b| a.lm().cmp(b.lm())) else {
            rem.push((m, c));
            continue;
        };
        let q = g.lm().quotient_of(&m);
        let coef = c / g.lc().clone();
        for (n, d) in g.terms().skip(1) {
            let delta = d.clone() * coef.clone();
            match p.entry(n.mul(&q)) {
                Entry::Occupied(mut e) => {
                    let v = e.get().clone() - delta;
                    if v.is_zero() {
                        e.remove();
                    } else {
                        *e.get_mut() = v;
                    }
                }
                Entry::Vacant(e) => {
                    e.insert(-delta);
                }
            }
        }
    }
    Polynomial::from_sorted_unchecked(rem)
}

fn spoly_ranked<C: Field>(f: &Polynomial<C>, g: &Polynomial<C>) -> Polynomial<C> {
    let l = f.lm().lcm(g.lm());
    let a = f.mul_term(&f.lm().quotient_of(&l), &(C::one() / f.lc().clone()));
    let b = g.mul_term(&g.lm().quotient_of(&l), &(C::one() / g.lc().clone()));
    &a - &b
}

/// Buchberger's algorithm in rank space (intrinsic lex order), with the
/// Gebauer–Möller installation of both of Buchberger's criteria and
/// normal pair selection (smallest lcm first, ties by index).
struct Engine<'a, C> {
    opts: GroebnerOptions<'a>,
    polys: Vec<Polynomial<C>>,
    active: Vec<usize>,
    pairs: BTreeSet<(Monomial, usize, usize)>,
}

impl<'a, C: Field> Engine<'a, C> {
    fn new(opts: GroebnerOptions<'a>) -> Self {
        Self {
            opts,
            polys: Vec::new(),
            active: Vec::new(),
            pairs: BTreeSet::new(),
        }
    }

    fn run(mut self, mut gens: Vec<Polynomial<C>>) -> Result<Vec<Polynomial<C>>, PolyError> {
        gens.retain(|g| !g.is_zero());
        gens.sort_by(|a, b| cmp_polys(a, b));
        for g in gens {
            let h = self.reduce(&g);
            if !h.is_zero() {
                self.update(h.monic());
            }
        }
        let mut steps = 0usize;
        while let Some((_, i, j)) = self.pairs.pop_first() {
            if let Some(flag) = self.opts.cancel {
                if flag.load(AtomicOrdering::Relaxed) {
                    return Err(PolyError::Cancelled);
                }
            }
            steps += 1;
            if steps > self.opts.step_limit {
                return Err(PolyError::StepLimitExceeded(self.opts.step_limit));
            }
            let s = spoly_ranked(&self.polys[i], &self.polys[j]);
            let h = self.reduce(&s);
            if !h.is_zero() {
                if h.is_constant() {
                    return Ok(vec![Polynomial::one()]);
                }
                self.update(h.monic());
            }
        }
        Ok(self.finish())
    }

    fn reduce(&self, f: &Polynomial<C>) -> Polynomial<C> {
        let divs: Vec<&Polynomial<C>> = self.active.iter().map(|&i| &self.polys[i]).collect();
        nf_ranked(f, &divs)
    }

    fn update(&mut self, h: Polynomial<C>) {
        let t = self.polys.len();
        let ht = h.lm().clone();
        self.polys.push(h);

        let cands: Vec<(usize, Monomial)> = self
            .active
            .iter()
            .map(|&g| (g, ht.lcm(self.polys[g].lm())))
            .collect();
        let mut kept: Vec<(usize, Monomial)> = Vec::new();
        for (idx, (g1, l1)) in cands.iter().enumerate() {
            let coprime = ht.coprime(self.polys[*g1].lm());
            let dominated = cands[idx + 1..]
                .iter()
                .chain(kept.iter())
                .any(|(_, l2)| l2.divides(l1));
            if coprime || !dominated {
                kept.push((*g1, l1.clone()));
            }
        }

        let polys = &self.polys;
        self.pairs.retain(|(l, i, j)| {
            !ht.divides(l) || ht.lcm(polys[*i].lm()) == *l || ht.lcm(polys[*j].lm()) == *l
        });
        for (g, l) in kept {
            if !ht.coprime(self.polys[g].lm()) {
                self.pairs.insert((l, g.min(t), g.max(t)));
            }
        }

        let polys = &self.polys;
        self.active.retain(|&g| !ht.divides(polys[g].lm()));
        self.active.push(t);
        if self.opts.reduced {
            self.tail_reduce(&ht);
        }
    }

    /// Tail-reduces every active element with a term divisible by `ht`.
    /// Leading monomials are unchanged, so pending pairs stay valid.
    fn tail_reduce(&mut self, ht: &Monomial) {
        for k in 0..self.active.len() {
            let g = self.active[k];
            if !self.polys[g].terms().skip(1).any(|(m, _)| ht.divides(m)) {
                continue;
            }
            let divs: Vec<&Polynomial<C>> = self
                .active
                .iter()
                .filter(|&&i| i != g)
                .map(|&i| &self.polys[i])
                .collect();
            let p = &self.polys[g];
            let tail = nf_ranked(&p.without_leading(), &divs);
            let reduced = &Polynomial::term(p.lm().clone(), p.lc().clone()) + &tail;
            self.polys[g] = reduced;
        }
    }

    fn finish(self) -> Vec<Polynomial<C>> {
        let mut basis: Vec<Polynomial<C>> = self.active.iter().map(|&i| self.polys[i].clone()).collect();
        basis.sort_by(|a, b| a.lm().cmp(b.lm()));
        if self.opts.reduced {
            let mut done: Vec<Polynomial<C>> = Vec::with_capacity(basis.len());
            for g in basis {
                let head = Polynomial::term(g.lm().clone(), g.lc().clone());
                let refs: Vec<&Polynomial<C>> = done.iter().collect();
                let tail = nf_ranked(&g.without_leading(), &refs);
                done.push((&head + &tail).monic());
            }
            basis = done;
        }
        basis.reverse();
        basis
    }
}

fn cmp_polys<C: Field>(a: &Polynomial<C>, b: &Polynomial<C>) -> std::cmp::Ordering {
    let ka: Vec<&Monomial> = a.terms().map(|(m, _)| m).collect();
    let kb: Vec<&Monomial> = b.terms().map(|(m, _)| m).collect();
    ka.cmp(&kb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{parse_polynomial_mut, VarKind, VariableTable};
    use crate::Poly;

    fn polys(table: &mut VariableTable, src: &[&str]) -> Vec<Poly> {
        src.iter()
            .map(|s| parse_polynomial_mut(s, table, VarKind::Dummy).unwrap())
            .collect()
    }

    #[test]
    fn self_reduction_and_divisibility() {
        let mut t = VariableTable::new();
        let ps = polys(&mut t, &["t1^2 - t2", "t1*t2", "t1", "t1^2 + t2"]);
        let o = MonomialOrder::index_lex();
        assert!(normal_form(&ps[0], &ps[..1], &o).is_zero());
        assert!(normal_form(&ps[1], &ps[2..3], &o).is_zero());
        let two_t2 = polys(&mut t, &["2*t2"]).remove(0);
        assert_eq!(normal_form(&ps[3], &ps[..1], &o), two_t2);
    }

    #[test]
    fn single_linear_generator_is_its_own_basis() {
        let mut t = VariableTable::new();
        let ps = polys(&mut t, &["t1 - 1/3"]);
        let gb = buchberger(&Ideal::new(ps.clone(), MonomialOrder::index_lex()), 10).unwrap();
        assert_eq!(gb.basis(), &ps[..]);
    }

    #[test]
    fn hand_computed_basis() {
        // <xy - 1, y^2 - 1> with x > y: S(xy-1, y^2-1) = y*(xy-1) - x*(y^2-1) = x - y.
        let mut t = VariableTable::new();
        let ps = polys(&mut t, &["x*y - 1", "y^2 - 1"]);
        let gb = buchberger(&Ideal::new(ps, MonomialOrder::index_lex()), 100).unwrap();
        let want = polys(&mut t, &["x - y", "y^2 - 1"]);
        assert_eq!(gb.basis(), &want[..]);
        assert!(gb.satisfies_buchberger_criterion());
    }

    #[test]
    fn inconsistent_system_is_unit() {
        let mut t = VariableTable::new();
        let ps = polys(&mut t, &["a - 1/2", "a - 1/3"]);
        let gb = buchberger(&Ideal::new(ps, MonomialOrder::index_lex()), 100).unwrap();
        assert!(gb.is_unit());
        assert_eq!(gb.basis(), &[Poly::one()]);
    }

    #[test]
    fn step_limit_is_enforced() {
        let mut t = VariableTable::new();
        let ps = polys(&mut t, &["x^2*y - z", "x*y^2 - x", "y*z^2 - x*z"]);
        let err = buchberger(&Ideal::new(ps, MonomialOrder::index_lex()), 1).unwrap_err();
        assert_eq!(err, PolyError::StepLimitExceeded(1));
    }

    #[test]
    fn cancellation_flag_stops_work() {
        let mut t = VariableTable::new();
        let ps = polys(&mut t, &["x^2*y - z", "x*y^2 - x"]);
        let flag = AtomicBool::new(true);
        let opts = GroebnerOptions {
            cancel: Some(&flag),
            ..Default::default()
        };
        let err = buchberger_with(&Ideal::new(ps, MonomialOrder::index_lex()), opts).unwrap_err();
        assert_eq!(err, PolyError::Cancelled);
    }

    #[test]
    fn elimination_of_nothing_is_the_basis() {
        let mut t = VariableTable::new();
        let ps = polys(&mut t, &["x*y - 1", "y^2 - 1"]);
        let ideal = Ideal::new(ps, MonomialOrder::index_lex());
        let keep = ideal.vars();
        let e = elimination_ideal(&ideal, &keep, 100).unwrap();
        let gb = buchberger(&ideal, 100).unwrap();
        assert_eq!(e.generators(), gb.basis());
    }

    #[test]
    fn monomial_parametrization_image_is_the_simplex() {
        let mut t = VariableTable::new();
        let ps = polys(
            &mut t,
            &[
                "s1", "s2", "s3",
                "p00 - s1*s2",
                "p01 - s1*(1 - s2)",
                "p10 - (1 - s1)*s3",
                "p11 - (1 - s1)*(1 - s3)",
                "p00 + p01 + p10 + p11 - 1",
            ],
        );
        let ideal = Ideal::new(ps[3..].to_vec(), MonomialOrder::index_lex());
        let keep: BTreeSet<Var> = ["p00", "p01", "p10", "p11"].iter().map(|n| t.get(n).unwrap()).collect();
        let e = elimination_ideal(&ideal, &keep, 10_000).unwrap();
        let gb = buchberger(&e, 100).unwrap();
        assert!(gb.contains(&ps[7]));
        // The map is dominant: nothing beyond the sum-to-one relation survives.
        assert_eq!(gb.basis().len(), 1);
    }

    #[test]
    fn point_projection_listing() {
        let mut t = VariableTable::new();
        for n in ["t1", "t2", "t3", "l", "s1", "s2"] {
            t.intern(n, VarKind::Dummy);
        }
        let gens = polys(
            &mut t,
            &[
                "t1 - 1/3", "t2 - 1/3", "t3 - 1/3",
                "t1 + t2 - l",
                "s1*l - 1/3", "s2*l - 1/3", "s1 + s2 - 1", "s1 + s2 - 1",
            ],
        );
        let ideal = Ideal::new(gens, MonomialOrder::index_lex());
        let minimal = buchberger_with(&ideal, GroebnerOptions { reduced: false, ..Default::default() }).unwrap();
        let mut got: Vec<Poly> = minimal.basis().to_vec();
        let mut want = polys(&mut t, &["t3 - 1/3", "t2 - 1/3", "t1 - 1/3", "s1 + s2 - 1", "l - 2/3", "s2 - 1/2"]);
        got.sort_by(cmp_polys);
        want.sort_by(cmp_polys);
        assert_eq!(got, want);
        let reduced = buchberger(&ideal, 100).unwrap();
        let want = polys(&mut t, &["t1 - 1/3", "t2 - 1/3", "t3 - 1/3", "l - 2/3", "s1 - 1/2", "s2 - 1/2"]);
        assert_eq!(reduced.basis(), &want[..]);
    }
}
