use std::collections::BTreeMap;

use causalg::poly::{
    buchberger, normal_form, parse_polynomial, s_polynomial, Monomial, MonomialOrder, Var, VarKind, VariableTable,
};
use causalg::{Poly, Rational, RationalIdeal};
use proptest::prelude::*;

const NVARS: u32 = 3;

fn coefficient() -> impl Strategy<Value = Rational> {
    (-6i64..=6, 1i64..=4).prop_map(|(n, d)| Rational::new(n.into(), d.into()))
}

fn monomial(max_deg: u32) -> impl Strategy<Value = Monomial> {
    prop::collection::vec((0..NVARS, 0..=max_deg), 0..=NVARS as usize)
        .prop_map(|pairs| Monomial::from_pairs(pairs.into_iter().map(|(v, e)| (Var(v), e))))
}

fn poly(max_terms: usize, max_deg: u32) -> impl Strategy<Value = Poly> {
    prop::collection::vec((monomial(max_deg), coefficient()), 0..=max_terms).prop_map(Poly::from_terms)
}

fn order() -> impl Strategy<Value = MonomialOrder> {
    Just((0..NVARS).map(Var).collect::<Vec<_>>())
        .prop_shuffle()
        .prop_map(MonomialOrder::lex)
}

fn point() -> impl Strategy<Value = Vec<Rational>> {
    prop::collection::vec(coefficient(), NVARS as usize)
}

fn at(p: &Poly, x: &[Rational]) -> Rational {
    p.evaluate(|v| x.get(v.index()).cloned()).unwrap()
}

fn table() -> VariableTable {
    let mut t = VariableTable::new();
    for i in 0..NVARS {
        t.intern(&format!("x{i}"), VarKind::Parameter);
    }
    t
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn ring_laws(f in poly(4, 2), g in poly(4, 2), h in poly(4, 2)) {
        prop_assert_eq!(&f + &g, &g + &f);
        prop_assert_eq!(&f * &g, &g * &f);
        prop_assert_eq!(&(&f * &g) * &h, &f * &(&g * &h));
        prop_assert_eq!(&f * &(&g + &h), &(&f * &g) + &(&f * &h));
        prop_assert!((&f - &f).is_zero());
        prop_assert_eq!(&f * &Poly::one(), f.clone());
    }

    #[test]
    fn evaluation_is_a_homomorphism(f in poly(4, 2), g in poly(4, 2), x in point()) {
        prop_assert_eq!(at(&(&f + &g), &x), at(&f, &x) + at(&g, &x));
        prop_assert_eq!(at(&(&f * &g), &x), at(&f, &x) * at(&g, &x));
    }

    #[test]
    fn display_parses_back(f in poly(5, 3)) {
        let t = table();
        let text = f.display(&t).to_string();
        prop_assert_eq!(parse_polynomial(&text, &t).unwrap(), f);
    }

    #[test]
    fn substitution_commutes_with_evaluation(f in poly(4, 2), g in poly(3, 1), x in point()) {
        let map = BTreeMap::from([(Var(0), g.clone())]);
        let mut y = x.clone();
        y[0] = at(&g, &x);
        prop_assert_eq!(at(&f.substitute(&map), &x), at(&f, &y));
    }

    #[test]
    fn division_remainder_is_reduced(
        f in poly(5, 3),
        divisors in prop::collection::vec(poly(3, 2), 1..=3),
        ord in order(),
    ) {
        let r = normal_form(&f, &divisors, &ord);
        let leads: Vec<Monomial> = divisors
            .iter()
            .filter_map(|g| g.leading_in(&ord).map(|(m, _)| m.clone()))
            .collect();
        for (m, _) in r.terms() {
            prop_assert!(leads.iter().all(|l| !l.divides(m)));
        }
        // f - r lies in the ideal of the divisors.
        let gb = buchberger(&RationalIdeal::new(divisors.clone(), ord.clone()), 100_000).unwrap();
        prop_assert!(gb.contains(&(&f - &r)));
    }

    #[test]
    fn basis_is_sound(gens in prop::collection::vec(poly(3, 2), 1..=3), ord in order(), k in poly(2, 1)) {
        let gb = buchberger(&RationalIdeal::new(gens.clone(), ord.clone()), 100_000).unwrap();
        let basis = gb.basis();
        prop_assert!(gens.iter().all(|g| gb.contains(g)));
        prop_assert!(gb.contains(&(&gens[0] * &k)));
        for (i, f) in basis.iter().enumerate() {
            prop_assert!(f.leading_in(&ord).is_some_and(|(_, c)| *c == Rational::from_integer(1.into())));
            for g in &basis[i + 1..] {
                prop_assert!(gb.reduce(&s_polynomial(f, g, &ord)).is_zero());
            }
        }
        // Recomputing from the reduced basis returns it unchanged.
        let again = buchberger(&RationalIdeal::new(basis.to_vec(), ord), 100_000).unwrap();
        prop_assert_eq!(again.basis(), basis);
    }
}
