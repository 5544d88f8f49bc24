//! Exact algebraic compilation of discrete causal models.
//!
//! Bayesian networks, probability trees and general partial-order
//! ("circumstance") models are compiled into polynomial parametrizations
//! over products of simplices. On top of that representation the crate
//! evaluates the multiplication-rule map, conditions, intervenes, checks
//! feasibility and decides identifiability of causal effects with
//! Gröbner-basis elimination over the rationals.

pub mod calculus;
pub mod identify;
pub mod models;
pub mod poly;
pub mod sample;

use num_bigint::BigInt;

/// Arbitrary-precision rational, the coefficient field of every model.
pub type Rational = num_rational::BigRational;
/// Polynomial with rational coefficients.
pub type Poly = poly::Polynomial<Rational>;
pub type RationalIdeal = poly::Ideal<Rational>;
pub type RationalBasis = poly::GroebnerBasis<Rational>;

/// Shorthand for `num / den`.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}
