//! Exact commutative-algebra kernel: variables, monomials, sparse
//! polynomials, lex monomial orders, multivariate division, Buchberger's
//! algorithm, and elimination ideals.
//!
//! Polynomials are generic over their coefficient [`Field`]; everything the
//! rest of the crate does uses [`crate::Rational`] coefficients so that no
//! answer depends on rounding.

mod error;
mod field;
mod groebner;
mod monomial;
mod order;
mod parse;
mod polynomial;
mod vars;

pub use error::PolyError;
pub use field::{parse_rational, Field};
pub use groebner::{
    buchberger, buchberger_with, elimination_ideal, elimination_ideal_with, normal_form, s_polynomial, Cancel,
    GroebnerBasis, GroebnerOptions, Ideal, DEFAULT_STEP_LIMIT,
};
pub use monomial::Monomial;
pub use order::MonomialOrder;
pub use parse::{parse_polynomial, parse_polynomial_mut, parse_with};
pub use polynomial::{DisplayPoly, Polynomial};
pub use vars::{Var, VarKind, VariableTable};
