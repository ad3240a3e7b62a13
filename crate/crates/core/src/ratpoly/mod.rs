//! Exact polynomial algebra over the rationals.
//!
//! Sparse multivariate polynomials with [`BigRational`] coefficients, monomial
//! orders (lex, degrevlex and two-block elimination orders), normal forms,
//! reduced Gröbner bases by Buchberger's algorithm, elimination ideals,
//! the combinatorial dimension of an ideal and detection of positive sums of
//! squares of monomials.

mod groebner;
mod monomial;
mod order;
mod poly;
mod ring;
mod text;

pub use groebner::{
    buchberger, buchberger_with, elimination_ideal, ideal_dimension, normal_form, reduce_by,
    s_polynomial, sos_split, BuchbergerOptions, Elimination, GroebnerBasis, Ideal,
};
pub use monomial::Monomial;
pub use order::{BaseOrder, MonomialOrder};
pub use poly::MultiPoly;
pub use ring::Ring;
pub use text::{scan_variables, ParseError};

pub use num_rational::BigRational as Rational;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AlgebraError {
    #[error("polynomials live in different rings ({left} vs {right})")]
    RingMismatch { left: String, right: String },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("not a positive combination of squares of monomials: {0}")]
    NotSumOfSquares(String),
    #[error("buchberger aborted after {processed} pairs with {pending} pairs still queued")]
    ResourceExhausted { processed: usize, pending: usize },
    #[error("invalid monomial order: {0}")]
    InvalidOrder(String),
    #[error("ring has {0} variables, dimension search supports at most 128")]
    TooManyVariables(usize),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// Rational from a pair of machine integers.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(num_bigint::BigInt::from(num), num_bigint::BigInt::from(den))
}
