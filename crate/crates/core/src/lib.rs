//! Explicit Lagrangian solutions of the two-dimensional incompressible Euler
//! equations of the form `φ(t, α) = A(t) u(α)`.
//!
//! The symbolic side ([`ratpoly`], [`jetlab`], [`symflow`]) proves the
//! algebraic identities behind the constructions with exact rational
//! arithmetic. The numeric side ([`sl2`], [`fields`], [`flows`],
//! [`ellsolve`], [`verify`]) builds flows and checks them. Numeric code is
//! generic over `f32`/`f64` through [`scalar::Scalar`]; the aliases below
//! fix `f64`.

// Negated comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::type_complexity)]

pub mod ellsolve;
pub mod fields;
pub mod flows;
pub mod jetlab;
pub mod ratpoly;
pub mod scalar;
pub mod sl2;
pub mod symflow;
pub mod verify;

pub use scalar::{Rect, Scalar};

pub type Flow = flows::FlowSolution<f64>;
pub type Field = fields::LabelField<f64>;
pub type Grid = fields::GridField<f64>;
pub type Path = sl2::SL2Path<f64>;
pub type Matrix2 = sl2::Mat2<f64>;
pub type Domain = scalar::Rect<f64>;
