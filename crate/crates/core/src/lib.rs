// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod eps_core;
pub mod error;
pub mod genfunc;
pub mod numerics;
pub mod profiles;
pub mod quadrature;
pub mod riemann;

pub use eps_core::{AsymptoticClass, ClosedForm, DyadicGrid, EpsRepresentative, Monomial, TriState};
pub use error::{Error, Result};
pub use genfunc::{Association, GenFunction1D, TestFunction};
pub use profiles::{DiracProfile, HeavisideProfile, ProfileSpec};
pub use riemann::{JumpVerdict, ScalarData, State, StatementLedger, SystemData, Tag};
