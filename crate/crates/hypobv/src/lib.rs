//! Symbolic-numeric laboratory for constant-coefficient hypoelliptic operators
//! on `R^{d+1}`: exact polynomial/operator algebra, hypoellipticity indices,
//! weight-sequence diagnostics, Cauchy-series extensions of boundary data and
//! two independent evaluators of boundary values of zero solutions.
//!
//! The convention throughout is `D = -i * partial`; polynomials are stored with
//! plain-`partial` semantics and the `(-i)` powers are applied centrally when a
//! polynomial acts as a differential operator.

pub mod boundary;
pub mod cauchyext;
pub mod cli;
pub mod indices;
pub mod polyops;
pub mod quad;
pub mod rat;
pub mod symfun;
pub mod weights;

pub use polyops::{MultiIndex, MultiPoly, OperatorProfile};
pub use symfun::{BumpFun, SeminormQuery, SymFun};
pub use weights::WeightSeq;
