//! Structural analysis of operator pencils `(E, A)` in finite dimension.
//!
//! A pencil admits two dual reduction operations: the *observation*
//! reduction restricts to the constrained variables `A^{-1}(range E)`
//! mapping into `range E`, and the *control* reduction quotients out the
//! non-differentiated variables `ker E` and their image `A ker E`. Each
//! step exhibits a pivot operator whose invertibility governs regularity,
//! spectra, and solvability. This crate computes the reductions, the
//! defect sequences they induce, the canonical maps identifying the two
//! mixed-order reduced systems, resolvent and solvability certificates,
//! and the saddle-point specialization where pivot invertibility is the
//! inf-sup condition.

pub mod canonical;
pub mod commutativity;
pub mod defects;
pub mod error;
pub mod pencil;
pub mod reduction;
pub mod report;
pub mod saddle;
pub mod scalar;
pub mod spectrum;
pub mod subspace;
mod svd;

pub use error::{Error, Result};
pub use pencil::{Pencil, PencilData};
pub use scalar::{Entry, Field};
pub use subspace::{Subspace, Tolerance};
