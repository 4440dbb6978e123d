//! Differentiation engine: forward-mode duals recorded on a reverse tape.
//!
//! First input derivatives ride along as tangent nodes of [`Dual`]; a single
//! reverse sweep of the [`Tape`] then yields parameter gradients of any loss
//! assembled from those quantities. Second input derivatives are deliberately
//! unsupported in this path (the auxiliary-gradient reformulation removes the
//! need); the lone exception is [`Jet2`] for baseline comparisons.

mod dual;
mod jet2;
mod tape;

pub use dual::{input_gradient, Dual};
pub use jet2::Jet2;
pub use tape::{AdError, Mark, Tape, Var};
