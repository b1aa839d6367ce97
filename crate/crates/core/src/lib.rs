//! Alpha-loss for logistic models: closed-form losses, empirical risk landscapes,
//! convexity and SLQC certificates, normalized gradient descent and the discrete
//! Arimoto information quantities.
//!
//! Everything numeric is generic over [`numerics::Scalar`]; the aliases below fix
//! the precision for the common cases.

pub mod cli;
pub mod data;
pub mod error;
pub mod information;
pub mod loss;
pub mod ngd;
pub mod numerics;
pub mod risk;
pub mod slqc;

pub use error::{Error, Result};
pub use loss::{alpha_loss, Alpha, Label, Sample};
pub use numerics::{RngState, Scalar, SymMatrix, Vector};
pub use risk::Dataset;

pub type Alpha64 = Alpha<f64>;
pub type Alpha32 = Alpha<f32>;
pub type Vector64 = Vector<f64>;
pub type Vector32 = Vector<f32>;
pub type Sample64 = Sample<f64>;
pub type Sample32 = Sample<f32>;
pub type Dataset64 = Dataset<f64>;
pub type Dataset32 = Dataset<f32>;
pub type SymMatrix64 = SymMatrix<f64>;
pub type SymMatrix32 = SymMatrix<f32>;
