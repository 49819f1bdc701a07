//! Tensor completion in tensor-train form.
//!
//! Observed entries of a d-way tensor are fitted by a low-rank tensor train
//! through alternating least squares over the TT-cores, optionally with
//! quadratic total-variation and Tikhonov penalties that are evaluated
//! entirely in TT form.

pub mod error;
pub mod init;
pub mod linalg;
pub mod metrics;
pub mod planner;
pub mod regularizers;
pub mod sampling;
pub mod solver;
pub mod tensor;
pub mod tt;

pub use error::{Error, Result};
pub use tensor::{DenseTensor, MultiIndex};
pub use sampling::{FactoredSelection, ObservationSet};
pub use tt::{TTMatrix, TensorTrain};
