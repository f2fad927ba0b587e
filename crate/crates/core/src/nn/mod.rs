//! A small dense-tensor engine with define-by-run reverse-mode
//! differentiation, sized for the costmap network.
//!
//! Storage is `f32`; reductions (sums, means, pooling, the loss)
//! accumulate in `f64`. Matrix products inside convolutions run through
//! `matrixmultiply`'s single-precision kernels.
//!
//! A [`Graph`] is rebuilt for every forward pass. Parameters enter it as
//! leaves, every op records what its backward pass needs, and
//! [`Graph::backward`] sweeps the nodes once in reverse creation order.

mod adam;
mod conv;
mod graph;
pub mod records;
mod tensor;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use conv::ConvGeometry;
pub use graph::{bce_per_pixel_value, Graph, Var, BCE_EPS};
pub use tensor::{concat_channels, split_channels, Tensor};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NnError {
    #[error("{op}: shape mismatch: {detail}")]
    Shape { op: &'static str, detail: String },
    #[error("bce_per_pixel: mask selects no pixels")]
    EmptyMask,
    #[error("backward: loss must be a scalar, got shape {0:?}")]
    NotScalar(Vec<usize>),
}

pub(crate) fn shape_err(op: &'static str, detail: impl Into<String>) -> NnError {
    NnError::Shape {
        op,
        detail: detail.into(),
    }
}
