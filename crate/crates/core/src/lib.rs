//! Numerics, model and audit statistics for multimodal street evaluation.
//!
//! The tensor engine, the model and the statistics are generic over
//! [`Scalar`] (`f32` or `f64`); the aliases below fix the element type used
//! throughout the pipeline.

pub mod autodiff;
pub mod gradcheck;
pub mod image;
pub mod model;
pub mod optim;
pub mod rng;
pub mod scalar;
pub mod stats;
pub mod tensor;

pub use autodiff::{Graph, Var};
pub use image::GrayImage;
pub use scalar::Scalar;
pub use tensor::{Tensor, TensorError};

pub type Tensor64 = Tensor<f64>;
pub type Tensor32 = Tensor<f32>;
pub type Graph64 = Graph<f64>;
pub type Graph32 = Graph<f32>;
pub type Model64 = model::MsefModel<f64>;
pub type Model32 = model::MsefModel<f32>;
pub type AdamState64 = optim::AdamState<f64>;
pub type DualOutput64 = model::DualOutput<f64>;
pub type OlsResult64 = stats::OlsResult<f64>;
pub type BlandAltman64 = stats::BlandAltmanResult<f64>;
