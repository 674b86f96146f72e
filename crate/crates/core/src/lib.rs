//! Ride-hailing dispatch simulator with a constrained actor / bi-critic trainer.
//!
//! The numeric kernels ([`neural`], the estimators in [`habic`] and the assignment solver in
//! [`baselines`]) are generic over [`Scalar`]; the aliases below fix them to `f64`.

pub mod baselines;
pub mod city;
pub mod episode;
pub mod error;
pub mod habic;
pub mod human;
pub mod io;
pub mod neural;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Mlp = neural::Mlp<f64>;
pub type GradientSet = neural::GradientSet<f64>;
pub type Adam = neural::Adam<f64>;
