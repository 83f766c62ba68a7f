//! Evolutionary cost-sensitive deep belief networks.
//!
//! A deep belief network (stacked RBMs topped by a softmax layer) produces
//! class posteriors; a per-class misclassification cost vector rescales those
//! posteriors before the argmax, and an adaptive differential evolution search
//! picks the cost vector that maximizes training G-mean.
//!
//! This crate is `no_std` (it needs `alloc`) and holds every numerical piece:
//!
//! - [`matrix`] and [`rng`]: dense matrices and seeded, splittable random streams
//! - [`rbm`] and [`dbn`]: contrastive-divergence pre-training, fine-tuning, prediction
//! - [`cost`]: the cost layer applied on top of network posteriors
//! - [`de`]: adaptive differential evolution over box-bounded vectors
//! - [`trainer`]: the end-to-end training procedure binding the pieces together
//! - [`metrics`] and [`stats`]: evaluation metrics and nonparametric tests
//!
//! IO, dataset formats and the benchmark CLI live in the `ecsdbn-bench` crate.
//!
//! ```
//! use ecsdbn_core::cost::{predict_with_costs, CostVector};
//! use ecsdbn_core::matrix::Matrix;
//!
//! let probs = Matrix::from_rows(&[[0.7, 0.3]]).unwrap();
//! let costs = CostVector::new(vec![0.6, 0.0]).unwrap();
//! assert_eq!(predict_with_costs(&probs, &costs).unwrap(), vec![1]);
//! ```
#![no_std]
#![warn(missing_debug_implementations)]
// `!(a < b)` is used on purpose so NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod cost;
pub mod dbn;
pub mod de;
mod error;
pub mod matrix;
pub mod metrics;
pub mod rbm;
pub mod rng;
pub mod stats;
pub mod trainer;

pub use error::{Error, Result};
