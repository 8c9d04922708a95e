//! Reverse-mode differentiation and the neural primitives shared by the
//! deterministic and Bayesian networks.

mod check;
mod graph;
mod layers;
mod tensor;

pub use check::{finite_diff_check, DEFAULT_STEP, GRAD_FLOOR};
pub use graph::{Graph, SparseRows, Var, LOG_CLAMP};
pub use layers::{embedding_dim, glorot_uniform, EmbeddingTable};
pub use tensor::{sigmoid, softplus, Tensor};

pub(crate) use graph::kl_sum;
pub(crate) use tensor::matmul;
