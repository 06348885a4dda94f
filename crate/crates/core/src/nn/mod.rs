//! Small deterministic neural kernels with hand-written backward passes.
//! All reductions run in a fixed sequential order, so identical inputs give
//! bitwise-identical outputs.

mod adam;
mod checkpoint;
mod gradcheck;
mod gru;
mod loss;
mod ops;
mod tensor;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use checkpoint::Checkpoint;
pub use gradcheck::{grad_check, rel_err, GradCheckReport};
pub use gru::{GruCell, GruStep};
pub use loss::{bce_with_logits, binary_cross_entropy, cross_entropy, PROB_CLAMP};
pub use ops::{
    add_row_bias, col_sums, linear, linear_backward, matmul, matmul_nt, matmul_tn, mean_aggregate,
    mean_aggregate_backward, sigmoid, Activation, Linear,
};
pub use tensor::{Module, Parameter, Scalar, Tensor};
