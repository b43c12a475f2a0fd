//! Double-precision neural-network kernel with hand-derived backward passes.
//!
//! There is no autodiff graph: each layer exposes a forward pass that returns
//! whatever its backward pass needs, and a backward pass that accumulates
//! parameter gradients and returns the gradient for its input.
//! [`gradient_check`] compares those gradients to central differences.

mod checkpoint;
mod gradcheck;
mod layers;
mod optim;
mod param;
mod tensor;

pub use checkpoint::{decode_checkpoint, encode_checkpoint, read_checkpoint, write_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use gradcheck::{gradient_check, relative_error, AffineFragment, DropoutFragment, GradCheckReport, GradFragment, SoftmaxCrossEntropyFragment, FD_STEP};
pub use layers::{
    affine_backward, affine_forward, cross_entropy, dropout, dropout_with_mask, log_softmax, softmax, tanh_backward, tanh_forward, Affine,
    DropoutSpec, Mode,
};
pub use optim::RmsPropState;
pub use param::{glorot_bound, Parameter};
pub use tensor::{gemm_a_bt_acc, gemm_acc, gemm_at_b_acc, matmul, Tensor};
