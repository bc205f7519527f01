//! Dense tensor primitives, the layer functions used by the model, parameter
//! initialization, and a finite-difference gradient checker.

pub mod gradcheck;
pub mod init;
pub mod layers;
pub mod rng;
pub mod tensor;

pub use gradcheck::{finite_diff_check, GradCheckReport, ParamSet};
pub use init::{init_params, InitScheme};
pub use layers::{
    affine, affine_backward, batch_norm, batch_norm_backward, batch_norm_forward,
    batch_norm_update_running, relu, relu_backward, softmax, softmax_backward, BatchNormState,
    BnCache, BnMode, BnStats,
};
pub use rng::SeedRng;
pub use tensor::Tensor2;
