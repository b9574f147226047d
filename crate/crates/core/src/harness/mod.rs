//! Kernel SVM, PCA and the experiment drivers behind the command line.

mod alpha;
mod cli;
mod kernel;
mod pca;

pub use alpha::{
    alpha_sweep_experiment, alpha_sweep_trials, amplify_direct, evaluate_states, repetition_data, summarize,
    AlphaRow, AlphaSweepConfig, AlphaTrial,
};
pub use cli::{exit_code, run_cli};
pub use kernel::{compute_kernel, svm_train, svm_train_predict, KernelMatrix, SvmConfig, SvmModel, SvmResult};
pub use pca::effective_dimension;
