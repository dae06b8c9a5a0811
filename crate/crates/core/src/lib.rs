//! Model-free feature selection for high-dimensional data.
//!
//! Selection runs in two phases. A fused Kolmogorov filter ranks every
//! feature by how strongly its distribution shifts across slices of the
//! response and keeps the top `d_n`. A random forest then repeatedly refits on
//! the survivors, drops the feature with the smallest out-of-bag permutation
//! importance, and the subset with the best out-of-bag error is returned.

pub mod cli;
pub mod data;
pub mod error;
pub mod filter;
pub mod forest;
pub mod io;
pub mod rfe;
pub mod seed;
pub mod sim;

pub use data::{ActiveSet, Dataset, Response, Task};
pub use error::{FkrfeError, Result};
pub use rfe::{fkrfe_select, FkrfeConfig, SelectionResult};
pub use seed::SeedSpec;
