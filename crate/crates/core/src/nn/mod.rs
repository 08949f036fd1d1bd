//! A small float32 inference engine for the two networks in the pipeline.

mod bundle;
mod layer;
pub mod ops;
pub mod reference;
mod tensor;

pub use bundle::{count_params, run_network, LayerCount, ParamCounts, RunStats, WeightBundle};
pub use layer::{Layer, LayerKind, LayerSpec, Param};
pub use ops::{Activation, Padding};
pub use tensor::{Shape, Tensor};
