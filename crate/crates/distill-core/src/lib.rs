//! Deep distilling: train explainable ternary-neuron networks from labeled
//! examples, condense them into a compact program IR, emit readable code,
//! and generalize the programs across input sizes.

pub mod cluster;
pub mod codegen;
pub mod interp;
pub mod ir;
pub mod pipeline;
pub mod qm;
pub mod condense;
pub mod reference;
pub mod tasks;
pub mod trainer;
pub mod dataset;
pub mod enn;
pub mod generalize;
pub mod error;
pub mod svm;

pub use dataset::{Dataset, InputLayout, Label, LabelKind, Sample};
pub use enn::{Layer, LayerKind, Network, OutputHead};
pub use error::{Error, Result};
pub use ir::Program;
