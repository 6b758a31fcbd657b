//! Error type shared across the crate.

use alloc::string::String;

use crate::tensor::Shape;

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Two tensors (or a tensor and an operator) do not agree on shape.
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: Shape, got: Shape },

    /// An operator's geometry cannot be applied to the given input.
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    /// A class index is outside the network's output range.
    #[error("class {class} out of range for {num_classes} classes")]
    ClassOutOfRange { class: usize, num_classes: usize },

    /// A configuration value violates its documented domain.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// A numeric computation left the finite domain.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// The input collection is empty where at least one element is required.
    #[error("empty input: {0}")]
    EmptyInput(String),
}
