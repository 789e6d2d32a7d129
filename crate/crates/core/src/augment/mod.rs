//! Teacher-driven augmentation: prompt templates, output parsing and the
//! per-iteration augmentation round.

mod method;
mod parse;
mod round;
mod templates;

use crate::data::Label;

pub use method::{AugMethod, MethodFamily};
pub use parse::{parse_generation, GenerationOutcome, RejectReason};
pub use round::{augment_round, AugLogEntry, AugSummary, AugmentationLog, EntryOutcome};
pub use templates::{render_aug_prompt, template};

#[derive(Debug, thiserror::Error)]
pub enum AugError {
    #[error("method {method} generates {} data but the seed is {label}", method.polarity())]
    PolarityMismatch { method: AugMethod, label: Label },
    #[error("no augmentation methods enabled")]
    NoMethods,
    #[error("teacher unavailable: all {requests} requests failed (first error: {first_error})")]
    EndpointUnavailable { requests: usize, first_error: String },
}
