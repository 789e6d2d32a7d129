//! Curriculum-style data augmentation for metaphor detection.
//!
//! The pipeline repeatedly evaluates a student model on a dataset, fine-tunes
//! it on the instances it already answers correctly, and asks a teacher model
//! to write new training sentences modelled on the instances it gets wrong.
//! Teacher, student and trainer are pluggable: the same code drives an
//! OpenAI-compatible HTTP endpoint or the deterministic mocks used in tests.

pub mod augment;
pub mod data;
pub mod eval;
pub mod fsutil;
pub mod inference;
pub mod pipeline;
pub mod synthetic;
pub mod text;
pub mod trainer;
