//! Toolkit for building a parallel translation corpus out of a
//! monolingual language-variety corpus by retro-translation, filtering
//! it through a staged quality funnel, and evaluating translation output
//! with n-gram metrics plus a language-variety fidelity score.
//!
//! The pipeline stages, in the order a full run uses them:
//!
//! 1. [`ingest`] loads heterogeneous source corpora into the canonical
//!    document stream and applies variety-label selection.
//! 2. [`translate`] produces parallel pairs through a pluggable backend
//!    with caching, retries, and rate limiting.
//! 3. [`filters`] runs the quality funnel with per-stage accounting.
//! 4. [`report`] computes corpus statistics and renders funnel and
//!    evaluation reports.
//! 5. [`sft`] exports instruction-tuning records.
//! 6. [`metrics`] and [`variety`] score translation output.

pub mod config;
pub mod corpus;
pub mod error;
pub mod filters;
pub mod ingest;
pub mod jsonl;
pub mod metrics;
pub mod report;
pub mod sft;
pub mod tokenize;
pub mod translate;
pub mod variety;

pub use corpus::{normalize_text, Document, DomainTag, ParallelPair, Variety};
pub use filters::{FilterVerdict, FunnelReport, PipelineItem};
pub use metrics::{EvalPair, MetricResult};
pub use tokenize::{Tokenizer, TokenizerSpec};
pub use translate::{AuditReport, BackendSpec, Direction};
pub use variety::{VarietyModel, VidResult};
