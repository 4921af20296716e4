//! Extracts factual attribute-value pairs from product reviews with an LLM,
//! compares them against the seller description, groups attribute keys into
//! categories, and assembles a deterministic report of missing,
//! contradictory, partially-matching and matching details.
//!
//! - [`domain`]: shared types, key normalization, canonical JSON
//! - [`gateway`]: chat-completion backends, fingerprints, retry
//! - [`extraction`], [`comparison`], [`grouping`], [`structuring`]: the four steps
//! - [`pipeline`]: per-product orchestration (full, baseline, ablated modes)
//! - [`evaluation`]: error tallies, precision/recall/F1, mode comparison

pub mod cache;
pub mod comparison;
pub mod direct;
pub mod domain;
pub mod evaluation;
pub mod extraction;
pub mod gateway;
pub mod grouping;
pub mod pipeline;
pub mod prompts;
pub mod step;
pub mod structuring;

pub use domain::{
    normalize_key, parse_status, to_canonical_json, AttributeKey, CallStats, CategoryAssignment, ComparedAttribute,
    ComparisonStatus, ExtractedAttribute, Insight, ProductRecord, Review, StructuredReport,
};
pub use gateway::{ApiCredential, ChatRequest, ChatResponse, Gateway, GatewayError, RetryPolicy};
pub use pipeline::{Pipeline, PipelineConfig, PipelineMode, PipelineResult};
pub use structuring::ReportFormat;
