//! Evaluation harness for cross-lingual stance classification.
//!
//! * [`corpus`]: annotated multilingual records, search-term filtering, splits.
//! * [`inference`]: chat-completion classification and translation campaigns.
//! * [`glm`]: treatment-coded logistic regression with Wald inference.
//! * [`effects`]: the four regression specifications and composed effects.
//! * [`footprint`]: energy, water, carbon and cost estimates for inference.
//! * [`consistency`]: recomputed values checked against published ones.
//! * [`report`]: deterministic markdown and delimited-table rendering.

pub mod consistency;
pub mod corpus;
pub mod effects;
pub mod footprint;
pub mod glm;
pub mod inference;
pub mod report;
