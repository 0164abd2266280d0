//! End-to-end harness for SPARQL query generation over the Open Research
//! Knowledge Graph (ORKG).
//!
//! The pipeline takes natural-language questions, builds prompts for a
//! configurable strategy (zero-shot, one-shot, retrieval-augmented, or a
//! fine-tuned endpoint), calls an OpenAI-compatible chat endpoint, repairs
//! and validates the returned SPARQL, executes it against a SPARQL-protocol
//! endpoint, and scores the outcome with BLEU-4, ROUGE-1/2/L and two
//! relaxed exact-match variants over normalized result sets.

pub mod dataset;
pub mod execution;
pub mod llm;
pub mod metrics;
pub mod postprocess;
pub mod prompting;
pub mod runner;
pub mod sparql;
