//! Iterative cognitive agents for dynamic information streams: benchmark
//! model, provider abstraction, prompt templates, memory, agent loop,
//! agreement metrics and benchmark generation helpers.

pub mod scalar;

pub mod agent_core;
pub mod bench_model;
pub mod benchgen;
pub mod eval_metrics;
pub mod llm_provider;
pub mod memory;
pub mod prompt_kit;

/// Embedding vector type used by providers and long-term memory.
pub type EmbeddingVector = llm_provider::Embedding<f64>;
/// Long-term memory over `f64` embeddings.
pub type LtmStore = memory::LongTermMemory<f64>;
/// Evaluation report with `f64` metric values.
pub type MetricsReport = eval_metrics::report::MetricsReport<f64>;
/// Exact scalar for kappa statistics.
pub type ExactRatio = num_rational::Ratio<i64>;
