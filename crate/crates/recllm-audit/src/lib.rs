//! Batch auditing harness for LLM-based recommenders.
//!
//! The crate measures accuracy, provider (item-side) fairness, catalog
//! coverage, temporal freshness, genre dominance, run-to-run stability, and
//! cost of chat-completion recommenders, side by side with classical
//! collaborative-filtering baselines on the same chronological splits.
//!
//! The pipeline runs in stages, each usable on its own:
//!
//! 1. [`dataset`] — ingest interaction logs, k-core filter, chronological
//!    splits, catalog statistics.
//! 2. [`profile`] — per-user context blocks, example blocks, demographic
//!    clauses.
//! 3. [`promptgen`] — render the top-k prompt matrix and the sequential
//!    zero-shot / ICL templates, byte-stable.
//! 4. [`llmclient`] — send prompts to a live endpoint, a deterministic mock,
//!    or a record/replay cache; account tokens, money, latency.
//! 5. [`matcher`] — parse free-text output and resolve it to catalog items
//!    via gestalt fuzzy matching.
//! 6. [`metrics`] / [`stats`] — ranking accuracy, fairness, coverage,
//!    temporal and genre metrics; bootstrap confidence intervals and
//!    cross-run stability.
//! 7. [`baselines`] — TopPop, ItemKNN, and BPR-MF comparison rows.
//! 8. [`runner`] — end-to-end experiment orchestration from a declarative
//!    config, with transcripts, resumability, and table rendering.
//!
//! See the `examples/` directory for one runnable program per capability.

pub mod baselines;
pub mod dataset;
pub mod llmclient;
pub mod matcher;
pub mod metrics;
pub mod profile;
pub mod promptgen;
pub mod runner;
pub mod stats;
pub mod synth;
