//! Recompilation pipeline for C/C++ decompiler output.
//!
//! Raw pseudocode is cleaned by deterministic rules ([`preprocess`]), then
//! repaired in a conversation with a language model: compiler diagnostics
//! drive a static loop until the unit builds ([`compilebox`]), and
//! sanitizer-instrumented test runs drive a dynamic loop until it behaves
//! like the original ([`runbox`]). [`pipeline`] orchestrates both loops under
//! one query budget and [`metrics`] turns outcome records into success@C tables.

pub mod corpus;
pub mod preprocess;
pub mod compilebox;
mod process;
pub mod runbox;
pub mod llm;
pub mod pipeline;
pub mod metrics;
