//! Compiler and runtime for a trigger DSL used in selective multimodal data
//! collection: parse trigger specifications, compile them to a JSON
//! intermediate representation, execute them as concurrent triggers over a
//! streaming data cache, and evaluate generation consistency, detection
//! quality, and runtime cost.

pub mod cache;
pub mod clock;
pub mod dsl;
pub mod evalkit;
pub mod ir;
pub mod llm;
pub mod logger;
pub mod predicates;
pub mod runtime;
pub mod topic;
pub mod value;

pub use value::{compare, CompareOp, Value};
