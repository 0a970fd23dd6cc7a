pub mod corpus;
pub mod config;
pub mod eval_harness;
pub mod lang;
pub mod qa_engine;
pub mod retrieval;
pub mod service;

pub use lang::Lang;
