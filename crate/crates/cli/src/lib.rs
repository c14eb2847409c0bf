//! Command-line companion to `presmot-core`: formula DSL, lowering to the
//! exact engine, text and structured serialization, corpus generation, and
//! the command surface.

pub mod corpus;
pub mod lower;
pub mod records;
pub mod render;
pub mod run;
pub mod syntax;
