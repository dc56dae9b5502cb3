pub mod ast;
pub mod parser;
pub mod predicate;
pub mod annotator;
pub mod exec;
pub mod refine;
pub mod cli;
