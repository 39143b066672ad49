//! Probabilistic enumeration of expressions from attribute grammars, with
//! a CEGIS synthesizer and an expression repair pipeline built on top.

pub mod cegis;
pub mod corpus;
pub mod enumerate;
pub mod grammar;
pub mod grammarfile;
pub mod lang;
pub mod repair;
pub mod sexpr;
