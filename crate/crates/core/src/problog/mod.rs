//! The ProbLog subset: syntax tree, translation to parfactors and the exact
//! enumeration oracle.

pub mod ast;
pub mod enumerate;
pub mod translate;

pub use ast::{Literal, PAtom, PTerm, PredKind, ProbFact, Program, Rule};
pub use enumerate::{enumerate, DEFAULT_CAP};
pub use translate::{translate, Style};

#[cfg(test)]
mod tests;
