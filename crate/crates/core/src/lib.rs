//! Rectification of homotopy-commutative diagrams of chain complexes and the
//! higher homotopy operations that obstruct it.

pub mod brackets;
pub mod chain;
pub mod index_cat;
pub mod io;
pub mod linalg;
pub mod matching;
pub mod random;
pub mod rectifier;
pub mod separation;
