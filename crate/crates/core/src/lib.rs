//! Finite universal algebra workbench: a generic congruence and
//! translation-depth engine, the algebra compiled from a Turing machine, and
//! the witness subpowers used to check its congruence behaviour.

pub mod algebra;
pub mod at;
pub mod bn;
pub mod tm;
