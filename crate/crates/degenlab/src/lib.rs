//! Exact verification toolkit for degenerations of anticommutative algebras.
//!
//! Structure constants are exact rationals; parameterized bases are matrices
//! of rational functions in `t`. See the individual modules.

pub mod exactnum;
pub mod linalg;
pub mod algebra;
pub mod par;
pub mod contraction;
pub mod template;
pub mod catalog;
pub mod degeneration;
pub mod verification_db;
