//! Subshifts of finite type on `Z^d`: pattern counting, the Robinson
//! hierarchy in two and three dimensions, and counter and machine gadgets
//! used to build minimal SFTs with prescribed entropy dimension.

pub mod census;
pub mod counters;
pub mod formats;
pub mod hierarchy;
pub mod machine;
pub mod render;
pub mod robinson2d;
pub mod robinson3d;
pub mod sft;

pub use sft::{
    alphabet, check_locally_admissible, golden_mean, hard_square, map_symbols, occurrences, translate_pattern,
    Block, Forbidden, Lattice, Pattern, Pos, SftError, SftSpec, Symbol, SymSet, Violation,
};
