//! Nonadaptive test designs: the matrix type, the two probabilistic
//! constructions and brute-force disjunctness verification.

pub(crate) mod construct;
mod io;
mod matrix;
mod verify;

pub use construct::{
    bernoulli_matrix, chengdu_matrix, chengdu_matrix_with_rows, chengdu_rows, identity_matrix,
    method1_params, Method1Params, CHENGDU_ALPHABET,
};
pub use io::{read_matrix, write_matrix_binary, write_matrix_text, MatrixFileFormat};
pub use matrix::{MatrixMeta, Method, TestMatrix};
pub use verify::{
    is_disjunct, is_disjunct_with_budget, is_error_tolerant_disjunct,
    is_error_tolerant_disjunct_with_budget, DEFAULT_DISJUNCT_BUDGET,
};
