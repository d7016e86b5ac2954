//! Problem ingestion: polynomial expressions, the problem file, the MPCC
//! reformulation and reference-point validation.

pub mod corpus;
pub mod expr;
pub mod mpcc;
pub mod poly;
pub mod problem;
pub mod validate;

pub use expr::{parse_expr, Expr};
pub use mpcc::{build_mpcc, MpccSystem};
pub use poly::Poly;
pub use problem::{parse_problem, variable_names, MpecProblem, SolutionPiece};
pub use validate::{validate_point, FeasibilityReport};
