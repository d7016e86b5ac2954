//! The bundled problem files under `problems/`, embedded for tests and demos.

use super::problem::{parse_problem, MpecProblem};

pub const FILES: &[(&str, &str)] = &[
    ("parabolic_pair", include_str!("../../../../problems/parabolic_pair.toml")),
    ("parabolic_pair_flipped", include_str!("../../../../problems/parabolic_pair_flipped.toml")),
    ("box_lcp", include_str!("../../../../problems/box_lcp.toml")),
    ("unconstrained", include_str!("../../../../problems/unconstrained.toml")),
];

/// Parse a bundled problem by name; panics on an unknown name.
pub fn load(name: &str) -> MpecProblem {
    let (_, text) = FILES.iter().find(|(n, _)| *n == name).unwrap_or_else(|| panic!("no bundled problem {name}"));
    parse_problem(text).unwrap_or_else(|e| panic!("bundled problem {name}: {e}"))
}
