//! Constraint-qualification certifiers with three-valued verdicts.

pub mod inequality;
pub mod mpec;
pub mod quadform;
pub mod verdict;

pub use inequality::{foscms_check, mscq_cascade, nnamcq_check, soscms_check, IneqSystem};
pub use mpec::{certify_mscq_mpec, nondeg_g_check, verify_witness, CertifyOptions, WitnessReport};
pub use quadform::{quadratic_form_sign_on_cone, verify_positive, QuadFormQuery, QuadSign};
pub use verdict::{CqVerdict, Status};

/// Search limits shared by the certifiers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Limits {
    /// Maximum subdivision depth in the quadratic-form test.
    pub depth: usize,
    /// Maximum number of cells (subdivision cells, faces, Phase II cells).
    pub max_cells: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { depth: 12, max_cells: 1 << 20 }
    }
}
