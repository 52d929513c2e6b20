//! Self-similar comparison profiles, parameter searches, an independent
//! inequality checker and numerical domination tests.

mod check;
mod domination;
mod profile;
mod search;

pub use check::{check_inequalities, MarginReport, EQUALITY_TOL};
pub use domination::{
    decay_time, domination_tolerance, measured_bounds, min_u_after, numeric_domination, structure_defect,
    structure_holds, structure_time, DominationReport,
};
pub use profile::{Certificate, CertificateConstants, CertificateKind, Margin, Role, SelfSimilarProfile};
pub use search::{
    anchor_expanding, effective_amplitude, exact_speed_beta, exact_speed_profiles, expanding_certificate,
    finite_speed_certificate, shrinking_beta_floor, shrinking_certificate, ExactSpeedBounds, ExactSpeedProfiles,
};
