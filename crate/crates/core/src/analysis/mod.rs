//! Observables extracted from simulated states and traces.

pub mod barenblatt;
pub mod fit;
pub mod front;

pub use barenblatt::{barenblatt_eval, barenblatt_front_radius, BarenblattParams};
pub use fit::{
    decay_metrics, fit_exponential, holder_quotient, initial_speed, initial_speed_with,
    DecayFit, DecayMetrics, SpeedFit,
};
pub use front::{
    front_position, front_position_about, predicted_speed, pressure_front_about, FrontTrace, DEFAULT_PRESSURE_BAND,
    DEFAULT_REL_THRESHOLD,
};
