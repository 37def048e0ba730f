//! Scenario families, samplers and closed-form mutual information.

mod covariance;
mod family;
mod grammar;
mod true_mi;

pub use covariance::CovarianceMatrix;
pub use family::{sample_scenario, BaseMeasure, Family, Marginal, ScenarioSpec};
pub use grammar::FAMILY_NAMES;
pub use true_mi::{gaussian_true_mi, student_true_mi};
