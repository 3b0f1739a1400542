//! Evaluation toolkit: Cramer-Rao bounds, the Monte-Carlo harness, the
//! identifiability witness and the integer-CFO design diagnostics.

mod crb;
mod gridsearch;
mod icfodiag;
mod identifiability;
mod montecarlo;

pub use crb::{average_crb, crb_snapshot, ModelOperators};
pub use gridsearch::grid_search_cfo;
pub use icfodiag::{icfo_diagnostics, r_delta, IcfoDiagnostics};
pub use identifiability::{identifiability_scan, IdentifiabilityReport, EXCLUSION_RADIUS};
pub use montecarlo::{draw_cfo, render_csv, run_monte_carlo, MonteCarloRow, MonteCarloSpec};
