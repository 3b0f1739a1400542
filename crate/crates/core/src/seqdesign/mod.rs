//! Training sequence construction, validation and design diagnostics.

mod config;
mod diagnostics;
mod training;

pub use config::{
    validate_conditions, ConditionCheck, SystemConfig, SystemConfigFile, ValidationReport,
};
pub use diagnostics::{design_diagnostics, DesignDiagnostics};
pub use training::{chu_sequence, make_training_set, map_to_frame, TrainingSet, TrainingVariant};

pub(crate) use diagnostics::alpha_direct;
