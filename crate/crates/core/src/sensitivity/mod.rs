//! Constrained random variation of circulation parameters and the
//! resulting spread in robot power and tissue oxygen.

mod constraints;
mod ensemble;

pub use constraints::{
    constraint_violations, sample_parameters, ConstraintSet, LimbRule, Sample, SpleenRule, MAX_REJECTIONS,
};
pub use ensemble::{
    is_bimodal, run_ensemble, EnsembleResult, RobotCountSummary, SampleMetrics, BIMODAL_MIN_GAP, BIMODAL_MIN_SHARE,
    ENSEMBLE_HISTOGRAM_BINS,
};
