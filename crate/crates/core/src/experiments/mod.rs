//! Evaluation against gold data, dimensionality sweeps and synthetic
//! corpus pairs with designed change.

pub mod eval;
pub mod sweep;
pub mod synth;

pub use eval::*;
pub use sweep::{
    default_seeds, parse_cells, resume_sweep, run_cell, run_sweep, Aggregate, Metric, SweepCell,
    SweepResult, SweepSpec, DEFAULT_DIMS, DEFAULT_RUNS,
};
pub use synth::{gen_synthetic_pair, SyntheticPair, SyntheticSpec, TargetFrequency, TargetRole};
