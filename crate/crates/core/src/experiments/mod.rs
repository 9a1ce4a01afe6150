//! Named, reproducible experiment drivers. Each driver consumes a resolved
//! `RunConfig`, emits an `ExperimentReport` (JSON + CSV artifacts with the
//! config embedded), and reduces its claims to PASS / FAIL / INCONCLUSIVE /
//! RECORDED verdicts whose worst member decides the exit code.

pub mod calc;
pub mod dual2;
pub mod example;
pub mod lsu;
pub mod neccond;
pub mod sufficiency;
pub mod weights;

pub use calc::run_prop_calc;
pub use dual2::run_dual2_sweep;
pub use example::run_example_scan;
pub use lsu::run_lsu;
pub use neccond::run_neccond_probe;
pub use sufficiency::{run_sufficiency_sweep, Theorem};
