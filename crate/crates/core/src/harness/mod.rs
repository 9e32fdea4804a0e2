//! Experiment harness: configuration, single runs, sweeps and file tools.

pub mod config;
pub mod io;
pub mod run;
pub mod sweep;

pub use config::{MemberSpec, RunConfig, Verification};
pub use run::{simulate, RunRecord, SimulateOptions, Verdict};
pub use sweep::{run_sweep, sweep_with, SweepReport};
