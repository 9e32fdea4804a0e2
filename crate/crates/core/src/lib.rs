pub mod comparison;
pub mod diagnostics;
pub mod error;
pub mod harness;
pub mod initial_data;
pub mod integrator;
pub mod ode_flow;
pub mod snapshot;
pub mod torus;
pub mod vortex;

pub use error::{Error, Result};
