//! Steady-state hydraulics of pipe-only water distribution networks.
//!
//! Flows are found by iterating the fixed-point map q ← T(q) built from
//! Hazen-Williams conductances and a weighted-Laplacian head solve. The
//! [`jacobian`] module differentiates T in closed form to certify local
//! contraction, and [`newton`] solves the full continuity/energy system
//! independently as a cross-check.
//!
//! ```no_run
//! use hydrofp::{format::NetworkFile, solver::{solve, SolverConfig}};
//!
//! let file = NetworkFile::parse(&std::fs::read_to_string("reference-net.txt")?)?;
//! let mut config = SolverConfig::default();
//! file.options.apply(&mut config);
//! let result = solve(&file.network, &config)?;
//! println!("{} iterations, intake {:.2} GPM", result.iterations, result.reservoir_intake_gpm);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod cli;
pub mod document;
pub mod error;
pub mod format;
pub mod hydraulics;
pub mod jacobian;
pub mod network;
pub mod newton;
pub mod reference;
pub mod solver;
pub mod synth;
pub mod units;

pub use error::{Error, Result};
pub use hydraulics::FluidProperties;
pub use jacobian::ContractionReport;
pub use network::{Incidence, Junction, Network, Pipe, Reservoir};
pub use solver::{solve, SolveResult, SolverConfig, System};
