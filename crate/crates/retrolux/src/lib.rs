//! Photon-number-conserving linear-optics simulation with Bayesian
//! retrodiction.
//!
//! The crate propagates few-photon Fock states through beam-splitter
//! networks exactly, enumerates the mutually exclusive detection histories
//! of the output, and answers "which source did the photon come from?"
//! questions by conditioning on detector readings: full readings pin a
//! single history, partial readings yield a posterior or a reduced density
//! operator. A classical-field treatment of the same networks runs alongside
//! for comparison, including time-reversed propagation from complete or
//! partial output information.
//!
//! Modules:
//! - [`fock`]: occupation vectors, sparse state vectors, basis enumeration.
//! - [`linopt`]: beam-splitter elements, circuits, application, inversion.
//! - [`density`]: density operators, partial trace, count distributions.
//! - [`retrodict`]: histories, posteriors, conditioning, detector coupling.
//! - [`classical`]: complex field amplitudes through the same circuits.
//! - [`harness`]: scenario files, built-in experiments, sweeps, reports.
//!
//! ```
//! use retrolux::harness::{builtin, run_scenario, RunOptions};
//!
//! let scenario = builtin("single-photon").unwrap();
//! let report = run_scenario(&scenario, &RunOptions::default()).unwrap();
//! let histories = &report.quantum.unwrap().histories;
//! assert_eq!(histories.len(), 2);
//! assert!((histories[0].probability - 0.5).abs() < 1e-12);
//! ```

pub mod classical;
pub mod density;
pub mod error;
pub mod fock;
pub mod harness;
pub mod linopt;
pub mod retrodict;

pub use error::{Error, Result};
