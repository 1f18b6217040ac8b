//! Variable-strength measurement of diagonal photon polarization by
//! back-action induced path interference.
//!
//! - [`polar`]: single-qubit polarization algebra (states, Stokes
//!   parameters, waveplates, weak values).
//! - [`model`]: Kraus operators, POVM, imperfect-visibility channel and the
//!   resolution / back-action estimators.
//! - [`sim`]: multinomial photon-counting simulation and the φ / θ sweeps.
//! - [`config`], [`csv`], [`cli`]: the `weakmeter` driver.

pub mod cli;
pub mod config;
pub mod csv;
pub mod error;
pub mod exec;
pub mod model;
pub mod polar;
pub mod sim;

pub use error::{Error, Result};
pub use exec::Execution;
pub use model::{MeasurementSetting, TradeoffPoint};
pub use polar::{Angle, DensityMatrix, Operator2, PureState};
pub use sim::{ExperimentConfig, Mode, SweepOptions, SweepSpec};
