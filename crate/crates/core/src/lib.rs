//! Simulation and analysis toolkit for coherent optical control of a single
//! two-level quantum emitter, modelled on the cycling optical transition of a
//! nitrogen-vacancy centre in diamond.
//!
//! The crate is organised bottom-up:
//!
//! - [`bloch`]: optical Bloch equations, fixed-step RK4 integration and the
//!   closed-form results used as oracles (steady state, generalized Rabi
//!   frequency, damping constant, homogeneous linewidth).
//! - [`pulse`]: drive envelopes with finite rise/fall times and the
//!   power-to-Rabi-frequency map.
//! - [`environment`]: repump-induced spectral jumps, photo-ionization and
//!   charge-state bookkeeping for the Monte Carlo.
//! - [`detection`]: time-resolved photon-count histograms and probe counters.
//! - [`analysis`]: Levenberg-Marquardt fitting of damped cosines,
//!   exponentials and Lorentzians, plus scan alignment.
//! - [`experiments`]: seeded protocol runners for every measurement.
//! - [`config`] and [`cli`]: the sectioned config file and the command front end.
//!
//! Time is in ns and angular frequency in rad/ns throughout; [`units`] converts
//! to and from MHz.
//!
//! ```
//! use nv_optics::bloch::{predicted_damping, EmitterParams};
//!
//! let emitter = EmitterParams::new(10.9, 10.0, 0.0).unwrap();
//! let tau = predicted_damping(&emitter).unwrap();
//! assert!((tau - 8.4169).abs() < 1e-3);
//! ```

pub mod analysis;
pub mod bloch;
pub mod cli;
pub mod config;
pub mod detection;
pub mod environment;
mod error;
pub mod experiments;
pub mod pulse;
pub mod rng;
pub mod selftest;
pub mod units;

pub use error::{Error, Result};
