//! Simulation of a pH-signalling molecular communication channel.
//!
//! A transmitter releases a strong acid (H⁺) or a strong base (OH⁻) into a
//! fluid channel. The ions diffuse, drift with the flow, and recombine through
//! water autoionization; the receiver reads the local H⁺ concentration (pH).
//!
//! Modules:
//!
//! - [`chem`]: equilibrium chemistry and the exact point-wise reaction update.
//! - [`analytic`]: closed-form receiver responses (reaction-free impulse
//!   response, receiver-only reaction for base pulses, diffused profiles).
//! - [`fdm`]: 1-D finite-difference reaction-advection-diffusion solver with
//!   operator splitting.
//! - [`scenarios`]: initial conditions for single and consecutive releases,
//!   scenario runs and inter-symbol-interference metrics.

pub mod analytic;
pub mod chem;
pub mod error;
pub mod fdm;
pub mod scenarios;

pub use error::{Error, Result};
