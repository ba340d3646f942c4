//! Secure transmission for movable-antenna cell-free symbiotic radio.
//!
//! The crate synthesizes geometric field-response channels between distributed
//! access points (each carrying a small array of movable antennas), a
//! backscatter device and three single-antenna nodes (primary user,
//! eavesdropper, secondary user). On top of that it provides:
//!
//! * [`rates`]: SINR, secrecy-rate and ergodic backscatter-rate mathematics,
//! * [`convex`]: a small log-barrier interior-point solver for the lifted
//!   beamforming subproblems,
//! * [`beamforming`]: the successive-convex-approximation loop with
//!   semidefinite relaxation and beamvector recovery,
//! * [`gapso`]: a GA-modified particle swarm over antenna positions,
//! * [`ao`]: the alternating optimizer and the benchmark schemes,
//! * [`experiments`]: Monte-Carlo sweeps, CSV output and plot data.

pub mod ao;
pub mod beamforming;
pub mod channel;
pub mod convex;
pub mod error;
pub mod experiments;
pub mod gapso;
pub mod matrix_text;
pub mod par;
pub mod rates;
pub mod scenario;
pub mod streams;

pub use error::{Error, Result};
pub use nalgebra::Complex;

/// Complex scalar used throughout.
pub type C64 = Complex<f64>;
/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;
/// Dense complex column vector.
pub type CVector = nalgebra::DVector<C64>;
