//! Quantile positions, trajectories and velocities of time-dependent
//! probability densities: free, dissipative and tunneling wave packets on the
//! line and Gaussian packets in three dimensions.

pub mod cli;
pub mod error;
pub mod numerics;
pub mod quantile;
pub mod tunneling;
pub mod wavepacket;

pub use error::{Error, Result};
