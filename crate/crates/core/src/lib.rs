//! Simulation of the 1→2 universal quantum cloning machine at two levels:
//! an abstract qubit gate network and a single-photon linear-optics setup
//! that encodes one polarization qubit and several path qubits, together
//! with the tomography, photon-counting and error analysis used to verify
//! the clones.

pub mod budget;
pub mod error;
pub mod harness;
pub mod hilbert;
pub mod network;
pub mod optics;
pub mod tomography;

pub use error::{Error, Result};
