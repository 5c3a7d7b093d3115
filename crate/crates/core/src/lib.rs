//! Exact diagonalization of the spin-1/2 Heisenberg chain with
//! next-nearest-neighbour coupling, and extraction of the second- and
//! third-order ground-state fidelity terms from overlaps of neighbouring
//! ground states.

pub mod basis;
pub mod crosscheck;
pub mod eigen;
pub mod error;
pub mod fidelity;
pub mod hamiltonian;
pub mod io;
pub mod linalg;
pub mod oracle;
pub mod plot;
pub mod scaling;
pub mod sweep;

pub use error::{Error, Result};
