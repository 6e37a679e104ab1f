//! Truncated multimode Fock space.
//!
//! Bases are ordered sector-major (total photon number ascending) and
//! lexicographically within a sector, so every passive element acts
//! block-diagonally. Matrices are dense throughout.

mod basis;
mod channel;
mod lift;
mod state;

pub use basis::{basis_len, enumerate_basis, sector_len, FockBasis, FockBasisState};
pub use channel::FockChannel;
pub use lift::{apply_to_density, lift_scattering, FockOperator};
pub use state::{
    coincidence_probability, partial_trace, Coincidence, DensityMatrix, DetectionStatistics, PureState, HERMITICITY_TOL,
};
