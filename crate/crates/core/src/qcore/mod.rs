//! States, channels, representation changes, distances and tomography.

mod channel;
mod metrics;
mod state;
mod tomography;

pub(crate) use channel::choi_matrix;
pub use channel::{
    random_channel, AncillaFactor, ChiMatrix, ChoiState, KrausChannel, RANK_CUTOFF, TP_TOL,
};
pub use metrics::{
    process_fidelity, state_fidelity, state_fidelity_matrices, trace_distance,
    trace_distance_matrices,
};
pub use state::{BasisState, BlochVector, DensityMatrix, PureState};
pub use tomography::{fibonacci_bloch, fibonacci_sphere, reconstruct_from_basis, BasisOutputs};

/// Convenience for `tensor_product` on raw matrices.
pub use crate::linalg::{kron as tensor_product, partial_trace};
