use super::channel::ChiMatrix;
use super::state::DensityMatrix;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};

/// `½ Σ |λ_k|` over the eigenvalues of `a − b`.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    trace_distance_matrices(a.matrix(), b.matrix())
}

/// Trace distance between two Hermitian matrices of equal shape.
pub fn trace_distance_matrices(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch(format!(
            "trace distance between {}x{} and {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    Ok(0.5 * linalg::trace_norm_hermitian(&(a - b)))
}

/// `Tr[ab] / √(Tr[a²] Tr[b²])`.
pub fn state_fidelity(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    state_fidelity_matrices(a.matrix(), b.matrix())
}

pub fn state_fidelity_matrices(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch(
            "state fidelity of unequal dimensions".into(),
        ));
    }
    let aa = linalg::trace(&(a * a)).re;
    let bb = linalg::trace(&(b * b)).re;
    if aa <= 0.0 || bb <= 0.0 {
        return Err(Error::InvalidArgument(
            "state fidelity of a zero matrix".into(),
        ));
    }
    Ok(linalg::trace(&(a * b)).re / (aa * bb).sqrt())
}

/// `|Tr[χ_a χ_b†]| / √(Tr[χ_b χ_b†] Tr[χ_a χ_a†])`.
pub fn process_fidelity(chi_a: &ChiMatrix, chi_b: &ChiMatrix) -> Result<f64> {
    let (a, b) = (chi_a.matrix(), chi_b.matrix());
    let ab = linalg::trace(&(a * b.adjoint())).norm();
    let aa = linalg::trace(&(a * a.adjoint())).re;
    let bb = linalg::trace(&(b * b.adjoint())).re;
    if aa <= 0.0 || bb <= 0.0 {
        return Err(Error::InvalidArgument(
            "process fidelity of a zero χ matrix".into(),
        ));
    }
    Ok(ab / (aa * bb).sqrt())
}
