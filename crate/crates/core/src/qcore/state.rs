use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, CVector, C64, ONE, ZERO};

pub const HERMITIAN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-9;

/// Positive unit-trace operator on a 2ⁿ-dimensional register.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Validates hermiticity, unit trace, and positivity.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        check_state_matrix(&matrix, "density matrix")?;
        Ok(Self { matrix })
    }

    /// Wraps a matrix without validation. Used for outputs of approximately
    /// unitary (rounded) inputs, whose invariants only hold loosely.
    pub fn new_unchecked(matrix: CMatrix) -> Self {
        Self { matrix }
    }

    pub fn from_pure(psi: &PureState) -> Self {
        Self {
            matrix: linalg::outer(psi.amplitudes(), psi.amplitudes()),
        }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: linalg::identity(dim) / c(dim as f64, 0.0),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    /// Tr ρ².
    pub fn purity(&self) -> f64 {
        linalg::trace(&(&self.matrix * &self.matrix)).re
    }

    /// Bloch vector of a qubit state.
    pub fn bloch(&self) -> Result<BlochVector> {
        if self.dim() != 2 {
            return Err(Error::DimensionMismatch(format!(
                "Bloch vector needs a qubit, got dimension {}",
                self.dim()
            )));
        }
        let m = &self.matrix;
        Ok(BlochVector {
            x: 2.0 * m[(1, 0)].re,
            y: 2.0 * m[(1, 0)].im,
            z: (m[(0, 0)] - m[(1, 1)]).re,
        })
    }

    /// `(a, b, c)` with `ρ = [[0.5 + a, b − ic], [b + ic, 0.5 − a]]`.
    pub fn qubit_parameters(&self) -> Result<(f64, f64, f64)> {
        if self.dim() != 2 {
            return Err(Error::DimensionMismatch(format!(
                "qubit parameters need dimension 2, got {}",
                self.dim()
            )));
        }
        let m = &self.matrix;
        Ok((m[(0, 0)].re - 0.5, m[(1, 0)].re, m[(1, 0)].im))
    }
}

pub(crate) fn check_state_matrix(m: &CMatrix, what: &str) -> Result<()> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!("{what} must be square")));
    }
    let herm = linalg::hermiticity_error(m);
    if herm > HERMITIAN_TOL {
        return Err(Error::Invariant(format!(
            "{what} not Hermitian (error {herm:.3e})"
        )));
    }
    let tr = linalg::trace(m);
    if (tr - ONE).norm() > TRACE_TOL {
        return Err(Error::Invariant(format!(
            "{what} trace is {:.12} instead of 1",
            tr.re
        )));
    }
    let min = linalg::eigvalsh(m)[0];
    if min < -PSD_TOL {
        return Err(Error::Invariant(format!(
            "{what} has negative eigenvalue {min:.3e}"
        )));
    }
    Ok(())
}

/// Unit-norm state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: CVector,
}

impl PureState {
    pub fn new(amplitudes: CVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::Invariant(format!(
                "state vector has norm {norm:.12}"
            )));
        }
        Ok(Self { amplitudes })
    }

    /// Qubit state with the given Bloch angles.
    pub fn from_angles(theta: f64, phi: f64) -> Self {
        let amplitudes = CVector::from_vec(vec![
            c((theta / 2.0).cos(), 0.0),
            C64::from_polar((theta / 2.0).sin(), phi),
        ]);
        Self { amplitudes }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix::from_pure(self)
    }

    /// Normalized maximally entangled `(1/√d) Σ |i,i⟩`.
    pub fn maximally_entangled(d: usize) -> Self {
        let mut v = CVector::zeros(d * d);
        let a = c(1.0 / (d as f64).sqrt(), 0.0);
        for i in 0..d {
            v[i * d + i] = a;
        }
        Self { amplitudes: v }
    }
}

/// The four tomography inputs `{|z⟩, |z̄⟩, |x⟩, |y⟩}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BasisState {
    Z,
    ZBar,
    X,
    Y,
}

impl BasisState {
    pub const ALL: [BasisState; 4] = [
        BasisState::Z,
        BasisState::ZBar,
        BasisState::X,
        BasisState::Y,
    ];

    pub fn state(self) -> PureState {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let amps = match self {
            BasisState::Z => vec![ONE, ZERO],
            BasisState::ZBar => vec![ZERO, ONE],
            BasisState::X => vec![c(h, 0.0), c(h, 0.0)],
            BasisState::Y => vec![c(h, 0.0), c(0.0, h)],
        };
        PureState {
            amplitudes: CVector::from_vec(amps),
        }
    }

    pub fn density(self) -> DensityMatrix {
        self.state().density()
    }

    pub fn label(self) -> &'static str {
        match self {
            BasisState::Z => "z",
            BasisState::ZBar => "zbar",
            BasisState::X => "x",
            BasisState::Y => "y",
        }
    }
}

impl fmt::Display for BasisState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Bloch-sphere coordinates `ρ = (1 + x·X + y·Y + z·Z)/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let v = Self { x, y, z };
        if v.norm_sq() > 1.0 + 1e-9 {
            return Err(Error::Invariant(format!(
                "Bloch vector ({x}, {y}, {z}) lies outside the unit ball"
            )));
        }
        Ok(v)
    }

    pub fn norm_sq(&self) -> f64 {
        self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn distance(&self, other: &BlochVector) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2) + (self.z - other.z).powi(2))
            .sqrt()
    }

    pub fn is_pure(&self) -> bool {
        (self.norm() - 1.0).abs() <= 1e-6
    }

    pub fn density(&self) -> DensityMatrix {
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[
                c((1.0 + self.z) / 2.0, 0.0),
                c(self.x / 2.0, -self.y / 2.0),
                c(self.x / 2.0, self.y / 2.0),
                c((1.0 - self.z) / 2.0, 0.0),
            ],
        );
        DensityMatrix::new_unchecked(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_states_are_normalized_and_pure() {
        for b in BasisState::ALL {
            let rho = b.density();
            assert!(DensityMatrix::new(rho.matrix().clone()).is_ok());
            assert!((rho.purity() - 1.0).abs() < 1e-12);
            assert!(rho.bloch().unwrap().is_pure());
        }
        let y = BasisState::Y.density().bloch().unwrap();
        assert!((y.y - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_invalid_states() {
        let not_unit = linalg::identity(2);
        assert!(matches!(
            DensityMatrix::new(not_unit),
            Err(Error::Invariant(_))
        ));
        let negative = CMatrix::from_row_slice(2, 2, &[c(1.5, 0.0), ZERO, ZERO, c(-0.5, 0.0)]);
        assert!(DensityMatrix::new(negative).is_err());
        let non_herm =
            CMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.1, 0.0), ZERO, c(0.5, 0.0)]);
        assert!(DensityMatrix::new(non_herm).is_err());
        assert!(PureState::new(CVector::from_vec(vec![ONE, ONE])).is_err());
        assert!(BlochVector::new(1.0, 0.1, 0.0).is_err());
    }

    #[test]
    fn qubit_parameters_round_trip() {
        let v = BlochVector::new(0.3, -0.2, 0.5).unwrap();
        let rho = v.density();
        let (a, b, cc) = rho.qubit_parameters().unwrap();
        assert!((a - 0.25).abs() < 1e-15);
        assert!((b - 0.15).abs() < 1e-15);
        assert!((cc + 0.1).abs() < 1e-15);
        let back = rho.bloch().unwrap();
        assert!(back.distance(&v) < 1e-15);
        assert!(!back.is_pure());
    }
}
