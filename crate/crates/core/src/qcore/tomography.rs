use std::collections::BTreeMap;

use super::state::{BasisState, BlochVector, DensityMatrix, PureState};
use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix};

/// Images of the four tomography inputs under some channel.
pub type BasisOutputs = BTreeMap<BasisState, DensityMatrix>;

/// Output of `rho_in` rebuilt by linearity from the four basis images:
/// `(0.5+a−b−c)E(z) + (0.5−a−b−c)E(z̄) + 2b E(x) + 2c E(y)`.
pub fn reconstruct_from_basis(
    outputs: &BasisOutputs,
    rho_in: &DensityMatrix,
) -> Result<DensityMatrix> {
    let (a, b, cc) = rho_in.qubit_parameters()?;
    let get = |s: BasisState| {
        outputs
            .get(&s)
            .map(DensityMatrix::matrix)
            .ok_or_else(|| Error::Missing(format!("output for basis state {s}")))
    };
    let (ez, ezb, ex, ey) = (
        get(BasisState::Z)?,
        get(BasisState::ZBar)?,
        get(BasisState::X)?,
        get(BasisState::Y)?,
    );
    let m: CMatrix = ez * c(0.5 + a - b - cc, 0.0)
        + ezb * c(0.5 - a - b - cc, 0.0)
        + ex * c(2.0 * b, 0.0)
        + ey * c(2.0 * cc, 0.0);
    Ok(DensityMatrix::new_unchecked(m))
}

/// Bloch vectors of the spherical Fibonacci lattice:
/// `z_k = 1 − 2(k+½)/n`, `φ_k = 2πk/ϕ` with ϕ the golden ratio.
pub fn fibonacci_bloch(n: usize) -> Result<Vec<BlochVector>> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "Fibonacci lattice needs n ≥ 1".into(),
        ));
    }
    let golden = (1.0 + 5f64.sqrt()) / 2.0;
    Ok((0..n)
        .map(|k| {
            let z = 1.0 - 2.0 * (k as f64 + 0.5) / n as f64;
            let phi = 2.0 * std::f64::consts::PI * k as f64 / golden;
            let r = (1.0 - z * z).max(0.0).sqrt();
            BlochVector {
                x: r * phi.cos(),
                y: r * phi.sin(),
                z,
            }
        })
        .collect())
}

/// Pure qubit states on the spherical Fibonacci lattice.
pub fn fibonacci_sphere(n: usize) -> Result<Vec<PureState>> {
    Ok(fibonacci_bloch(n)?
        .into_iter()
        .map(|v| {
            let theta = v.z.clamp(-1.0, 1.0).acos();
            let phi = v.y.atan2(v.x);
            PureState::from_angles(theta, phi)
        })
        .collect())
}
