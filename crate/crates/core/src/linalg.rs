//! Dense complex linear algebra shared by every module.
//!
//! Tensor products use the big-endian convention: the composite index of
//! `A ⊗ B` is `i_A * dim_B + i_B`, so qubit 0 is the most significant bit.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn from_rows<const C: usize>(rows: &[[(f64, f64); C]]) -> CMatrix {
    CMatrix::from_fn(rows.len(), C, |i, j| c(rows[i][j].0, rows[i][j].1))
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
}

/// The qubit operator basis in the fixed order (I, X, Y, Z).
pub fn pauli_basis() -> [CMatrix; 4] {
    [identity(2), pauli_x(), pauli_y(), pauli_z()]
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn kron_all<'a>(factors: impl IntoIterator<Item = &'a CMatrix>) -> CMatrix {
    factors
        .into_iter()
        .fold(identity(1), |acc, f| kron(&acc, f))
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

pub fn hermiticity_error(m: &CMatrix) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// `max |M†M − 1|` over all entries.
pub fn unitarity_error(m: &CMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    max_abs_diff(&(m.adjoint() * m), &identity(m.nrows()))
}

pub fn ensure_unitary(m: &CMatrix, tol: f64, what: &str) -> Result<()> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "{what} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let err = unitarity_error(m);
    if err > tol {
        return Err(Error::Invariant(format!(
            "{what} is not unitary: max |M†M - 1| = {err:.3e} > {tol:.1e}"
        )));
    }
    Ok(())
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}

/// Eigen-decomposition of the Hermitian part of `m`, eigenvalues ascending.
pub fn eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = SymmetricEigen::new(hermitian_part(m));
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

pub fn eigvalsh(m: &CMatrix) -> Vec<f64> {
    eigh(m).0
}

/// Sum of absolute eigenvalues of a Hermitian matrix.
pub fn trace_norm_hermitian(m: &CMatrix) -> f64 {
    eigvalsh(m).iter().map(|v| v.abs()).sum()
}

/// Nearest unitary in Frobenius norm (unitary factor of the polar decomposition).
pub fn polar_unitary(m: &CMatrix) -> CMatrix {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");
    u * v_t
}

/// Partial trace over every factor not listed in `keep`; kept factors stay in
/// their original order.
pub fn partial_trace(m: &CMatrix, dims: &[usize], keep: &[usize]) -> Result<CMatrix> {
    let total: usize = dims.iter().product();
    if !m.is_square() || m.nrows() != total {
        return Err(Error::DimensionMismatch(format!(
            "matrix is {}x{} but factor dimensions {:?} multiply to {}",
            m.nrows(),
            m.ncols(),
            dims,
            total
        )));
    }
    if keep.is_empty() {
        return Err(Error::InvalidArgument("keep set must be nonempty".into()));
    }
    let mut sorted = keep.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != keep.len() || sorted.iter().any(|&k| k >= dims.len()) {
        return Err(Error::InvalidArgument(format!(
            "keep set {keep:?} is not a set of factor indices below {}",
            dims.len()
        )));
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|k| !sorted.contains(k)).collect();
    let kept_dim: usize = sorted.iter().map(|&k| dims[k]).product();
    let traced_dim: usize = traced.iter().map(|&k| dims[k]).product();

    // strides of the composite index
    let mut strides = vec![1usize; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * dims[k + 1];
    }
    let compose = |kept_idx: usize, traced_idx: usize| -> usize {
        let mut idx = 0;
        let mut rem = kept_idx;
        for &k in sorted.iter().rev() {
            idx += (rem % dims[k]) * strides[k];
            rem /= dims[k];
        }
        let mut rem = traced_idx;
        for &k in traced.iter().rev() {
            idx += (rem % dims[k]) * strides[k];
            rem /= dims[k];
        }
        idx
    };
    let mut out = CMatrix::zeros(kept_dim, kept_dim);
    for i in 0..kept_dim {
        for j in 0..kept_dim {
            let mut acc = ZERO;
            for t in 0..traced_dim {
                acc += m[(compose(i, t), compose(j, t))];
            }
            out[(i, j)] = acc;
        }
    }
    Ok(out)
}

/// Lift an operator acting on the ordered qubits `targets` of an
/// `n_qubits` register to the full register.
///
/// The first target is the operator's most significant factor.
pub fn embed_operator(op: &CMatrix, targets: &[usize], n_qubits: usize) -> Result<CMatrix> {
    let k = targets.len();
    if op.nrows() != 1 << k || op.ncols() != 1 << k {
        return Err(Error::DimensionMismatch(format!(
            "operator is {}x{} but acts on {} qubits",
            op.nrows(),
            op.ncols(),
            k
        )));
    }
    if targets.iter().any(|&q| q >= n_qubits) || (1..k).any(|a| targets[..a].contains(&targets[a]))
    {
        return Err(Error::InvalidArgument(format!(
            "targets {targets:?} are not distinct qubits of a {n_qubits}-qubit register"
        )));
    }
    let dim = 1usize << n_qubits;
    let bit = |idx: usize, q: usize| (idx >> (n_qubits - 1 - q)) & 1;
    let local = |idx: usize| {
        targets
            .iter()
            .fold(0usize, |acc, &q| (acc << 1) | bit(idx, q))
    };
    let mask: usize = targets
        .iter()
        .fold(0usize, |acc, &q| acc | (1 << (n_qubits - 1 - q)));
    let mut out = CMatrix::zeros(dim, dim);
    for col in 0..dim {
        let lc = local(col);
        let rest = col & !mask;
        for lr in 0..(1usize << k) {
            let v = op[(lr, lc)];
            if v == ZERO {
                continue;
            }
            let mut row = rest;
            for (pos, &q) in targets.iter().enumerate() {
                let b = (lr >> (k - 1 - pos)) & 1;
                row |= b << (n_qubits - 1 - q);
            }
            out[(row, col)] += v;
        }
    }
    Ok(out)
}

/// Number of real parameters of an `n`×`n` Hermitian generator.
pub fn hermitian_param_count(n: usize) -> usize {
    n * n
}

/// Hermitian matrix from `n²` reals: the diagonal first, then `(Re, Im)` of
/// each upper-triangular entry in row-major order.
pub fn hermitian_from_params(params: &[f64], n: usize) -> CMatrix {
    assert_eq!(
        params.len(),
        n * n,
        "expected {} generator parameters",
        n * n
    );
    let mut h = CMatrix::zeros(n, n);
    for j in 0..n {
        h[(j, j)] = c(params[j], 0.0);
    }
    let mut p = n;
    for j in 0..n {
        for k in (j + 1)..n {
            let z = c(params[p], params[p + 1]);
            h[(j, k)] = z;
            h[(k, j)] = z.conj();
            p += 2;
        }
    }
    h
}

/// Real gradient of `Re Tr(M† dH)` with respect to the generator parameters.
pub fn hermitian_param_gradient(m: &CMatrix) -> Vec<f64> {
    let n = m.nrows();
    let mut g = Vec::with_capacity(n * n);
    for j in 0..n {
        g.push(m[(j, j)].re);
    }
    for j in 0..n {
        for k in (j + 1)..n {
            g.push(m[(j, k)].re + m[(k, j)].re);
            g.push(m[(j, k)].im - m[(k, j)].im);
        }
    }
    g
}

/// `exp(coeff · H)` for Hermitian `H` computed through its spectrum, keeping
/// what is needed to differentiate it.
#[derive(Debug, Clone)]
pub struct SpectralExp {
    vectors: CMatrix,
    values: Vec<f64>,
    coeff: C64,
    value: CMatrix,
}

impl SpectralExp {
    pub fn new(h: &CMatrix, coeff: C64) -> Self {
        let (values, vectors) = eigh(h);
        let n = values.len();
        let phases = CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                (coeff * values[i]).exp()
            } else {
                ZERO
            }
        });
        let value = &vectors * phases * vectors.adjoint();
        Self {
            vectors,
            values,
            coeff,
            value,
        }
    }

    pub fn value(&self) -> &CMatrix {
        &self.value
    }

    pub fn into_value(self) -> CMatrix {
        self.value
    }

    fn divided_differences(&self) -> CMatrix {
        let n = self.values.len();
        CMatrix::from_fn(n, n, |j, k| {
            let (a, b) = (self.values[j], self.values[k]);
            let fa = (self.coeff * a).exp();
            if (a - b).abs() < 1e-9 * (1.0 + a.abs()) {
                self.coeff * fa
            } else {
                (fa - (self.coeff * b).exp()) / (a - b)
            }
        })
    }

    /// Returns `Y` such that `Tr(M · dU) = Tr(Y · dH)` for every Hermitian `dH`.
    pub fn trace_pullback(&self, m: &CMatrix) -> CMatrix {
        let q = &self.vectors;
        let gamma = self.divided_differences().transpose();
        let inner = (q.adjoint() * m * q).component_mul(&gamma);
        q * inner * q.adjoint()
    }

    /// Returns `M` such that `Re Tr(G† dU) = Re Tr(M† dH)`.
    pub fn real_pullback(&self, g: &CMatrix) -> CMatrix {
        self.trace_pullback(&g.adjoint()).adjoint()
    }
}

/// `exp(iH)` for the Hermitian generator built from `params`.
pub fn unitary_from_params(params: &[f64], n: usize) -> CMatrix {
    SpectralExp::new(&hermitian_from_params(params, n), I).into_value()
}

/// Gram–Schmidt completion: keeps the first `k` orthonormal columns of `m`
/// and fills the rest with an orthonormal complement.
pub fn complete_unitary(m: &CMatrix, k: usize) -> CMatrix {
    let n = m.nrows();
    let mut cols: Vec<CVector> = (0..k).map(|j| m.column(j).into_owned()).collect();
    let mut e = 0;
    while cols.len() < n {
        let mut v = CVector::zeros(n);
        v[e] = ONE;
        e += 1;
        // two passes of modified Gram–Schmidt
        for _ in 0..2 {
            for u in &cols {
                let proj = u.dotc(&v);
                v -= u * proj;
            }
        }
        let norm = v.norm();
        if norm > 1e-8 {
            cols.push(v / c(norm, 0.0));
        }
    }
    CMatrix::from_columns(&cols)
}

/// Haar-random unitary: QR of a complex Gaussian matrix with the phases of
/// R's diagonal moved into Q.
pub fn haar_unitary<R: rand::Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(n, n, |_, _| {
        let (a, b) = gaussian_pair(rng);
        c(a, b) * std::f64::consts::FRAC_1_SQRT_2
    });
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Two independent standard normal samples (Box–Muller).
pub fn gaussian_pair<R: rand::Rng + ?Sized>(rng: &mut R) -> (f64, f64) {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen::<f64>();
    let r = (-2.0 * u1.ln()).sqrt();
    let t = 2.0 * std::f64::consts::PI * u2;
    (r * t.cos(), r * t.sin())
}

pub fn gaussian<R: rand::Rng + ?Sized>(rng: &mut R) -> f64 {
    gaussian_pair(rng).0
}

pub fn ket(dim: usize, index: usize) -> CVector {
    let mut v = CVector::zeros(dim);
    v[index] = ONE;
    v
}

pub fn outer(a: &CVector, b: &CVector) -> CMatrix {
    a * b.adjoint()
}
