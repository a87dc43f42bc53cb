use rand::Rng;

use super::state::{check_state_matrix, DensityMatrix, HERMITIAN_TOL, PSD_TOL};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, ZERO};

/// Maximum tolerated `‖Σ K†K − 1‖_max`.
pub const TP_TOL: f64 = 1e-9;
/// Eigenvalues below this fraction of the largest one count as zero.
pub const RANK_CUTOFF: f64 = 1e-10;

/// Which tensor factor of a dilation unitary holds the ancilla.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AncillaFactor {
    First,
    Second,
}

/// CPTP map given by Kraus operators, `ρ ↦ Σ K ρ K†`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    dim_in: usize,
    dim_out: usize,
    kraus: Vec<CMatrix>,
}

impl KrausChannel {
    pub fn new(kraus: Vec<CMatrix>) -> Result<Self> {
        let ch = Self::new_unchecked(kraus)?;
        let err = ch.tp_error();
        if err > TP_TOL {
            return Err(Error::Invariant(format!(
                "Kraus set is not trace preserving: ‖ΣK†K − 1‖ = {err:.3e}"
            )));
        }
        Ok(ch)
    }

    /// Checks shapes only; trace preservation is left to the caller.
    pub fn new_unchecked(kraus: Vec<CMatrix>) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty Kraus list".into()))?;
        let (dim_out, dim_in) = first.shape();
        if let Some(bad) = kraus.iter().find(|k| k.shape() != (dim_out, dim_in)) {
            return Err(Error::DimensionMismatch(format!(
                "Kraus operators must share a shape: {dim_out}x{dim_in} vs {}x{}",
                bad.nrows(),
                bad.ncols()
            )));
        }
        Ok(Self {
            dim_in,
            dim_out,
            kraus,
        })
    }

    pub fn identity(d: usize) -> Self {
        Self::unitary(linalg::identity(d))
    }

    pub fn unitary(u: CMatrix) -> Self {
        let (dim_out, dim_in) = u.shape();
        Self {
            dim_in,
            dim_out,
            kraus: vec![u],
        }
    }

    /// `ρ ↦ Σ_k p_k P_k ρ P_k` over the Paulis (I, X, Y, Z).
    pub fn pauli(probabilities: [f64; 4]) -> Result<Self> {
        if probabilities.iter().any(|&p| p < 0.0) {
            return Err(Error::InvalidArgument("negative Pauli probability".into()));
        }
        let kraus = linalg::pauli_basis()
            .into_iter()
            .zip(probabilities)
            .filter(|(_, p)| *p > 0.0)
            .map(|(m, p)| m * c(p.sqrt(), 0.0))
            .collect();
        Self::new(kraus)
    }

    pub fn completely_depolarizing() -> Self {
        Self::pauli([0.25; 4]).expect("uniform Pauli weights are valid")
    }

    /// Channel realized by `u` acting on system and ancilla, with the ancilla
    /// prepared in |0⟩ and traced out afterwards.
    pub fn from_dilation(u: &CMatrix, ancilla_dim: usize, ancilla: AncillaFactor) -> Result<Self> {
        Self::new(Self::dilation_kraus(u, ancilla_dim, ancilla)?)
    }

    pub(crate) fn dilation_kraus(
        u: &CMatrix,
        ancilla_dim: usize,
        ancilla: AncillaFactor,
    ) -> Result<Vec<CMatrix>> {
        let n = u.nrows();
        if !u.is_square() || ancilla_dim == 0 || !n.is_multiple_of(ancilla_dim) {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} dilation cannot hold an ancilla of dimension {ancilla_dim}",
                u.nrows(),
                u.ncols()
            )));
        }
        let d = n / ancilla_dim;
        let r = ancilla_dim;
        let index = |sys: usize, anc: usize| match ancilla {
            AncillaFactor::First => anc * d + sys,
            AncillaFactor::Second => sys * r + anc,
        };
        Ok((0..r)
            .map(|i| CMatrix::from_fn(d, d, |a, s| u[(index(a, i), index(s, 0))]))
            .collect())
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    pub fn into_kraus(self) -> Vec<CMatrix> {
        self.kraus
    }

    pub fn tp_error(&self) -> f64 {
        let sum = self
            .kraus
            .iter()
            .fold(CMatrix::zeros(self.dim_in, self.dim_in), |acc, k| {
                acc + k.adjoint() * k
            });
        linalg::max_abs_diff(&sum, &linalg::identity(self.dim_in))
    }

    /// Drops Kraus operators whose entries are all below `tol`.
    pub fn pruned(&self, tol: f64) -> Self {
        let kept: Vec<CMatrix> = self
            .kraus
            .iter()
            .filter(|k| linalg::max_abs(k) > tol)
            .cloned()
            .collect();
        let kraus = if kept.is_empty() {
            vec![self.kraus[0].clone()]
        } else {
            kept
        };
        Self {
            kraus,
            ..self.clone()
        }
    }

    /// Applies the channel to an arbitrary operator.
    pub fn apply_matrix(&self, m: &CMatrix) -> CMatrix {
        self.kraus
            .iter()
            .fold(CMatrix::zeros(self.dim_out, self.dim_out), |acc, k| {
                acc + k * m * k.adjoint()
            })
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dim() != self.dim_in {
            return Err(Error::DimensionMismatch(format!(
                "channel input dimension {} but state dimension {}",
                self.dim_in,
                rho.dim()
            )));
        }
        Ok(DensityMatrix::new_unchecked(linalg::hermitian_part(
            &self.apply_matrix(rho.matrix()),
        )))
    }

    fn require_square(&self, what: &str) -> Result<usize> {
        if self.dim_in != self.dim_out {
            return Err(Error::DimensionMismatch(format!(
                "{what} needs equal input and output dimensions, got {} -> {}",
                self.dim_in, self.dim_out
            )));
        }
        Ok(self.dim_in)
    }

    /// Unit-trace Choi state `(E ⊗ 1)(|ω⟩⟨ω|)`, output factor first.
    pub fn choi(&self) -> Result<ChoiState> {
        let d = self.require_square("Choi state")?;
        Ok(ChoiState {
            dim: d,
            matrix: choi_matrix(&self.kraus, d),
        })
    }

    /// Process matrix in the (I, X, Y, Z) basis.
    pub fn chi(&self) -> Result<ChiMatrix> {
        if self.dim_in != 2 || self.dim_out != 2 {
            return Err(Error::DimensionMismatch(format!(
                "χ matrix needs a qubit channel, got {} -> {}",
                self.dim_in, self.dim_out
            )));
        }
        self.choi()?.to_chi()
    }

    /// Number of nonzero Choi eigenvalues.
    pub fn rank(&self) -> Result<usize> {
        Ok(self.choi()?.rank())
    }

    /// Unitary `U` on system ⊗ ancilla with `U(|ψ⟩ ⊗ |0⟩) = Σ_i K_i|ψ⟩ ⊗ |i⟩`.
    /// The ancilla dimension equals the Kraus count.
    pub fn dilate(&self) -> Result<CMatrix> {
        let d = self.require_square("Stinespring dilation")?;
        let err = self.tp_error();
        if err > TP_TOL {
            return Err(Error::Invariant(format!(
                "cannot dilate a non trace-preserving Kraus set (error {err:.3e})"
            )));
        }
        let r = self.kraus.len();
        let n = d * r;
        // place the isometry in the columns that take the ancilla in |0⟩
        let mut iso = CMatrix::zeros(n, d);
        for (i, k) in self.kraus.iter().enumerate() {
            for a in 0..d {
                for s in 0..d {
                    iso[(a * r + i, s)] = k[(a, s)];
                }
            }
        }
        let filled = linalg::complete_unitary(&iso, d);
        let mut u = CMatrix::zeros(n, n);
        let mut spare = d;
        for col in 0..n {
            let (s, anc) = (col / r, col % r);
            let src = if anc == 0 {
                s
            } else {
                spare += 1;
                spare - 1
            };
            u.set_column(col, &filled.column(src));
        }
        Ok(u)
    }
}

/// `ω[(a,i),(b,j)] = (1/d) Σ_k K_k[a,i] conj(K_k[b,j])`.
pub(crate) fn choi_matrix(kraus: &[CMatrix], d: usize) -> CMatrix {
    let mut m = CMatrix::zeros(d * d, d * d);
    let scale = 1.0 / d as f64;
    for k in kraus {
        let v: Vec<_> = (0..d * d).map(|idx| k[(idx / d, idx % d)]).collect();
        for r in 0..d * d {
            if v[r] == ZERO {
                continue;
            }
            for s in 0..d * d {
                m[(r, s)] += v[r] * v[s].conj() * scale;
            }
        }
    }
    m
}

/// Random CPTP channel with `kraus_count` operators from a Haar isometry.
pub fn random_channel<R: Rng + ?Sized>(d: usize, kraus_count: usize, rng: &mut R) -> KrausChannel {
    let u = linalg::haar_unitary(d * kraus_count, rng);
    let kraus = (0..kraus_count)
        .map(|i| CMatrix::from_fn(d, d, |a, s| u[(a * kraus_count + i, s)]))
        .collect();
    KrausChannel::new(kraus).expect("Haar isometry gives a trace-preserving set")
}

/// Unit-trace Choi state of a channel on a `dim`-dimensional system.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiState {
    dim: usize,
    matrix: CMatrix,
}

impl ChoiState {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let choi = Self::new_unchecked(matrix)?;
        check_state_matrix(&choi.matrix, "Choi state")?;
        let err = choi.marginal_error();
        if err > 1e-9 {
            return Err(Error::Invariant(format!(
                "Choi marginal differs from 1/d by {err:.3e}"
            )));
        }
        Ok(choi)
    }

    pub fn new_unchecked(matrix: CMatrix) -> Result<Self> {
        let n = matrix.nrows();
        let dim = (n as f64).sqrt().round() as usize;
        if !matrix.is_square() || dim * dim != n {
            return Err(Error::DimensionMismatch(format!(
                "Choi matrix must be d²×d², got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { dim, matrix })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    /// `max |Tr_out ω − 1/d|`.
    pub fn marginal_error(&self) -> f64 {
        let d = self.dim;
        let marginal = linalg::partial_trace(&self.matrix, &[d, d], &[1])
            .expect("dimensions fixed at construction");
        linalg::max_abs_diff(&marginal, &(linalg::identity(d) / c(d as f64, 0.0)))
    }

    pub fn rank(&self) -> usize {
        let vals = linalg::eigvalsh(&self.matrix);
        let max = vals.iter().cloned().fold(0.0, f64::max);
        vals.iter().filter(|&&v| v > RANK_CUTOFF * max).count()
    }

    /// Kraus operators from the eigen-decomposition; one per nonzero eigenvalue.
    pub fn to_kraus(&self) -> Result<KrausChannel> {
        let d = self.dim;
        let (vals, vecs) = linalg::eigh(&self.matrix);
        let max = vals.iter().cloned().fold(0.0, f64::max);
        if vals[0] < -PSD_TOL {
            return Err(Error::Invariant(format!(
                "Choi matrix has negative eigenvalue {:.3e}",
                vals[0]
            )));
        }
        let kraus: Vec<CMatrix> = vals
            .iter()
            .enumerate()
            .rev()
            .filter(|(_, &v)| v > RANK_CUTOFF * max)
            .map(|(k, &v)| {
                let scale = (d as f64 * v).sqrt();
                CMatrix::from_fn(d, d, |a, i| vecs[(a * d + i, k)] * scale)
            })
            .collect();
        KrausChannel::new(kraus)
    }

    /// `E(ρ) = d · Tr_ref[ω (1 ⊗ ρᵀ)]`.
    pub fn apply_matrix(&self, rho: &CMatrix) -> CMatrix {
        let d = self.dim;
        let lifted = &self.matrix * linalg::kron(&linalg::identity(d), &rho.transpose());
        linalg::partial_trace(&lifted, &[d, d], &[0]).expect("dimensions fixed") * c(d as f64, 0.0)
    }

    pub fn to_chi(&self) -> Result<ChiMatrix> {
        if self.dim != 2 {
            return Err(Error::DimensionMismatch(format!(
                "χ matrix needs a qubit channel, got dimension {}",
                self.dim
            )));
        }
        let b = chi_basis_change();
        Ok(ChiMatrix {
            matrix: b.adjoint() * &self.matrix * b,
        })
    }
}

/// Columns are `vec(P_m)/√2` for P in (I, X, Y, Z); unitary, so
/// `ω = B χ B†` and `χ = B† ω B`.
fn chi_basis_change() -> CMatrix {
    let paulis = linalg::pauli_basis();
    let s = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    CMatrix::from_fn(4, 4, |idx, m| paulis[m][(idx / 2, idx % 2)] * s)
}

/// Qubit process matrix in the fixed (I, X, Y, Z) operator basis.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiMatrix {
    matrix: CMatrix,
}

impl ChiMatrix {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if matrix.shape() != (4, 4) {
            return Err(Error::DimensionMismatch("χ matrix must be 4x4".into()));
        }
        let herm = linalg::hermiticity_error(&matrix);
        if herm > HERMITIAN_TOL {
            return Err(Error::Invariant(format!(
                "χ matrix not Hermitian (error {herm:.3e})"
            )));
        }
        let min = linalg::eigvalsh(&matrix)[0];
        if min < -PSD_TOL {
            return Err(Error::Invariant(format!(
                "χ matrix has negative eigenvalue {min:.3e}"
            )));
        }
        Ok(Self { matrix })
    }

    pub fn new_unchecked(matrix: CMatrix) -> Self {
        Self { matrix }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn to_choi(&self) -> ChoiState {
        let b = chi_basis_change();
        ChoiState {
            dim: 2,
            matrix: &b * &self.matrix * b.adjoint(),
        }
    }

    /// `Σ_mn χ_mn P_m ρ P_n†`.
    pub fn apply_matrix(&self, rho: &CMatrix) -> CMatrix {
        let p = linalg::pauli_basis();
        let mut out = CMatrix::zeros(2, 2);
        for m in 0..4 {
            for n in 0..4 {
                out += (&p[m] * rho * p[n].adjoint()) * self.matrix[(m, n)];
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, ONE};
    use crate::qcore::state::{BasisState, DensityMatrix};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ad(lambda: f64) -> KrausChannel {
        let k0 = CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, c((1.0 - lambda).sqrt(), 0.0)]);
        let k1 = CMatrix::from_row_slice(2, 2, &[ZERO, c(lambda.sqrt(), 0.0), ZERO, ZERO]);
        KrausChannel::new(vec![k0, k1]).unwrap()
    }

    /// (E ⊗ 1)(|ω⟩⟨ω|) assembled block by block from E(|i⟩⟨j|).
    fn choi_brute_force(ch: &KrausChannel) -> CMatrix {
        let d = ch.dim_in();
        let mut out = CMatrix::zeros(d * d, d * d);
        for i in 0..d {
            for j in 0..d {
                let mut eij = CMatrix::zeros(d, d);
                eij[(i, j)] = ONE;
                let img = ch.apply_matrix(&eij);
                out += linalg::kron(&img, &eij) / c(d as f64, 0.0);
            }
        }
        out
    }

    /// χ_mn = Σ_i c_im conj(c_in) with K_i = Σ_m c_im P_m.
    fn chi_by_expansion(ch: &KrausChannel) -> CMatrix {
        let p = linalg::pauli_basis();
        let mut chi = CMatrix::zeros(4, 4);
        for k in ch.kraus() {
            let coef: Vec<_> = p
                .iter()
                .map(|pm| linalg::trace(&(pm * k)) / c(2.0, 0.0))
                .collect();
            for m in 0..4 {
                for n in 0..4 {
                    chi[(m, n)] += coef[m] * coef[n].conj();
                }
            }
        }
        chi
    }

    #[test]
    fn identity_channel_choi_corners() {
        let choi = KrausChannel::identity(2).choi().unwrap();
        let m = choi.matrix();
        for r in 0..4 {
            for s in 0..4 {
                let corner = (r == 0 || r == 3) && (s == 0 || s == 3);
                let expect = if corner { 0.5 } else { 0.0 };
                assert!((m[(r, s)] - c(expect, 0.0)).norm() < 1e-15);
            }
        }
        assert_eq!(choi.rank(), 1);
    }

    #[test]
    fn full_damping_choi() {
        let choi = ad(1.0).choi().unwrap();
        let mut expect = CMatrix::zeros(4, 4);
        expect[(0, 0)] = c(0.5, 0.0);
        expect[(1, 1)] = c(0.5, 0.0);
        assert!(max_abs_diff(choi.matrix(), &expect) < 1e-15);
        assert!(max_abs_diff(choi.matrix(), &choi_brute_force(&ad(1.0))) < 1e-15);
    }

    #[test]
    fn choi_matches_brute_force_and_is_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for r in 1..=4 {
            let ch = random_channel(2, r, &mut rng);
            let choi = ch.choi().unwrap();
            assert!(max_abs_diff(choi.matrix(), &choi_brute_force(&ch)) < 1e-14);
            assert!(ChoiState::new(choi.matrix().clone()).is_ok());
            assert_eq!(choi.rank(), r);
        }
    }

    #[test]
    fn unitary_channel_has_rank_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let u = linalg::haar_unitary(2, &mut rng);
        let choi = KrausChannel::unitary(u).choi().unwrap();
        let vals = linalg::eigvalsh(choi.matrix());
        assert!((vals[3] - 1.0).abs() < 1e-12);
        assert_eq!(choi.rank(), 1);
    }

    #[test]
    fn choi_to_kraus_special_cases() {
        let id = KrausChannel::identity(2)
            .choi()
            .unwrap()
            .to_kraus()
            .unwrap();
        assert_eq!(id.kraus().len(), 1);
        let k = &id.kraus()[0];
        let phase = k[(0, 0)];
        assert!((phase.norm() - 1.0).abs() < 1e-12);
        assert!(max_abs_diff(k, &(linalg::identity(2) * phase)) < 1e-12);

        let mixed = ChoiState::new(linalg::identity(4) / c(4.0, 0.0)).unwrap();
        let dep = mixed.to_kraus().unwrap();
        assert_eq!(dep.kraus().len(), 4);
        let out = dep.apply(&BasisState::X.density()).unwrap();
        assert!(max_abs_diff(out.matrix(), DensityMatrix::maximally_mixed(2).matrix()) < 1e-12);
    }

    #[test]
    fn choi_to_kraus_rejects_negative() {
        let mut m = linalg::identity(4) / c(4.0, 0.0);
        m[(0, 0)] = c(-0.1, 0.0);
        m[(1, 1)] = c(0.6, 0.0);
        let bad = ChoiState::new_unchecked(m).unwrap();
        assert!(matches!(bad.to_kraus(), Err(Error::Invariant(_))));
    }

    #[test]
    fn chi_special_cases() {
        let chi = KrausChannel::identity(2).chi().unwrap();
        let mut expect = CMatrix::zeros(4, 4);
        expect[(0, 0)] = ONE;
        assert!(max_abs_diff(chi.matrix(), &expect) < 1e-15);

        let chi = KrausChannel::unitary(linalg::pauli_x()).chi().unwrap();
        let mut expect = CMatrix::zeros(4, 4);
        expect[(1, 1)] = ONE;
        assert!(max_abs_diff(chi.matrix(), &expect) < 1e-15);

        let not_qubit = KrausChannel::identity(4);
        assert!(matches!(not_qubit.chi(), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn chi_matches_pauli_expansion_and_action() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for r in 1..=4 {
            let ch = random_channel(2, r, &mut rng);
            let chi = ch.chi().unwrap();
            assert!(max_abs_diff(chi.matrix(), &chi_by_expansion(&ch)) < 1e-14);
            assert!(ChiMatrix::new(chi.matrix().clone()).is_ok());
            let rho = BasisState::Y.density();
            let direct = ch.apply_matrix(rho.matrix());
            assert!(max_abs_diff(&chi.apply_matrix(rho.matrix()), &direct) < 1e-14);
            let back = chi.to_choi();
            assert!(max_abs_diff(back.matrix(), ch.choi().unwrap().matrix()) < 1e-14);
        }
    }

    #[test]
    fn choi_action_reproduces_channel() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let ch = random_channel(2, 3, &mut rng);
        let choi = ch.choi().unwrap();
        let rho = BasisState::X.density();
        assert!(
            max_abs_diff(
                &choi.apply_matrix(rho.matrix()),
                &ch.apply_matrix(rho.matrix())
            ) < 1e-14
        );
    }

    #[test]
    fn dilation_reproduces_kraus_blocks() {
        let ch = ad(0.5);
        let u = ch.dilate().unwrap();
        assert_eq!(u.shape(), (4, 4));
        assert!(linalg::unitarity_error(&u) < 1e-12);
        let back = KrausChannel::dilation_kraus(&u, 2, AncillaFactor::Second).unwrap();
        for (k, b) in ch.kraus().iter().zip(&back) {
            assert!(max_abs_diff(k, b) < 1e-15);
        }
        let id = KrausChannel::identity(2).dilate().unwrap();
        assert!(max_abs_diff(&id, &linalg::identity(2)) < 1e-15);
    }

    #[test]
    fn dilated_action_matches_apply() {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let ch = random_channel(2, 3, &mut rng);
        let u = ch.dilate().unwrap();
        assert!(linalg::unitarity_error(&u) < 1e-12);
        for _ in 0..100 {
            let psi = linalg::haar_unitary(2, &mut rng).column(0).into_owned();
            let rho = linalg::outer(&psi, &psi);
            let mut anc = CMatrix::zeros(3, 3);
            anc[(0, 0)] = ONE;
            let big = &u * linalg::kron(&rho, &anc) * u.adjoint();
            let reduced = linalg::partial_trace(&big, &[2, 3], &[0]).unwrap();
            assert!(max_abs_diff(&reduced, &ch.apply_matrix(&rho)) < 1e-13);
        }
    }

    #[test]
    fn dilation_rejects_non_tp() {
        let k = linalg::identity(2) * c(0.5, 0.0);
        let ch = KrausChannel::new_unchecked(vec![k]).unwrap();
        assert!(matches!(ch.dilate(), Err(Error::Invariant(_))));
        assert!(KrausChannel::new(vec![linalg::identity(2) * c(0.5, 0.0)]).is_err());
    }

    #[test]
    fn apply_rejects_dimension_mismatch() {
        let ch = KrausChannel::identity(2);
        let rho = DensityMatrix::maximally_mixed(4);
        assert!(matches!(ch.apply(&rho), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn full_damping_sends_excited_to_ground() {
        let out = ad(1.0).apply(&BasisState::ZBar.density()).unwrap();
        assert!(max_abs_diff(out.matrix(), BasisState::Z.density().matrix()) < 1e-15);
    }
}
