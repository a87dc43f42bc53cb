//! Qubit superchannels in circuit form (pre-unitary V, input channel,
//! post-unitary W, two ancilla qubits) and in Choi form.
//!
//! Both unitaries act on `system ⊗ ancilla`, system first. With
//! `K_v^m = ⟨m|V|0⟩` and `K_w^{am} = ⟨a|W|m⟩` (system blocks, ancilla
//! basis |00⟩, |01⟩, |10⟩, |11⟩):
//!
//! * the output channel has Kraus operators `F_{i,a} = Σ_m K_w^{am} K_i K_v^m`,
//! * the action on Choi states is `ω ↦ Σ_a S_a ω S_a†` with
//!   `S_a = Σ_m K_w^{am} ⊗ (K_v^m)ᵀ` (plain transpose on the reference factor).
//!
//! The two forms agree exactly because `(A ⊗ 1)|ω⟩ = (1 ⊗ Aᵀ)|ω⟩`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, ONE};
use crate::qcore::{self, random_channel, ChoiState, KrausChannel};

pub const UNITARY_TOL: f64 = 1e-9;
const ANC: usize = 4;

/// Superchannel realized by one pair of 8×8 unitaries around the input channel.
#[derive(Debug, Clone, PartialEq)]
pub struct GenExtremeSuperchannel {
    v: CMatrix,
    w: CMatrix,
}

impl GenExtremeSuperchannel {
    pub fn new(v: CMatrix, w: CMatrix) -> Result<Self> {
        linalg::ensure_unitary(&v, UNITARY_TOL, "pre-unitary V")?;
        linalg::ensure_unitary(&w, UNITARY_TOL, "post-unitary W")?;
        Self::new_unchecked(v, w)
    }

    /// Shape checks only; for rounded matrices that are unitary to a few digits.
    pub fn new_unchecked(v: CMatrix, w: CMatrix) -> Result<Self> {
        if v.shape() != (8, 8) || w.shape() != (8, 8) {
            return Err(Error::DimensionMismatch(format!(
                "V and W must be 8x8, got {}x{} and {}x{}",
                v.nrows(),
                v.ncols(),
                w.nrows(),
                w.ncols()
            )));
        }
        Ok(Self { v, w })
    }

    pub fn identity() -> Self {
        Self {
            v: linalg::identity(8),
            w: linalg::identity(8),
        }
    }

    /// Haar-random V and W, deterministic in `seed`.
    pub fn random(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = linalg::haar_unitary(8, &mut rng);
        let w = linalg::haar_unitary(8, &mut rng);
        Self { v, w }
    }

    /// Controlled pre/post operators with the system qubit as control:
    /// `V = |0⟩⟨0| ⊗ v1 + |1⟩⟨1| ⊗ v2`, likewise for W.
    pub fn dephasing(v1: &CMatrix, v2: &CMatrix, w1: &CMatrix, w2: &CMatrix) -> Result<Self> {
        for (m, name) in [(v1, "V1"), (v2, "V2"), (w1, "W1"), (w2, "W2")] {
            linalg::ensure_unitary(m, UNITARY_TOL, name)?;
            if m.shape() != (4, 4) {
                return Err(Error::DimensionMismatch(format!("{name} must be 4x4")));
            }
        }
        Self::new(controlled_pair(v1, v2), controlled_pair(w1, w2))
    }

    pub fn v(&self) -> &CMatrix {
        &self.v
    }

    pub fn w(&self) -> &CMatrix {
        &self.w
    }

    /// `⟨m|V|0⟩` as a 2×2 system operator.
    pub fn pre_block(&self, m: usize) -> CMatrix {
        CMatrix::from_fn(2, 2, |x, s| self.v[(x * ANC + m, s * ANC)])
    }

    /// `⟨a|W|m⟩` as a 2×2 system operator.
    pub fn post_block(&self, a: usize, m: usize) -> CMatrix {
        CMatrix::from_fn(2, 2, |b, s| self.w[(b * ANC + a, s * ANC + m)])
    }

    /// Superchannel Kraus operators `S_a`, one per ancilla outcome.
    pub fn circuit_to_kraus(&self) -> Result<SuperchannelKraus> {
        linalg::ensure_unitary(&self.v, UNITARY_TOL, "pre-unitary V")?;
        linalg::ensure_unitary(&self.w, UNITARY_TOL, "post-unitary W")?;
        SuperchannelKraus::new(self.kraus_ops())
    }

    pub(crate) fn kraus_ops(&self) -> Vec<CMatrix> {
        let pre_t: Vec<CMatrix> = (0..ANC).map(|m| self.pre_block(m).transpose()).collect();
        (0..ANC)
            .map(|a| {
                (0..ANC).fold(CMatrix::zeros(4, 4), |acc, m| {
                    acc + linalg::kron(&self.post_block(a, m), &pre_t[m])
                })
            })
            .collect()
    }

    /// Kraus operators of the transformed channel, ordered `(i, a)` with `a`
    /// varying fastest.
    pub fn output_kraus(&self, input: &KrausChannel) -> Result<Vec<CMatrix>> {
        if input.dim_in() != 2 || input.dim_out() != 2 {
            return Err(Error::DimensionMismatch(format!(
                "superchannel input must be a qubit channel, got {} -> {}",
                input.dim_in(),
                input.dim_out()
            )));
        }
        let pre: Vec<CMatrix> = (0..ANC).map(|m| self.pre_block(m)).collect();
        let mut out = Vec::with_capacity(input.kraus().len() * ANC);
        for k in input.kraus() {
            for a in 0..ANC {
                let f = (0..ANC).fold(CMatrix::zeros(2, 2), |acc, m| {
                    acc + self.post_block(a, m) * k * &pre[m]
                });
                out.push(f);
            }
        }
        Ok(out)
    }

    pub fn output_channel(&self, input: &KrausChannel) -> Result<KrausChannel> {
        KrausChannel::new(self.output_kraus(input)?)
    }
}

/// `|0⟩⟨0| ⊗ a + |1⟩⟨1| ⊗ b`.
pub fn controlled_pair(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let mut p0 = CMatrix::zeros(2, 2);
    p0[(0, 0)] = ONE;
    let mut p1 = CMatrix::zeros(2, 2);
    p1[(1, 1)] = ONE;
    linalg::kron(&p0, a) + linalg::kron(&p1, b)
}

/// Kraus operators of the map induced on 4×4 Choi matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperchannelKraus {
    ops: Vec<CMatrix>,
}

impl SuperchannelKraus {
    /// Validates shapes and trace preservation on Choi states (see
    /// [`SuperchannelKraus::choi_trace_residual`]).
    pub fn new(ops: Vec<CMatrix>) -> Result<Self> {
        if ops.is_empty() || ops.iter().any(|s| s.shape() != (4, 4)) {
            return Err(Error::DimensionMismatch(
                "superchannel Kraus operators must be a nonempty list of 4x4 matrices".into(),
            ));
        }
        let s = Self { ops };
        let res = s.choi_trace_residual();
        if res > 1e-9 {
            return Err(Error::Invariant(format!(
                "superchannel does not preserve the trace of Choi states (residual {res:.3e})"
            )));
        }
        Ok(s)
    }

    /// Shape checks only.
    pub fn new_unchecked(ops: Vec<CMatrix>) -> Result<Self> {
        if ops.is_empty() || ops.iter().any(|s| s.shape() != (4, 4)) {
            return Err(Error::DimensionMismatch(
                "superchannel Kraus operators must be a nonempty list of 4x4 matrices".into(),
            ));
        }
        Ok(Self { ops })
    }

    pub fn ops(&self) -> &[CMatrix] {
        &self.ops
    }

    /// `Σ_a S_a† S_a`.
    pub fn gram(&self) -> CMatrix {
        self.ops
            .iter()
            .fold(CMatrix::zeros(4, 4), |acc, s| acc + s.adjoint() * s)
    }

    /// Distance of `Σ S†S` from the form `1 ⊗ M` with `Tr M = 2`, which is
    /// exactly the condition for the map to preserve the unit trace of every
    /// Choi state (whose reference marginal is `1/2`). It equals `1 ⊗ 1`
    /// only when the V-blocks also satisfy `Σ_m K_v^m K_v^m† = 1`.
    pub fn choi_trace_residual(&self) -> f64 {
        let g = self.gram();
        let m = linalg::partial_trace(&g, &[2, 2], &[1]).expect("4x4") * c(0.5, 0.0);
        let structured = linalg::kron(&linalg::identity(2), &m);
        linalg::max_abs_diff(&g, &structured) + (linalg::trace(&m) - c(2.0, 0.0)).norm()
    }

    pub fn apply_matrix(&self, omega: &CMatrix) -> CMatrix {
        self.ops
            .iter()
            .fold(CMatrix::zeros(4, 4), |acc, s| acc + s * omega * s.adjoint())
    }

    /// `Σ_a S_a ω S_a†`, validated as a Choi state.
    pub fn act_on_choi(&self, omega: &ChoiState) -> Result<ChoiState> {
        if omega.dim() != 2 {
            return Err(Error::DimensionMismatch(
                "superchannels act on qubit channels".into(),
            ));
        }
        ChoiState::new(linalg::hermitian_part(&self.apply_matrix(omega.matrix())))
    }

    /// Choi matrix of `ω ↦ Σ S ω S†` on the 4-dimensional Choi space.
    pub fn to_choi(&self) -> SuperchannelChoi {
        SuperchannelChoi {
            matrix: qcore::choi_matrix(&self.ops, 4),
        }
    }
}

/// 16×16 Choi operator of a superchannel, unit trace, map output first.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperchannelChoi {
    matrix: CMatrix,
}

impl SuperchannelChoi {
    /// Checks Hermiticity, positivity and that 50 random CPTP inputs map
    /// to valid Choi states.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let s = Self::new_unchecked(matrix)?;
        s.validate()?;
        Ok(s)
    }

    pub fn new_unchecked(matrix: CMatrix) -> Result<Self> {
        if matrix.shape() != (16, 16) {
            return Err(Error::DimensionMismatch(format!(
                "superchannel Choi matrix must be 16x16, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { matrix })
    }

    pub fn identity() -> Self {
        SuperchannelKraus {
            ops: vec![linalg::identity(4)],
        }
        .to_choi()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn validate(&self) -> Result<()> {
        let herm = linalg::hermiticity_error(&self.matrix);
        if herm > 1e-10 {
            return Err(Error::Invariant(format!(
                "superchannel Choi not Hermitian (error {herm:.3e})"
            )));
        }
        let min = linalg::eigvalsh(&self.matrix)[0];
        if min < -1e-9 {
            return Err(Error::Invariant(format!(
                "superchannel Choi has negative eigenvalue {min:.3e}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        for k in 0..50 {
            let ch = random_channel(2, 1 + k % 4, &mut rng);
            let out = self.apply_matrix(ch.choi()?.matrix());
            ChoiState::new(linalg::hermitian_part(&out)).map_err(|e| {
                Error::Invariant(format!("superchannel maps a channel outside CPTP: {e}"))
            })?;
        }
        Ok(())
    }

    /// `Φ(ω) = 4 · Tr_ref[C (1 ⊗ ωᵀ)]`.
    pub fn apply_matrix(&self, omega: &CMatrix) -> CMatrix {
        let lifted = &self.matrix * linalg::kron(&linalg::identity(4), &omega.transpose());
        linalg::partial_trace(&lifted, &[4, 4], &[0]).expect("16x16") * c(4.0, 0.0)
    }

    pub fn act_on_choi(&self, omega: &ChoiState) -> Result<ChoiState> {
        if omega.dim() != 2 {
            return Err(Error::DimensionMismatch(
                "superchannels act on qubit channels".into(),
            ));
        }
        ChoiState::new(linalg::hermitian_part(&self.apply_matrix(omega.matrix())))
    }

    /// `Σ p_i C_i`; weights must be a probability vector.
    pub fn mixture(weights: &[f64], parts: &[SuperchannelChoi]) -> Result<Self> {
        if weights.len() != parts.len() || parts.is_empty() {
            return Err(Error::DimensionMismatch(
                "one weight per component is required".into(),
            ));
        }
        check_simplex(weights)?;
        let matrix = weights
            .iter()
            .zip(parts)
            .fold(CMatrix::zeros(16, 16), |acc, (&p, s)| {
                acc + &s.matrix * c(p, 0.0)
            });
        Ok(Self { matrix })
    }
}

pub(crate) fn check_simplex(weights: &[f64]) -> Result<()> {
    let sum: f64 = weights.iter().sum();
    if weights.iter().any(|&p| p < 0.0 || !p.is_finite()) || (sum - 1.0).abs() > 1e-12 {
        return Err(Error::Invariant(format!(
            "weights {weights:?} are not a probability vector"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;
    use crate::qcore::trace_distance_matrices;

    #[test]
    fn identity_circuit_collapses() {
        let g = GenExtremeSuperchannel::identity();
        let s = g.circuit_to_kraus().unwrap();
        assert_eq!(s.ops()[0], linalg::identity(4));
        for a in 1..4 {
            assert_eq!(s.ops()[a], CMatrix::zeros(4, 4));
        }
        assert!(max_abs_diff(&s.gram(), &linalg::identity(4)) < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(51);
        let ch = random_channel(2, 2, &mut rng);
        let out = g.output_kraus(&ch).unwrap();
        for (i, k) in ch.kraus().iter().enumerate() {
            assert_eq!(&out[i * 4], k);
            for a in 1..4 {
                assert_eq!(out[i * 4 + a], CMatrix::zeros(2, 2));
            }
        }
        let omega = ch.choi().unwrap();
        let back = s.act_on_choi(&omega).unwrap();
        assert!(max_abs_diff(back.matrix(), omega.matrix()) < 1e-15);
    }

    #[test]
    fn rejects_non_unitary_inputs() {
        let bad = linalg::identity(8) * c(0.9, 0.0);
        assert!(matches!(
            GenExtremeSuperchannel::new(bad.clone(), linalg::identity(8)),
            Err(Error::Invariant(_))
        ));
        let g = GenExtremeSuperchannel::new_unchecked(bad, linalg::identity(8)).unwrap();
        assert!(g.circuit_to_kraus().is_err());
        assert!(GenExtremeSuperchannel::new(linalg::identity(4), linalg::identity(8)).is_err());
        let id4 = linalg::identity(4);
        assert!(
            GenExtremeSuperchannel::dephasing(&(&id4 * c(2.0, 0.0)), &id4, &id4, &id4).is_err()
        );
    }

    #[test]
    fn random_superchannels_are_deterministic_and_unitary() {
        let a = GenExtremeSuperchannel::random(7);
        let b = GenExtremeSuperchannel::random(7);
        assert_eq!(a, b);
        assert_ne!(a, GenExtremeSuperchannel::random(8));
        for j in 0..8 {
            assert!((a.v().column(j).norm() - 1.0).abs() < 1e-12);
        }
        for seed in 0..100 {
            let g = GenExtremeSuperchannel::random(seed);
            let s = g.circuit_to_kraus().unwrap();
            assert!(s.choi_trace_residual() < 1e-9);
        }
    }

    #[test]
    fn gram_is_identity_only_when_pre_blocks_are_coisometric() {
        // Generic V: Σ S†S = 1 ⊗ M with M ≠ 1 but Tr M = 2.
        let g = GenExtremeSuperchannel::random(3);
        let s = g.circuit_to_kraus().unwrap();
        let gram = s.gram();
        assert!(max_abs_diff(&gram, &linalg::identity(4)) > 1e-3);
        assert!(s.choi_trace_residual() < 1e-12);
    }

    #[test]
    fn choi_action_matches_output_kraus() {
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        for seed in 0..20 {
            let g = GenExtremeSuperchannel::random(100 + seed);
            let ch = random_channel(2, 1 + (seed as usize % 4), &mut rng);
            let s = g.circuit_to_kraus().unwrap();
            let via_choi = s.act_on_choi(&ch.choi().unwrap()).unwrap();
            let via_kraus = g.output_channel(&ch).unwrap().choi().unwrap();
            assert!(max_abs_diff(via_choi.matrix(), via_kraus.matrix()) < 1e-12);
        }
    }

    #[test]
    fn conjugate_transpose_reading_breaks_equivalence() {
        let g = GenExtremeSuperchannel::random(4);
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let ch = random_channel(2, 2, &mut rng);
        let wrong: Vec<CMatrix> = (0..4)
            .map(|a| {
                (0..4).fold(CMatrix::zeros(4, 4), |acc, m| {
                    acc + linalg::kron(&g.post_block(a, m), &g.pre_block(m).adjoint())
                })
            })
            .collect();
        let wrong = SuperchannelKraus { ops: wrong };
        let via_kraus = g.output_channel(&ch).unwrap().choi().unwrap();
        let got = wrong.apply_matrix(ch.choi().unwrap().matrix());
        assert!(max_abs_diff(&got, via_kraus.matrix()) > 1e-3);
    }

    /// Brute-force state-vector simulation of the four-qubit circuit
    /// (channel ancilla, system, two superchannel ancillas).
    fn circuit_output(
        g: &GenExtremeSuperchannel,
        ch: &KrausChannel,
        psi: &crate::linalg::CVector,
    ) -> CMatrix {
        let dil = ch.dilate().unwrap();
        assert_eq!(dil.nrows(), 4, "test channels use a single ancilla qubit");
        let mut state = crate::linalg::CVector::zeros(16);
        for s in 0..2 {
            state[s << 2] = psi[s];
        }
        let v = linalg::embed_operator(g.v(), &[1, 2, 3], 4).unwrap();
        let e = linalg::embed_operator(&dil, &[1, 0], 4).unwrap();
        let w = linalg::embed_operator(g.w(), &[1, 2, 3], 4).unwrap();
        let out = w * (e * (v * state));
        linalg::partial_trace(&linalg::outer(&out, &out), &[2, 2, 2, 2], &[1]).unwrap()
    }

    #[test]
    fn circuit_simulation_matches_output_channel() {
        let mut rng = ChaCha8Rng::seed_from_u64(54);
        for seed in 0..5 {
            let g = GenExtremeSuperchannel::random(200 + seed);
            let ch = random_channel(2, 2, &mut rng);
            let out = g.output_channel(&ch).unwrap();
            for _ in 0..5 {
                let psi = linalg::haar_unitary(2, &mut rng).column(0).into_owned();
                let rho = linalg::outer(&psi, &psi);
                let sim = circuit_output(&g, &ch, &psi);
                assert!(max_abs_diff(&sim, &out.apply_matrix(&rho)) < 1e-12);
            }
        }
    }

    #[test]
    fn dephasing_preserves_choi_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let u: Vec<CMatrix> = (0..4).map(|_| linalg::haar_unitary(4, &mut rng)).collect();
        let g = GenExtremeSuperchannel::dephasing(&u[0], &u[1], &u[2], &u[3]).unwrap();
        let s = g.circuit_to_kraus().unwrap();
        for _ in 0..100 {
            let ch = random_channel(2, 2, &mut rng);
            let before = ch.choi().unwrap();
            let after = s.act_on_choi(&before).unwrap();
            for k in 0..4 {
                assert!((after.matrix()[(k, k)] - before.matrix()[(k, k)]).norm() < 1e-12);
            }
            for r in 0..4 {
                for q in 0..4 {
                    assert!(
                        after.matrix()[(r, q)].norm() <= before.matrix()[(r, q)].norm() + 1e-12
                    );
                }
            }
        }
        let id = linalg::identity(4);
        let trivial = GenExtremeSuperchannel::dephasing(&id, &id, &id, &id).unwrap();
        assert_eq!(trivial, GenExtremeSuperchannel::identity());
    }

    #[test]
    fn superchannel_choi_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(56);
        let g = GenExtremeSuperchannel::random(9);
        let s = g.circuit_to_kraus().unwrap();
        let choi = SuperchannelChoi::new(s.to_choi().matrix().clone()).unwrap();
        assert!((linalg::trace(choi.matrix()).re - 1.0).abs() < 1e-12);
        for _ in 0..50 {
            let ch = random_channel(2, 3, &mut rng);
            let omega = ch.choi().unwrap();
            let a = choi.apply_matrix(omega.matrix());
            let b = s.apply_matrix(omega.matrix());
            assert!(max_abs_diff(&a, &b) < 1e-12);
        }
    }

    #[test]
    fn identity_superchannel_choi_is_maximally_entangled() {
        let id = SuperchannelChoi::identity();
        let mut expect = CMatrix::zeros(16, 16);
        for k in 0..4 {
            for l in 0..4 {
                expect[(k * 4 + k, l * 4 + l)] = c(0.25, 0.0);
            }
        }
        assert!(max_abs_diff(id.matrix(), &expect) < 1e-15);
    }

    #[test]
    fn mixture_is_entrywise_average() {
        let a = GenExtremeSuperchannel::random(1)
            .circuit_to_kraus()
            .unwrap()
            .to_choi();
        let b = GenExtremeSuperchannel::random(2)
            .circuit_to_kraus()
            .unwrap()
            .to_choi();
        let mix = SuperchannelChoi::mixture(&[0.5, 0.5], &[a.clone(), b.clone()]).unwrap();
        let avg = (a.matrix() + b.matrix()) * c(0.5, 0.0);
        assert!(max_abs_diff(mix.matrix(), &avg) < 1e-15);
        assert!(SuperchannelChoi::new(mix.matrix().clone()).is_ok());
        assert!(trace_distance_matrices(mix.matrix(), a.matrix()).unwrap() > 0.0);
        assert!(SuperchannelChoi::mixture(&[0.7, 0.7], &[a, b]).is_err());
    }

    #[test]
    fn choi_validation_rejects_non_psd() {
        let mut m = SuperchannelChoi::identity().matrix().clone();
        m[(1, 1)] = c(-0.1, 0.0);
        assert!(SuperchannelChoi::new(m).is_err());
        assert!(SuperchannelChoi::new_unchecked(linalg::identity(4)).is_err());
    }
}
