//! GRAPE pulse synthesis for a weakly coupled spin register.
//!
//! Drift `H = Σ π ν_i σ_z^i + Σ_{i<j} (π/2) J_ij σ_z^i σ_z^j` (frequencies in
//! Hz, hence angular units after the π factors), independent x/y controls
//! `π (u_x σ_x^i + u_y σ_y^i)` per spin, piecewise constant over equal slices.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, SpectralExp, C64};
use crate::optim::{self, MinimizeConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct SpinSystem {
    chemical_shifts: Vec<f64>,
    j_couplings: BTreeMap<(usize, usize), f64>,
}

impl SpinSystem {
    pub fn new(
        chemical_shifts: Vec<f64>,
        j_couplings: BTreeMap<(usize, usize), f64>,
    ) -> Result<Self> {
        let n = chemical_shifts.len();
        if n == 0 {
            return Err(Error::InvalidArgument(
                "a spin system needs at least one spin".into(),
            ));
        }
        if n > 6 {
            return Err(Error::InvalidArgument(format!(
                "{n} spins exceed the dense simulator"
            )));
        }
        for &(i, j) in j_couplings.keys() {
            if i >= j || j >= n {
                return Err(Error::InvalidArgument(format!(
                    "coupling ({i}, {j}) must satisfy i < j < {n}"
                )));
            }
        }
        if chemical_shifts
            .iter()
            .chain(j_couplings.values())
            .any(|v| !v.is_finite())
        {
            return Err(Error::InvalidArgument("non-finite spin parameter".into()));
        }
        Ok(Self {
            chemical_shifts,
            j_couplings,
        })
    }

    /// The four ¹³C spins of trans-crotonic acid.
    pub fn trans_crotonic_acid() -> Self {
        let shifts = vec![-1707.1, -14560.6, -12330.4, -16765.2];
        let j = [
            ((0, 1), 41.64),
            ((0, 2), 1.45),
            ((0, 3), 7.04),
            ((1, 2), 69.69),
            ((1, 3), 1.16),
            ((2, 3), 72.35),
        ];
        Self::new(shifts, j.into_iter().collect()).expect("valid constants")
    }

    /// Restriction to the listed spins, in the given order.
    pub fn subsystem(&self, spins: &[usize]) -> Result<Self> {
        if spins.iter().any(|&s| s >= self.n_spins()) {
            return Err(Error::InvalidArgument(format!(
                "spin index out of range in {spins:?}"
            )));
        }
        let shifts = spins.iter().map(|&s| self.chemical_shifts[s]).collect();
        let mut j = BTreeMap::new();
        for (a, &sa) in spins.iter().enumerate() {
            for (b, &sb) in spins.iter().enumerate().skip(a + 1) {
                let key = (sa.min(sb), sa.max(sb));
                if let Some(&v) = self.j_couplings.get(&key) {
                    j.insert((a, b), v);
                }
            }
        }
        Self::new(shifts, j)
    }

    pub fn n_spins(&self) -> usize {
        self.chemical_shifts.len()
    }

    pub fn dim(&self) -> usize {
        1 << self.n_spins()
    }

    pub fn chemical_shifts(&self) -> &[f64] {
        &self.chemical_shifts
    }

    pub fn j_couplings(&self) -> &BTreeMap<(usize, usize), f64> {
        &self.j_couplings
    }
}

/// `σ_z` eigenvalue of spin `i` in basis state `b` (spin 0 most significant).
fn z_sign(b: usize, i: usize, n: usize) -> f64 {
    if (b >> (n - 1 - i)) & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Diagonal drift Hamiltonian in rad/s.
pub fn internal_hamiltonian(sys: &SpinSystem) -> CMatrix {
    let n = sys.n_spins();
    let d = sys.dim();
    let mut h = CMatrix::zeros(d, d);
    for b in 0..d {
        let mut e = 0.0;
        for (i, nu) in sys.chemical_shifts.iter().enumerate() {
            e += std::f64::consts::PI * nu * z_sign(b, i, n);
        }
        for (&(i, j), jij) in &sys.j_couplings {
            e += std::f64::consts::FRAC_PI_2 * jij * z_sign(b, i, n) * z_sign(b, j, n);
        }
        h[(b, b)] = c(e, 0.0);
    }
    h
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlPulse {
    pub n_slices: usize,
    #[serde(rename = "slice_duration_s")]
    pub slice_duration: f64,
    /// `[slice][spin] = [u_x, u_y]` in Hz.
    #[serde(rename = "amplitudes_hz")]
    pub amplitudes: Vec<Vec<[f64; 2]>>,
}

impl ControlPulse {
    pub fn new(slice_duration: f64, amplitudes: Vec<Vec<[f64; 2]>>) -> Result<Self> {
        let p = Self {
            n_slices: amplitudes.len(),
            slice_duration,
            amplitudes,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn zero(n_slices: usize, slice_duration: f64, n_spins: usize) -> Result<Self> {
        Self::new(slice_duration, vec![vec![[0.0; 2]; n_spins]; n_slices])
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_slices == 0 || self.amplitudes.len() != self.n_slices {
            return Err(Error::InvalidArgument(format!(
                "pulse declares {} slices but carries {}",
                self.n_slices,
                self.amplitudes.len()
            )));
        }
        if self.slice_duration.is_nan()
            || self.slice_duration <= 0.0
            || !self.slice_duration.is_finite()
        {
            return Err(Error::InvalidArgument(
                "slice duration must be positive".into(),
            ));
        }
        let spins = self.amplitudes[0].len();
        if self.amplitudes.iter().any(|s| s.len() != spins) {
            return Err(Error::InvalidArgument(
                "every slice needs the same spin count".into(),
            ));
        }
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        self.n_slices as f64 * self.slice_duration
    }

    pub fn n_spins(&self) -> usize {
        self.amplitudes[0].len()
    }

    #[cfg(test)]
    fn flat(&self) -> Vec<f64> {
        self.amplitudes
            .iter()
            .flatten()
            .flatten()
            .copied()
            .collect()
    }

    fn from_flat(x: &[f64], n_slices: usize, n_spins: usize, slice_duration: f64) -> Self {
        let amplitudes = (0..n_slices)
            .map(|k| {
                (0..n_spins)
                    .map(|s| {
                        let o = (k * n_spins + s) * 2;
                        [x[o], x[o + 1]]
                    })
                    .collect()
            })
            .collect();
        Self {
            n_slices,
            slice_duration,
            amplitudes,
        }
    }
}

fn spin_operators(n: usize) -> Vec<[CMatrix; 2]> {
    (0..n)
        .map(|i| {
            [
                linalg::embed_operator(&linalg::pauli_x(), &[i], n).expect("index in range"),
                linalg::embed_operator(&linalg::pauli_y(), &[i], n).expect("index in range"),
            ]
        })
        .collect()
}

fn check_pulse(sys: &SpinSystem, pulse: &ControlPulse) -> Result<()> {
    pulse.validate()?;
    if pulse.n_spins() != sys.n_spins() {
        return Err(Error::DimensionMismatch(format!(
            "pulse drives {} spins, system has {}",
            pulse.n_spins(),
            sys.n_spins()
        )));
    }
    Ok(())
}

fn slice_hamiltonian(h0: &CMatrix, ops: &[[CMatrix; 2]], amps: &[[f64; 2]], scale: f64) -> CMatrix {
    let mut h = h0.clone();
    for (op, u) in ops.iter().zip(amps) {
        h += &op[0] * c(std::f64::consts::PI * scale * u[0], 0.0);
        h += &op[1] * c(std::f64::consts::PI * scale * u[1], 0.0);
    }
    h
}

/// `U = Π_k exp(−i Δt H_k)`, later slices to the left.
pub fn propagate(sys: &SpinSystem, pulse: &ControlPulse) -> Result<CMatrix> {
    check_pulse(sys, pulse)?;
    let h0 = internal_hamiltonian(sys);
    let ops = spin_operators(sys.n_spins());
    let coeff = c(0.0, -pulse.slice_duration);
    Ok(pulse
        .amplitudes
        .iter()
        .fold(linalg::identity(sys.dim()), |u, amps| {
            SpectralExp::new(&slice_hamiltonian(&h0, &ops, amps, 1.0), coeff).into_value() * u
        }))
}

/// `|Tr(U_t† U)|² / d²`.
pub fn gate_fidelity(u_target: &CMatrix, u_actual: &CMatrix) -> Result<f64> {
    if u_target.shape() != u_actual.shape() || !u_target.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "cannot compare {}x{} with {}x{}",
            u_target.nrows(),
            u_target.ncols(),
            u_actual.nrows(),
            u_actual.ncols()
        )));
    }
    let d = u_target.nrows() as f64;
    let tau: C64 = u_target
        .adjoint()
        .component_mul(&u_actual.transpose())
        .sum();
    Ok((tau.norm_sqr() / (d * d)).min(1.0))
}

/// Fidelity and its exact gradient with respect to every amplitude (Hz),
/// flattened as `[slice][spin][x, y]`. Forward and backward partial
/// products are cached so the cost is linear in the slice count.
pub fn fidelity_and_gradient(
    sys: &SpinSystem,
    u_target: &CMatrix,
    pulse: &ControlPulse,
    scale: f64,
) -> Result<(f64, Vec<f64>)> {
    check_pulse(sys, pulse)?;
    let d = sys.dim();
    if u_target.shape() != (d, d) {
        return Err(Error::DimensionMismatch(format!(
            "target must be {d}x{d} for {} spins",
            sys.n_spins()
        )));
    }
    let h0 = internal_hamiltonian(sys);
    let ops = spin_operators(sys.n_spins());
    let coeff = c(0.0, -pulse.slice_duration);
    let slices: Vec<SpectralExp> = pulse
        .amplitudes
        .iter()
        .map(|a| SpectralExp::new(&slice_hamiltonian(&h0, &ops, a, scale), coeff))
        .collect();
    let n = slices.len();
    // forward[k] = U_k … U_1 (forward[0] = 1); backward[k] = U_t† U_N … U_{k+1}.
    let mut forward = Vec::with_capacity(n + 1);
    forward.push(linalg::identity(d));
    for s in &slices {
        let next = s.value() * forward.last().expect("nonempty");
        forward.push(next);
    }
    let mut backward = vec![CMatrix::zeros(d, d); n + 1];
    backward[n] = u_target.adjoint();
    for k in (0..n).rev() {
        backward[k] = &backward[k + 1] * slices[k].value();
    }
    let tau = linalg::trace(&backward[0]);
    let dd = (d * d) as f64;
    let fid = tau.norm_sqr() / dd;

    let spins = sys.n_spins();
    let mut grad = vec![0.0; n * spins * 2];
    for k in 0..n {
        let m = &forward[k] * &backward[k + 1];
        let y = slices[k].trace_pullback(&m);
        for (s, op) in ops.iter().enumerate() {
            for (axis, sigma) in op.iter().enumerate() {
                let dtau = linalg::trace(&(&y * sigma)) * c(std::f64::consts::PI * scale, 0.0);
                grad[(k * spins + s) * 2 + axis] = 2.0 * (tau.conj() * dtau).re / dd;
            }
        }
    }
    Ok((fid, grad))
}

/// Amplitude scalings averaged over by the robust objective.
pub const RF_SCALES: [f64; 3] = [0.95, 1.0, 1.05];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrapeConfig {
    pub n_slices: usize,
    /// Total pulse length in seconds.
    pub duration: f64,
    pub target_fidelity: f64,
    pub max_iters: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Spread of the random initial amplitudes, relative to each spin's
    /// offset frequency (or 1/duration if larger).
    pub init_scale: f64,
    /// Average the fidelity over [`RF_SCALES`].
    pub robust: bool,
}

impl Default for GrapeConfig {
    fn default() -> Self {
        Self {
            n_slices: 100,
            duration: 0.02,
            target_fidelity: 0.995,
            max_iters: 500,
            restarts: 3,
            seed: 0,
            init_scale: 0.3,
            robust: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrapeResult {
    pub pulse: ControlPulse,
    pub fidelity: f64,
    pub converged: bool,
    /// Fidelity after each accepted iteration of the winning run, starting
    /// from the initial pulse.
    pub history: Vec<f64>,
}

impl GrapeResult {
    pub fn history_csv(&self) -> String {
        let mut s = String::from("iter,fidelity\n");
        for (i, f) in self.history.iter().enumerate() {
            s.push_str(&format!("{i},{f}\n"));
        }
        s
    }
}

fn objective(
    sys: &SpinSystem,
    u_target: &CMatrix,
    pulse: &ControlPulse,
    robust: bool,
) -> (f64, Vec<f64>) {
    let scales: &[f64] = if robust { &RF_SCALES } else { &[1.0] };
    let mut f = 0.0;
    let mut g = vec![0.0; pulse.n_slices * pulse.n_spins() * 2];
    for &s in scales {
        let (fs, gs) = fidelity_and_gradient(sys, u_target, pulse, s).expect("shapes checked");
        f += fs / scales.len() as f64;
        g.iter_mut()
            .zip(gs)
            .for_each(|(a, b)| *a += s * b / scales.len() as f64);
    }
    (f, g)
}

/// Gradient-ascent search for a pulse implementing `u_target` up to a
/// global phase. Each restart begins from small random amplitudes.
pub fn grape_optimize(
    sys: &SpinSystem,
    u_target: &CMatrix,
    cfg: &GrapeConfig,
) -> Result<GrapeResult> {
    let d = sys.dim();
    if u_target.shape() != (d, d) {
        return Err(Error::DimensionMismatch(format!(
            "target must be {d}x{d} for {} spins",
            sys.n_spins()
        )));
    }
    linalg::ensure_unitary(u_target, 1e-9, "target unitary")?;
    if cfg.n_slices == 0 || cfg.duration.is_nan() || cfg.duration <= 0.0 || cfg.restarts == 0 {
        return Err(Error::InvalidArgument(
            "GRAPE needs at least one slice, one restart and a positive duration".into(),
        ));
    }
    let dt = cfg.duration / cfg.n_slices as f64;
    let spins = sys.n_spins();
    // Each spin's amplitudes are optimized in units of its own offset
    // (at least 1/duration), which keeps strongly detuned spins from
    // flattening the landscape along their control directions.
    let units: Vec<f64> = (0..cfg.n_slices * spins * 2)
        .map(|k| {
            sys.chemical_shifts[(k / 2) % spins]
                .abs()
                .max(1.0 / cfg.duration)
        })
        .collect();
    let mcfg = MinimizeConfig {
        max_iters: cfg.max_iters,
        f_target: 1.0 - cfg.target_fidelity,
        grad_tol: 1e-12,
        ..Default::default()
    };
    let mut best: Option<GrapeResult> = None;
    for r in 0..cfg.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(r as u64 + 1);
        let x0: Vec<f64> = (0..cfg.n_slices * spins * 2)
            .map(|_| cfg.init_scale * linalg::gaussian(&mut rng))
            .collect();
        let to_pulse = |x: &[f64]| {
            let hz: Vec<f64> = x.iter().zip(&units).map(|(v, u)| v * u).collect();
            ControlPulse::from_flat(&hz, cfg.n_slices, spins, dt)
        };
        let m = optim::lbfgs(
            |x| {
                let (f, g) = objective(sys, u_target, &to_pulse(x), cfg.robust);
                (1.0 - f, g.iter().zip(&units).map(|(v, u)| -v * u).collect())
            },
            &x0,
            &mcfg,
        );
        let pulse = to_pulse(&m.x);
        let fidelity = gate_fidelity(u_target, &propagate(sys, &pulse)?)?;
        let result = GrapeResult {
            converged: fidelity >= cfg.target_fidelity,
            fidelity,
            history: m.trace.iter().map(|f| 1.0 - f).collect(),
            pulse,
        };
        let done = result.converged;
        if best.as_ref().is_none_or(|b| result.fidelity > b.fidelity) {
            best = Some(result);
        }
        if done {
            break;
        }
    }
    Ok(best.expect("restarts >= 1"))
}

/// Controlled-NOT with the first qubit as control.
pub fn cnot() -> CMatrix {
    let mut u = CMatrix::zeros(4, 4);
    for (r, col) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
        u[(r, col)] = c(1.0, 0.0);
    }
    u
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;

    fn single(nu: f64) -> SpinSystem {
        SpinSystem::new(vec![nu], BTreeMap::new()).unwrap()
    }

    #[test]
    fn drift_matches_scalar_sum() {
        let sys = SpinSystem::trans_crotonic_acid();
        let h = internal_hamiltonian(&sys);
        assert_eq!(h.shape(), (16, 16));
        assert!(linalg::max_abs_diff(&h, &CMatrix::from_diagonal(&h.diagonal())) == 0.0);
        let nu = [-1707.1, -14560.6, -12330.4, -16765.2];
        let j = [41.64, 1.45, 7.04, 69.69, 1.16, 72.35];
        let expect = std::f64::consts::PI * nu.iter().sum::<f64>()
            + std::f64::consts::FRAC_PI_2 * j.iter().sum::<f64>();
        assert!((h[(0, 0)].re - expect).abs() < 1e-9);
        let one = internal_hamiltonian(&single(100.0));
        assert!((one[(0, 0)].re - 100.0 * std::f64::consts::PI).abs() < 1e-12);
        assert!((one[(1, 1)].re + 100.0 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn system_validation_and_subsystems() {
        assert!(SpinSystem::new(vec![], BTreeMap::new()).is_err());
        assert!(SpinSystem::new(vec![1.0, 2.0], [((1, 0), 3.0)].into_iter().collect()).is_err());
        let sub = SpinSystem::trans_crotonic_acid()
            .subsystem(&[0, 1])
            .unwrap();
        assert_eq!(sub.chemical_shifts(), &[-1707.1, -14560.6]);
        assert_eq!(sub.j_couplings().get(&(0, 1)), Some(&41.64));
        assert_eq!(sub.j_couplings().len(), 1);
    }

    #[test]
    fn free_evolution_is_diagonal_exponential() {
        let sys = SpinSystem::trans_crotonic_acid();
        let t = 1.3e-3;
        let u = propagate(&sys, &ControlPulse::zero(1, t, 4).unwrap()).unwrap();
        let h = internal_hamiltonian(&sys);
        for b in 0..16 {
            let expect = C64::from_polar(1.0, -t * h[(b, b)].re);
            assert!((u[(b, b)] - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn rabi_pi_rotation() {
        let sys = single(0.0);
        let t = 0.01;
        let ux = 1.0 / (2.0 * t);
        let p = ControlPulse::new(t / 4.0, vec![vec![[ux, 0.0]]; 4]).unwrap();
        let u = propagate(&sys, &p).unwrap();
        assert!((gate_fidelity(&linalg::pauli_x(), &u).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn splitting_slices_is_harmless() {
        let sys = SpinSystem::trans_crotonic_acid()
            .subsystem(&[0, 1])
            .unwrap();
        let a = [[120.0, -40.0], [15.0, 70.0]];
        let whole = ControlPulse::new(2e-4, vec![a.to_vec()]).unwrap();
        let halves = ControlPulse::new(1e-4, vec![a.to_vec(), a.to_vec()]).unwrap();
        let d = max_abs_diff(
            &propagate(&sys, &whole).unwrap(),
            &propagate(&sys, &halves).unwrap(),
        );
        assert!(d < 1e-12);
    }

    #[test]
    fn propagators_are_unitary() {
        let sys = SpinSystem::trans_crotonic_acid();
        let mut rng = ChaCha8Rng::seed_from_u64(70);
        let amps = (0..10)
            .map(|_| {
                (0..4)
                    .map(|_| {
                        [
                            500.0 * linalg::gaussian(&mut rng),
                            500.0 * linalg::gaussian(&mut rng),
                        ]
                    })
                    .collect()
            })
            .collect();
        let p = ControlPulse::new(1e-4, amps).unwrap();
        assert!(linalg::unitarity_error(&propagate(&sys, &p).unwrap()) < 1e-9);
        let bad = ControlPulse::zero(3, 1e-4, 2).unwrap();
        assert!(propagate(&sys, &bad).is_err());
    }

    #[test]
    fn fidelity_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        let u = linalg::haar_unitary(4, &mut rng);
        assert!((gate_fidelity(&u, &u).unwrap() - 1.0).abs() < 1e-12);
        let phased = &u * C64::from_polar(1.0, 0.7);
        assert!(
            (gate_fidelity(&u, &phased).unwrap() - gate_fidelity(&u, &u).unwrap()).abs() < 1e-12
        );
        assert!(gate_fidelity(&linalg::identity(2), &linalg::pauli_x()).unwrap() < 1e-15);
        assert!(gate_fidelity(&linalg::identity(2), &u).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(72);
        for sys in [
            single(-1707.1),
            SpinSystem::trans_crotonic_acid()
                .subsystem(&[0, 1])
                .unwrap(),
        ] {
            let n = sys.n_spins();
            let mut random_pulse = |sigma: f64| {
                let amps = (0..10)
                    .map(|_| {
                        (0..n)
                            .map(|_| {
                                [
                                    sigma * linalg::gaussian(&mut rng),
                                    sigma * linalg::gaussian(&mut rng),
                                ]
                            })
                            .collect()
                    })
                    .collect();
                ControlPulse::new(2e-4, amps).unwrap()
            };
            // A nearby target keeps the fidelity away from zero so the
            // difference quotient is resolved above rounding noise.
            let target = propagate(&sys, &random_pulse(300.0)).unwrap();
            let pulse = random_pulse(300.0);
            let (_, g) = fidelity_and_gradient(&sys, &target, &pulse, 1.0).unwrap();
            let x = pulse.flat();
            let fd = optim::fd_gradient(
                |y| {
                    let p = ControlPulse::from_flat(y, 10, n, 2e-4);
                    gate_fidelity(&target, &propagate(&sys, &p).unwrap()).unwrap()
                },
                &x,
                1e-6,
            );
            let scale = fd.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            let err = g
                .iter()
                .zip(&fd)
                .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(err <= 1e-3 * scale, "relative error {}", err / scale);
        }
    }

    #[test]
    fn free_evolution_target_is_kept() {
        let sys = SpinSystem::trans_crotonic_acid()
            .subsystem(&[0, 1])
            .unwrap();
        let cfg = GrapeConfig {
            n_slices: 20,
            duration: 0.005,
            init_scale: 1e-3,
            target_fidelity: 0.99999,
            max_iters: 50,
            ..Default::default()
        };
        let target = propagate(&sys, &ControlPulse::zero(1, cfg.duration, 2).unwrap()).unwrap();
        let r = grape_optimize(&sys, &target, &cfg).unwrap();
        assert!(r.fidelity >= 0.9999);
    }

    #[test]
    fn single_spin_half_pi_rotation() {
        let sys = single(-1707.1);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let target = linalg::from_rows(&[[(h, 0.0), (0.0, -h)], [(0.0, -h), (h, 0.0)]]);
        let cfg = GrapeConfig {
            n_slices: 20,
            duration: 0.002,
            target_fidelity: 0.9999,
            max_iters: 200,
            ..Default::default()
        };
        let r = grape_optimize(&sys, &target, &cfg).unwrap();
        assert!(r.fidelity >= 0.9999, "{}", r.fidelity);
        assert!(r.history.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn history_csv_layout() {
        let r = GrapeResult {
            pulse: ControlPulse::zero(1, 1e-3, 1).unwrap(),
            fidelity: 0.5,
            converged: false,
            history: vec![0.25, 0.5],
        };
        assert_eq!(r.history_csv(), "iter,fidelity\n0,0.25\n1,0.5\n");
    }
}
