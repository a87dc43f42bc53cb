//! Amplitude-damping noise and an entanglement-assisted three-qubit code.
//!
//! Register `(q1, q2, q3)`: q1 carries the logical state, `(q2, q3)` start in
//! `|Φ+⟩`. Alice encodes on `(q1, q2)`, one of q1/q2 is damped in transit,
//! and Bob decodes on all three qubits (q3 never sees noise) and keeps q1.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, SpectralExp, C64, I, ONE};
use crate::optim::{self, MinimizeConfig};
use crate::qcore::KrausChannel;

pub const CODE_UNITARY_TOL: f64 = 1e-9;
const ENC_PARAMS: usize = 16;
const DEC_PARAMS: usize = 64;

fn check_lambda(lambda: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidArgument(format!(
            "damping parameter must lie in [0, 1], got {lambda}"
        )));
    }
    Ok(())
}

/// `K₀ = diag(1, √(1−λ))`, `K₁ = √λ |0⟩⟨1|`.
pub fn ad_kraus(lambda: f64) -> Result<KrausChannel> {
    check_lambda(lambda)?;
    let k0 = linalg::from_rows(&[
        [(1.0, 0.0), (0.0, 0.0)],
        [(0.0, 0.0), ((1.0 - lambda).sqrt(), 0.0)],
    ]);
    let k1 = linalg::from_rows(&[[(0.0, 0.0), (lambda.sqrt(), 0.0)], [(0.0, 0.0), (0.0, 0.0)]]);
    KrausChannel::new(vec![k0, k1])
}

/// `((1 + √(1−λ)) / 2)²`, the entanglement fidelity of bare damping.
pub fn uncorrected_fidelity(lambda: f64) -> f64 {
    let r = 0.5 * (1.0 + (1.0 - lambda).sqrt());
    r * r
}

/// `⟨ω|(Λ⊗1)(|ω⟩⟨ω|)|ω⟩ = Σ |Tr K_i|² / 4` for a qubit channel.
pub fn entanglement_fidelity(ch: &KrausChannel) -> Result<f64> {
    if ch.dim_in() != 2 || ch.dim_out() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "entanglement fidelity is defined here for qubit channels, got {} -> {}",
            ch.dim_in(),
            ch.dim_out()
        )));
    }
    Ok(ch
        .kraus()
        .iter()
        .map(|k| linalg::trace(k).norm_sqr())
        .sum::<f64>()
        / 4.0)
}

/// Probabilities that the damping hits q1 or q2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub p_first: f64,
    pub p_second: f64,
}

impl NoiseModel {
    pub fn new(p_first: f64, p_second: f64) -> Result<Self> {
        let ok = |p: f64| (0.0..=1.0).contains(&p);
        if !ok(p_first) || !ok(p_second) || (p_first + p_second - 1.0).abs() > 1e-12 {
            return Err(Error::Invariant(format!(
                "noise location probabilities ({p_first}, {p_second}) must be a distribution"
            )));
        }
        Ok(Self { p_first, p_second })
    }

    pub fn first() -> Self {
        Self {
            p_first: 1.0,
            p_second: 0.0,
        }
    }

    pub fn second() -> Self {
        Self {
            p_first: 0.0,
            p_second: 1.0,
        }
    }

    pub fn equal() -> Self {
        Self {
            p_first: 0.5,
            p_second: 0.5,
        }
    }

    fn locations(&self) -> impl Iterator<Item = (usize, f64)> {
        [(0, self.p_first), (1, self.p_second)]
            .into_iter()
            .filter(|&(_, p)| p > 0.0)
    }
}

/// Encoder on Alice's two qubits and decoder on all three.
#[derive(Debug, Clone, PartialEq)]
pub struct EbitCode {
    encoder: CMatrix,
    decoder: CMatrix,
    noise: NoiseModel,
}

impl EbitCode {
    pub fn new(encoder: CMatrix, decoder: CMatrix, noise: NoiseModel) -> Result<Self> {
        if encoder.shape() != (4, 4) || decoder.shape() != (8, 8) {
            return Err(Error::DimensionMismatch(
                "encoder must be 4x4 and decoder 8x8".into(),
            ));
        }
        linalg::ensure_unitary(&encoder, CODE_UNITARY_TOL, "encoder")?;
        linalg::ensure_unitary(&decoder, CODE_UNITARY_TOL, "decoder")?;
        Ok(Self {
            encoder,
            decoder,
            noise,
        })
    }

    /// Encoder = decoder = identity.
    pub fn trivial(noise: NoiseModel) -> Self {
        Self {
            encoder: linalg::identity(4),
            decoder: linalg::identity(8),
            noise,
        }
    }

    pub fn encoder(&self) -> &CMatrix {
        &self.encoder
    }

    /// The encoder as an operator on all three qubits.
    pub fn encoder_full(&self) -> CMatrix {
        linalg::kron(&self.encoder, &linalg::identity(2))
    }

    pub fn decoder(&self) -> &CMatrix {
        &self.decoder
    }

    pub fn noise(&self) -> NoiseModel {
        self.noise
    }

    pub fn with_noise(&self, noise: NoiseModel) -> Self {
        Self {
            noise,
            ..self.clone()
        }
    }
}

/// `|ψ⟩ ↦ |ψ⟩ ⊗ |Φ+⟩` as an 8×2 isometry.
fn ebit_isometry() -> CMatrix {
    let h = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let mut j = CMatrix::zeros(8, 2);
    for s in 0..2 {
        j[(s * 4, s)] = h;
        j[(s * 4 + 3, s)] = h;
    }
    j
}

fn damping_on(op: &CMatrix, qubit: usize) -> CMatrix {
    linalg::embed_operator(op, &[qubit], 3).expect("qubit index in range")
}

/// Rows `x·4 + k` of an 8×2 map: the q1 block for ancilla outcome `k`.
fn q1_block(m: &CMatrix, k: usize) -> CMatrix {
    CMatrix::from_fn(2, 2, |x, s| m[(x * 4 + k, s)])
}

fn kraus_parts(
    enc8: &CMatrix,
    dec: &CMatrix,
    noise: NoiseModel,
    lambda: f64,
) -> Result<Vec<CMatrix>> {
    let ad = ad_kraus(lambda)?;
    let front = enc8 * ebit_isometry();
    let mut out = Vec::new();
    for (q, p) in noise.locations() {
        for a in ad.kraus() {
            let m = dec * damping_on(a, q) * &front * c(p.sqrt(), 0.0);
            out.extend((0..4).map(|k| q1_block(&m, k)));
        }
    }
    Ok(out)
}

/// Effective logical channel on q1.
pub fn corrected_channel(code: &EbitCode, lambda: f64) -> Result<KrausChannel> {
    KrausChannel::new(kraus_parts(
        &code.encoder_full(),
        &code.decoder,
        code.noise,
        lambda,
    )?)
}

fn code_from_params(x: &[f64]) -> (SpectralExp, SpectralExp) {
    let he = linalg::hermitian_from_params(&x[..ENC_PARAMS], 4);
    let hd = linalg::hermitian_from_params(&x[ENC_PARAMS..], 8);
    (SpectralExp::new(&he, I), SpectralExp::new(&hd, I))
}

/// `1 − F_e` and its gradient in the generator parameters.
fn infidelity(x: &[f64], noise: NoiseModel, lambda: f64) -> (f64, Vec<f64>) {
    let (e, d) = code_from_params(x);
    let ad = ad_kraus(lambda).expect("lambda checked by caller");
    let j = ebit_isometry();
    let enc8 = linalg::kron(e.value(), &linalg::identity(2));
    let front = &enc8 * &j;
    let mut fid = 0.0;
    let mut gd = CMatrix::zeros(8, 8);
    let mut ge = CMatrix::zeros(4, 4);
    for (q, p) in noise.locations() {
        let sp = c(p.sqrt(), 0.0);
        for a in ad.kraus() {
            let a8 = damping_on(a, q);
            let y = &a8 * &front * sp;
            let m = d.value() * &y;
            let da = d.value() * &a8 * sp;
            for k in 0..4 {
                let t: C64 = (0..2).map(|s| m[(s * 4 + k, s)]).sum();
                fid += t.norm_sqr() / 4.0;
                // P_k selects rows x·4+k; Tr F = Tr(Y P_k D) = Tr(J P_k D A (E ⊗ 1)).
                let mut pk = CMatrix::zeros(2, 8);
                pk[(0, k)] = ONE;
                pk[(1, 4 + k)] = ONE;
                let yp = &y * &pk;
                gd += yp.adjoint() * (t * c(0.5, 0.0));
                let z = &j * &pk * &da;
                let z12 = linalg::partial_trace(&z, &[4, 2], &[0]).expect("8x8");
                ge += z12.adjoint() * (t * c(0.5, 0.0));
            }
        }
    }
    let mut grad = linalg::hermitian_param_gradient(&e.real_pullback(&ge));
    grad.extend(linalg::hermitian_param_gradient(&d.real_pullback(&gd)));
    grad.iter_mut().for_each(|g| *g = -*g);
    (1.0 - fid, grad)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QecConfig {
    /// Random starts in addition to the trivial code.
    pub restarts: usize,
    pub max_iters: usize,
    pub seed: u64,
    pub noise: NoiseModel,
}

impl Default for QecConfig {
    fn default() -> Self {
        Self {
            restarts: 4,
            max_iters: 1000,
            seed: 0,
            noise: NoiseModel::equal(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CodeSearch {
    pub code: EbitCode,
    pub fidelity: f64,
    pub converged: bool,
    params: Vec<f64>,
}

fn search_from(x0: Vec<f64>, lambda: f64, cfg: &QecConfig) -> (Vec<f64>, f64, bool) {
    let mcfg = MinimizeConfig {
        max_iters: cfg.max_iters,
        grad_tol: 1e-9,
        ..Default::default()
    };
    let m = optim::lbfgs(|x| infidelity(x, cfg.noise, lambda), &x0, &mcfg);
    (m.x, 1.0 - m.f, m.iters < cfg.max_iters)
}

fn finish(x: Vec<f64>, lambda: f64, converged: bool, noise: NoiseModel) -> Result<CodeSearch> {
    let (e, d) = code_from_params(&x);
    let code = EbitCode::new(e.into_value(), d.into_value(), noise)?;
    let fidelity = entanglement_fidelity(&corrected_channel(&code, lambda)?)?.clamp(0.0, 1.0);
    Ok(CodeSearch {
        code,
        fidelity,
        converged,
        params: x,
    })
}

fn optimize_with_starts(lambda: f64, cfg: &QecConfig, extra: &[Vec<f64>]) -> Result<CodeSearch> {
    check_lambda(lambda)?;
    let mut starts = vec![vec![0.0; ENC_PARAMS + DEC_PARAMS]];
    starts.extend(extra.iter().cloned());
    for r in 0..cfg.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(r as u64 + 1);
        starts.push(
            (0..ENC_PARAMS + DEC_PARAMS)
                .map(|_| linalg::gaussian(&mut rng))
                .collect(),
        );
    }
    let run = |x0: &Vec<f64>| search_from(x0.clone(), lambda, cfg);
    #[cfg(feature = "parallel")]
    let runs: Vec<_> = starts.par_iter().map(run).collect();
    #[cfg(not(feature = "parallel"))]
    let runs: Vec<_> = starts.iter().map(run).collect();
    let mut best = 0;
    for (i, r) in runs.iter().enumerate() {
        if r.1 > runs[best].1 {
            best = i;
        }
    }
    let (x, _, conv) = runs.into_iter().nth(best).expect("nonempty");
    finish(x, lambda, conv, cfg.noise)
}

/// Best code found for damping `lambda`; the trivial code is always one of
/// the starting points, so the result never falls below it.
pub fn optimize_code(lambda: f64, cfg: &QecConfig) -> Result<CodeSearch> {
    optimize_with_starts(lambda, cfg, &[])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub lambda: f64,
    pub corrected: f64,
    pub uncorrected: f64,
    pub converged: bool,
}

/// Corrected and bare fidelities over `lambdas`. Each point is also seeded
/// with the codes found at its neighbours (one forward and one backward
/// sweep), which keeps the curve free of isolated local-optimum dips.
pub fn fidelity_curve(lambdas: &[f64], cfg: &QecConfig) -> Result<Vec<CurvePoint>> {
    for &l in lambdas {
        check_lambda(l)?;
    }
    let mut found: Vec<CodeSearch> = Vec::with_capacity(lambdas.len());
    for (i, &l) in lambdas.iter().enumerate() {
        let warm: Vec<Vec<f64>> = if i > 0 {
            vec![found[i - 1].params.clone()]
        } else {
            vec![]
        };
        found.push(optimize_with_starts(l, cfg, &warm)?);
    }
    for i in (0..lambdas.len().saturating_sub(1)).rev() {
        let (x, f, conv) = search_from(found[i + 1].params.clone(), lambdas[i], cfg);
        if f > found[i].fidelity {
            found[i] = finish(x, lambdas[i], conv, cfg.noise)?;
        }
    }
    Ok(lambdas
        .iter()
        .zip(found)
        .map(|(&lambda, s)| CurvePoint {
            lambda,
            corrected: s.fidelity,
            uncorrected: uncorrected_fidelity(lambda),
            converged: s.converged,
        })
        .collect())
}

pub fn curve_csv(points: &[CurvePoint]) -> String {
    let mut s = String::from("lambda,f_corrected,f_uncorrected,converged\n");
    for p in points {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            p.lambda, p.corrected, p.uncorrected, p.converged
        );
    }
    s
}

/// Parses `start:stop:step` (inclusive of `stop` up to rounding).
pub fn parse_lambda_range(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || Error::InvalidArgument(format!("expected start:stop:step, got {spec:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    let (start, stop, step) = (nums[0], nums[1], nums[2]);
    if step.is_nan() || step <= 0.0 || stop < start {
        return Err(bad());
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    (0..=n)
        .map(|k| {
            // Round to suppress binary noise in printed grids.
            let v = ((start + k as f64 * step) * 1e12).round() / 1e12;
            check_lambda(v).map(|_| v)
        })
        .collect()
}
