//! Convex decomposition of a qubit superchannel into gen-extreme parts.
//!
//! Each component is a pair of 8×8 unitaries `exp(iH)` with 64 generator
//! parameters apiece; mixing weights are a softmax over `n − 1` free logits
//! (the first logit is pinned to zero). The search minimizes the squared
//! Frobenius distance between Choi matrices, which is smooth and bounds the
//! trace distance: `d_tr ≤ 2‖·‖_F` on 16×16 matrices.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, SpectralExp, I};
use crate::optim::{self, MinimizeConfig};
use crate::qcore::{self, trace_distance_matrices};
use crate::superchan::{check_simplex, GenExtremeSuperchannel, SuperchannelChoi};

pub const MAX_COMPONENTS: usize = 4;
/// Generator parameters per 8×8 unitary.
pub const PARAMS_PER_UNITARY: usize = 64;

/// Generator coordinates of one 8×8 unitary.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryParams {
    pub thetas: Vec<f64>,
}

impl UnitaryParams {
    pub fn new(thetas: Vec<f64>) -> Result<Self> {
        if thetas.len() != PARAMS_PER_UNITARY {
            return Err(Error::DimensionMismatch(format!(
                "an 8x8 unitary takes {PARAMS_PER_UNITARY} parameters, got {}",
                thetas.len()
            )));
        }
        Ok(Self { thetas })
    }

    pub fn zero() -> Self {
        Self {
            thetas: vec![0.0; PARAMS_PER_UNITARY],
        }
    }

    pub fn unitary(&self) -> CMatrix {
        linalg::unitary_from_params(&self.thetas, 8)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvexDecomposition {
    pub weights: Vec<f64>,
    pub components: Vec<GenExtremeSuperchannel>,
    pub achieved_distance: f64,
    pub converged: bool,
    pub seed: u64,
}

impl ConvexDecomposition {
    /// Builds a decomposition and records its distance to `target`.
    pub fn new(
        weights: Vec<f64>,
        components: Vec<GenExtremeSuperchannel>,
        target: &SuperchannelChoi,
    ) -> Result<Self> {
        let mut d = Self {
            weights,
            components,
            achieved_distance: f64::NAN,
            converged: false,
            seed: 0,
        };
        d.achieved_distance = d.distance_to(target)?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.components.len();
        if n == 0 || n > MAX_COMPONENTS {
            return Err(Error::InvalidArgument(format!(
                "component count must be in 1..={MAX_COMPONENTS}, got {n}"
            )));
        }
        if self.weights.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} weights for {n} components",
                self.weights.len()
            )));
        }
        check_simplex(&self.weights)
    }

    pub fn distance_to(&self, target: &SuperchannelChoi) -> Result<f64> {
        trace_distance_matrices(target.matrix(), self.reconstruct()?.matrix())
    }
}

/// `Σ p_i C(Ŝ_i)`.
pub fn reconstruct(d: &ConvexDecomposition) -> Result<SuperchannelChoi> {
    d.reconstruct()
}

impl ConvexDecomposition {
    pub fn reconstruct(&self) -> Result<SuperchannelChoi> {
        self.validate()?;
        let parts = self
            .components
            .iter()
            .map(|g| Ok(g.circuit_to_kraus()?.to_choi()))
            .collect::<Result<Vec<_>>>()?;
        SuperchannelChoi::mixture(&self.weights, &parts)
    }
}

/// Length of the flat parameter vector for `n` components.
pub fn param_len(n: usize) -> usize {
    n * 2 * PARAMS_PER_UNITARY + n.saturating_sub(1)
}

/// Softmax with the first logit fixed at zero.
fn weights_from_logits(z: &[f64]) -> Vec<f64> {
    let full: Vec<f64> = std::iter::once(0.0).chain(z.iter().copied()).collect();
    let max = full.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = full.iter().map(|v| (v - max).exp()).collect();
    let s: f64 = e.iter().sum();
    let mut p: Vec<f64> = e.iter().map(|v| v / s).collect();
    // Absorb rounding so the weights sum to one as exactly as possible.
    let drift: f64 = 1.0 - p.iter().sum::<f64>();
    let k = p
        .iter()
        .enumerate()
        .fold(0, |best, (i, v)| if *v > p[best] { i } else { best });
    p[k] += drift;
    p
}

struct Decoded {
    weights: Vec<f64>,
    v: Vec<SpectralExp>,
    w: Vec<SpectralExp>,
}

fn decode(x: &[f64], n: usize) -> Result<Decoded> {
    if x.len() != param_len(n) || n == 0 || n > MAX_COMPONENTS {
        return Err(Error::DimensionMismatch(format!(
            "parameter vector of length {} does not match {n} components (expected {})",
            x.len(),
            param_len(n)
        )));
    }
    let mut v = Vec::with_capacity(n);
    let mut w = Vec::with_capacity(n);
    for i in 0..n {
        let base = i * 2 * PARAMS_PER_UNITARY;
        let hv = linalg::hermitian_from_params(&x[base..base + PARAMS_PER_UNITARY], 8);
        let hw = linalg::hermitian_from_params(
            &x[base + PARAMS_PER_UNITARY..base + 2 * PARAMS_PER_UNITARY],
            8,
        );
        v.push(SpectralExp::new(&hv, I));
        w.push(SpectralExp::new(&hw, I));
    }
    let weights = weights_from_logits(&x[n * 2 * PARAMS_PER_UNITARY..]);
    Ok(Decoded { weights, v, w })
}

fn component(v: &CMatrix, w: &CMatrix) -> GenExtremeSuperchannel {
    GenExtremeSuperchannel::new_unchecked(v.clone(), w.clone()).expect("8x8 by construction")
}

fn component_choi(g: &GenExtremeSuperchannel) -> (Vec<CMatrix>, CMatrix) {
    let s = g.kraus_ops();
    let choi = qcore::choi_matrix(&s, 4);
    (s, choi)
}

/// Decomposition encoded by a flat parameter vector (distance filled in
/// against `target`).
pub fn decode_params(
    x: &[f64],
    n: usize,
    target: &SuperchannelChoi,
) -> Result<ConvexDecomposition> {
    let d = decode(x, n)?;
    let components =
        d.v.iter()
            .zip(&d.w)
            .map(|(v, w)| component(v.value(), w.value()))
            .collect();
    ConvexDecomposition::new(d.weights, components, target)
}

fn mixture_matrix(d: &Decoded) -> (Vec<Vec<CMatrix>>, Vec<CMatrix>, CMatrix) {
    let mut kraus = Vec::new();
    let mut chois = Vec::new();
    let mut mix = CMatrix::zeros(16, 16);
    for ((v, w), &p) in d.v.iter().zip(&d.w).zip(&d.weights) {
        let (s, choi) = component_choi(&component(v.value(), w.value()));
        mix += &choi * c(p, 0.0);
        kraus.push(s);
        chois.push(choi);
    }
    (kraus, chois, mix)
}

/// Trace distance between the target and the decomposition encoded by `x`.
pub fn objective(x: &[f64], n: usize, target: &SuperchannelChoi) -> Result<f64> {
    let d = decode(x, n)?;
    let (_, _, mix) = mixture_matrix(&d);
    trace_distance_matrices(target.matrix(), &mix)
}

/// `‖T − C(x)‖_F²` and its gradient.
#[allow(clippy::needless_range_loop)]
pub fn surrogate(x: &[f64], n: usize, target: &SuperchannelChoi) -> Result<(f64, Vec<f64>)> {
    let d = decode(x, n)?;
    let (kraus, chois, mix) = mixture_matrix(&d);
    let r = target.matrix() - &mix;
    let value = r.iter().map(|z| z.norm_sqr()).sum();
    let mut grad = vec![0.0; x.len()];

    for i in 0..n {
        let p = d.weights[i];
        let v = d.v[i].value();
        let w = d.w[i].value();
        let mut gv = CMatrix::zeros(8, 8);
        let mut gw = CMatrix::zeros(8, 8);
        for (a, s) in kraus[i].iter().enumerate() {
            let vec_s = CMatrix::from_fn(16, 1, |idx, _| s[(idx / 4, idx % 4)]);
            let g = (&r * vec_s) * c(-p, 0.0);
            let ga = |bx: usize, cy: usize| g[(bx * 4 + cy, 0)];
            for b in 0..2 {
                for x in 0..2 {
                    for cc in 0..2 {
                        for y in 0..2 {
                            let val = ga(b * 2 + x, cc * 2 + y);
                            for m in 0..4 {
                                gw[(b * 4 + a, cc * 4 + m)] += val * v[(y * 4 + m, x * 4)].conj();
                                gv[(y * 4 + m, x * 4)] += val * w[(b * 4 + a, cc * 4 + m)].conj();
                            }
                        }
                    }
                }
            }
        }
        let base = i * 2 * PARAMS_PER_UNITARY;
        let pv = linalg::hermitian_param_gradient(&d.v[i].real_pullback(&gv));
        let pw = linalg::hermitian_param_gradient(&d.w[i].real_pullback(&gw));
        grad[base..base + PARAMS_PER_UNITARY].copy_from_slice(&pv);
        grad[base + PARAMS_PER_UNITARY..base + 2 * PARAMS_PER_UNITARY].copy_from_slice(&pw);
    }
    let off = n * 2 * PARAMS_PER_UNITARY;
    for j in 1..n {
        let diff = &chois[j] - &mix;
        let tr = linalg::trace(&(&r * diff)).re;
        grad[off + j - 1] = -2.0 * d.weights[j] * tr;
    }
    Ok((value, grad))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Gradient-based search on the Frobenius surrogate.
    Lbfgs,
    /// Derivative-free simplex search on the trace distance itself.
    NelderMead,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecompositionConfig {
    pub restarts: usize,
    pub max_iters: usize,
    /// Trace distance regarded as converged.
    pub tolerance: f64,
    pub seed: u64,
    pub method: Method,
    /// Standard deviation of the random initial generator entries.
    pub init_scale: f64,
}

impl Default for DecompositionConfig {
    fn default() -> Self {
        Self {
            restarts: 4,
            max_iters: 2000,
            tolerance: 1e-4,
            seed: 0,
            method: Method::Lbfgs,
            init_scale: 1.0,
        }
    }
}

fn initial_point(n: usize, restart: usize, cfg: &DecompositionConfig) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(restart as u64 + 1);
    let mut x: Vec<f64> = (0..n * 2 * PARAMS_PER_UNITARY)
        .map(|_| cfg.init_scale * linalg::gaussian(&mut rng))
        .collect();
    x.extend(std::iter::repeat_n(0.0, n.saturating_sub(1)));
    x
}

struct RunOutcome {
    x: Vec<f64>,
    distance: f64,
}

fn single_run(
    n: usize,
    restart: usize,
    target: &SuperchannelChoi,
    cfg: &DecompositionConfig,
) -> Result<RunOutcome> {
    let x0 = initial_point(n, restart, cfg);
    let d0 = objective(&x0, n, target)?;
    let mcfg = MinimizeConfig {
        max_iters: cfg.max_iters,
        f_target: match cfg.method {
            Method::Lbfgs => cfg.tolerance * cfg.tolerance / 4.0,
            Method::NelderMead => cfg.tolerance,
        },
        ..Default::default()
    };
    let found = match cfg.method {
        Method::Lbfgs => {
            optim::lbfgs(
                |x| surrogate(x, n, target).expect("length checked"),
                &x0,
                &mcfg,
            )
            .x
        }
        Method::NelderMead => {
            optim::nelder_mead(
                |x| objective(x, n, target).expect("length checked"),
                &x0,
                0.3,
                &mcfg,
            )
            .x
        }
    };
    let d1 = objective(&found, n, target)?;
    Ok(if d1 <= d0 {
        RunOutcome {
            x: found,
            distance: d1,
        }
    } else {
        RunOutcome {
            x: x0,
            distance: d0,
        }
    })
}

/// Multi-start search for `target ≈ Σ p_i Ŝ_i` with `n_components` parts.
/// Deterministic in `config.seed`, serial or parallel alike.
pub fn decompose(
    target: &SuperchannelChoi,
    n_components: usize,
    config: &DecompositionConfig,
) -> Result<ConvexDecomposition> {
    if n_components == 0 || n_components > MAX_COMPONENTS {
        return Err(Error::InvalidArgument(format!(
            "component count must be in 1..={MAX_COMPONENTS}, got {n_components}"
        )));
    }
    if config.restarts == 0 {
        return Err(Error::InvalidArgument(
            "at least one restart is required".into(),
        ));
    }
    target.validate()?;

    let run = |r: usize| single_run(n_components, r, target, config);
    #[cfg(feature = "parallel")]
    let outcomes: Vec<Result<RunOutcome>> = (0..config.restarts).into_par_iter().map(run).collect();
    #[cfg(not(feature = "parallel"))]
    let outcomes: Vec<Result<RunOutcome>> = (0..config.restarts).map(run).collect();

    let mut best: Option<RunOutcome> = None;
    for o in outcomes {
        let o = o?;
        if best.as_ref().is_none_or(|b| o.distance < b.distance) {
            best = Some(o);
        }
    }
    let best = best.expect("restarts >= 1");
    let mut d = decode_params(&best.x, n_components, target)?;
    d.converged = d.achieved_distance <= config.tolerance;
    d.seed = config.seed;
    Ok(d)
}
