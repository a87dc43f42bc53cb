//! Small unconstrained minimizers shared by the decomposition, code search
//! and pulse optimization. All of them only ever accept points that lower
//! the objective, so the returned value is never worse than the start.

use std::collections::VecDeque;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimizeConfig {
    pub max_iters: usize,
    /// Stop as soon as the objective drops to this value.
    pub f_target: f64,
    /// Stop when the gradient max-norm falls below this.
    pub grad_tol: f64,
    /// L-BFGS history length.
    pub memory: usize,
}

impl Default for MinimizeConfig {
    fn default() -> Self {
        Self {
            max_iters: 2000,
            f_target: f64::NEG_INFINITY,
            grad_tol: 1e-10,
            memory: 12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub iters: usize,
    /// Objective value after every accepted step, starting with the initial point.
    pub trace: Vec<f64>,
    pub reached_target: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// L-BFGS with a backtracking Armijo line search. `fg` returns the value and
/// gradient at a point.
pub fn lbfgs<F>(mut fg: F, x0: &[f64], cfg: &MinimizeConfig) -> Minimum
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let (mut f, mut g) = fg(&x);
    let mut trace = vec![f];
    let mut hist: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut iters = 0;

    while iters < cfg.max_iters && f > cfg.f_target && inf_norm(&g) > cfg.grad_tol && f.is_finite()
    {
        iters += 1;
        // Two-loop recursion.
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(hist.len());
        for (s, y, rho) in hist.iter().rev() {
            let a = rho * dot(s, &q);
            q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
            alphas.push(a);
        }
        if let Some((s, y, _)) = hist.back() {
            let gamma = dot(s, y) / dot(y, y);
            q.iter_mut().for_each(|qi| *qi *= gamma);
        } else {
            let scale = 1.0 / inf_norm(&g).max(1.0);
            q.iter_mut().for_each(|qi| *qi *= scale);
        }
        for ((s, y, rho), a) in hist.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &q);
            q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
        }
        let mut d: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dot(&g, &d);
        if slope >= 0.0 {
            d = g.iter().map(|v| -v / inf_norm(&g).max(1.0)).collect();
            slope = dot(&g, &d);
            hist.clear();
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let xn: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + step * di).collect();
            let (fnew, gnew) = fg(&xn);
            if fnew.is_finite() && fnew <= f + 1e-4 * step * slope && fnew < f {
                accepted = Some((xn, fnew, gnew));
                break;
            }
            step *= 0.5;
        }
        match accepted {
            Some((xn, fnew, gnew)) => {
                let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
                let y: Vec<f64> = gnew.iter().zip(&g).map(|(a, b)| a - b).collect();
                let sy = dot(&s, &y);
                if sy > 1e-16 * dot(&y, &y).max(f64::MIN_POSITIVE) {
                    hist.push_back((s, y, 1.0 / sy));
                    if hist.len() > cfg.memory {
                        hist.pop_front();
                    }
                }
                x = xn;
                f = fnew;
                g = gnew;
                trace.push(f);
            }
            // Retry once from a steepest-descent direction.
            None if !hist.is_empty() => hist.clear(),
            None => break,
        }
    }
    debug_assert_eq!(x.len(), n);
    Minimum {
        x,
        f,
        iters,
        trace,
        reached_target: f <= cfg.f_target,
    }
}

/// Central finite-difference gradient.
pub fn fd_gradient<F>(mut f: F, x: &[f64], h: f64) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut xp = x.to_vec();
    (0..x.len())
        .map(|i| {
            xp[i] = x[i] + h;
            let fp = f(&xp);
            xp[i] = x[i] - h;
            let fm = f(&xp);
            xp[i] = x[i];
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

/// Nelder–Mead simplex search with standard coefficients.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], step: f64, cfg: &MinimizeConfig) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let f0 = f(x0);
    simplex.push((x0.to_vec(), f0));
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += step;
        let fp = f(&p);
        simplex.push((p, fp));
    }
    let order = |s: &mut Vec<(Vec<f64>, f64)>| {
        s.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
    };
    order(&mut simplex);
    let mut trace = vec![simplex[0].1];
    let mut iters = 0;
    let along = |c: &[f64], p: &[f64], t: f64| -> Vec<f64> {
        c.iter().zip(p).map(|(ci, pi)| ci + t * (pi - ci)).collect()
    };
    while iters < cfg.max_iters && simplex[0].1 > cfg.f_target {
        iters += 1;
        let spread = simplex[n].1 - simplex[0].1;
        if spread.abs() < 1e-15 {
            break;
        }
        let mut centroid = vec![0.0; n];
        for (p, _) in &simplex[..n] {
            centroid
                .iter_mut()
                .zip(p)
                .for_each(|(c, v)| *c += v / n as f64);
        }
        let worst = simplex[n].0.clone();
        let xr = along(&centroid, &worst, -1.0);
        let fr = f(&xr);
        if fr < simplex[0].1 {
            let xe = along(&centroid, &worst, -2.0);
            let fe = f(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[n].1 {
                let xc = along(&centroid, &xr, 0.5);
                let fc = f(&xc);
                (xc, fc)
            } else {
                let xc = along(&centroid, &worst, 0.5);
                let fc = f(&xc);
                (xc, fc)
            };
            if fc < simplex[n].1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    let p = along(&best, &entry.0, 0.5);
                    let fp = f(&p);
                    *entry = (p, fp);
                }
            }
        }
        order(&mut simplex);
        if simplex[0].1 < *trace.last().unwrap() {
            trace.push(simplex[0].1);
        }
    }
    let (x, fbest) = simplex.swap_remove(0);
    Minimum {
        x,
        f: fbest,
        iters,
        trace,
        reached_target: fbest <= cfg.f_target,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> f64 {
        x.windows(2)
            .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
            .sum()
    }

    fn rosenbrock_grad(x: &[f64]) -> Vec<f64> {
        let n = x.len();
        let mut g = vec![0.0; n];
        for i in 0..n - 1 {
            g[i] += -400.0 * x[i] * (x[i + 1] - x[i] * x[i]) - 2.0 * (1.0 - x[i]);
            g[i + 1] += 200.0 * (x[i + 1] - x[i] * x[i]);
        }
        g
    }

    #[test]
    fn lbfgs_minimizes_rosenbrock() {
        let x0 = vec![-1.2, 1.0, -0.5, 0.3];
        let m = lbfgs(
            |x| (rosenbrock(x), rosenbrock_grad(x)),
            &x0,
            &MinimizeConfig::default(),
        );
        assert!(m.f < 1e-12, "f = {}", m.f);
        for xi in &m.x {
            assert!((xi - 1.0).abs() < 1e-5);
        }
        assert!(m.trace.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn lbfgs_stops_at_target() {
        let cfg = MinimizeConfig {
            f_target: 1e-2,
            ..Default::default()
        };
        let m = lbfgs(|x| (rosenbrock(x), rosenbrock_grad(x)), &[-1.2, 1.0], &cfg);
        assert!(m.reached_target);
        assert!(m.f <= 1e-2 && m.f > 1e-8);
    }

    #[test]
    fn nelder_mead_minimizes_quadratic() {
        let f = |x: &[f64]| (x[0] - 3.0).powi(2) + 2.0 * (x[1] + 1.0).powi(2) + 0.5 * x[0] * x[1];
        let m = nelder_mead(f, &[0.0, 0.0], 0.5, &MinimizeConfig::default());
        let g = fd_gradient(f, &m.x, 1e-6);
        assert!(g.iter().all(|v| v.abs() < 1e-4), "{g:?}");
        assert!(m.f <= f(&[0.0, 0.0]));
    }

    #[test]
    fn fd_gradient_matches_analytic() {
        let x = [0.3, -0.7, 1.1];
        let fd = fd_gradient(rosenbrock, &x, 1e-6);
        let an = rosenbrock_grad(&x);
        for (a, b) in fd.iter().zip(&an) {
            assert!((a - b).abs() < 1e-5 * b.abs().max(1.0));
        }
    }
}
