//! Smooth-plus-sparse filtering of edge flows.
//!
//! Solves `min_s (s - x)^T M1 (s - x) + lambda s^T L1 s + gamma |s|_1`, with `L1`
//! the metric-weighted Hodge Laplacian, using an accelerated proximal gradient
//! method with function-value restart.

use nalgebra::{Cholesky, DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::complex::{IncidencePair, Layer, LayerSignal};
use crate::error::{Error, Result};
use crate::linalg;

/// Symmetric positive definite metric matrices for the vertex, edge and triangle layers.
#[derive(Clone, Debug)]
pub struct MetricSet {
    pub m0: DMatrix<f64>,
    pub m1: DMatrix<f64>,
    pub m2: DMatrix<f64>,
}

impl MetricSet {
    pub fn identity(ip: &IncidencePair) -> Self {
        let (v, e, t) = (ip.num_vertices(), ip.num_edges(), ip.num_triangles());
        Self {
            m0: DMatrix::identity(v, v),
            m1: DMatrix::identity(e, e),
            m2: DMatrix::identity(t, t),
        }
    }

    /// Checks sizes against `ip` and that every matrix is symmetric positive definite.
    pub fn validate(&self, ip: &IncidencePair) -> Result<()> {
        for (name, m, n) in [
            ("M0", &self.m0, ip.num_vertices()),
            ("M1", &self.m1, ip.num_edges()),
            ("M2", &self.m2, ip.num_triangles()),
        ] {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::LengthMismatch {
                    what: "metric matrix dimension",
                    expected: n,
                    found: m.nrows().max(m.ncols()),
                });
            }
            if n == 0 {
                continue;
            }
            if !linalg::is_symmetric(m, 1e-10) {
                return Err(Error::NotPositiveDefinite(name));
            }
            let min = linalg::sym_eigen(m).values[0];
            if !(min > 0.0) || Cholesky::new(m.clone()).is_none() {
                return Err(Error::NotPositiveDefinite(name));
            }
        }
        Ok(())
    }
}

/// `B2 M2 B2^T + M1 B1^T M0^{-1} B1 M1`.
pub fn weighted_l1(ip: &IncidencePair, metrics: &MetricSet) -> Result<DMatrix<f64>> {
    metrics.validate(ip)?;
    let b1 = ip.b1_real();
    let b2 = ip.b2_real();
    let m0_inv = match Cholesky::new(metrics.m0.clone()) {
        Some(c) => c.inverse(),
        None if ip.num_vertices() == 0 => DMatrix::zeros(0, 0),
        None => return Err(Error::NotPositiveDefinite("M0")),
    };
    let up = b2 * &metrics.m2 * b2.transpose();
    let low = &metrics.m1 * b1.transpose() * m0_inv * b1 * &metrics.m1;
    let l = up + low;
    // symmetrize away rounding
    Ok((&l + l.transpose()) * 0.5)
}

/// `F(s) = s^T Q s - 2 b^T s + c + gamma |s|_1` with `Q` symmetric PSD.
#[derive(Clone, Debug)]
pub struct QuadraticL1 {
    pub q: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: f64,
    pub gamma: f64,
}

impl QuadraticL1 {
    pub fn objective(&self, s: &DVector<f64>) -> f64 {
        s.dot(&(&self.q * s)) - 2.0 * self.b.dot(s) + self.c + self.gamma * s.lp_norm(1)
    }

    fn gradient(&self, s: &DVector<f64>) -> DVector<f64> {
        (&self.q * s - &self.b) * 2.0
    }

    /// `F(to) - F(from)`, evaluated without forming either objective so that the
    /// sign stays reliable when the two points are close.
    pub fn objective_change(&self, from: &DVector<f64>, to: &DVector<f64>) -> f64 {
        let d = to - from;
        let quad = d.dot(&(&self.q * (to + from)));
        quad - 2.0 * self.b.dot(&d) + self.gamma * (to.lp_norm(1) - from.lp_norm(1))
    }

    /// Norm of the distance from `0` to the subdifferential of `F` at `s`.
    pub fn optimality_residual(&self, s: &DVector<f64>) -> f64 {
        let g = self.gradient(s);
        g.iter()
            .zip(s.iter())
            .map(|(&gi, &si)| {
                if si != 0.0 {
                    (gi + self.gamma * si.signum()).powi(2)
                } else {
                    (gi.abs() - self.gamma).max(0.0).powi(2)
                }
            })
            .sum::<f64>()
            .sqrt()
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ProxOptions {
    pub max_iter: usize,
    /// Stop once the iterate moves by at most `tol * (1 + |s|)`.
    pub tol: f64,
    /// Required optimality residual for `converged`.
    pub residual_tol: f64,
}

impl Default for ProxOptions {
    fn default() -> Self {
        Self {
            max_iter: 100_000,
            tol: 1e-13,
            residual_tol: 1e-6,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ProxSolution {
    pub x: DVector<f64>,
    /// Objective after every accepted iterate, starting with the initial point.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

fn soft_threshold(v: &DVector<f64>, thr: f64) -> DVector<f64> {
    v.map(|x| x.signum() * (x.abs() - thr).max(0.0))
}

/// Solve `problem` from `start` by FISTA with monotone function-value restart,
/// followed by an exact solve on the detected support.
pub fn minimize_quadratic_l1(
    problem: &QuadraticL1,
    start: DVector<f64>,
    opts: &ProxOptions,
) -> ProxSolution {
    let n = problem.b.len();
    if n == 0 {
        return ProxSolution {
            objective_trace: vec![problem.c],
            x: start,
            iterations: 0,
            residual: 0.0,
            converged: true,
        };
    }
    let lip = linalg::sym_eigen(&(&problem.q * 2.0))
        .max_value()
        .max(f64::MIN_POSITIVE);
    let step = 1.0 / lip;
    let thr = problem.gamma * step;

    let mut x = start;
    let mut fx = problem.objective(&x);
    let mut trace = vec![fx];
    let mut y = x.clone();
    let mut t = 1.0f64;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let z = soft_threshold(&(&y - problem.gradient(&y) * step), thr);
        let fz = problem.objective(&z);
        if fz <= fx {
            let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
            let delta = &z - &x;
            let moved = delta.norm();
            y = &z + &delta * ((t - 1.0) / t_next);
            x = z;
            fx = fz;
            t = t_next;
            trace.push(fx);
            if moved <= opts.tol * (1.0 + x.norm()) {
                break;
            }
        } else {
            // restart the momentum from the last accepted point
            if t == 1.0 {
                break;
            }
            y = x.clone();
            t = 1.0;
        }
    }

    if let Some(p) = polish(problem, &x) {
        let change = problem.objective_change(&x, &p);
        if change <= 0.0 && problem.optimality_residual(&p) < problem.optimality_residual(&x) {
            x = p;
            trace.push(fx + change);
        }
    }
    let residual = problem.optimality_residual(&x);
    ProxSolution {
        converged: residual <= opts.residual_tol,
        x,
        objective_trace: trace,
        iterations,
        residual,
    }
}

/// Solve the stationarity equations on the support and sign pattern of `x`.
fn polish(problem: &QuadraticL1, x: &DVector<f64>) -> Option<DVector<f64>> {
    let support: Vec<usize> = (0..x.len()).filter(|&i| x[i] != 0.0).collect();
    let mut out = DVector::zeros(x.len());
    if support.is_empty() {
        return Some(out);
    }
    let q_ss = DMatrix::from_fn(support.len(), support.len(), |r, c| {
        problem.q[(support[r], support[c])]
    });
    let rhs = DVector::from_iterator(
        support.len(),
        support
            .iter()
            .map(|&i| problem.b[i] - 0.5 * problem.gamma * x[i].signum()),
    );
    let z = Cholesky::new(q_ss)?.solve(&rhs);
    for (k, &i) in support.iter().enumerate() {
        if problem.gamma > 0.0 && z[k].signum() != x[i].signum() {
            return None;
        }
        out[i] = z[k];
    }
    Some(out)
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PfOptions {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for PfOptions {
    fn default() -> Self {
        let p = ProxOptions::default();
        Self {
            max_iter: p.max_iter,
            tol: p.tol,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PfSolution {
    pub signal: LayerSignal,
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    /// Subgradient optimality residual at `signal`.
    pub residual: f64,
    /// Whether `residual <= 1e-6 (1 + |x|)`.
    pub converged: bool,
}

/// The filtering objective as a [`QuadraticL1`] problem.
pub fn pf_problem(
    ip: &IncidencePair,
    x1: &LayerSignal,
    metrics: &MetricSet,
    lambda: f64,
    gamma: f64,
) -> Result<QuadraticL1> {
    for (name, v) in [("lambda", lambda), ("gamma", gamma)] {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::InvalidParameter {
                name,
                reason: format!("must be a finite non-negative number, got {v}"),
            });
        }
    }
    let x = x1.expect(Layer::Edge, ip.num_edges())?;
    let l1 = weighted_l1(ip, metrics)?;
    let q = &metrics.m1 + l1 * lambda;
    let b = &metrics.m1 * x;
    let c = x.dot(&b);
    Ok(QuadraticL1 { q, b, c, gamma })
}

/// Filter one edge flow, starting the iteration at the observation.
pub fn solve_pf(
    ip: &IncidencePair,
    x1: &LayerSignal,
    metrics: &MetricSet,
    lambda: f64,
    gamma: f64,
    opts: &PfOptions,
) -> Result<PfSolution> {
    let problem = pf_problem(ip, x1, metrics, lambda, gamma)?;
    let prox = ProxOptions {
        max_iter: opts.max_iter,
        tol: opts.tol,
        residual_tol: 1e-6 * (1.0 + x1.norm()),
    };
    let sol = minimize_quadratic_l1(&problem, x1.values.clone(), &prox);
    Ok(PfSolution {
        signal: LayerSignal::new(Layer::Edge, sol.x),
        objective_trace: sol.objective_trace,
        iterations: sol.iterations,
        residual: sol.residual,
        converged: sol.converged,
    })
}

/// Filter every column of `x` independently.
pub fn solve_pf_batch(
    ip: &IncidencePair,
    x: &DMatrix<f64>,
    metrics: &MetricSet,
    lambda: f64,
    gamma: f64,
    opts: &PfOptions,
) -> Result<Vec<PfSolution>> {
    metrics.validate(ip)?;
    (0..x.ncols())
        .into_par_iter()
        .map(|j| {
            let col = LayerSignal::new(Layer::Edge, x.column(j).into_owned());
            solve_pf(ip, &col, metrics, lambda, gamma, opts)
        })
        .collect()
}
