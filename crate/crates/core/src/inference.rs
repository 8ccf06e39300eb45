//! Inference of the filled triangles of a complex from edge flows observed on its graph.

use std::collections::HashSet;

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::Serialize;

use crate::complex::{enumerate_3cliques, SimplicialComplex2};
use crate::error::{Error, Result};
use crate::flowfilter::{minimize_quadratic_l1, ProxOptions, QuadraticL1};
use crate::linalg;
use crate::spectral::HodgeBasis;

/// Default relative energy threshold of [`sol_harm_energy_test`].
pub const DEFAULT_ETA: f64 = 1e-2;

/// The 3-cliques of a graph with the signed edge vectors a triangle on each would have.
#[derive(Clone, Debug)]
pub struct CliqueCandidates {
    num_edges: usize,
    cliques: Vec<[usize; 3]>,
    boundaries: Vec<[(usize, i32); 3]>,
}

impl CliqueCandidates {
    /// Enumerate the 3-cliques of the graph of `c`; its triangles are ignored.
    pub fn from_graph(c: &SimplicialComplex2) -> Self {
        let cliques = enumerate_3cliques(c);
        let boundaries = cliques
            .iter()
            .map(|&t| c.triangle_boundary(t).expect("3-clique edges exist"))
            .collect();
        Self {
            num_edges: c.num_edges(),
            cliques,
            boundaries,
        }
    }

    pub fn len(&self) -> usize {
        self.cliques.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cliques.is_empty()
    }

    pub fn num_edges(&self) -> usize {
        self.num_edges
    }

    pub fn cliques(&self) -> &[[usize; 3]] {
        &self.cliques
    }

    /// `(edge index, sign)` for the three edges of clique `n`.
    pub fn boundary(&self, n: usize) -> &[(usize, i32); 3] {
        &self.boundaries[n]
    }

    /// Dense `b_n`.
    pub fn b_vector(&self, n: usize) -> DVector<f64> {
        let mut b = DVector::zeros(self.num_edges);
        for &(e, s) in &self.boundaries[n] {
            b[e] = s as f64;
        }
        b
    }

    /// `0/1` indicator of the given filled triangles over the cliques.
    pub fn indicator(&self, filled: &[[usize; 3]]) -> Vec<u8> {
        let set: HashSet<[usize; 3]> = filled.iter().copied().collect();
        self.cliques
            .iter()
            .map(|t| u8::from(set.contains(t)))
            .collect()
    }

    /// `c_n = |X^T b_n|^2` for every clique.
    pub fn curl_energies(&self, x: &DMatrix<f64>) -> Vec<f64> {
        self.boundaries
            .iter()
            .map(|bd| {
                (0..x.ncols())
                    .map(|j| {
                        let v: f64 = bd.iter().map(|&(e, s)| s as f64 * x[(e, j)]).sum();
                        v * v
                    })
                    .sum()
            })
            .collect()
    }

    fn check(&self, rows: usize, t_star: usize) -> Result<()> {
        if rows != self.num_edges {
            return Err(Error::LengthMismatch {
                what: "flow matrix rows",
                expected: self.num_edges,
                found: rows,
            });
        }
        if t_star > self.len() {
            return Err(Error::TStarTooLarge {
                t_star,
                cliques: self.len(),
            });
        }
        Ok(())
    }
}

/// Outcome of the preliminary solenoidal-plus-harmonic energy test.
#[derive(Clone, Debug)]
pub struct EnergyTest {
    /// `(I - U_irr U_irr^T) X`
    pub x_sh: DMatrix<f64>,
    /// `|X_sH|_F / |X|_F`, zero for zero data.
    pub ratio: f64,
    /// Whether the non-gradient energy is large enough to attempt inference.
    pub proceed: bool,
}

/// Remove the irrotational part of every column of `x`.
///
/// `graph_basis` must come from the graph alone since the triangles are unknown.
pub fn sol_harm_energy_test(
    graph_basis: &HodgeBasis,
    x: &DMatrix<f64>,
    eta: f64,
) -> Result<EnergyTest> {
    EnergyTest::from_irr_basis(graph_basis.u_irr(), x, eta)
}

impl EnergyTest {
    /// As [`sol_harm_energy_test`], given any orthonormal basis of the gradient flows.
    pub fn from_irr_basis(u: &DMatrix<f64>, x: &DMatrix<f64>, eta: f64) -> Result<Self> {
        if x.nrows() != u.nrows() {
            return Err(Error::LengthMismatch {
                what: "flow matrix rows",
                expected: u.nrows(),
                found: x.nrows(),
            });
        }
        let x_sh = x - u * u.tr_mul(x);
        let total = x.norm();
        let rest = x_sh.norm();
        let ratio = if total > 0.0 { rest / total } else { 0.0 };
        Ok(EnergyTest {
            proceed: rest > eta * total,
            x_sh,
            ratio,
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct InferenceResult {
    /// `t_n = 1` marks clique `n` as a filled triangle.
    pub t: Vec<u8>,
    /// Curl energy of every clique from the last sorting step.
    pub c: Vec<f64>,
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl InferenceResult {
    pub fn selected(&self) -> Vec<usize> {
        (0..self.t.len()).filter(|&n| self.t[n] == 1).collect()
    }
}

/// Set curl energies below `1e-12` of the largest one to exactly zero, so that
/// cliques with vanishing curl tie and fall back to index order.
pub fn snap_zero_energies(c: &mut [f64]) {
    let max = c.iter().copied().fold(0.0, f64::max);
    for v in c.iter_mut() {
        if *v <= ENERGY_ZERO_TOL * max {
            *v = 0.0;
        }
    }
}

/// Relative threshold of [`snap_zero_energies`].
pub const ENERGY_ZERO_TOL: f64 = 1e-12;

/// Indicator of the `t_star` smallest entries of `c`, ties to the lowest index.
pub fn smallest_indicator(c: &[f64], t_star: usize) -> Vec<u8> {
    let mut order: Vec<usize> = (0..c.len()).collect();
    order.sort_by(|&a, &b| c[a].total_cmp(&c[b]).then(a.cmp(&b)));
    let mut t = vec![0u8; c.len()];
    for &n in &order[..t_star] {
        t[n] = 1;
    }
    t
}

fn q_value(t: &[u8], c: &[f64]) -> f64 {
    t.iter()
        .zip(c)
        .filter(|(&tn, _)| tn == 1)
        .map(|(_, &cn)| cn)
        .sum()
}

/// Minimum-total-variation inference: fill the `t_star` cliques of least curl energy.
pub fn mtv_infer(
    cands: &CliqueCandidates,
    x_sh: &DMatrix<f64>,
    t_star: usize,
) -> Result<InferenceResult> {
    cands.check(x_sh.nrows(), t_star)?;
    let mut c = cands.curl_energies(x_sh);
    snap_zero_energies(&mut c);
    let t = smallest_indicator(&c, t_star);
    Ok(InferenceResult {
        objective_trace: vec![q_value(&t, &c)],
        t,
        c,
        iterations: 1,
        converged: true,
    })
}

/// How the number of principal components is chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PcaDim {
    Fixed(usize),
    /// Smallest dimension capturing this fraction of the covariance trace.
    Energy(f64),
}

#[derive(Clone, Debug)]
pub struct PcaBfmtvOptions {
    pub dim: PcaDim,
    pub gamma: f64,
    pub max_iter: usize,
    /// Covariance to use instead of the sample covariance of the data.
    pub covariance: Option<DMatrix<f64>>,
}

impl Default for PcaBfmtvOptions {
    fn default() -> Self {
        Self {
            dim: PcaDim::Energy(0.95),
            gamma: 1e-2,
            max_iter: 100,
            covariance: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PcaBfmtvResult {
    pub inference: InferenceResult,
    /// Principal directions, `E x F`.
    pub basis: DMatrix<f64>,
    /// Coefficients from the last update, `F x M`.
    pub coefficients: DMatrix<f64>,
    /// Whether the iteration stopped because an earlier `t` reappeared.
    pub cycled: bool,
}

/// Column-mean-removed sample covariance `(1/M) sum (x - m)(x - m)^T`.
pub fn sample_covariance(x: &DMatrix<f64>) -> DMatrix<f64> {
    let m = x.ncols();
    if m == 0 {
        return DMatrix::zeros(x.nrows(), x.nrows());
    }
    let mean = x.column_mean();
    let mut centered = x.clone();
    for mut col in centered.column_iter_mut() {
        col -= &mean;
    }
    &centered * centered.transpose() / m as f64
}

/// Leading eigenvectors of a covariance matrix, largest eigenvalue first.
pub fn principal_directions(cov: &DMatrix<f64>, dim: PcaDim) -> Result<DMatrix<f64>> {
    let n = cov.nrows();
    let eig = linalg::sym_eigen(cov);
    let f = match dim {
        PcaDim::Fixed(f) => f,
        PcaDim::Energy(frac) => {
            if !(frac > 0.0 && frac <= 1.0) {
                return Err(Error::InvalidParameter {
                    name: "pca energy",
                    reason: format!("must lie in (0, 1], got {frac}"),
                });
            }
            let total: f64 = eig.values.iter().map(|v| v.max(0.0)).sum();
            let mut acc = 0.0;
            let mut f = 0;
            for k in (0..n).rev() {
                acc += eig.values[k].max(0.0);
                f += 1;
                if acc >= frac * total {
                    break;
                }
            }
            f.max(1)
        }
    };
    if f == 0 || f > n {
        return Err(Error::InvalidParameter {
            name: "pca dimension",
            reason: format!("must lie in 1..={n}, got {f}"),
        });
    }
    let idx: Vec<usize> = (n - f..n).rev().collect();
    Ok(linalg::select_columns(&eig.vectors, &idx))
}

/// `gamma g(t, S) + |X - U S|_F^2`, the quantity both alternating updates minimize.
pub fn pca_bfmtv_objective(
    cands: &CliqueCandidates,
    x_sh: &DMatrix<f64>,
    basis: &DMatrix<f64>,
    coeffs: &DMatrix<f64>,
    t: &[u8],
    gamma: f64,
) -> f64 {
    let fit = basis * coeffs;
    let g = q_value(t, &cands.curl_energies(&fit));
    gamma * g + (x_sh - fit).norm_squared()
}

/// Alternating minimization over the triangle indicator and PCA coefficients.
///
/// Starts from the MTV solution. Each round solves
/// `S = (I + gamma U^T L_upp U)^{-1} U^T X` for the current `t`, then re-selects the
/// `t_star` cliques of least curl energy of `U S`. The objective is recorded after
/// every half-step. Stops when `t` repeats; a repeat of an older `t` is a cycle
/// and is reported as not converged.
pub fn pca_bfmtv_infer(
    cands: &CliqueCandidates,
    x_sh: &DMatrix<f64>,
    t_star: usize,
    opts: &PcaBfmtvOptions,
) -> Result<PcaBfmtvResult> {
    cands.check(x_sh.nrows(), t_star)?;
    if !(opts.gamma > 0.0) || !opts.gamma.is_finite() {
        return Err(Error::InvalidParameter {
            name: "gamma",
            reason: format!("must be positive, got {}", opts.gamma),
        });
    }
    if opts.max_iter == 0 {
        return Err(Error::InvalidParameter {
            name: "max_iter",
            reason: "must be at least 1".into(),
        });
    }
    let e = x_sh.nrows();
    let cov = match &opts.covariance {
        Some(c) if c.nrows() != e || c.ncols() != e => {
            return Err(Error::LengthMismatch {
                what: "covariance dimension",
                expected: e,
                found: c.nrows(),
            })
        }
        Some(c) => c.clone(),
        None => sample_covariance(x_sh),
    };
    let u = principal_directions(&cov, opts.dim)?;
    let f = u.ncols();
    let ut_x = u.tr_mul(x_sh);

    let mut t = mtv_infer(cands, x_sh, t_star)?.t;
    let mut seen: HashSet<Vec<u8>> = HashSet::from([t.clone()]);
    let mut trace = Vec::new();
    let mut c = Vec::new();
    let mut coeffs = DMatrix::zeros(f, x_sh.ncols());
    let mut converged = false;
    let mut cycled = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        // B2^T U restricted to the selected cliques gives U^T L_upp U
        let mut bt_u = DMatrix::zeros(t_star, f);
        for (row, n) in (0..t.len()).filter(|&n| t[n] == 1).enumerate() {
            for &(edge, s) in cands.boundary(n) {
                for k in 0..f {
                    bt_u[(row, k)] += s as f64 * u[(edge, k)];
                }
            }
        }
        let system = DMatrix::identity(f, f) + bt_u.tr_mul(&bt_u) * opts.gamma;
        coeffs = Cholesky::new(system)
            .ok_or(Error::SingularSystem("I + gamma U^T L_upp U"))?
            .solve(&ut_x);
        trace.push(pca_bfmtv_objective(
            cands, x_sh, &u, &coeffs, &t, opts.gamma,
        ));

        c = cands.curl_energies(&(&u * &coeffs));
        snap_zero_energies(&mut c);
        let next = smallest_indicator(&c, t_star);
        let unchanged = next == t;
        let repeated = !seen.insert(next.clone());
        t = next;
        trace.push(pca_bfmtv_objective(
            cands, x_sh, &u, &coeffs, &t, opts.gamma,
        ));
        if unchanged {
            converged = true;
            break;
        }
        if repeated {
            cycled = true;
            break;
        }
    }
    Ok(PcaBfmtvResult {
        inference: InferenceResult {
            t,
            c,
            objective_trace: trace,
            iterations,
            converged,
        },
        basis: u,
        coefficients: coeffs,
        cycled,
    })
}

/// Fraction of cliques whose filled/unfilled status differs between `t` and `truth`.
pub fn error_probability(t: &[u8], truth: &[u8]) -> f64 {
    assert_eq!(t.len(), truth.len(), "indicator lengths differ");
    if t.is_empty() {
        return 0.0;
    }
    t.iter().zip(truth).filter(|(a, b)| a != b).count() as f64 / t.len() as f64
}

/// Columns `b_n` of the selected cliques, in clique order.
pub fn assemble_b2(cands: &CliqueCandidates, t: &[u8]) -> Result<DMatrix<i32>> {
    if t.len() != cands.len() {
        return Err(Error::LengthMismatch {
            what: "triangle indicator",
            expected: cands.len(),
            found: t.len(),
        });
    }
    if let Some(n) = t.iter().position(|&v| v > 1) {
        return Err(Error::InvalidParameter {
            name: "t",
            reason: format!("entry {n} is not 0 or 1"),
        });
    }
    let selected: Vec<usize> = (0..t.len()).filter(|&n| t[n] == 1).collect();
    let mut b2 = DMatrix::zeros(cands.num_edges, selected.len());
    for (col, &n) in selected.iter().enumerate() {
        for &(e, s) in cands.boundary(n) {
            b2[(e, col)] = s;
        }
    }
    Ok(b2)
}

/// Selected cliques as triangles of a complex over `graph`.
pub fn inferred_complex(
    graph: &SimplicialComplex2,
    cands: &CliqueCandidates,
    t: &[u8],
) -> Result<SimplicialComplex2> {
    let tris = (0..t.len())
        .filter(|&n| t[n] == 1)
        .map(|n| cands.cliques()[n])
        .collect();
    graph.with_triangles(tris)
}

#[derive(Clone, Debug)]
pub struct BasisPursuit {
    pub coefficients: DVector<f64>,
    /// Lagrange multiplier `mu` of the penalized form `|x - V s|^2 + mu |s|_1`.
    pub multiplier: f64,
    pub residual_norm: f64,
    pub l1_norm: f64,
}

/// `min |s|_1` subject to `|x - V s| <= eps`.
///
/// Solved through the penalized form, bisecting on the multiplier until the
/// residual norm meets `eps`; the returned point is always feasible.
pub fn basis_pursuit(v: &DMatrix<f64>, x: &DVector<f64>, eps: f64) -> Result<BasisPursuit> {
    if !(eps >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "eps",
            reason: format!("must be non-negative, got {eps}"),
        });
    }
    if v.nrows() != x.len() {
        return Err(Error::LengthMismatch {
            what: "dictionary rows",
            expected: x.len(),
            found: v.nrows(),
        });
    }
    let vt_x = v.tr_mul(x);
    let finish = |s: DVector<f64>, mu: f64| {
        let residual_norm = (x - v * &s).norm();
        BasisPursuit {
            l1_norm: s.lp_norm(1),
            coefficients: s,
            multiplier: mu,
            residual_norm,
        }
    };
    if eps >= x.norm() {
        return Ok(finish(DVector::zeros(v.ncols()), f64::INFINITY));
    }
    let gram = v.tr_mul(v);
    let opts = ProxOptions::default();
    let solve = |mu: f64, start: DVector<f64>| {
        let p = QuadraticL1 {
            q: gram.clone(),
            b: vt_x.clone(),
            c: x.norm_squared(),
            gamma: mu,
        };
        minimize_quadratic_l1(&p, start, &opts).x
    };
    if eps == 0.0 {
        return Ok(finish(solve(0.0, vt_x.clone()), 0.0));
    }
    let resid = |s: &DVector<f64>| (x - v * s).norm();

    // the residual grows with mu; at mu = 2 |V^T x|_inf the solution is zero
    let mut lo = 0.0;
    let mut hi = 2.0 * vt_x.amax();
    let mut s_lo = solve(0.0, vt_x.clone());
    for _ in 0..200 {
        if hi - lo <= 1e-12 * hi.max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let s = solve(mid, s_lo.clone());
        if resid(&s) <= eps {
            lo = mid;
            s_lo = s;
        } else {
            hi = mid;
        }
    }
    Ok(finish(s_lo, lo))
}

/// Choice of `t*` by held-out sparsity.
#[derive(Clone, Debug, Serialize)]
pub struct TStarSelection {
    pub t_star: usize,
    /// `(t*, held-out l1 norm)` for every candidate.
    pub scores: Vec<(usize, f64)>,
}

/// Pick `t*` from `grid` by fitting MTV on the first 80% of the columns and scoring
/// the summed `l1` norm of basis pursuit of the remaining columns in the
/// eigenbasis of the inferred complex, with tolerance `eps_rel |x|`.
pub fn cross_validate_t_star(
    graph: &SimplicialComplex2,
    cands: &CliqueCandidates,
    x_sh: &DMatrix<f64>,
    grid: &[usize],
    eps_rel: f64,
) -> Result<TStarSelection> {
    let m = x_sh.ncols();
    if m < 2 {
        return Err(Error::InvalidParameter {
            name: "signals",
            reason: "cross-validation needs at least two signals".into(),
        });
    }
    if grid.is_empty() {
        return Err(Error::InvalidParameter {
            name: "t* grid",
            reason: "empty".into(),
        });
    }
    let n_train = ((m as f64) * 0.8).round().clamp(1.0, (m - 1) as f64) as usize;
    let train = x_sh.columns(0, n_train).into_owned();
    let test = x_sh.columns(n_train, m - n_train).into_owned();
    let mut scores = Vec::with_capacity(grid.len());
    for &ts in grid {
        let t = mtv_infer(cands, &train, ts)?.t;
        let complex = inferred_complex(graph, cands, &t)?;
        let ip = crate::complex::build_incidence(&complex);
        let basis = HodgeBasis::with_default_tol(&ip)?;
        let v = basis.eigenvectors(crate::complex::Layer::Edge);
        let mut total = 0.0;
        for col in test.column_iter() {
            let x = col.into_owned();
            total += basis_pursuit(v, &x, eps_rel * x.norm())?.l1_norm;
        }
        scores.push((ts, total));
    }
    let best = scores
        .iter()
        .fold(None::<(usize, f64)>, |acc, &(ts, sc)| match acc {
            Some((_, b)) if sc >= b => acc,
            _ => Some((ts, sc)),
        })
        .expect("non-empty grid");
    Ok(TStarSelection {
        t_star: best.0,
        scores,
    })
}
