//! Sampling and recovery of bandlimited signals on one or several layers.
//!
//! A signal on layer k is `F`-bandlimited when it lies in the span of the
//! `L_k` eigenvectors indexed by `F`. It can be recovered from its values on a
//! sample set `S` exactly when no `F`-bandlimited signal vanishes on `S`,
//! i.e. when `|(I - D_S) F_F|_2 < 1`.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::complex::{IncidencePair, Layer, LayerSignal};
use crate::error::{Error, Result};
use crate::linalg;
use crate::spectral::HodgeBasis;

/// Recovery is refused when the localization norm is at or above `1 - RECOVERY_MARGIN`.
pub const RECOVERY_MARGIN: f64 = 1e-6;

/// Condition numbers above this are flagged in recovery results.
pub const ILL_CONDITIONED: f64 = 1e12;

/// Frequency index sets per layer, in [`HodgeBasis`] column order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BandModel {
    #[serde(rename = "F0", default)]
    pub f0: Vec<usize>,
    #[serde(rename = "F1", default)]
    pub f1: Vec<usize>,
    #[serde(rename = "F2", default)]
    pub f2: Vec<usize>,
}

impl BandModel {
    pub fn band(&self, layer: Layer) -> &[usize] {
        match layer {
            Layer::Vertex => &self.f0,
            Layer::Edge => &self.f1,
            Layer::Triangle => &self.f2,
        }
    }

    pub fn validate(&self, basis: &HodgeBasis) -> Result<()> {
        for layer in Layer::ALL {
            check_indices(
                self.band(layer),
                basis.eigenvalues(layer).len(),
                "frequency set",
            )?;
        }
        Ok(())
    }
}

fn check_indices(idx: &[usize], size: usize, what: &'static str) -> Result<()> {
    let mut seen = vec![false; size];
    for &i in idx {
        if i >= size {
            return Err(Error::IndexOutOfBounds {
                what,
                index: i,
                size,
            });
        }
        if std::mem::replace(&mut seen[i], true) {
            return Err(Error::DuplicateIndex { what, index: i });
        }
    }
    Ok(())
}

/// Sorted indices of sampled simplices on one layer.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSet {
    pub layer: Layer,
    pub indices: Vec<usize>,
}

impl SampleSet {
    /// Sorts the indices and checks them against the layer size.
    pub fn new(layer: Layer, mut indices: Vec<usize>, layer_size: usize) -> Result<Self> {
        check_indices(&indices, layer_size, "sample set")?;
        indices.sort_unstable();
        Ok(Self { layer, indices })
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Membership mask over a layer of `n` simplices.
    pub fn mask(&self, n: usize) -> Vec<bool> {
        let mut m = vec![false; n];
        for &i in &self.indices {
            m[i] = true;
        }
        m
    }
}

/// Observed values on a sample set, `values[k]` belonging to `set.indices[k]`.
#[derive(Clone, Debug)]
pub struct LayerSamples {
    pub set: SampleSet,
    pub values: DVector<f64>,
}

impl LayerSamples {
    pub fn new(set: SampleSet, values: DVector<f64>) -> Result<Self> {
        if values.len() != set.len() {
            return Err(Error::LengthMismatch {
                what: "sample values",
                expected: set.len(),
                found: values.len(),
            });
        }
        Ok(Self { set, values })
    }

    /// Sample a full signal on `set`.
    pub fn observe(signal: &LayerSignal, set: &SampleSet) -> Result<Self> {
        let x = signal.expect(set.layer, signal.len())?;
        if let Some(&bad) = set.indices.iter().find(|&&i| i >= x.len()) {
            return Err(Error::IndexOutOfBounds {
                what: "sample set",
                index: bad,
                size: x.len(),
            });
        }
        let values = DVector::from_iterator(set.len(), set.indices.iter().map(|&i| x[i]));
        Ok(Self {
            set: set.clone(),
            values,
        })
    }

    /// `D_S s`: the samples scattered into a full-length vector, zeros elsewhere.
    pub fn scattered(&self, n: usize) -> DVector<f64> {
        let mut out = DVector::zeros(n);
        for (&i, &v) in self.set.indices.iter().zip(self.values.iter()) {
            out[i] = v;
        }
        out
    }
}

/// Vertex/edge/triangle-limiting operator `D_S = diag(1_S)`.
pub fn limiting_operator(n: usize, set: &SampleSet) -> DMatrix<f64> {
    let mask = set.mask(n);
    DMatrix::from_fn(n, n, |r, c| if r == c && mask[r] { 1.0 } else { 0.0 })
}

/// Band-limiting operator `F_F = U_F U_F^T`.
pub fn band_projector(u: &DMatrix<f64>, band: &[usize]) -> DMatrix<f64> {
    let uf = linalg::select_columns(u, band);
    &uf * uf.transpose()
}

/// `|(I - D_S) F_F|_2`; recovery from samples on `S` is possible iff this is below 1.
pub fn check_recoverable(basis: &HodgeBasis, set: &SampleSet, band: &[usize]) -> Result<f64> {
    let u = basis.eigenvectors(set.layer);
    check_indices(band, u.ncols(), "frequency set")?;
    check_indices(&set.indices, u.nrows(), "sample set")?;
    Ok(localization_norm(u, set, band))
}

fn localization_norm(u: &DMatrix<f64>, set: &SampleSet, band: &[usize]) -> f64 {
    let mask = set.mask(u.nrows());
    let outside: Vec<usize> = (0..u.nrows()).filter(|&i| !mask[i]).collect();
    // |D_Sbar U_F U_F^T| = |D_Sbar U_F| since U_F has orthonormal columns
    let uf = linalg::select_columns(u, band);
    linalg::spectral_norm(&linalg::select_rows(&uf, &outside))
}

fn require_recoverable(layer: Layer, norm: f64, samples: usize, band: usize) -> Result<()> {
    if samples < band || !(norm < 1.0 - RECOVERY_MARGIN) {
        return Err(Error::NotRecoverable {
            layer,
            norm,
            margin: RECOVERY_MARGIN,
            samples,
            band,
        });
    }
    Ok(())
}

/// Recover an `F`-bandlimited signal from its samples as
/// `U_F (U_F^T D_S U_F)^{-1} U_F^T s_S`.
pub fn recover_single_layer(
    basis: &HodgeBasis,
    samples: &LayerSamples,
    band: &[usize],
) -> Result<LayerSignal> {
    let layer = samples.set.layer;
    let norm = check_recoverable(basis, &samples.set, band)?;
    require_recoverable(layer, norm, samples.set.len(), band.len())?;
    let uf = linalg::select_columns(basis.eigenvectors(layer), band);
    let us = linalg::select_rows(&uf, &samples.set.indices);
    let gram = us.tr_mul(&us);
    let chol = Cholesky::new(gram).ok_or(Error::SingularSystem("U_F^T D_S U_F"))?;
    let coeffs = chol.solve(&us.tr_mul(&samples.values));
    Ok(LayerSignal::new(layer, uf * coeffs))
}

/// Greedy determinant-maximizing sample selection for the band `band` on `layer`.
///
/// While fewer rows than `|F|` are chosen, the next row is the one with the
/// largest residual outside the span of the chosen rows (the first pick is the
/// row of largest leverage). Afterwards the next row maximizes
/// `u^T G^{-1} u`, `G` the current Gram matrix, which maximizes `det(G + u u^T)`.
/// Ties go to the lowest index. The result is not guaranteed to be recoverable.
pub fn select_samples_greedy(
    basis: &HodgeBasis,
    layer: Layer,
    band: &[usize],
    budget: usize,
) -> Result<SampleSet> {
    let u = basis.eigenvectors(layer);
    let n = u.nrows();
    check_indices(band, u.ncols(), "frequency set")?;
    if budget < band.len() {
        return Err(Error::BudgetTooSmall {
            budget,
            band: band.len(),
        });
    }
    if budget > n {
        return Err(Error::InvalidParameter {
            name: "budget",
            reason: format!("{budget} exceeds the {n} simplices of the {layer} layer"),
        });
    }
    let uf = linalg::select_columns(u, band);
    let f = band.len();
    let rows: Vec<DVector<f64>> = (0..n).map(|i| uf.row(i).transpose()).collect();
    let mut chosen = vec![false; n];
    let mut selected = Vec::with_capacity(budget);
    // orthonormal basis of the span of chosen rows (phase one)
    let mut span: Vec<DVector<f64>> = Vec::with_capacity(f);
    let mut gram = DMatrix::<f64>::zeros(f, f);

    while selected.len() < budget {
        let full_rank = span.len() == f;
        let gram_inv = if full_rank {
            Some(
                Cholesky::new(gram.clone())
                    .ok_or(Error::SingularSystem("greedy sampling Gram matrix"))?
                    .inverse(),
            )
        } else {
            None
        };
        let mut best: Option<(usize, f64)> = None;
        for i in (0..n).filter(|&i| !chosen[i]) {
            let r = &rows[i];
            let score = match &gram_inv {
                Some(g) => (r.transpose() * g * r)[0],
                None => {
                    let mut resid = r.clone();
                    for q in &span {
                        resid -= q * q.dot(r);
                    }
                    resid.norm_squared()
                }
            };
            let better = match best {
                None => true,
                Some((_, b)) => score > b + 1e-12 * b.abs().max(1.0),
            };
            if better {
                best = Some((i, score));
            }
        }
        let (pick, _) = best.expect("budget <= n leaves a candidate");
        chosen[pick] = true;
        selected.push(pick);
        let r = &rows[pick];
        gram += r * r.transpose();
        if !full_rank {
            let mut resid = r.clone();
            for q in &span {
                resid -= q * q.dot(r);
            }
            let norm = resid.norm();
            if norm > 1e-10 {
                span.push(resid / norm);
            }
        }
    }
    SampleSet::new(layer, selected, n)
}

/// Normalized `B1^T u` for each `L0` eigenvector `u` with nonzero eigenvalue.
///
/// Each column is an irrotational eigenvector of `L1` with the same eigenvalue.
pub fn lift_irr_basis(ip: &IncidencePair, basis: &HodgeBasis) -> DMatrix<f64> {
    lift(ip.b1_real().transpose(), basis, Layer::Vertex)
}

/// Normalized `B2 u` for each `L2` eigenvector `u` with nonzero eigenvalue.
pub fn lift_sol_basis(ip: &IncidencePair, basis: &HodgeBasis) -> DMatrix<f64> {
    lift(ip.b2_real().clone(), basis, Layer::Triangle)
}

fn lift(op: DMatrix<f64>, basis: &HodgeBasis, source: Layer) -> DMatrix<f64> {
    let idx = basis.nonzero_indices(source);
    let u = linalg::select_columns(basis.eigenvectors(source), &idx);
    let mut lifted = op * u;
    for mut col in lifted.column_iter_mut() {
        let n = col.norm();
        col /= n;
    }
    lifted
}

/// Numerical metadata common to the multi-layer recoveries.
#[derive(Clone, Debug, Serialize)]
pub struct RecoveryDiagnostics {
    /// Localization norms per sampled layer, in the order vertex, edge, triangle.
    pub localization_norms: Vec<f64>,
    /// Largest 1-norm condition estimate over the inverted blocks.
    pub condition: f64,
    pub ill_conditioned: bool,
}

/// Result of recovery from vertex and edge samples.
#[derive(Clone, Debug)]
pub struct TwoLayerRecovery {
    pub s0: DVector<f64>,
    /// Solenoidal plus harmonic part of the edge signal.
    pub s1_bar: DVector<f64>,
    /// `s1_bar + B1^T s0`.
    pub s1: DVector<f64>,
    pub diagnostics: RecoveryDiagnostics,
}

/// Result of recovery from vertex, edge and triangle samples.
#[derive(Clone, Debug)]
pub struct ThreeLayerRecovery {
    pub s0: DVector<f64>,
    pub s_harm: DVector<f64>,
    pub s2: DVector<f64>,
    /// `B1^T s0 + s_harm + B2 s2`.
    pub s1: DVector<f64>,
    pub diagnostics: RecoveryDiagnostics,
}

struct Block {
    /// `(I - D_Sbar F)^{-1}`
    inverse: DMatrix<f64>,
    /// `F`
    projector: DMatrix<f64>,
    norm: f64,
    condition: f64,
}

fn inverse_block(basis: &HodgeBasis, samples: &LayerSamples, band: &[usize]) -> Result<Block> {
    let layer = samples.set.layer;
    let u = basis.eigenvectors(layer);
    let n = u.nrows();
    let norm = check_recoverable(basis, &samples.set, band)?;
    require_recoverable(layer, norm, samples.set.len(), band.len())?;
    let projector = band_projector(u, band);
    let d_bar = DMatrix::identity(n, n) - limiting_operator(n, &samples.set);
    let m = DMatrix::identity(n, n) - d_bar * &projector;
    let (inverse, condition) =
        linalg::lu_inverse(&m).ok_or(Error::SingularSystem("I - D_Sbar F_F"))?;
    Ok(Block {
        inverse,
        projector,
        norm,
        condition,
    })
}

fn expect_layer(samples: &LayerSamples, layer: Layer) -> Result<()> {
    if samples.set.layer != layer {
        return Err(Error::LayerMismatch {
            expected: layer,
            found: samples.set.layer,
        });
    }
    Ok(())
}

/// Joint recovery of `s0` and the edge signal `s1 = s1_bar + B1^T s0` from vertex
/// samples on `A` and edge samples on `S`.
///
/// `f0` is the band of `s0` in the `L0` eigenbasis; `f_sh` the band of the
/// solenoidal-plus-harmonic part `s1_bar` in the `L1` eigenbasis.
pub fn recover_two_layer(
    ip: &IncidencePair,
    basis: &HodgeBasis,
    vertex_samples: &LayerSamples,
    edge_samples: &LayerSamples,
    f0: &[usize],
    f_sh: &[usize],
) -> Result<TwoLayerRecovery> {
    expect_layer(vertex_samples, Layer::Vertex)?;
    expect_layer(edge_samples, Layer::Edge)?;
    let (v, e) = (ip.num_vertices(), ip.num_edges());
    let a = inverse_block(basis, vertex_samples, f0)?;
    let s = inverse_block(basis, edge_samples, f_sh)?;

    let d_s = limiting_operator(e, &edge_samples.set);
    let p = -(&s.inverse * d_s * ip.b1_real().transpose() * &a.projector * &a.inverse);
    let mut q = DMatrix::zeros(v + e, v + e);
    q.view_mut((0, 0), (v, v)).copy_from(&a.inverse);
    q.view_mut((v, 0), (e, v)).copy_from(&p);
    q.view_mut((v, v), (e, e)).copy_from(&s.inverse);

    let mut observed = DVector::zeros(v + e);
    observed
        .rows_mut(0, v)
        .copy_from(&vertex_samples.scattered(v));
    observed
        .rows_mut(v, e)
        .copy_from(&edge_samples.scattered(e));
    let out = q * observed;
    let s0 = out.rows(0, v).into_owned();
    let s1_bar = out.rows(v, e).into_owned();
    let s1 = &s1_bar + ip.b1_real().tr_mul(&s0);
    let condition = a.condition.max(s.condition);
    Ok(TwoLayerRecovery {
        s0,
        s1_bar,
        s1,
        diagnostics: RecoveryDiagnostics {
            localization_norms: vec![a.norm, s.norm],
            condition,
            ill_conditioned: condition > ILL_CONDITIONED,
        },
    })
}

/// Joint recovery of `s0`, the harmonic edge part and `s2` from samples on all
/// three layers; `f_h` is the band of the harmonic part in the `L1` eigenbasis.
#[allow(clippy::too_many_arguments)]
pub fn recover_three_layer(
    ip: &IncidencePair,
    basis: &HodgeBasis,
    vertex_samples: &LayerSamples,
    edge_samples: &LayerSamples,
    triangle_samples: &LayerSamples,
    f0: &[usize],
    f_h: &[usize],
    f2: &[usize],
) -> Result<ThreeLayerRecovery> {
    expect_layer(vertex_samples, Layer::Vertex)?;
    expect_layer(edge_samples, Layer::Edge)?;
    expect_layer(triangle_samples, Layer::Triangle)?;
    let (v, e, t) = (ip.num_vertices(), ip.num_edges(), ip.num_triangles());
    let a = inverse_block(basis, vertex_samples, f0)?;
    let s = inverse_block(basis, edge_samples, f_h)?;
    let m = inverse_block(basis, triangle_samples, f2)?;

    let d_s = limiting_operator(e, &edge_samples.set);
    let p1 = -(&s.inverse * &d_s * ip.b1_real().transpose() * &a.projector * &a.inverse);
    let p2 = &s.inverse;
    let p3 = -(&s.inverse * &d_s * ip.b2_real() * &m.projector * &m.inverse);

    let n = v + e + t;
    let mut r = DMatrix::zeros(n, n);
    r.view_mut((0, 0), (v, v)).copy_from(&a.inverse);
    r.view_mut((v, 0), (e, v)).copy_from(&p1);
    r.view_mut((v, v), (e, e)).copy_from(p2);
    r.view_mut((v, v + e), (e, t)).copy_from(&p3);
    r.view_mut((v + e, v + e), (t, t)).copy_from(&m.inverse);

    let mut observed = DVector::zeros(n);
    observed
        .rows_mut(0, v)
        .copy_from(&vertex_samples.scattered(v));
    observed
        .rows_mut(v, e)
        .copy_from(&edge_samples.scattered(e));
    observed
        .rows_mut(v + e, t)
        .copy_from(&triangle_samples.scattered(t));
    let out = r * observed;
    let s0 = out.rows(0, v).into_owned();
    let s_harm = out.rows(v, e).into_owned();
    let s2 = out.rows(v + e, t).into_owned();
    let s1 = ip.b1_real().tr_mul(&s0) + &s_harm + ip.b2_real() * &s2;
    let condition = a.condition.max(s.condition).max(m.condition);
    Ok(ThreeLayerRecovery {
        s0,
        s_harm,
        s2,
        s1,
        diagnostics: RecoveryDiagnostics {
            localization_norms: vec![a.norm, s.norm, m.norm],
            condition,
            ill_conditioned: condition > ILL_CONDITIONED,
        },
    })
}
