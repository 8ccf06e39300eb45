//! Hodge Laplacians, their eigenbases, discrete vector calculus and total variation.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::complex::{IncidencePair, Layer, LayerSignal, SimplicialComplex2};
use crate::error::{Error, Result};
use crate::linalg::{self, SymEigen};

/// Default zero threshold for eigenvalues, relative to the largest eigenvalue of `L1`.
pub const DEFAULT_TOL: f64 = 1e-8;

/// `L0 = B1 B1^T`, `L1 = B1^T B1 + B2 B2^T`, `L2 = B2^T B2`.
pub fn laplacian(ip: &IncidencePair, layer: Layer) -> DMatrix<f64> {
    let b1 = ip.b1_real();
    let b2 = ip.b2_real();
    match layer {
        Layer::Vertex => b1 * b1.transpose(),
        Layer::Edge => lower_laplacian(ip) + upper_laplacian(ip),
        Layer::Triangle => b2.transpose() * b2,
    }
}

/// `B1^T B1`, the edge Laplacian of the underlying graph.
pub fn lower_laplacian(ip: &IncidencePair) -> DMatrix<f64> {
    ip.b1_real().transpose() * ip.b1_real()
}

/// `B2 B2^T`.
pub fn upper_laplacian(ip: &IncidencePair) -> DMatrix<f64> {
    ip.b2_real() * ip.b2_real().transpose()
}

/// Which Hodge subspace an `L1` eigenvector belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HodgeClass {
    /// In `img(B1^T)`: gradient flows, zero curl.
    Irrotational,
    /// In `img(B2)`: curl flows, zero divergence.
    Solenoidal,
    /// In `ker(L1)`: both curl- and divergence-free.
    Harmonic,
}

/// Eigenpairs of `L0`, `L1`, `L2`, with the `L1` eigenvectors split into
/// irrotational, solenoidal and harmonic subspaces.
///
/// The `L1` eigenbasis is assembled from the nonzero eigenvectors of `B1^T B1`
/// and `B2 B2^T` and the kernel of `L1`; each of these is an `L1` eigenvector
/// because the two terms annihilate each other's range. Building the subspaces
/// separately keeps eigenvectors of a shared eigenvalue from mixing across them.
#[derive(Clone, Debug)]
pub struct HodgeBasis {
    tol: f64,
    layers: [SymEigen; 3],
    classes: Vec<HodgeClass>,
    irr_idx: Vec<usize>,
    sol_idx: Vec<usize>,
    harm_idx: Vec<usize>,
    u_irr: DMatrix<f64>,
    u_sol: DMatrix<f64>,
    u_harm: DMatrix<f64>,
}

impl HodgeBasis {
    /// Build the basis; `tol` is the eigenvalue zero threshold relative to `max eig(L1)`.
    pub fn new(ip: &IncidencePair, tol: f64) -> Result<Self> {
        if !(tol > 0.0) {
            return Err(Error::InvalidParameter {
                name: "tol",
                reason: format!("must be positive, got {tol}"),
            });
        }
        let e = ip.num_edges();
        let l0 = linalg::sym_eigen(&laplacian(ip, Layer::Vertex));
        let l2 = linalg::sym_eigen(&laplacian(ip, Layer::Triangle));
        let lower = linalg::sym_eigen(&lower_laplacian(ip));
        let upper = linalg::sym_eigen(&upper_laplacian(ip));
        let full = linalg::sym_eigen(&laplacian(ip, Layer::Edge));

        let scale = full.max_value();
        let cutoff = tol * scale;

        // (eigenvalue, class, source column)
        let mut entries: Vec<(f64, HodgeClass, DVector<f64>)> = Vec::with_capacity(e);
        for k in 0..full.len() {
            if full.values[k] <= cutoff {
                entries.push((
                    0.0f64.max(full.values[k]),
                    HodgeClass::Harmonic,
                    full.vectors.column(k).into(),
                ));
            }
        }
        let n_harm = entries.len();
        for k in 0..lower.len() {
            if lower.values[k] > cutoff {
                entries.push((
                    lower.values[k],
                    HodgeClass::Irrotational,
                    lower.vectors.column(k).into(),
                ));
            }
        }
        let n_irr = entries.len() - n_harm;
        for k in 0..upper.len() {
            if upper.values[k] > cutoff {
                entries.push((
                    upper.values[k],
                    HodgeClass::Solenoidal,
                    upper.vectors.column(k).into(),
                ));
            }
        }
        let n_sol = entries.len() - n_harm - n_irr;
        if n_harm + n_irr + n_sol != e {
            return Err(Error::HarmonicDimension {
                expected: e.saturating_sub(n_irr + n_sol),
                found: n_harm,
            });
        }

        let rank = |c: HodgeClass| match c {
            HodgeClass::Harmonic => 0,
            HodgeClass::Irrotational => 1,
            HodgeClass::Solenoidal => 2,
        };
        let mut order: Vec<usize> = (0..e).collect();
        order.sort_by(|&a, &b| {
            entries[a]
                .0
                .total_cmp(&entries[b].0)
                .then(rank(entries[a].1).cmp(&rank(entries[b].1)))
                .then(a.cmp(&b))
        });

        let mut values = DVector::zeros(e);
        let mut vectors = DMatrix::zeros(e, e);
        let mut classes = Vec::with_capacity(e);
        for (dst, &src) in order.iter().enumerate() {
            let (lambda, class, v) = &entries[src];
            values[dst] = *lambda;
            vectors.set_column(dst, v);
            classes.push(*class);
        }
        let l1 = SymEigen { values, vectors };

        // Verify the split with the subspace tests.
        let threshold = tol * scale.sqrt().max(1.0);
        let div = ip.b1_real() * &l1.vectors;
        let curl = ip.b2_real().transpose() * &l1.vectors;
        for (k, &class) in classes.iter().enumerate() {
            let div_norm = div.column(k).norm();
            let curl_norm = curl.column(k).norm();
            let tested = match (div_norm > threshold, curl_norm > threshold) {
                (false, false) => Some(HodgeClass::Harmonic),
                (true, false) => Some(HodgeClass::Irrotational),
                (false, true) => Some(HodgeClass::Solenoidal),
                (true, true) => None,
            };
            if tested != Some(class) {
                return Err(Error::ClassificationAmbiguity {
                    index: k,
                    div_norm,
                    curl_norm,
                });
            }
        }

        let pick = |c: HodgeClass| -> Vec<usize> {
            classes
                .iter()
                .enumerate()
                .filter(|(_, &x)| x == c)
                .map(|(k, _)| k)
                .collect()
        };
        let irr_idx = pick(HodgeClass::Irrotational);
        let sol_idx = pick(HodgeClass::Solenoidal);
        let harm_idx = pick(HodgeClass::Harmonic);
        let u_irr = linalg::select_columns(&l1.vectors, &irr_idx);
        let u_sol = linalg::select_columns(&l1.vectors, &sol_idx);
        let u_harm = linalg::select_columns(&l1.vectors, &harm_idx);

        Ok(Self {
            tol,
            layers: [l0, l1, l2],
            classes,
            irr_idx,
            sol_idx,
            harm_idx,
            u_irr,
            u_sol,
            u_harm,
        })
    }

    pub fn with_default_tol(ip: &IncidencePair) -> Result<Self> {
        Self::new(ip, DEFAULT_TOL)
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn eigen(&self, layer: Layer) -> &SymEigen {
        &self.layers[layer.order() as usize]
    }

    /// Eigenvalues of `L_k`, ascending.
    pub fn eigenvalues(&self, layer: Layer) -> &DVector<f64> {
        &self.eigen(layer).values
    }

    /// Orthonormal eigenvectors of `L_k`, one per column.
    pub fn eigenvectors(&self, layer: Layer) -> &DMatrix<f64> {
        &self.eigen(layer).vectors
    }

    /// Zero threshold applied to eigenvalues of `layer`.
    pub fn zero_cutoff(&self, layer: Layer) -> f64 {
        self.tol * self.eigen(layer).max_value()
    }

    /// Indices of eigenvalues of `layer` above the zero threshold.
    pub fn nonzero_indices(&self, layer: Layer) -> Vec<usize> {
        let cut = self.zero_cutoff(layer);
        self.eigenvalues(layer)
            .iter()
            .enumerate()
            .filter(|(_, &l)| l > cut)
            .map(|(k, _)| k)
            .collect()
    }

    pub fn classes(&self) -> &[HodgeClass] {
        &self.classes
    }

    pub fn irr_idx(&self) -> &[usize] {
        &self.irr_idx
    }

    pub fn sol_idx(&self) -> &[usize] {
        &self.sol_idx
    }

    pub fn harm_idx(&self) -> &[usize] {
        &self.harm_idx
    }

    pub fn u_irr(&self) -> &DMatrix<f64> {
        &self.u_irr
    }

    pub fn u_sol(&self) -> &DMatrix<f64> {
        &self.u_sol
    }

    pub fn u_harm(&self) -> &DMatrix<f64> {
        &self.u_harm
    }

    /// Graph Fourier transform of order k: `U_k^T s`.
    pub fn gft(&self, s: &LayerSignal) -> Result<DVector<f64>> {
        let u = self.eigenvectors(s.layer);
        let values = s.expect(s.layer, u.nrows())?;
        Ok(u.tr_mul(values))
    }

    /// `U_k * coeffs`.
    pub fn inverse_gft(&self, coeffs: &DVector<f64>, layer: Layer) -> Result<LayerSignal> {
        let u = self.eigenvectors(layer);
        if coeffs.len() != u.ncols() {
            return Err(Error::LengthMismatch {
                what: "spectral coefficients",
                expected: u.ncols(),
                found: coeffs.len(),
            });
        }
        Ok(LayerSignal::new(layer, u * coeffs))
    }
}

/// Per-triangle circulation `B2^T s1`.
pub fn curl(ip: &IncidencePair, s1: &LayerSignal) -> Result<LayerSignal> {
    let x = s1.expect(Layer::Edge, ip.num_edges())?;
    Ok(LayerSignal::new(Layer::Triangle, ip.b2_real().tr_mul(x)))
}

/// Per-vertex net flow `B1 s1`.
pub fn divergence(ip: &IncidencePair, s1: &LayerSignal) -> Result<LayerSignal> {
    let x = s1.expect(Layer::Edge, ip.num_edges())?;
    Ok(LayerSignal::new(Layer::Vertex, ip.b1_real() * x))
}

/// Edge differences `B1^T s0`.
pub fn gradient(ip: &IncidencePair, s0: &LayerSignal) -> Result<LayerSignal> {
    let x = s0.expect(Layer::Vertex, ip.num_vertices())?;
    Ok(LayerSignal::new(Layer::Edge, ip.b1_real().tr_mul(x)))
}

/// Sum of absolute triangle curls, the convex extension of the triangle-cut count.
pub fn lovasz_tv(ip: &IncidencePair, x1: &LayerSignal) -> Result<f64> {
    Ok(curl(ip, x1)?.values.iter().map(|c| c.abs()).sum())
}

/// Quadratic relaxation `x^T B2 B2^T x`.
pub fn relaxed_tv(ip: &IncidencePair, x1: &LayerSignal) -> Result<f64> {
    Ok(curl(ip, x1)?.values.norm_squared())
}

/// Signed indicator of the oriented edges crossing a vertex tripartition.
///
/// `labels[v]` in `{0, 1, 2}` gives the part of vertex `v`. Edge `(i, j)` gets
/// `+1` when `labels[i] < labels[j]`, `-1` when `labels[i] > labels[j]`, `0` otherwise.
pub fn tripartition_indicator(c: &SimplicialComplex2, labels: &[u8]) -> Result<LayerSignal> {
    if labels.len() != c.num_vertices() {
        return Err(Error::LengthMismatch {
            what: "tripartition labels",
            expected: c.num_vertices(),
            found: labels.len(),
        });
    }
    if let Some(v) = labels.iter().position(|&l| l > 2) {
        return Err(Error::InvalidParameter {
            name: "labels",
            reason: format!("vertex {v} has part {} (must be 0, 1 or 2)", labels[v]),
        });
    }
    let values = c
        .edges()
        .iter()
        .map(|&[i, j]| match labels[i].cmp(&labels[j]) {
            std::cmp::Ordering::Less => 1.0,
            std::cmp::Ordering::Greater => -1.0,
            std::cmp::Ordering::Equal => 0.0,
        })
        .collect::<Vec<_>>();
    Ok(LayerSignal::from_slice(Layer::Edge, &values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::build_incidence;

    #[test]
    fn filled_triangle_split() {
        let c = SimplicialComplex2::new(3, vec![[0, 1], [0, 2], [1, 2]], vec![[0, 1, 2]]).unwrap();
        let ip = build_incidence(&c);
        let b = HodgeBasis::with_default_tol(&ip).unwrap();
        assert!(b.harm_idx().is_empty());
        assert_eq!(b.sol_idx().len(), 1);
        assert_eq!(b.irr_idx().len(), 2);
    }

    #[test]
    fn edge_laplacian_without_triangles() {
        let c = SimplicialComplex2::new(3, vec![[0, 1], [0, 2], [1, 2]], vec![]).unwrap();
        let ip = build_incidence(&c);
        assert_eq!(laplacian(&ip, Layer::Edge), lower_laplacian(&ip));
    }

    #[test]
    fn gft_of_basis_vector_is_unit() {
        let c = SimplicialComplex2::new(4, vec![[0, 1], [1, 2], [2, 3], [0, 3]], vec![]).unwrap();
        let ip = build_incidence(&c);
        let b = HodgeBasis::with_default_tol(&ip).unwrap();
        for j in 0..4 {
            let s = LayerSignal::new(Layer::Edge, b.eigenvectors(Layer::Edge).column(j).into());
            let coeffs = b.gft(&s).unwrap();
            for (k, x) in coeffs.iter().enumerate() {
                let expected = if k == j { 1.0 } else { 0.0 };
                assert!((x - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn layer_mismatch_is_reported() {
        let c = SimplicialComplex2::new(2, vec![[0, 1]], vec![]).unwrap();
        let ip = build_incidence(&c);
        let s0 = LayerSignal::zeros(Layer::Vertex, 2);
        assert!(matches!(curl(&ip, &s0), Err(Error::LayerMismatch { .. })));
        assert!(matches!(
            gradient(&ip, &LayerSignal::zeros(Layer::Edge, 1)),
            Err(Error::LayerMismatch { .. })
        ));
    }

    #[test]
    fn rejects_nonpositive_tol() {
        let c = SimplicialComplex2::new(2, vec![[0, 1]], vec![]).unwrap();
        assert!(HodgeBasis::new(&build_incidence(&c), 0.0).is_err());
    }
}
