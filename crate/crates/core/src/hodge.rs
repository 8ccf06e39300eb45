//! Hodge decomposition of observed edge flows and subspace projections.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::complex::{IncidencePair, Layer, LayerSignal};
use crate::error::Result;
use crate::linalg;
use crate::spectral::{self, HodgeBasis, DEFAULT_TOL};

/// The three orthogonal parts of an edge flow and the potentials generating them.
#[derive(Clone, Debug)]
pub struct HodgeComponents {
    /// `B1^T s0_hat`
    pub s_irr: DVector<f64>,
    /// `B2 s2_hat`
    pub s_sol: DVector<f64>,
    /// Residual `x1 - s_irr - s_sol`.
    pub s_harm: DVector<f64>,
    /// Minimum-norm vertex potential.
    pub s0_hat: DVector<f64>,
    /// Minimum-norm triangle potential.
    pub s2_hat: DVector<f64>,
}

impl HodgeComponents {
    /// Squared norms `(irr, sol, harm)`.
    pub fn energies(&self) -> [f64; 3] {
        [
            self.s_irr.norm_squared(),
            self.s_sol.norm_squared(),
            self.s_harm.norm_squared(),
        ]
    }
}

/// Closed-form least-squares split of `x1`:
/// `s0 = L0^+ B1 x1`, `s2 = (B2^T B2)^+ B2^T x1`, harmonic part as the residual.
pub fn decompose(ip: &IncidencePair, x1: &LayerSignal) -> Result<HodgeComponents> {
    decompose_with_tol(ip, x1, DEFAULT_TOL)
}

pub fn decompose_with_tol(
    ip: &IncidencePair,
    x1: &LayerSignal,
    tol: f64,
) -> Result<HodgeComponents> {
    let x = x1.expect(Layer::Edge, ip.num_edges())?;
    let b1 = ip.b1_real();
    let b2 = ip.b2_real();
    let l0_pinv = linalg::pinv_sym(&spectral::laplacian(ip, Layer::Vertex), tol);
    let l2_pinv = linalg::pinv_sym(&spectral::laplacian(ip, Layer::Triangle), tol);
    let s0_hat = l0_pinv * (b1 * x);
    let s2_hat = l2_pinv * b2.tr_mul(x);
    let s_irr = b1.tr_mul(&s0_hat);
    let s_sol = b2 * &s2_hat;
    let s_harm = x - &s_irr - &s_sol;
    Ok(HodgeComponents {
        s_irr,
        s_sol,
        s_harm,
        s0_hat,
        s2_hat,
    })
}

/// Target of [`project_component`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subspace {
    Irr,
    Sol,
    Harm,
    /// Orthogonal complement of the irrotational subspace.
    NotIrr,
    /// Orthogonal complement of the solenoidal subspace.
    NotSol,
}

impl std::str::FromStr for Subspace {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "irr" => Subspace::Irr,
            "sol" => Subspace::Sol,
            "harm" => Subspace::Harm,
            "not_irr" | "not-irr" => Subspace::NotIrr,
            "not_sol" | "not-sol" => Subspace::NotSol,
            other => return Err(format!("unknown subspace {other:?}")),
        })
    }
}

fn project_onto(u: &DMatrix<f64>, x: &DVector<f64>) -> DVector<f64> {
    u * u.tr_mul(x)
}

/// Orthogonal projection of an edge flow onto a Hodge subspace or its complement.
pub fn project_component(
    basis: &HodgeBasis,
    x1: &LayerSignal,
    which: Subspace,
) -> Result<LayerSignal> {
    let e = basis.eigenvectors(Layer::Edge).nrows();
    let x = x1.expect(Layer::Edge, e)?;
    let values = match which {
        Subspace::Irr => project_onto(basis.u_irr(), x),
        Subspace::Sol => project_onto(basis.u_sol(), x),
        Subspace::Harm => project_onto(basis.u_harm(), x),
        Subspace::NotIrr => x - project_onto(basis.u_irr(), x),
        Subspace::NotSol => x - project_onto(basis.u_sol(), x),
    };
    Ok(LayerSignal::new(Layer::Edge, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::{build_incidence, SimplicialComplex2};

    fn square_with_diagonal() -> IncidencePair {
        // two triangles sharing edge (0,2); one filled
        let c = SimplicialComplex2::new(
            4,
            vec![[0, 1], [1, 2], [0, 2], [2, 3], [0, 3]],
            vec![[0, 1, 2]],
        )
        .unwrap();
        build_incidence(&c)
    }

    #[test]
    fn gradient_flow_is_purely_irrotational() {
        let ip = square_with_diagonal();
        let s0 = DVector::from_column_slice(&[0.3, -1.2, 2.0, 0.7]);
        let x = LayerSignal::new(Layer::Edge, ip.b1_real().tr_mul(&s0));
        let h = decompose(&ip, &x).unwrap();
        assert!((&h.s_irr - &x.values).norm() < 1e-10);
        assert!(h.s_sol.norm() < 1e-10);
        assert!(h.s_harm.norm() < 1e-10);
    }

    #[test]
    fn projection_complement_kills_curl_flow() {
        let ip = square_with_diagonal();
        let basis = HodgeBasis::with_default_tol(&ip).unwrap();
        let x = LayerSignal::new(Layer::Edge, ip.b2_real() * DVector::from_element(1, 2.5));
        let y = project_component(&basis, &x, Subspace::NotSol).unwrap();
        assert!(y.norm() < 1e-10);
    }

    #[test]
    fn subspace_names_parse() {
        assert_eq!("not_sol".parse::<Subspace>().unwrap(), Subspace::NotSol);
        assert!("bogus".parse::<Subspace>().is_err());
    }
}
