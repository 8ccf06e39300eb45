mod common;

use common::*;
use hodgeflow::spectral::{
    curl, divergence, gradient, laplacian, lovasz_tv, relaxed_tv, tripartition_indicator,
};
use hodgeflow::{build_incidence, HodgeBasis, HodgeClass, Layer, LayerSignal, SimplicialComplex2};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

#[test]
fn fig1_l0_diagonal_is_degree() {
    let ip = build_incidence(&fig1());
    let l0 = laplacian(&ip, Layer::Vertex);
    let diag: Vec<f64> = l0.diagonal().iter().copied().collect();
    assert_eq!(diag, vec![2.0, 4.0, 4.0, 2.0, 3.0, 4.0, 3.0]);
}

#[test]
fn edge_laplacian_without_triangles() {
    let c = fig1().graph();
    let ip = build_incidence(&c);
    let b1 = ip.b1_real();
    assert_eq!(laplacian(&ip, Layer::Edge), b1.transpose() * b1);
}

#[test]
fn laplacians_are_psd() {
    for seed in 0..10 {
        let ip = build_incidence(&random_test_complex(seed, 14));
        for layer in Layer::ALL {
            let l = laplacian(&ip, layer);
            if l.nrows() == 0 {
                continue;
            }
            assert!(l.clone().symmetric_eigen().eigenvalues.min() >= -1e-10);
        }
    }
}

#[test]
fn fig1_class_counts() {
    let basis = HodgeBasis::with_default_tol(&build_incidence(&fig1())).unwrap();
    assert_eq!(basis.harm_idx().len(), 2);
    assert_eq!(basis.irr_idx().len(), 6);
    assert_eq!(basis.sol_idx().len(), 3);
}

#[test]
fn filled_triangle_classes() {
    let c = SimplicialComplex2::new(3, vec![[0, 1], [0, 2], [1, 2]], vec![[0, 1, 2]]).unwrap();
    let basis = HodgeBasis::with_default_tol(&build_incidence(&c)).unwrap();
    assert!(basis.harm_idx().is_empty());
    assert_eq!(basis.sol_idx().len(), 1);
    assert_eq!(basis.irr_idx().len(), 2);
}

#[test]
fn solenoidal_eigenvectors_map_to_l2_eigenvectors() {
    for seed in 0..10 {
        let ip = build_incidence(&random_test_complex(seed, 14));
        let basis = HodgeBasis::with_default_tol(&ip).unwrap();
        let l2 = laplacian(&ip, Layer::Triangle);
        let lam = basis.eigenvalues(Layer::Edge);
        for &k in basis.sol_idx() {
            let w = ip
                .b2_real()
                .tr_mul(&basis.eigenvectors(Layer::Edge).column(k));
            let resid = (&l2 * &w - lam[k] * &w).norm() / w.norm();
            assert!(resid <= 1e-8, "seed {seed}: residual {resid}");
        }
    }
}

#[test]
fn fig1_classification_matches_operators() {
    let ip = build_incidence(&fig1());
    let basis = HodgeBasis::with_default_tol(&ip).unwrap();
    let u = basis.eigenvectors(Layer::Edge);
    for (k, class) in basis.classes().iter().enumerate() {
        let v = u.column(k);
        let div = (ip.b1_real() * v).norm();
        let rot = ip.b2_real().tr_mul(&v).norm();
        match class {
            HodgeClass::Irrotational => assert!(rot <= 1e-8 && div > 1e-8),
            HodgeClass::Solenoidal => assert!(div <= 1e-8 && rot > 1e-8),
            HodgeClass::Harmonic => assert!(div <= 1e-8 && rot <= 1e-8),
        }
    }
}

#[test]
fn gradient_flows_are_curl_free() {
    let mut r = rng(3);
    for seed in 0..5 {
        let ip = build_incidence(&random_test_complex(seed, 12));
        let s0 = LayerSignal::new(Layer::Vertex, gaussian(&mut r, ip.num_vertices()));
        let g = gradient(&ip, &s0).unwrap();
        assert!(curl(&ip, &g).unwrap().values.norm() <= 1e-10);
    }
}

#[test]
fn curl_matches_loop_oracle() {
    let mut r = rng(4);
    for seed in 0..10 {
        let c = random_test_complex(seed, 14);
        let ip = build_incidence(&c);
        let x = gaussian(&mut r, c.num_edges());
        let got = curl(&ip, &LayerSignal::new(Layer::Edge, x.clone()))
            .unwrap()
            .values;
        for (t, &[i, j, k]) in c.triangles().iter().enumerate() {
            let e = |a, b| x[c.edge_index([a, b]).unwrap()];
            let want = e(j, k) - e(i, k) + e(i, j);
            assert!((got[t] - want).abs() <= 1e-12);
        }
    }
}

#[test]
fn divergence_of_solenoidal_flow_vanishes() {
    let mut r = rng(5);
    for seed in 0..5 {
        let ip = build_incidence(&random_test_complex(seed, 12));
        let s2 = gaussian(&mut r, ip.num_triangles());
        let flow = LayerSignal::new(Layer::Edge, ip.b2_real() * s2);
        assert!(divergence(&ip, &flow).unwrap().values.norm() <= 1e-10);
    }
}

#[test]
fn div_grad_is_l0() {
    let mut r = rng(6);
    for seed in 0..5 {
        let ip = build_incidence(&random_test_complex(seed, 12));
        let s0 = gaussian(&mut r, ip.num_vertices());
        let dg = divergence(
            &ip,
            &gradient(&ip, &LayerSignal::new(Layer::Vertex, s0.clone())).unwrap(),
        )
        .unwrap();
        let b1 = ip.b1_real();
        let l0 = b1 * b1.transpose();
        assert!((dg.values - l0 * s0).norm() <= 1e-10);
    }
}

#[test]
fn operators_check_layers() {
    let ip = build_incidence(&fig1());
    let wrong = LayerSignal::zeros(Layer::Vertex, 7);
    assert!(curl(&ip, &wrong).is_err());
    assert!(divergence(&ip, &wrong).is_err());
    assert!(gradient(&ip, &LayerSignal::zeros(Layer::Edge, 11)).is_err());
    assert!(lovasz_tv(&ip, &wrong).is_err());
}

#[test]
fn gft_of_an_eigenvector_is_a_unit_vector() {
    let ip = build_incidence(&fig1());
    let basis = HodgeBasis::with_default_tol(&ip).unwrap();
    for layer in Layer::ALL {
        let u = basis.eigenvectors(layer);
        for j in 0..u.ncols() {
            let s = LayerSignal::new(layer, u.column(j).into_owned());
            let hat = basis.gft(&s).unwrap();
            let mut e = DVector::zeros(u.ncols());
            e[j] = 1.0;
            assert!((hat - e).norm() <= 1e-12);
        }
    }
}

#[test]
fn fig1_parseval_and_harmonic_support() {
    let ip = build_incidence(&fig1());
    let basis = HodgeBasis::with_default_tol(&ip).unwrap();
    let mut r = rng(7);
    let s = LayerSignal::new(Layer::Edge, gaussian(&mut r, 11));
    assert!((basis.gft(&s).unwrap().norm() - s.norm()).abs() <= 1e-10);

    let h = basis.u_harm() * gaussian(&mut r, 2);
    let hat = basis.gft(&LayerSignal::new(Layer::Edge, h)).unwrap();
    for k in 0..11 {
        if !basis.harm_idx().contains(&k) {
            assert!(hat[k].abs() <= 1e-10);
        }
    }
}

#[test]
fn harmonic_flow_has_zero_tv() {
    let ip = build_incidence(&fig1());
    let basis = HodgeBasis::with_default_tol(&ip).unwrap();
    let h = LayerSignal::new(
        Layer::Edge,
        basis.u_harm() * DVector::from_vec(vec![0.7, -1.3]),
    );
    assert!(lovasz_tv(&ip, &h).unwrap() <= 1e-10);
    assert!(relaxed_tv(&ip, &h).unwrap() <= 1e-10);
}

#[test]
fn tripartition_matches_brute_force_cut() {
    let mut r = rng(9);
    for seed in 0..20 {
        let c = random_test_complex(seed, 12);
        let ip = build_incidence(&c);
        let labels: Vec<u8> = (0..c.num_vertices())
            .map(|_| rand::Rng::random_range(&mut r, 0..3))
            .collect();
        let x = tripartition_indicator(&c, &labels).unwrap();
        let cut = c
            .triangles()
            .iter()
            .filter(|t| {
                let (a, b, d) = (labels[t[0]], labels[t[1]], labels[t[2]]);
                a != b && b != d && a != d
            })
            .count();
        assert_eq!(lovasz_tv(&ip, &x).unwrap(), cut as f64);
    }
}

fn random_basis_signal(r: &mut impl rand::Rng, basis: &HodgeBasis, layer: Layer) -> LayerSignal {
    let n = basis.eigenvectors(layer).nrows();
    LayerSignal::new(layer, gaussian(r, n))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn gft_round_trip(seed in any::<u64>()) {
        let ip = build_incidence(&random_test_complex(seed, 12));
        let basis = HodgeBasis::with_default_tol(&ip).unwrap();
        let mut r = rng(seed ^ 1);
        for layer in Layer::ALL {
            let s = random_basis_signal(&mut r, &basis, layer);
            let back = basis.inverse_gft(&basis.gft(&s).unwrap(), layer).unwrap();
            prop_assert!((back.values - &s.values).norm() <= 1e-10 * (1.0 + s.norm()));
        }
    }

    #[test]
    fn lovasz_tv_is_convex(seed in any::<u64>(), alpha in 0.0f64..=1.0) {
        let ip = build_incidence(&random_test_complex(seed, 12));
        let mut r = rng(seed ^ 2);
        let e = ip.num_edges();
        let x = gaussian(&mut r, e);
        let y = gaussian(&mut r, e);
        let f = |v: DVector<f64>| lovasz_tv(&ip, &LayerSignal::new(Layer::Edge, v)).unwrap();
        let mix = f(&x * alpha + &y * (1.0 - alpha));
        prop_assert!(mix <= alpha * f(x) + (1.0 - alpha) * f(y) + 1e-10);
    }

    #[test]
    fn harmonic_dimension_is_beta1(seed in any::<u64>()) {
        let c = random_test_complex(seed, 14);
        let ip = build_incidence(&c);
        let basis = HodgeBasis::with_default_tol(&ip).unwrap();
        let betti = hodgeflow::complex::betti_numbers(&ip);
        prop_assert_eq!(basis.harm_idx().len(), betti[1]);
        let u = basis.eigenvectors(Layer::Edge);
        let gram: DMatrix<f64> = u.tr_mul(u);
        prop_assert!((gram - DMatrix::identity(u.ncols(), u.ncols())).amax() <= 1e-10);
    }
}
