mod common;

use common::*;
use hodgeflow::complex::{
    betti_numbers, betti_numbers_exact, clique_count_by_trace, enumerate_3cliques,
};
use hodgeflow::{build_incidence, Error, SimplicialComplex2};
use nalgebra::DMatrix;
use proptest::prelude::*;

#[test]
fn single_edge_incidence() {
    let c = SimplicialComplex2::new(2, vec![[0, 1]], vec![]).unwrap();
    let ip = build_incidence(&c);
    assert_eq!(ip.b1(), &DMatrix::from_row_slice(2, 1, &[-1, 1]));
    assert_eq!(ip.b2().shape(), (1, 0));
}

#[test]
fn missing_face_is_a_closure_violation() {
    let err = SimplicialComplex2::new(3, vec![[0, 1], [1, 2]], vec![[0, 1, 2]]).unwrap_err();
    assert!(
        matches!(
            err,
            Error::ClosureViolation {
                missing: [0, 2],
                ..
            }
        ),
        "{err}"
    );
}

#[test]
fn malformed_simplices_are_rejected() {
    assert!(matches!(
        SimplicialComplex2::new(2, vec![[1, 0]], vec![]),
        Err(Error::UnsortedSimplex(_))
    ));
    assert!(matches!(
        SimplicialComplex2::new(2, vec![[0, 1], [0, 1]], vec![]),
        Err(Error::DuplicateSimplex(_))
    ));
    assert!(matches!(
        SimplicialComplex2::new(2, vec![[0, 2]], vec![]),
        Err(Error::IndexOutOfRange { .. })
    ));
    assert!(matches!(
        SimplicialComplex2::new(0, vec![], vec![]),
        Err(Error::NoVertices)
    ));
}

#[test]
fn eight_vertex_complex_has_zero_boundary_product() {
    let mut r = rng(8);
    let c = arbitrary_complex(&mut r, 8, 0.6, 0.7);
    assert!(c.num_triangles() > 0);
    let ip = build_incidence(&c);
    assert!(ip.boundary_product().iter().all(|&x| x == 0));
}

#[test]
fn fig1_cliques() {
    let want: Vec<[usize; 3]> = [[1, 2, 7], [2, 3, 6], [2, 6, 7], [3, 4, 5], [3, 5, 6]]
        .iter()
        .map(|&[a, b, c]| [a - 1, b - 1, c - 1])
        .collect();
    let c = fig1();
    assert_eq!(enumerate_3cliques(&c), want);
    assert_eq!(scan_cliques(7, c.edges()), want);
    assert_eq!(clique_count_by_trace(&c), 5);
}

#[test]
fn edgeless_and_complete_graphs() {
    let empty = SimplicialComplex2::new(4, vec![], vec![]).unwrap();
    assert!(enumerate_3cliques(&empty).is_empty());

    let k5: Vec<[usize; 2]> = (0..5)
        .flat_map(|i| (i + 1..5).map(move |j| [i, j]))
        .collect();
    let c = SimplicialComplex2::new(5, k5, vec![]).unwrap();
    assert_eq!(enumerate_3cliques(&c).len(), 10);
    assert_eq!(clique_count_by_trace(&c), 10);
}

#[test]
fn betti_examples() {
    let ip = build_incidence(&fig1());
    assert_eq!(rational_rank(ip.b1()), 6);
    assert_eq!(rational_rank(ip.b2()), 3);
    assert_eq!(betti_numbers(&ip), [1, 2, 0]);
    assert_eq!(betti_numbers_exact(&ip), [1, 2, 0]);

    let tri = vec![[0, 1], [0, 2], [1, 2]];
    let disc = SimplicialComplex2::new(3, tri.clone(), vec![[0, 1, 2]]).unwrap();
    assert_eq!(betti_numbers(&build_incidence(&disc)), [1, 0, 0]);
    let hole = SimplicialComplex2::new(3, tri, vec![]).unwrap();
    assert_eq!(betti_numbers(&build_incidence(&hole)), [1, 1, 0]);
}

#[test]
fn hollow_tetrahedron_has_a_cavity() {
    let edges: Vec<[usize; 2]> = (0..4)
        .flat_map(|i| (i + 1..4).map(move |j| [i, j]))
        .collect();
    let tris = vec![[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]];
    let c = SimplicialComplex2::new(4, edges, tris).unwrap();
    assert_eq!(betti_numbers(&build_incidence(&c)), [1, 0, 1]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn complex_invariants(seed in any::<u64>(), v in 1usize..14, p in 0.0f64..0.8, fill in 0.0f64..1.0) {
        let mut r = rng(seed);
        let c = arbitrary_complex(&mut r, v, p, fill);
        let ip = build_incidence(&c);

        prop_assert!(ip.boundary_product().iter().all(|&x| x == 0));
        for col in ip.b1().column_iter() {
            prop_assert_eq!(col.iter().sum::<i32>(), 0);
            prop_assert_eq!(col.iter().filter(|&&x| x != 0).count(), 2);
        }

        let betti = betti_numbers(&ip);
        prop_assert_eq!(betti[0], union_find_components(v, c.edges()));
        prop_assert_eq!(betti, betti_numbers_exact(&ip));
        let (r1, r2) = (rational_rank(ip.b1()), rational_rank(ip.b2()));
        prop_assert_eq!(betti, [v - r1, c.num_edges() - r1 - r2, c.num_triangles() - r2]);

        let cliques = enumerate_3cliques(&c);
        prop_assert_eq!(&cliques, &scan_cliques(v, c.edges()));
        prop_assert_eq!(cliques.len(), clique_count_by_trace(&c));
    }

    #[test]
    fn fully_filled_complex_has_one_triangle_per_clique(seed in any::<u64>(), v in 3usize..12) {
        let mut r = rng(seed);
        let c = arbitrary_complex(&mut r, v, 0.5, 1.0);
        prop_assert_eq!(enumerate_3cliques(&c).len(), c.num_triangles());
    }
}
