//! Combinatorial 2-complexes, oriented incidence matrices and topological invariants.
//!
//! Every simplex is oriented by increasing vertex index. An edge `(i, j)` with
//! `i < j` has boundary `[j] - [i]`, and a triangle `(i, j, k)` has boundary
//! `[j,k] - [i,k] + [i,j]`.

use std::collections::{HashMap, HashSet};
use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Order of a simplex: 0 = vertex, 1 = edge, 2 = triangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Layer {
    Vertex,
    Edge,
    Triangle,
}

impl Layer {
    pub const ALL: [Layer; 3] = [Layer::Vertex, Layer::Edge, Layer::Triangle];

    pub fn order(self) -> u8 {
        match self {
            Layer::Vertex => 0,
            Layer::Edge => 1,
            Layer::Triangle => 2,
        }
    }
}

impl TryFrom<u8> for Layer {
    type Error = String;

    fn try_from(k: u8) -> std::result::Result<Self, String> {
        match k {
            0 => Ok(Layer::Vertex),
            1 => Ok(Layer::Edge),
            2 => Ok(Layer::Triangle),
            _ => Err(format!("layer must be 0, 1 or 2, got {k}")),
        }
    }
}

impl From<Layer> for u8 {
    fn from(l: Layer) -> u8 {
        l.order()
    }
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Layer::Vertex => "vertex",
            Layer::Edge => "edge",
            Layer::Triangle => "triangle",
        })
    }
}

/// A real signal living on one layer of a complex.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerSignal {
    pub layer: Layer,
    pub values: DVector<f64>,
}

impl LayerSignal {
    pub fn new(layer: Layer, values: DVector<f64>) -> Self {
        Self { layer, values }
    }

    pub fn from_slice(layer: Layer, values: &[f64]) -> Self {
        Self::new(layer, DVector::from_column_slice(values))
    }

    pub fn zeros(layer: Layer, len: usize) -> Self {
        Self::new(layer, DVector::zeros(len))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.values.norm()
    }

    pub(crate) fn expect(&self, layer: Layer, len: usize) -> Result<&DVector<f64>> {
        if self.layer != layer {
            return Err(Error::LayerMismatch {
                expected: layer,
                found: self.layer,
            });
        }
        if self.values.len() != len {
            return Err(Error::LengthMismatch {
                what: "layer signal",
                expected: len,
                found: self.values.len(),
            });
        }
        Ok(&self.values)
    }
}

/// Vertices, oriented edges and oriented triangles, closed under taking faces.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SimplicialComplex2 {
    num_vertices: usize,
    edges: Vec<[usize; 2]>,
    triangles: Vec<[usize; 3]>,
    #[serde(skip)]
    edge_index: HashMap<[usize; 2], usize>,
}

impl SimplicialComplex2 {
    /// Validates ranges, ordering, duplicates and face closure.
    pub fn new(
        num_vertices: usize,
        edges: Vec<[usize; 2]>,
        triangles: Vec<[usize; 3]>,
    ) -> Result<Self> {
        if num_vertices == 0 {
            return Err(Error::NoVertices);
        }
        let mut edge_index = HashMap::with_capacity(edges.len());
        for (n, e) in edges.iter().enumerate() {
            if e[1] >= num_vertices {
                return Err(Error::IndexOutOfRange {
                    simplex: e.to_vec(),
                    num_vertices,
                });
            }
            if e[0] >= e[1] {
                return Err(Error::UnsortedSimplex(e.to_vec()));
            }
            if edge_index.insert(*e, n).is_some() {
                return Err(Error::DuplicateSimplex(e.to_vec()));
            }
        }
        let mut seen = HashSet::with_capacity(triangles.len());
        for t in &triangles {
            if t[2] >= num_vertices {
                return Err(Error::IndexOutOfRange {
                    simplex: t.to_vec(),
                    num_vertices,
                });
            }
            if !(t[0] < t[1] && t[1] < t[2]) {
                return Err(Error::UnsortedSimplex(t.to_vec()));
            }
            if !seen.insert(*t) {
                return Err(Error::DuplicateSimplex(t.to_vec()));
            }
            for face in triangle_faces(*t) {
                if !edge_index.contains_key(&face) {
                    return Err(Error::ClosureViolation {
                        triangle: *t,
                        missing: face,
                    });
                }
            }
        }
        Ok(Self {
            num_vertices,
            edges,
            triangles,
            edge_index,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    /// Number of simplices on `layer`.
    pub fn layer_size(&self, layer: Layer) -> usize {
        match layer {
            Layer::Vertex => self.num_vertices,
            Layer::Edge => self.edges.len(),
            Layer::Triangle => self.triangles.len(),
        }
    }

    pub fn edge_index(&self, edge: [usize; 2]) -> Option<usize> {
        self.edge_index.get(&edge).copied()
    }

    /// The underlying graph: same vertices and edges, no triangles.
    pub fn graph(&self) -> Self {
        Self {
            num_vertices: self.num_vertices,
            edges: self.edges.clone(),
            triangles: Vec::new(),
            edge_index: self.edge_index.clone(),
        }
    }

    /// The same graph with a different set of filled triangles.
    pub fn with_triangles(&self, triangles: Vec<[usize; 3]>) -> Result<Self> {
        Self::new(self.num_vertices, self.edges.clone(), triangles)
    }

    /// Signed edge incidences of a triangle: `+1` on `(j,k)`, `-1` on `(i,k)`, `+1` on `(i,j)`.
    ///
    /// Returns `None` if one of the faces is not an edge of the complex.
    pub fn triangle_boundary(&self, t: [usize; 3]) -> Option<[(usize, i32); 3]> {
        let [i, j, k] = t;
        Some([
            (self.edge_index([j, k])?, 1),
            (self.edge_index([i, k])?, -1),
            (self.edge_index([i, j])?, 1),
        ])
    }

    /// Connected components by union-find over the edge list.
    pub fn connected_components(&self) -> usize {
        let mut parent: Vec<usize> = (0..self.num_vertices).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let mut components = self.num_vertices;
        for &[a, b] in &self.edges {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra] = rb;
                components -= 1;
            }
        }
        components
    }

    /// 0/1 adjacency matrix of the underlying graph.
    pub fn adjacency(&self) -> DMatrix<i64> {
        let mut a = DMatrix::zeros(self.num_vertices, self.num_vertices);
        for &[i, j] in &self.edges {
            a[(i, j)] = 1;
            a[(j, i)] = 1;
        }
        a
    }
}

fn triangle_faces([i, j, k]: [usize; 3]) -> [[usize; 2]; 3] {
    [[j, k], [i, k], [i, j]]
}

/// Integer incidence matrices `B1` (V x E) and `B2` (E x T), with real copies.
#[derive(Clone, Debug)]
pub struct IncidencePair {
    b1: DMatrix<i32>,
    b2: DMatrix<i32>,
    b1_real: DMatrix<f64>,
    b2_real: DMatrix<f64>,
}

impl IncidencePair {
    pub fn b1(&self) -> &DMatrix<i32> {
        &self.b1
    }

    pub fn b2(&self) -> &DMatrix<i32> {
        &self.b2
    }

    pub fn b1_real(&self) -> &DMatrix<f64> {
        &self.b1_real
    }

    pub fn b2_real(&self) -> &DMatrix<f64> {
        &self.b2_real
    }

    pub fn num_vertices(&self) -> usize {
        self.b1.nrows()
    }

    pub fn num_edges(&self) -> usize {
        self.b1.ncols()
    }

    pub fn num_triangles(&self) -> usize {
        self.b2.ncols()
    }

    pub fn layer_size(&self, layer: Layer) -> usize {
        match layer {
            Layer::Vertex => self.num_vertices(),
            Layer::Edge => self.num_edges(),
            Layer::Triangle => self.num_triangles(),
        }
    }

    /// `B1 * B2` in exact integer arithmetic.
    pub fn boundary_product(&self) -> DMatrix<i64> {
        integer_product(&self.b1, &self.b2)
    }
}

/// Product of two small-integer matrices, accumulated in `i64`.
pub fn integer_product(a: &DMatrix<i32>, b: &DMatrix<i32>) -> DMatrix<i64> {
    assert_eq!(a.ncols(), b.nrows());
    DMatrix::from_fn(a.nrows(), b.ncols(), |r, c| {
        (0..a.ncols())
            .map(|k| a[(r, k)] as i64 * b[(k, c)] as i64)
            .sum()
    })
}

/// Oriented incidence matrices of a validated complex.
pub fn build_incidence(c: &SimplicialComplex2) -> IncidencePair {
    let mut b1 = DMatrix::zeros(c.num_vertices(), c.num_edges());
    for (n, &[i, j]) in c.edges().iter().enumerate() {
        b1[(i, n)] = -1;
        b1[(j, n)] = 1;
    }
    let mut b2 = DMatrix::zeros(c.num_edges(), c.num_triangles());
    for (n, &t) in c.triangles().iter().enumerate() {
        // closure was checked at construction
        let boundary = c.triangle_boundary(t).expect("closed complex");
        for (e, sign) in boundary {
            b2[(e, n)] = sign;
        }
    }
    let b1_real = b1.map(|x| x as f64);
    let b2_real = b2.map(|x| x as f64);
    IncidencePair {
        b1,
        b2,
        b1_real,
        b2_real,
    }
}

/// All vertex triples whose three pair-edges exist, lexicographically sorted.
pub fn enumerate_3cliques(c: &SimplicialComplex2) -> Vec<[usize; 3]> {
    let mut neighbours: Vec<Vec<usize>> = vec![Vec::new(); c.num_vertices()];
    for &[i, j] in c.edges() {
        neighbours[i].push(j);
    }
    for n in &mut neighbours {
        n.sort_unstable();
    }
    let mut out = Vec::new();
    for i in 0..c.num_vertices() {
        for (a, &j) in neighbours[i].iter().enumerate() {
            for &k in &neighbours[i][a + 1..] {
                if neighbours[j].binary_search(&k).is_ok() {
                    out.push([i, j, k]);
                }
            }
        }
    }
    out
}

/// Number of 3-cliques as `trace(A^3) / 6`, `A` the adjacency matrix.
pub fn clique_count_by_trace(c: &SimplicialComplex2) -> usize {
    let a = c.adjacency();
    let a3 = &a * &a * &a;
    (a3.trace() / 6) as usize
}

/// Betti numbers `(b0, b1, b2)` from numerical ranks of the incidence matrices.
pub fn betti_numbers(ip: &IncidencePair) -> [usize; 3] {
    let r1 = linalg::numerical_rank(ip.b1_real());
    let r2 = linalg::numerical_rank(ip.b2_real());
    betti_from_ranks(ip, r1, r2)
}

/// Betti numbers from exact integer ranks.
pub fn betti_numbers_exact(ip: &IncidencePair) -> [usize; 3] {
    let r1 = exact_rank(ip.b1());
    let r2 = exact_rank(ip.b2());
    betti_from_ranks(ip, r1, r2)
}

fn betti_from_ranks(ip: &IncidencePair, r1: usize, r2: usize) -> [usize; 3] {
    let (v, e, t) = (ip.num_vertices(), ip.num_edges(), ip.num_triangles());
    [v - r1, e - r1 - r2, t - r2]
}

/// Rank over the rationals by fraction-free (Bareiss) elimination.
pub fn exact_rank(m: &DMatrix<i32>) -> usize {
    let (rows, cols) = m.shape();
    let mut a: Vec<Vec<BigInt>> = (0..rows)
        .map(|r| (0..cols).map(|c| BigInt::from(m[(r, c)])).collect())
        .collect();
    let mut prev = BigInt::from(1);
    let mut rank = 0;
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let Some(p) = (rank..rows).find(|&r| !a[r][col].is_zero()) else {
            continue;
        };
        a.swap(rank, p);
        for r in rank + 1..rows {
            for c in col + 1..cols {
                let v = &a[rank][col] * &a[r][c] - &a[r][col] * &a[rank][c];
                a[r][c] = v / &prev;
            }
            a[r][col] = BigInt::zero();
        }
        prev = a[rank][col].abs();
        rank += 1;
    }
    rank
}

#[cfg(test)]
mod tests {
    use super::*;

    fn filled_triangle() -> SimplicialComplex2 {
        SimplicialComplex2::new(3, vec![[0, 1], [0, 2], [1, 2]], vec![[0, 1, 2]]).unwrap()
    }

    #[test]
    fn single_edge() {
        let c = SimplicialComplex2::new(2, vec![[0, 1]], vec![]).unwrap();
        let ip = build_incidence(&c);
        assert_eq!(ip.b1(), &DMatrix::from_row_slice(2, 1, &[-1, 1]));
        assert_eq!(ip.b2().shape(), (1, 0));
    }

    #[test]
    fn rejects_invalid_complexes() {
        assert!(matches!(
            SimplicialComplex2::new(3, vec![[0, 1], [1, 2]], vec![[0, 1, 2]]),
            Err(Error::ClosureViolation {
                triangle: [0, 1, 2],
                missing: [0, 2]
            })
        ));
        assert!(matches!(
            SimplicialComplex2::new(2, vec![[0, 2]], vec![]),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            SimplicialComplex2::new(3, vec![[1, 0]], vec![]),
            Err(Error::UnsortedSimplex(_))
        ));
        assert!(matches!(
            SimplicialComplex2::new(3, vec![[0, 1], [0, 1]], vec![]),
            Err(Error::DuplicateSimplex(_))
        ));
        assert!(matches!(
            SimplicialComplex2::new(0, vec![], vec![]),
            Err(Error::NoVertices)
        ));
    }

    #[test]
    fn betti_of_disc_and_circle() {
        let disc = filled_triangle();
        assert_eq!(betti_numbers(&build_incidence(&disc)), [1, 0, 0]);
        let circle = disc.graph();
        assert_eq!(betti_numbers(&build_incidence(&circle)), [1, 1, 0]);
        assert_eq!(betti_numbers_exact(&build_incidence(&circle)), [1, 1, 0]);
    }

    #[test]
    fn cliques_of_k5() {
        let edges = (0..5)
            .flat_map(|i| (i + 1..5).map(move |j| [i, j]))
            .collect();
        let c = SimplicialComplex2::new(5, edges, vec![]).unwrap();
        assert_eq!(enumerate_3cliques(&c).len(), 10);
        assert_eq!(clique_count_by_trace(&c), 10);
        let empty = SimplicialComplex2::new(4, vec![], vec![]).unwrap();
        assert!(enumerate_3cliques(&empty).is_empty());
        assert_eq!(empty.connected_components(), 4);
    }

    #[test]
    fn exact_rank_handles_dependent_rows() {
        let m = DMatrix::from_row_slice(3, 3, &[1, 2, 3, 2, 4, 6, 1, 0, -1]);
        assert_eq!(exact_rank(&m), 2);
        assert_eq!(exact_rank(&DMatrix::<i32>::zeros(2, 0)), 0);
    }

    #[test]
    fn signal_layer_check() {
        let s = LayerSignal::zeros(Layer::Edge, 3);
        assert!(s.expect(Layer::Edge, 3).is_ok());
        assert!(matches!(
            s.expect(Layer::Vertex, 3),
            Err(Error::LayerMismatch { .. })
        ));
        assert!(matches!(
            s.expect(Layer::Edge, 4),
            Err(Error::LengthMismatch { .. })
        ));
    }
}
