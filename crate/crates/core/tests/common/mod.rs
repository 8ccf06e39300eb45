//! Fixtures shared by the integration tests.
#![allow(dead_code)]

use hodgeflow::flowfilter::MetricSet;
use hodgeflow::{IncidencePair, SimplicialComplex2};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Fig. 1 edges in 1-based labels, in the printed order e1..e11.
pub const FIG1_EDGES_1B: [[usize; 2]; 11] = [
    [1, 2],
    [2, 3],
    [2, 6],
    [2, 7],
    [6, 7],
    [1, 7],
    [3, 6],
    [5, 6],
    [3, 5],
    [3, 4],
    [4, 5],
];

pub const FIG1_TRIANGLES_1B: [[usize; 3]; 3] = [[2, 6, 7], [2, 3, 6], [3, 5, 6]];

pub fn fig1() -> SimplicialComplex2 {
    let edges = FIG1_EDGES_1B.iter().map(|&[a, b]| [a - 1, b - 1]).collect();
    let tris = FIG1_TRIANGLES_1B
        .iter()
        .map(|&[a, b, c]| [a - 1, b - 1, c - 1])
        .collect();
    SimplicialComplex2::new(7, edges, tris).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// All vertex triples whose three pairs are edges, by direct triple scan.
pub fn scan_cliques(v: usize, edges: &[[usize; 2]]) -> Vec<[usize; 3]> {
    let mut adj = vec![vec![false; v]; v];
    for &[a, b] in edges {
        adj[a][b] = true;
        adj[b][a] = true;
    }
    let mut out = Vec::new();
    for i in 0..v {
        for j in i + 1..v {
            for k in j + 1..v {
                if adj[i][j] && adj[i][k] && adj[j][k] {
                    out.push([i, j, k]);
                }
            }
        }
    }
    out
}

/// Erdos-Renyi graph (possibly disconnected) with each clique filled with
/// probability `fill`.
pub fn arbitrary_complex(r: &mut impl Rng, v: usize, p: f64, fill: f64) -> SimplicialComplex2 {
    let mut edges = Vec::new();
    for i in 0..v {
        for j in i + 1..v {
            if r.random::<f64>() < p {
                edges.push([i, j]);
            }
        }
    }
    let tris = scan_cliques(v, &edges)
        .into_iter()
        .filter(|_| r.random::<f64>() < fill)
        .collect();
    SimplicialComplex2::new(v, edges, tris).unwrap()
}

/// A complex with at least one edge and a fair number of triangles.
pub fn random_test_complex(seed: u64, max_v: usize) -> SimplicialComplex2 {
    let mut r = rng(seed);
    loop {
        let v = r.random_range(4..=max_v);
        let p = r.random_range(0.25..0.6);
        let fill = r.random_range(0.2..0.9);
        let c = arbitrary_complex(&mut r, v, p, fill);
        if c.num_edges() > 0 {
            return c;
        }
    }
}

pub fn gaussian(r: &mut impl Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| r.sample(StandardNormal))
}

pub fn gaussian_mat(r: &mut impl Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| r.sample(StandardNormal))
}

pub fn rel_err(a: &DVector<f64>, truth: &DVector<f64>) -> f64 {
    (a - truth).norm() / truth.norm().max(f64::MIN_POSITIVE)
}

/// Union-find component count over the edge list.
pub fn union_find_components(v: usize, edges: &[[usize; 2]]) -> usize {
    let mut parent: Vec<usize> = (0..v).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let next = p[y];
            p[y] = r;
            y = next;
        }
        r
    }
    let mut count = v;
    for &[a, b] in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
            count -= 1;
        }
    }
    count
}

/// Rank by Gaussian elimination over the rationals (integers, fraction-free).
pub fn rational_rank(m: &DMatrix<i32>) -> usize {
    let mut a: Vec<Vec<i128>> = (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)] as i128).collect())
        .collect();
    let (rows, cols) = (m.nrows(), m.ncols());
    let mut rank = 0;
    for col in 0..cols {
        let Some(piv) = (rank..rows).find(|&r| a[r][col] != 0) else {
            continue;
        };
        a.swap(rank, piv);
        for r in 0..rows {
            if r != rank && a[r][col] != 0 {
                let (f, g) = (a[r][col], a[rank][col]);
                for c in 0..cols {
                    a[r][c] = a[r][c] * g - a[rank][c] * f;
                }
                let div = a[r].iter().fold(0i128, |acc, &x| gcd(acc, x));
                if div > 1 {
                    a[r].iter_mut().for_each(|x| *x /= div);
                }
            }
        }
        rank += 1;
    }
    rank
}

fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Minimum-norm least-squares solution of `A z = y`.
///
/// The row space of `A` is spanned by Gram-Schmidt; restricted to it the
/// problem has full column rank and is solved by Householder QR.
pub fn lstsq(a: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    let mut w: Vec<DVector<f64>> = Vec::new();
    let scale = a.amax().max(1.0);
    for row in a.row_iter() {
        let mut v = row.transpose();
        for _ in 0..2 {
            for q in &w {
                let proj = q.dot(&v);
                v -= q * proj;
            }
        }
        let n = v.norm();
        if n > 1e-9 * scale {
            w.push(v / n);
        }
    }
    if w.is_empty() {
        return DVector::zeros(a.ncols());
    }
    let w = DMatrix::from_columns(&w);
    let aw = a * &w;
    let qr = aw.qr();
    let rhs = qr.q().tr_mul(y);
    let c = qr.r().solve_upper_triangular(&rhs).unwrap();
    w * c
}

pub fn spd(r: &mut impl Rng, n: usize) -> DMatrix<f64> {
    let a = gaussian_mat(r, n, n);
    (&a * a.transpose()) / n.max(1) as f64 + DMatrix::identity(n, n) * 0.5
}

pub fn random_metrics(r: &mut impl Rng, ip: &IncidencePair) -> MetricSet {
    MetricSet {
        m0: spd(r, ip.num_vertices()),
        m1: spd(r, ip.num_edges()),
        m2: spd(r, ip.num_triangles()),
    }
}

/// Subgradient optimality residual of `(s-x)^T M1 (s-x) + lam s^T L s + gamma |s|_1`.
pub fn kkt_residual(
    m1: &DMatrix<f64>,
    l: &DMatrix<f64>,
    x: &DVector<f64>,
    lam: f64,
    gamma: f64,
    s: &DVector<f64>,
) -> f64 {
    let g = m1 * (s - x) * 2.0 + l * s * (2.0 * lam);
    let mut worst: f64 = 0.0;
    for i in 0..s.len() {
        let r = if s[i] != 0.0 {
            (g[i] + gamma * s[i].signum()).abs()
        } else {
            (g[i].abs() - gamma).max(0.0)
        };
        worst = worst.max(r);
    }
    worst
}
