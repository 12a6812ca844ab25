//! One-dimensional Legendre-Gauss-Lobatto building blocks.
//!
//! Everything in the tensor-product element is assembled from the 1D
//! objects constructed here: nodes and weights, the collocation derivative
//! matrix `D`, the diagonal mass matrix `M = diag(w)`, the boundary matrix
//! `B = diag(-1, 0, .., 0, 1)`, the nodal/modal transforms in an
//! orthonormal Legendre basis and the modal filters built from them.
//!
//! The matrices satisfy the summation-by-parts identity `MD + (MD)^T = B`.

use std::fmt;

use crate::error::{Error, Result};

/// Small dense row-major matrix. Operator matrices are at most 16x16, so
/// nothing more elaborate is needed.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Row `i` as a slice.
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Matrix) -> Self {
        assert_eq!(self.cols, other.rows, "matrix dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len(), "matrix-vector dimension mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn add(&self, other: &Matrix) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Matrix) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

/// Legendre polynomial `P_n(x)` and its derivative, by three-term recurrence.
pub fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p_prev, mut p) = (1.0, x);
    let (mut dp_prev, mut dp) = (0.0, 1.0);
    for k in 2..=n {
        let kf = k as f64;
        let p_next = ((2.0 * kf - 1.0) * x * p - (kf - 1.0) * p_prev) / kf;
        let dp_next = dp_prev + (2.0 * kf - 1.0) * p;
        p_prev = p;
        p = p_next;
        dp_prev = dp;
        dp = dp_next;
    }
    (p, dp)
}

/// Legendre polynomial normalized to unit L2 norm on `[-1, 1]`.
pub fn orthonormal_legendre(n: usize, x: f64) -> f64 {
    legendre_and_derivative(n, x).0 * ((2 * n + 1) as f64 / 2.0).sqrt()
}

const NEWTON_TOL: f64 = 1e-15;
const NEWTON_MAX_ITER: usize = 50;

/// Legendre-Gauss-Lobatto nodes and weights on `[-1, 1]` for degree `n`.
///
/// Interior nodes are the roots of `P'_n`, found by Newton iteration from
/// Chebyshev-Gauss-Lobatto guesses. Nodes are returned in ascending order
/// and are exactly antisymmetric.
pub fn lgl_nodes_weights(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "LGL quadrature needs polynomial degree N >= 1".into(),
        ));
    }
    let np = n + 1;
    let mut nodes = vec![0.0; np];
    nodes[0] = -1.0;
    nodes[n] = 1.0;
    // (1 - x^2) P'_n has the same interior roots as P'_n; Newton on P'_n
    // using P''_n from the Legendre ODE.
    for j in 1..=(n - 1) / 2 {
        let mut x = -(std::f64::consts::PI * j as f64 / n as f64).cos();
        for _ in 0..NEWTON_MAX_ITER {
            let (p, dp) = legendre_and_derivative(n, x);
            // (1 - x^2) P'' = 2x P' - n(n+1) P
            let ddp = (2.0 * x * dp - (n * (n + 1)) as f64 * p) / (1.0 - x * x);
            let delta = dp / ddp;
            x -= delta;
            if delta.abs() < NEWTON_TOL {
                break;
            }
        }
        nodes[j] = x;
        nodes[n - j] = -x;
    }
    if n % 2 == 0 {
        nodes[n / 2] = 0.0;
    }
    let scale = 2.0 / (n * (n + 1)) as f64;
    let weights = nodes
        .iter()
        .map(|&x| {
            let p = legendre_and_derivative(n, x).0;
            scale / (p * p)
        })
        .collect();
    Ok((nodes, weights))
}

/// Barycentric weights `1 / prod_{k != j} (x_j - x_k)`.
pub fn barycentric_weights(nodes: &[f64]) -> Result<Vec<f64>> {
    let mut w = vec![1.0; nodes.len()];
    for j in 0..nodes.len() {
        for k in 0..nodes.len() {
            if k != j {
                let d = nodes[j] - nodes[k];
                if d == 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "duplicate interpolation node {} at positions {k} and {j}",
                        nodes[j]
                    )));
                }
                w[j] *= d;
            }
        }
    }
    Ok(w.into_iter().map(|v| 1.0 / v).collect())
}

/// Collocation derivative matrix `D_ij = l'_j(x_i)`.
pub fn derivative_matrix(nodes: &[f64]) -> Result<Matrix> {
    let bw = barycentric_weights(nodes)?;
    let n = nodes.len();
    let mut d = Matrix::zeros(n, n);
    for i in 0..n {
        let mut diag = 0.0;
        for j in 0..n {
            if i != j {
                let v = bw[j] / bw[i] / (nodes[i] - nodes[j]);
                d[(i, j)] = v;
                diag -= v;
            }
        }
        // negative sum trick: rows annihilate constants to roundoff
        d[(i, i)] = diag;
    }
    Ok(d)
}

/// Lagrange basis of `source` evaluated at each of `target`.
///
/// Row `i` holds `l_j(target_i)`. Targets that coincide with a source node
/// produce an exact unit row.
pub fn interpolation_matrix(source: &[f64], target: &[f64]) -> Result<Matrix> {
    let bw = barycentric_weights(source)?;
    let mut m = Matrix::zeros(target.len(), source.len());
    for (i, &x) in target.iter().enumerate() {
        if let Some(j) = source.iter().position(|&s| s == x) {
            m[(i, j)] = 1.0;
            continue;
        }
        let terms: Vec<f64> = source
            .iter()
            .zip(&bw)
            .map(|(&s, &w)| w / (x - s))
            .collect();
        let denom: f64 = terms.iter().sum();
        for (j, t) in terms.iter().enumerate() {
            m[(i, j)] = t / denom;
        }
    }
    Ok(m)
}

/// Lagrange basis values `l_j(x)` at a single point.
pub fn lagrange_basis_at(source: &[f64], bary: &[f64], x: f64, out: &mut [f64]) {
    if let Some(j) = source.iter().position(|&s| s == x) {
        out.iter_mut().for_each(|v| *v = 0.0);
        out[j] = 1.0;
        return;
    }
    let mut denom = 0.0;
    for j in 0..source.len() {
        let t = bary[j] / (x - source[j]);
        out[j] = t;
        denom += t;
    }
    out.iter_mut().for_each(|v| *v /= denom);
}

/// Nodal-to-modal matrix for the orthonormal Legendre basis on LGL nodes.
///
/// LGL quadrature is exact up to degree `2N-1`, so the discrete transform is
/// `diag(1/g) V^T W` with `g_j` the discrete norms (exactly 1 except for the
/// top mode).
fn modal_transforms(nodes: &[f64], weights: &[f64]) -> (Matrix, Matrix) {
    let np = nodes.len();
    let vander = Matrix::from_fn(np, np, |i, j| orthonormal_legendre(j, nodes[i]));
    let norms: Vec<f64> = (0..np)
        .map(|j| (0..np).map(|i| weights[i] * vander[(i, j)].powi(2)).sum())
        .collect();
    let inv = Matrix::from_fn(np, np, |j, i| weights[i] * vander[(i, j)] / norms[j]);
    (vander, inv)
}

/// Precomputed 1D operators for one polynomial degree.
#[derive(Clone, Debug)]
pub struct OperatorSet {
    pub degree: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub bary: Vec<f64>,
    pub derivative: Matrix,
    pub mass: Matrix,
    pub boundary: Matrix,
    /// Vandermonde `V_ij = phi_j(x_i)`, modal-to-nodal.
    pub vandermonde: Matrix,
    /// `V^{-1}`, nodal-to-modal.
    pub vandermonde_inv: Matrix,
}

impl OperatorSet {
    pub fn new(degree: usize) -> Result<Self> {
        let (nodes, weights) = lgl_nodes_weights(degree)?;
        let derivative = derivative_matrix(&nodes)?;
        let bary = barycentric_weights(&nodes)?;
        let mass = Matrix::diag(&weights);
        let mut b = vec![0.0; degree + 1];
        b[0] = -1.0;
        b[degree] = 1.0;
        let boundary = Matrix::diag(&b);
        let (vandermonde, vandermonde_inv) = modal_transforms(&nodes, &weights);
        Ok(Self {
            degree,
            nodes,
            weights,
            bary,
            derivative,
            mass,
            boundary,
            vandermonde,
            vandermonde_inv,
        })
    }

    #[inline]
    pub fn n_points(&self) -> usize {
        self.degree + 1
    }

    /// `(MD) + (MD)^T - B`, zero up to roundoff.
    pub fn sbp_defect(&self) -> Matrix {
        let md = self.mass.matmul(&self.derivative);
        md.add(&md.transpose()).sub(&self.boundary)
    }

    /// Nodal filter scaling modal coefficient `j` by `sigma[j]`.
    pub fn modal_filter(&self, sigma: &[f64]) -> Matrix {
        assert_eq!(sigma.len(), self.n_points());
        let scaled = Matrix::from_fn(self.n_points(), self.n_points(), |j, i| {
            sigma[j] * self.vandermonde_inv[(j, i)]
        });
        self.vandermonde.matmul(&scaled)
    }

    /// Low-pass filter keeping Legendre modes `0..=cutoff`.
    pub fn cutoff_filter(&self, cutoff: usize) -> Result<Matrix> {
        modal_cutoff_check(self.degree, cutoff)?;
        let sigma: Vec<f64> = (0..self.n_points())
            .map(|j| if j <= cutoff { 1.0 } else { 0.0 })
            .collect();
        Ok(self.modal_filter(&sigma))
    }

    /// High-pass complement `I - F_cutoff`.
    pub fn high_pass_filter(&self, cutoff: usize) -> Result<Matrix> {
        Ok(Matrix::identity(self.n_points()).sub(&self.cutoff_filter(cutoff)?))
    }

    /// Interpolation from these nodes to another node set.
    pub fn interpolation_to(&self, target: &[f64]) -> Matrix {
        interpolation_matrix(&self.nodes, target).expect("LGL nodes are distinct")
    }

    /// Projection from a finer LGL grid of degree `self.degree` (this set)
    /// down to degree `low`: modal transform on this grid, drop modes above
    /// `low`, evaluate the remainder at the `low` nodes.
    pub fn projection_to(&self, low: &OperatorSet) -> Matrix {
        let nq = self.n_points();
        let nl = low.n_points();
        Matrix::from_fn(nl, nq, |i, m| {
            (0..nl)
                .map(|j| low.vandermonde[(i, j)] * self.vandermonde_inv[(j, m)])
                .sum()
        })
    }
}

fn modal_cutoff_check(degree: usize, cutoff: usize) -> Result<()> {
    if cutoff > degree {
        return Err(Error::InvalidArgument(format!(
            "modal cut-off {cutoff} exceeds polynomial degree {degree}"
        )));
    }
    Ok(())
}

/// Nodal-space matrix removing Legendre modes above `cutoff` for degree `degree`.
pub fn modal_cutoff_filter(degree: usize, cutoff: usize) -> Result<Matrix> {
    modal_cutoff_check(degree, cutoff)?;
    OperatorSet::new(degree)?.cutoff_filter(cutoff)
}

/// Over-integration degree `Q = floor(3/2 (N+1)) - 1`.
pub fn over_integration_degree(degree: usize) -> usize {
    3 * (degree + 1) / 2 - 1
}
