//! Small dense linear-algebra helpers on top of nalgebra.

// Float supplies sqrt/exp/ln when std is absent.
#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Eigenvalues (ascending) and matching eigenvectors (columns) of a
/// symmetric matrix.
pub fn sym_eigen(a: &Matrix) -> (Vec<f64>, Matrix) {
    let sym = (a + a.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = Matrix::zeros(a.nrows(), a.ncols());
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

pub fn sym_eigenvalues(a: &Matrix) -> Vec<f64> {
    sym_eigen(a).0
}

/// Solves `a x = b` for symmetric positive definite `a`, falling back to LU.
pub fn solve(a: &Matrix, b: &Vector) -> Option<Vector> {
    if let Some(chol) = a.clone().cholesky() {
        return Some(chol.solve(b));
    }
    a.clone().lu().solve(b)
}

/// Row mean of a stacked state (M x n) as a column vector.
pub fn row_mean(x: &Matrix) -> Vector {
    let m = x.nrows() as f64;
    let mut mean = Vector::zeros(x.ncols());
    for row in x.row_iter() {
        mean += row.transpose();
    }
    mean / m
}

/// `(1/M) sum_m ||x_m - xbar||^2`.
pub fn consensus_violation(x: &Matrix) -> f64 {
    let mean = row_mean(x);
    let total: f64 = x
        .row_iter()
        .map(|row| (row.transpose() - &mean).norm_squared())
        .sum();
    total / x.nrows() as f64
}

/// Matrix whose rows all equal `v`.
pub fn broadcast_rows(v: &Vector, rows: usize) -> Matrix {
    Matrix::from_fn(rows, v.len(), |_, j| v[j])
}

pub fn is_finite(x: &Matrix) -> bool {
    x.iter().all(|v| v.is_finite())
}

/// Largest absolute entry of `a - a^T`.
pub fn asymmetry(a: &Matrix) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..a.nrows() {
        for j in 0..i {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst
}
