//! Closed-form dual functions of quadratic instances.
//!
//! Dual variables are `rows x n` matrices, flattened row-major whenever
//! they act as vectors (`index = row * n + coordinate`), so a coupling
//! matrix `C` between rows lifts to `C (x) I_n`.
//!
//! Two formulations are covered. The centralized one dualizes the
//! reformulated Lagrangian
//!
//! ```text
//! H(x_1, X) - (mu/4M) ||X||^2 + (mu (M-1)/4M) ||x_1||^2 + <lambda, X - 1 x_1^T>
//! ```
//!
//! with `lambda` in `R^{(M-1) x n}`. The decentralized one dualizes
//! `H(X) + <lambda, U X>` with `U = sqrt(I - W)` and `lambda` in `R^{M x n}`.

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::problems::{reference_solution, ClientObjective, ProblemSpec};
use crate::topology::Topology;

/// Concave quadratic dual `Psi(lambda)`, stored through its gradient
/// `grad Psi(lambda) = linear - hessian * vec(lambda)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualQuadratic {
    /// Negated dual Hessian (positive semidefinite).
    pub hessian: Matrix,
    pub linear: Vector,
    /// Rows of the dual variable; the domain has `rows * n` coordinates.
    pub rows: usize,
    pub dim: usize,
    /// Orthonormal basis of `span(U) (x) I_n`; decentralized only.
    pub restriction_basis: Option<Matrix>,
}

impl DualQuadratic {
    pub fn domain_dim(&self) -> usize {
        self.rows * self.dim
    }

    /// Eigenvalues of the negated Hessian, restricted to the basis when one
    /// is present. Ascending.
    pub fn spectrum(&self) -> Vec<f64> {
        match &self.restriction_basis {
            Some(b) => linalg::sym_eigenvalues(&(b.transpose() * &self.hessian * b)),
            None => linalg::sym_eigenvalues(&self.hessian),
        }
    }

    /// `(smallest, largest)` eigenvalue of [`Self::spectrum`].
    pub fn extremes(&self) -> (f64, f64) {
        let s = self.spectrum();
        (s[0], s[s.len() - 1])
    }

    pub fn gradient(&self, lambda: &Matrix) -> Matrix {
        unvec(&(&self.linear - &self.hessian * vec(lambda)), self.dim)
    }
}

/// Flattens a matrix row-major.
pub fn vec(x: &Matrix) -> Vector {
    Vector::from_column_slice(x.transpose().as_slice())
}

/// Inverse of [`vec`] for `n` columns.
pub fn unvec(v: &Vector, n: usize) -> Matrix {
    Matrix::from_row_slice(v.len() / n, n, v.as_slice())
}

fn quadratic_parts(p: &ProblemSpec) -> Result<Vec<(&Matrix, &Vector)>> {
    (0..p.num_clients())
        .map(|m| match p.client(m)? {
            ClientObjective::Quadratic { hessian, linear } => Ok((hessian, linear)),
            _ => Err(Error::NotQuadratic),
        })
        .collect()
}

fn shifted_inverse(a: &Matrix, shift: f64, what: &str) -> Result<Matrix> {
    let n = a.nrows();
    (a + Matrix::identity(n, n) * shift)
        .try_inverse()
        .ok_or_else(|| Error::NoUniqueMinimizer(format!("{what} is singular")))
}

fn check_central(p: &ProblemSpec) -> Result<()> {
    if p.num_clients() < 2 {
        return Err(Error::InvalidParameter { name: "clients", reason: "the centralized dual needs M >= 2".into() });
    }
    if !(p.mu > 0.0) {
        return Err(Error::InvalidParameter { name: "mu", reason: "dual analysis needs mu > 0".into() });
    }
    Ok(())
}

fn check_dual_shape(lambda: &Matrix, rows: usize, n: usize) -> Result<()> {
    if lambda.nrows() != rows || lambda.ncols() != n {
        return Err(Error::Shape {
            expected: format!("{rows}x{n} dual"),
            got: format!("{}x{}", lambda.nrows(), lambda.ncols()),
        });
    }
    Ok(())
}

/// Per-block inverses `D_m = (A_m - mu/2 I)^{-1}` (workers) and
/// `C = (A_1 + mu (M-1)/2 I)^{-1}` (coordinator).
fn central_blocks(p: &ProblemSpec) -> Result<(Vec<Matrix>, Matrix)> {
    check_central(p)?;
    let parts = quadratic_parts(p)?;
    let m = p.num_clients() as f64;
    let coordinator = shifted_inverse(parts[0].0, 0.5 * p.mu * (m - 1.0), "coordinator block")?;
    let workers = parts[1..]
        .iter()
        .map(|(a, _)| shifted_inverse(a, -0.5 * p.mu, "worker block"))
        .collect::<Result<Vec<_>>>()?;
    Ok((workers, coordinator))
}

pub fn dual_hessian_centralized(p: &ProblemSpec) -> Result<DualQuadratic> {
    let (workers, coordinator) = central_blocks(p)?;
    let parts = quadratic_parts(p)?;
    let n = p.dim;
    let rows = p.num_clients() - 1;
    let m = p.num_clients() as f64;
    let mut hessian = Matrix::from_element(rows, rows, 1.0).kronecker(&coordinator) * m;
    let mut linear = Vector::zeros(rows * n);
    let pulled = &coordinator * parts[0].1;
    for (r, d) in workers.iter().enumerate() {
        let mut block = hessian.view_mut((r * n, r * n), (n, n));
        block += d * m;
        linear.rows_mut(r * n, n).copy_from(&(d * parts[r + 1].1 - &pulled));
    }
    Ok(DualQuadratic { hessian, linear, rows, dim: n, restriction_basis: None })
}

pub fn dual_hessian_decentralized(p: &ProblemSpec, t: &Topology) -> Result<DualQuadratic> {
    check_topology(p, t)?;
    let parts = quadratic_parts(p)?;
    let n = p.dim;
    let clients = p.num_clients();
    let m = clients as f64;
    let mut inner = Matrix::zeros(clients * n, clients * n);
    let mut own = Vector::zeros(clients * n);
    for (k, (a, b)) in parts.iter().enumerate() {
        let inv = shifted_inverse(a, 0.0, "client Hessian")?;
        own.rows_mut(k * n, n).copy_from(&(&inv * *b));
        inner.view_mut((k * n, k * n), (n, n)).copy_from(&(inv * m));
    }
    let identity = Matrix::identity(n, n);
    let lift = t.sqrt_laplacian().kronecker(&identity);
    let hessian = &lift * inner * &lift;
    let hessian = (&hessian + hessian.transpose()) * 0.5;
    let linear = &lift * own;
    let basis = t.span_basis().kronecker(&identity);
    Ok(DualQuadratic { hessian, linear, rows: clients, dim: n, restriction_basis: Some(basis) })
}

fn check_topology(p: &ProblemSpec, t: &Topology) -> Result<()> {
    if t.num_nodes() != p.num_clients() {
        return Err(Error::Shape {
            expected: format!("topology on {} nodes", p.num_clients()),
            got: format!("{} nodes", t.num_nodes()),
        });
    }
    if !(p.mu > 0.0) {
        return Err(Error::InvalidParameter { name: "mu", reason: "dual analysis needs mu > 0".into() });
    }
    Ok(())
}

/// Which Lagrangian a dual variable belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Formulation {
    /// Reformulated centralized Lagrangian; dual is `(M-1) x n`.
    CentralReformulated,
    /// Decentralized Lagrangian through `zeta = U lambda`; dual is `M x n`.
    Decentral,
}

/// Exact primal minimizers at a fixed dual.
///
/// Central: row 0 is the coordinator `x_1*`, rows `1..M` the workers.
/// Decentral: `dual` is `zeta` and row `m` is `A_m^{-1}(b_m - M zeta_m)`.
pub fn primal_argmin_given_dual(p: &ProblemSpec, dual: &Matrix, formulation: Formulation) -> Result<Matrix> {
    let parts = quadratic_parts(p)?;
    let n = p.dim;
    let clients = p.num_clients();
    let m = clients as f64;
    let mut out = Matrix::zeros(clients, n);
    match formulation {
        Formulation::CentralReformulated => {
            check_dual_shape(dual, clients.saturating_sub(1), n)?;
            let (workers, coordinator) = central_blocks(p)?;
            let total = dual.row_sum().transpose();
            out.set_row(0, &(&coordinator * (parts[0].1 + total * m)).transpose());
            for (r, d) in workers.iter().enumerate() {
                let rhs = parts[r + 1].1 - dual.row(r).transpose() * m;
                out.set_row(r + 1, &(d * rhs).transpose());
            }
        }
        Formulation::Decentral => {
            check_dual_shape(dual, clients, n)?;
            for (k, (a, b)) in parts.iter().enumerate() {
                let rhs = *b - dual.row(k).transpose() * m;
                let x = linalg::solve(a, &rhs)
                    .ok_or_else(|| Error::NoUniqueMinimizer(format!("Hessian of client {k} is singular")))?;
                out.set_row(k, &x.transpose());
            }
        }
    }
    Ok(out)
}

fn client_value(p: &ProblemSpec, m: usize, x: &Vector) -> Result<f64> {
    Ok(p.evaluate(m, x)?.0)
}

/// `Psi~(lambda)`: the reformulated Lagrangian evaluated at its minimizer.
pub fn central_dual_value(p: &ProblemSpec, lambda: &Matrix) -> Result<f64> {
    let x = primal_argmin_given_dual(p, lambda, Formulation::CentralReformulated)?;
    let m = p.num_clients() as f64;
    let coordinator = x.row(0).transpose();
    let mut value = client_value(p, 0, &coordinator)? / m + p.mu * (m - 1.0) / (4.0 * m) * coordinator.norm_squared();
    for r in 0..lambda.nrows() {
        let xm = x.row(r + 1).transpose();
        value += client_value(p, r + 1, &xm)? / m - p.mu / (4.0 * m) * xm.norm_squared();
        value += lambda.row(r).transpose().dot(&(&xm - &coordinator));
    }
    Ok(value)
}

/// `grad Psi~(lambda) = X*(lambda) - 1 x_1*(lambda)^T`.
pub fn central_dual_gradient(p: &ProblemSpec, lambda: &Matrix) -> Result<Matrix> {
    let x = primal_argmin_given_dual(p, lambda, Formulation::CentralReformulated)?;
    let coordinator = x.row(0).into_owned();
    let mut g = x.rows(1, lambda.nrows()).into_owned();
    for mut row in g.row_iter_mut() {
        row -= &coordinator;
    }
    Ok(g)
}

/// `Psi(lambda) = min_X H(X) + <lambda, U X>`.
pub fn decentral_dual_value(p: &ProblemSpec, t: &Topology, lambda: &Matrix) -> Result<f64> {
    check_topology(p, t)?;
    let zeta = t.sqrt_laplacian() * lambda;
    let x = primal_argmin_given_dual(p, &zeta, Formulation::Decentral)?;
    let m = p.num_clients() as f64;
    let mut value = zeta.dot(&x);
    for k in 0..p.num_clients() {
        value += client_value(p, k, &x.row(k).transpose())? / m;
    }
    Ok(value)
}

/// `grad Psi(lambda) = U X*(lambda)`.
pub fn decentral_dual_gradient(p: &ProblemSpec, t: &Topology, lambda: &Matrix) -> Result<Matrix> {
    check_topology(p, t)?;
    let u = t.sqrt_laplacian();
    let x = primal_argmin_given_dual(p, &(&u * lambda), Formulation::Decentral)?;
    Ok(u * x)
}

/// Central-difference gradient with step `1e-5 (1 + ||lambda||)`.
pub fn finite_difference_gradient(f: impl Fn(&Matrix) -> Result<f64>, lambda: &Matrix) -> Result<Matrix> {
    let h = 1e-5 * (1.0 + lambda.norm());
    let mut g = Matrix::zeros(lambda.nrows(), lambda.ncols());
    for i in 0..lambda.nrows() {
        for j in 0..lambda.ncols() {
            let mut up = lambda.clone();
            up[(i, j)] += h;
            let mut down = lambda.clone();
            down[(i, j)] -= h;
            g[(i, j)] = (f(&up)? - f(&down)?) / (2.0 * h);
        }
    }
    Ok(g)
}

/// Norm of the mean row of `zeta`: its component along the all-ones
/// direction, which `U` annihilates.
pub fn span_residual(zeta: &Matrix) -> f64 {
    if zeta.nrows() == 0 {
        return 0.0;
    }
    linalg::row_mean(zeta).norm()
}

/// Strong-concavity modulus on `span(U)`: `sigma_min(U)^2 M / L`.
pub fn monotonicity_modulus(p: &ProblemSpec, t: &Topology) -> f64 {
    let s = t.spectrum().sigma_min_u;
    s * s * p.num_clients() as f64 / p.smoothness
}

/// `<grad Psi(l2) - grad Psi(l1), l1 - l2> - modulus ||l1 - l2||^2`;
/// nonnegative whenever the strong-concavity inequality holds.
pub fn monotonicity_margin(p: &ProblemSpec, t: &Topology, l1: &Matrix, l2: &Matrix) -> Result<f64> {
    let g1 = decentral_dual_gradient(p, t, l1)?;
    let g2 = decentral_dual_gradient(p, t, l2)?;
    let diff = l1 - l2;
    Ok((g2 - g1).dot(&diff) - monotonicity_modulus(p, t) * diff.norm_squared())
}

/// Lipschitz constant of `lambda -> X*(lambda)`: the coupling's largest
/// singular value over the inner modulus.
pub fn argmin_lipschitz_bound(p: &ProblemSpec, formulation: Formulation, t: Option<&Topology>) -> Result<f64> {
    let m = p.num_clients() as f64;
    match formulation {
        // Coupling [I; -1^T] has sigma_max = sqrt(M); inner modulus mu/(2M).
        Formulation::CentralReformulated => Ok(m.sqrt() / (p.mu / (2.0 * m))),
        Formulation::Decentral => {
            let t = t.ok_or(Error::InvalidParameter { name: "topology", reason: "required for the decentral bound".into() })?;
            Ok(t.spectrum().sigma_max_u / (p.mu / m))
        }
    }
}

/// Moore-Penrose inverse of `U = sqrt(I - W)`.
pub fn sqrt_laplacian_pinv(t: &Topology) -> Matrix {
    let (values, vectors) = linalg::sym_eigen(&t.laplacian());
    let mut out = Matrix::zeros(values.len(), values.len());
    for (k, &v) in values.iter().enumerate() {
        if v > 1e-10 {
            let col = vectors.column(k);
            out += col * col.transpose() / v.sqrt();
        }
    }
    out
}

/// Saddle-point dual in `zeta` form: `zeta*_m = -grad F_m(x*) / M`.
pub fn optimal_zeta(p: &ProblemSpec) -> Result<Matrix> {
    let x_star = reference_solution(p)?.x_star;
    let m = p.num_clients() as f64;
    let mut zeta = Matrix::zeros(p.num_clients(), p.dim);
    for k in 0..p.num_clients() {
        let g = p.evaluate(k, &x_star)?.1;
        zeta.set_row(k, &(-g / m).transpose());
    }
    Ok(zeta)
}

/// Squared dual error `||lambda - lambda*||^2 = ||U^+ (zeta - zeta*)||^2`,
/// taking `pinv = U^+`.
pub fn dual_error(pinv: &Matrix, zeta: &Matrix, zeta_star: &Matrix) -> f64 {
    (pinv * (zeta - zeta_star)).norm_squared()
}

/// Nesterov ascent on a closed-form dual from `lambda = 0`:
/// `lambda+ = lt + step grad(lt)`, `lt+ = lambda+ + momentum (lambda+ - lambda)`.
/// Returns `lambda^0, ..., lambda^rounds`.
pub fn accelerated_dual_ascent(q: &DualQuadratic, step: f64, momentum: f64, rounds: usize) -> Vec<Matrix> {
    let mut lambda = Matrix::zeros(q.rows, q.dim);
    let mut tilde = lambda.clone();
    let mut out = Vec::with_capacity(rounds + 1);
    out.push(lambda.clone());
    for _ in 0..rounds {
        let next = &tilde + q.gradient(&tilde) * step;
        tilde = &next + (&next - &lambda) * momentum;
        lambda = next;
        out.push(lambda.clone());
    }
    out
}
