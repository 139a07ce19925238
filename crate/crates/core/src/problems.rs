//! Synthetic distributed objectives with certified constants, exact and
//! stochastic gradient oracles, and high-accuracy reference solutions.
//!
//! The global objective is `F(x) = (1/M) sum_m F_m(x)`. Each client exposes
//! its exact value and gradient and a stochastic gradient
//! `g_m(x) = grad F_m(x) + e` where `e` is isotropic Gaussian with
//! per-coordinate variance `sigma^2 / n`, so `E||e||^2 = sigma^2` exactly.

// Float supplies sqrt/exp/ln when std is absent.
#[allow(unused_imports)]
use num_traits::Float;
use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::rng::{self, Stream};

/// Relative slack used when checking Hessian spectra against `[mu, L]`.
const SPECTRUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ConvexityClass {
    StronglyConvex,
    Convex,
    Nonconvex,
}

/// Binary classification data held by one client. Labels are `+1` / `-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticData {
    pub features: Matrix,
    pub labels: Vector,
    pub l2: f64,
}

impl LogisticData {
    fn samples(&self) -> f64 {
        self.features.nrows() as f64
    }

    fn value_grad(&self, x: &Vector) -> (f64, Vector) {
        let margins = &self.features * x;
        let mut value = 0.0;
        let mut weights = Vector::zeros(margins.len());
        for (i, z) in margins.iter().enumerate() {
            let yz = self.labels[i] * z;
            value += softplus(-yz);
            // d/dz log(1 + exp(-y z)) = -y * sigmoid(-y z)
            weights[i] = -self.labels[i] * sigmoid(-yz);
        }
        let n = self.samples();
        let grad = self.features.transpose() * weights / n + x * self.l2;
        (value / n + 0.5 * self.l2 * x.norm_squared(), grad)
    }

    fn hessian(&self, x: &Vector) -> Matrix {
        let margins = &self.features * x;
        let dim = x.len();
        let mut h = Matrix::identity(dim, dim) * self.l2;
        let n = self.samples();
        for (i, z) in margins.iter().enumerate() {
            let s = sigmoid(*z);
            let row = self.features.row(i);
            h += row.transpose() * row * (s * (1.0 - s) / n);
        }
        h
    }

    /// `lambda_max(A^T A) / (4N) + l2`.
    fn smoothness(&self) -> f64 {
        let gram = self.features.transpose() * &self.features;
        let top = linalg::sym_eigenvalues(&gram).last().copied().unwrap_or(0.0);
        top / (4.0 * self.samples()) + self.l2
    }
}

fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Bounded nonconvex penalty `t^2 / (1 + t^2)`; its second derivative lies
/// in `[-1/2, 2]`.
fn penalty_terms(t: f64) -> (f64, f64, f64) {
    let d = 1.0 + t * t;
    (t * t / d, 2.0 * t / (d * d), (2.0 - 6.0 * t * t) / (d * d * d))
}

/// One client's local objective.
#[derive(Debug, Clone, PartialEq)]
pub enum ClientObjective {
    /// `1/2 x^T A x - b^T x`.
    Quadratic { hessian: Matrix, linear: Vector },
    /// l2-regularized logistic loss.
    Logistic(LogisticData),
    /// Logistic loss plus `penalty * sum_j x_j^2 / (1 + x_j^2)`.
    PenalizedLogistic { data: LogisticData, penalty: f64 },
    /// `base(x) + weight * ||x - center||^2`.
    Proximal {
        base: Box<ClientObjective>,
        weight: f64,
        center: Vector,
    },
}

impl ClientObjective {
    pub fn dim(&self) -> usize {
        match self {
            ClientObjective::Quadratic { linear, .. } => linear.len(),
            ClientObjective::Logistic(d) => d.features.ncols(),
            ClientObjective::PenalizedLogistic { data, .. } => data.features.ncols(),
            ClientObjective::Proximal { center, .. } => center.len(),
        }
    }

    pub fn is_quadratic(&self) -> bool {
        matches!(self, ClientObjective::Quadratic { .. })
    }

    pub fn value_grad(&self, x: &Vector) -> (f64, Vector) {
        match self {
            ClientObjective::Quadratic { hessian, linear } => {
                let ax = hessian * x;
                (0.5 * x.dot(&ax) - linear.dot(x), ax - linear)
            }
            ClientObjective::Logistic(d) => d.value_grad(x),
            ClientObjective::PenalizedLogistic { data, penalty } => {
                let (mut value, mut grad) = data.value_grad(x);
                for j in 0..x.len() {
                    let (v, g, _) = penalty_terms(x[j]);
                    value += penalty * v;
                    grad[j] += penalty * g;
                }
                (value, grad)
            }
            ClientObjective::Proximal { base, weight, center } => {
                let (value, grad) = base.value_grad(x);
                let diff = x - center;
                (value + weight * diff.norm_squared(), grad + diff * (2.0 * weight))
            }
        }
    }

    pub fn hessian(&self, x: &Vector) -> Matrix {
        match self {
            ClientObjective::Quadratic { hessian, .. } => hessian.clone(),
            ClientObjective::Logistic(d) => d.hessian(x),
            ClientObjective::PenalizedLogistic { data, penalty } => {
                let mut h = data.hessian(x);
                for j in 0..x.len() {
                    h[(j, j)] += penalty * penalty_terms(x[j]).2;
                }
                h
            }
            ClientObjective::Proximal { base, weight, .. } => {
                let n = self.dim();
                base.hessian(x) + Matrix::identity(n, n) * (2.0 * weight)
            }
        }
    }
}

/// A family of `M` client objectives with certified constants.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub clients: Vec<ClientObjective>,
    pub dim: usize,
    /// Strong-convexity modulus (0 for convex and nonconvex families).
    pub mu: f64,
    /// Smoothness constant `L` shared by every client.
    pub smoothness: f64,
    /// Bound on the stochastic-gradient noise: `E||e||^2 = sigma^2`.
    pub sigma: f64,
    pub class: ConvexityClass,
}

impl ProblemSpec {
    /// Builds a problem and checks its invariants: consistent dimensions,
    /// `0 <= mu <= L`, and for quadratic clients `mu I <= A_m <= L I`.
    pub fn new(
        clients: Vec<ClientObjective>,
        mu: f64,
        smoothness: f64,
        sigma: f64,
        class: ConvexityClass,
    ) -> Result<Self> {
        let Some(first) = clients.first() else {
            return Err(Error::InvalidConstants("at least one client is required".into()));
        };
        let dim = first.dim();
        if dim == 0 {
            return Err(Error::InvalidConstants("dimension must be positive".into()));
        }
        if !(smoothness > 0.0 && smoothness.is_finite()) {
            return Err(Error::InvalidConstants(format!("L = {smoothness} must be positive")));
        }
        if !(mu >= 0.0 && mu <= smoothness) {
            return Err(Error::InvalidConstants(format!(
                "mu = {mu} must satisfy 0 <= mu <= L = {smoothness}"
            )));
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidConstants(format!("sigma = {sigma} must be >= 0")));
        }
        if class == ConvexityClass::StronglyConvex && mu <= 0.0 {
            return Err(Error::InvalidConstants("strongly convex class needs mu > 0".into()));
        }
        for (m, client) in clients.iter().enumerate() {
            if client.dim() != dim {
                return Err(Error::Shape {
                    expected: format!("dimension {dim}"),
                    got: format!("client {m} with dimension {}", client.dim()),
                });
            }
            if let ClientObjective::Quadratic { hessian, .. } = client {
                if hessian.nrows() != dim || hessian.ncols() != dim {
                    return Err(Error::Shape {
                        expected: format!("{dim}x{dim} Hessian"),
                        got: format!("{}x{} for client {m}", hessian.nrows(), hessian.ncols()),
                    });
                }
                if linalg::asymmetry(hessian) > 1e-12 * (1.0 + smoothness) {
                    return Err(Error::InvalidConstants(format!("client {m}: Hessian not symmetric")));
                }
                let eig = linalg::sym_eigenvalues(hessian);
                let slack = SPECTRUM_TOL * smoothness;
                if eig[0] < mu - slack || eig[dim - 1] > smoothness + slack {
                    return Err(Error::InvalidConstants(format!(
                        "client {m}: Hessian spectrum [{}, {}] outside [{mu}, {smoothness}]",
                        eig[0],
                        eig[dim - 1]
                    )));
                }
            }
        }
        Ok(Self { clients, dim, mu, smoothness, sigma, class })
    }

    pub fn num_clients(&self) -> usize {
        self.clients.len()
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }

    pub fn is_quadratic(&self) -> bool {
        self.clients.iter().all(ClientObjective::is_quadratic)
    }

    pub fn client(&self, m: usize) -> Result<&ClientObjective> {
        self.clients.get(m).ok_or(Error::ClientIndex { index: m, clients: self.clients.len() })
    }

    /// Exact `F_m(x)` and `grad F_m(x)` for zero-based client `m`.
    pub fn evaluate(&self, m: usize, x: &Vector) -> Result<(f64, Vector)> {
        let client = self.client(m)?;
        if x.len() != self.dim {
            return Err(Error::Shape { expected: format!("dimension {}", self.dim), got: format!("{}", x.len()) });
        }
        Ok(client.value_grad(x))
    }

    /// One draw of the stochastic gradient oracle; advances `stream`.
    pub fn stoch_grad(&self, m: usize, x: &Vector, stream: &mut Stream) -> Result<Vector> {
        let (_, mut grad) = self.evaluate(m, x)?;
        if self.sigma > 0.0 {
            let scale = self.sigma / (self.dim as f64).sqrt();
            for g in grad.iter_mut() {
                let z: f64 = StandardNormal.sample(stream);
                *g += scale * z;
            }
        }
        Ok(grad)
    }

    /// `F(x)` and `grad F(x)` of the averaged objective.
    pub fn global_value_grad(&self, x: &Vector) -> (f64, Vector) {
        let m = self.num_clients() as f64;
        let mut value = 0.0;
        let mut grad = Vector::zeros(self.dim);
        for client in &self.clients {
            let (v, g) = client.value_grad(x);
            value += v;
            grad += g;
        }
        (value / m, grad / m)
    }

    pub fn global_hessian(&self, x: &Vector) -> Matrix {
        let m = self.num_clients() as f64;
        let mut h = Matrix::zeros(self.dim, self.dim);
        for client in &self.clients {
            h += client.hessian(x);
        }
        h / m
    }

    /// `(A_bar, b_bar)` when every client is quadratic.
    pub fn mean_quadratic(&self) -> Option<(Matrix, Vector)> {
        let m = self.num_clients() as f64;
        let mut a = Matrix::zeros(self.dim, self.dim);
        let mut b = Vector::zeros(self.dim);
        for client in &self.clients {
            let ClientObjective::Quadratic { hessian, linear } = client else {
                return None;
            };
            a += hessian;
            b += linear;
        }
        Some((a / m, b / m))
    }
}

/// Generates `M` quadratic clients `F_m(x) = 1/2 x^T A_m x - b_m^T x`.
///
/// `A_m = Q_m diag(d) Q_m^T` with a seeded random orthogonal `Q_m` and
/// eigenvalues log-uniform in `[mu, L]`; when `n >= 2` both endpoints are
/// always present. For `n = 1` clients alternate between `mu` and `L`.
/// `b_m = b_bar + heterogeneity * u_m` with seeded unit directions `u_m`.
pub fn make_quadratic(
    seed: u64,
    num_clients: usize,
    dim: usize,
    mu: f64,
    smoothness: f64,
    heterogeneity: f64,
) -> Result<ProblemSpec> {
    if !(mu > 0.0 && mu <= smoothness) {
        return Err(Error::InvalidConstants(format!(
            "need 0 < mu <= L, got mu = {mu}, L = {smoothness}"
        )));
    }
    if num_clients == 0 || dim == 0 {
        return Err(Error::InvalidConstants("M and n must be positive".into()));
    }
    if !(heterogeneity >= 0.0) {
        return Err(Error::InvalidConstants("heterogeneity must be >= 0".into()));
    }
    let mut shared = rng::generator_stream(seed, u64::MAX);
    let center = gaussian_vector(dim, &mut shared);
    let (log_lo, log_hi) = (mu.ln(), smoothness.ln());
    let mut clients = Vec::with_capacity(num_clients);
    for m in 0..num_clients {
        let mut stream = rng::generator_stream(seed, m as u64);
        let spectrum: Vec<f64> = if dim == 1 {
            alloc::vec![if m % 2 == 0 { mu } else { smoothness }]
        } else {
            (0..dim)
                .map(|i| match i {
                    0 => mu,
                    i if i == dim - 1 => smoothness,
                    _ => (log_lo + (log_hi - log_lo) * stream.random::<f64>()).exp(),
                })
                .collect()
        };
        let q = random_orthogonal(dim, &mut stream);
        let hessian = &q * Matrix::from_diagonal(&Vector::from_vec(spectrum)) * q.transpose();
        let hessian = (&hessian + hessian.transpose()) * 0.5;
        let direction = gaussian_vector(dim, &mut stream);
        let norm = direction.norm();
        let unit = if norm > 0.0 { direction / norm } else { Vector::zeros(dim) };
        let linear = &center + unit * heterogeneity;
        clients.push(ClientObjective::Quadratic { hessian, linear });
    }
    ProblemSpec::new(clients, mu, smoothness, 0.0, ConvexityClass::StronglyConvex)
}

/// `M` copies of a single generated quadratic client (no heterogeneity at
/// all, Hessians included).
pub fn make_identical_quadratic(
    seed: u64,
    num_clients: usize,
    dim: usize,
    mu: f64,
    smoothness: f64,
) -> Result<ProblemSpec> {
    let single = make_quadratic(seed, 1, dim, mu, smoothness, 0.0)?;
    let client = single.clients.into_iter().next().expect("one client");
    let clients = (0..num_clients).map(|_| client.clone()).collect();
    ProblemSpec::new(clients, mu, smoothness, 0.0, ConvexityClass::StronglyConvex)
}

/// Generates l2-regularized logistic regression clients. Client features
/// are shifted by `heterogeneity` along a client-specific direction; labels
/// come from a shared planted model with 10% label flips.
pub fn make_logistic(
    seed: u64,
    num_clients: usize,
    dim: usize,
    samples: usize,
    l2: f64,
    heterogeneity: f64,
) -> Result<ProblemSpec> {
    let datasets = logistic_datasets(seed, num_clients, dim, samples, l2, heterogeneity)?;
    let smoothness = datasets.iter().map(LogisticData::smoothness).fold(0.0, f64::max);
    let class = if l2 > 0.0 { ConvexityClass::StronglyConvex } else { ConvexityClass::Convex };
    let clients = datasets.into_iter().map(ClientObjective::Logistic).collect();
    ProblemSpec::new(clients, l2, smoothness, 0.0, class)
}

/// Logistic clients plus the bounded penalty `penalty * sum_j x_j^2/(1+x_j^2)`.
/// `L` sums the logistic bound, `l2`, and `2 * penalty`.
pub fn make_nonconvex(
    seed: u64,
    num_clients: usize,
    dim: usize,
    samples: usize,
    l2: f64,
    penalty: f64,
    heterogeneity: f64,
) -> Result<ProblemSpec> {
    if !(penalty >= 0.0) {
        return Err(Error::InvalidConstants("penalty must be >= 0".into()));
    }
    let datasets = logistic_datasets(seed, num_clients, dim, samples, l2, heterogeneity)?;
    let smoothness = datasets
        .iter()
        .map(|d| d.smoothness() + 2.0 * penalty)
        .fold(0.0, f64::max);
    let clients = datasets
        .into_iter()
        .map(|data| ClientObjective::PenalizedLogistic { data, penalty })
        .collect();
    ProblemSpec::new(clients, 0.0, smoothness, 0.0, ConvexityClass::Nonconvex)
}

fn logistic_datasets(
    seed: u64,
    num_clients: usize,
    dim: usize,
    samples: usize,
    l2: f64,
    heterogeneity: f64,
) -> Result<Vec<LogisticData>> {
    if num_clients == 0 || dim == 0 || samples == 0 {
        return Err(Error::InvalidConstants("M, n and samples must be positive".into()));
    }
    if !(l2 >= 0.0) {
        return Err(Error::InvalidConstants("l2 must be >= 0".into()));
    }
    let mut shared = rng::generator_stream(seed, u64::MAX);
    let planted = gaussian_vector(dim, &mut shared);
    Ok((0..num_clients)
        .map(|m| {
            let mut stream = rng::generator_stream(seed, m as u64);
            let shift = gaussian_vector(dim, &mut stream) * heterogeneity;
            let features = Matrix::from_fn(samples, dim, |_, j| {
                let z: f64 = StandardNormal.sample(&mut stream);
                z + shift[j]
            });
            let labels = Vector::from_fn(samples, |i, _| {
                let sign = if features.row(i).dot(&planted.transpose()) >= 0.0 { 1.0 } else { -1.0 };
                if stream.random::<f64>() < 0.1 {
                    -sign
                } else {
                    sign
                }
            });
            LogisticData { features, labels, l2 }
        })
        .collect())
}

fn gaussian_vector(dim: usize, stream: &mut Stream) -> Vector {
    Vector::from_fn(dim, |_, _| StandardNormal.sample(stream))
}

/// Haar-distributed orthogonal matrix via QR with sign correction.
fn random_orthogonal(dim: usize, stream: &mut Stream) -> Matrix {
    let g = Matrix::from_fn(dim, dim, |_, _| StandardNormal.sample(stream));
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolutionMethod {
    ClosedForm,
    HighAccuracyIterative,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSolution {
    pub x_star: Vector,
    pub f_star: f64,
    pub method: SolutionMethod,
    /// Norm of the full gradient at `x_star`.
    pub residual: f64,
}

/// Minimizer of the averaged objective. Quadratics use a direct solve of
/// `A_bar x = b_bar`; other convex families use damped Newton iterations.
pub fn reference_solution(p: &ProblemSpec) -> Result<ReferenceSolution> {
    if p.class == ConvexityClass::Nonconvex {
        return Err(Error::InvalidParameter {
            name: "convexity_class",
            reason: "no reference minimizer for nonconvex problems".into(),
        });
    }
    if let Some((a, b)) = p.mean_quadratic() {
        let eig = linalg::sym_eigenvalues(&a);
        if eig[0] <= 1e-14 * p.smoothness {
            return Err(Error::NoUniqueMinimizer(format!("mean Hessian has eigenvalue {}", eig[0])));
        }
        let x_star = linalg::solve(&a, &b)
            .ok_or_else(|| Error::NoUniqueMinimizer("singular mean Hessian".into()))?;
        let (f_star, grad) = p.global_value_grad(&x_star);
        return Ok(ReferenceSolution { x_star, f_star, method: SolutionMethod::ClosedForm, residual: grad.norm() });
    }
    let x_star = newton_minimize(p, Vector::zeros(p.dim))?;
    let (f_star, grad) = p.global_value_grad(&x_star);
    Ok(ReferenceSolution {
        x_star,
        f_star,
        method: SolutionMethod::HighAccuracyIterative,
        residual: grad.norm(),
    })
}

fn newton_minimize(p: &ProblemSpec, mut x: Vector) -> Result<Vector> {
    let tol = 1e-12 * p.smoothness;
    for _ in 0..500 {
        let (value, grad) = p.global_value_grad(&x);
        if grad.norm() <= tol * (1.0 + x.norm()) {
            return Ok(x);
        }
        let h = p.global_hessian(&x);
        let direction = match linalg::solve(&h, &grad) {
            Some(d) if d.dot(&grad) > 0.0 => d,
            _ => grad.clone() / p.smoothness,
        };
        let mut step = 1.0;
        loop {
            let candidate = &x - &direction * step;
            let (v, _) = p.global_value_grad(&candidate);
            if v <= value - 1e-4 * step * direction.dot(&grad) || step < 1e-12 {
                x = candidate;
                break;
            }
            step *= 0.5;
        }
    }
    let (_, grad) = p.global_value_grad(&x);
    if grad.norm() <= 1e-10 * p.smoothness * (1.0 + x.norm()) {
        Ok(x)
    } else {
        Err(Error::NoUniqueMinimizer(format!("Newton iterations stalled at residual {:e}", grad.norm())))
    }
}

/// Plain gradient descent with step `1/L` for `iters` steps; returns the best
/// objective value seen and its point. Used to estimate `F*` when no
/// reference minimizer exists.
pub fn reference_descent(p: &ProblemSpec, x0: &Vector, iters: usize) -> (f64, Vector) {
    let mut x = x0.clone();
    let (mut best, _) = p.global_value_grad(&x);
    let mut best_x = x.clone();
    for _ in 0..iters {
        let (_, grad) = p.global_value_grad(&x);
        x -= grad / p.smoothness;
        let (v, _) = p.global_value_grad(&x);
        if v < best {
            best = v;
            best_x = x.clone();
        }
    }
    (best, best_x)
}

/// Suboptimality measurement against an independently computed reference.
#[derive(Debug, Clone)]
pub enum GapOracle {
    /// `1/2 (x - x*)^T A_bar (x - x*)`, exact for quadratics without cancellation.
    Quadratic { x_star: Vector, mean_hessian: Matrix },
    /// `F(x) - F*` using a high-accuracy reference value.
    Value { f_star: f64 },
    /// `||grad F(x)||^2`, reported for nonconvex problems.
    GradNormSquared,
    /// Strong-convexity bound `||grad F(x)||^2 / (2 modulus)` on the gap.
    Surrogate { modulus: f64 },
}

impl GapOracle {
    /// Metric for run records: exact gap for convex problems, squared
    /// gradient norm for nonconvex ones.
    pub fn for_problem(p: &ProblemSpec) -> Result<Self> {
        if p.class == ConvexityClass::Nonconvex {
            return Ok(GapOracle::GradNormSquared);
        }
        let reference = reference_solution(p)?;
        Ok(match p.mean_quadratic() {
            Some((mean_hessian, _)) => GapOracle::Quadratic { x_star: reference.x_star, mean_hessian },
            None => GapOracle::Value { f_star: reference.f_star },
        })
    }

    /// Certified upper bound on `F(x) - min F` for a strongly convex problem:
    /// exact for quadratics, strong-convexity surrogate otherwise.
    pub fn certifier(p: &ProblemSpec) -> Result<Self> {
        if p.is_quadratic() {
            return Self::for_problem(p);
        }
        if !(p.mu > 0.0) {
            return Err(Error::InvalidParameter {
                name: "mu",
                reason: "gap certification needs a strongly convex problem".into(),
            });
        }
        Ok(GapOracle::Surrogate { modulus: p.mu })
    }

    pub fn gap(&self, p: &ProblemSpec, x: &Vector) -> f64 {
        match self {
            GapOracle::Quadratic { x_star, mean_hessian } => {
                let d = x - x_star;
                0.5 * d.dot(&(mean_hessian * &d))
            }
            GapOracle::Value { f_star } => p.global_value_grad(x).0 - f_star,
            GapOracle::GradNormSquared => p.global_value_grad(x).1.norm_squared(),
            GapOracle::Surrogate { modulus } => p.global_value_grad(x).1.norm_squared() / (2.0 * modulus),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;

    #[test]
    fn generated_spectra_lie_in_range() {
        let p = make_quadratic(7, 4, 5, 1.0, 10.0, 1.0).unwrap();
        for client in &p.clients {
            let ClientObjective::Quadratic { hessian, .. } = client else { unreachable!() };
            let eig = linalg::sym_eigenvalues(hessian);
            assert!(eig[0] >= 1.0 - 1e-9 && eig[4] <= 10.0 + 1e-9, "{eig:?}");
            assert_relative_eq!(eig[0], 1.0, epsilon = 1e-9);
            assert_relative_eq!(eig[4], 10.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn one_dimensional_single_client() {
        let p = make_quadratic(0, 1, 1, 1.0, 1.0, 0.0).unwrap();
        let ClientObjective::Quadratic { hessian, linear } = &p.clients[0] else { unreachable!() };
        assert_relative_eq!(hessian[(0, 0)], 1.0, epsilon = 1e-15);
        let r = reference_solution(&p).unwrap();
        assert_relative_eq!(r.x_star[0], linear[0], epsilon = 1e-14);
        assert_eq!(r.method, SolutionMethod::ClosedForm);
    }

    #[test]
    fn generation_is_deterministic() {
        let a = make_quadratic(11, 3, 4, 0.5, 20.0, 2.0).unwrap();
        let b = make_quadratic(11, 3, 4, 0.5, 20.0, 2.0).unwrap();
        assert_eq!(a, b);
        let c = make_quadratic(12, 3, 4, 0.5, 20.0, 2.0).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn invalid_constants_rejected() {
        assert!(matches!(make_quadratic(0, 2, 2, 0.0, 1.0, 0.0), Err(Error::InvalidConstants(_))));
        assert!(matches!(make_quadratic(0, 2, 2, 2.0, 1.0, 0.0), Err(Error::InvalidConstants(_))));
    }

    #[test]
    fn evaluate_analytic_quadratic() {
        let client = ClientObjective::Quadratic {
            hessian: Matrix::identity(2, 2) * 2.0,
            linear: Vector::zeros(2),
        };
        let p = ProblemSpec::new(alloc::vec![client], 2.0, 2.0, 0.0, ConvexityClass::StronglyConvex).unwrap();
        let (v, g) = p.evaluate(0, &Vector::from_vec(alloc::vec![1.0, 0.0])).unwrap();
        assert_eq!(v, 1.0);
        assert_eq!(g, Vector::from_vec(alloc::vec![2.0, 0.0]));
        assert!(matches!(p.evaluate(1, &Vector::zeros(2)), Err(Error::ClientIndex { index: 1, clients: 1 })));
    }

    #[test]
    fn logistic_with_zero_features_has_zero_gradient_at_origin() {
        let data = LogisticData {
            features: Matrix::zeros(4, 3),
            labels: Vector::from_vec(alloc::vec![1.0, -1.0, 1.0, -1.0]),
            l2: 0.1,
        };
        let (v, g) = ClientObjective::Logistic(data).value_grad(&Vector::zeros(3));
        assert_relative_eq!(v, 2.0_f64.ln(), epsilon = 1e-15);
        assert_eq!(g.norm(), 0.0);
    }

    #[test]
    fn reference_gradient_vanishes() {
        let p = make_quadratic(7, 4, 5, 1.0, 10.0, 1.0).unwrap();
        let r = reference_solution(&p).unwrap();
        let mut mean = Vector::zeros(5);
        for m in 0..4 {
            mean += p.evaluate(m, &r.x_star).unwrap().1;
        }
        assert!((mean / 4.0).norm() <= 1e-10 * p.smoothness);
        assert!(r.residual <= 1e-10 * p.smoothness * (1.0 + r.x_star.norm()));
    }

    #[test]
    fn two_client_closed_form() {
        let q = |b: f64| ClientObjective::Quadratic {
            hessian: Matrix::identity(1, 1),
            linear: Vector::from_element(1, b),
        };
        let p = ProblemSpec::new(alloc::vec![q(2.0), q(0.0)], 1.0, 1.0, 0.0, ConvexityClass::StronglyConvex).unwrap();
        let r = reference_solution(&p).unwrap();
        assert_relative_eq!(r.x_star[0], 1.0, epsilon = 1e-15);
        assert_relative_eq!(r.f_star, -0.5, epsilon = 1e-15);
    }

    #[test]
    fn isotropic_and_homogeneous_minimizers() {
        let p = make_quadratic(3, 3, 4, 5.0, 5.0, 1.0).unwrap();
        let (_, b_bar) = p.mean_quadratic().unwrap();
        let r = reference_solution(&p).unwrap();
        assert!((r.x_star - b_bar / 5.0).norm() < 1e-12);

        let p = make_identical_quadratic(3, 3, 4, 1.0, 5.0).unwrap();
        let r = reference_solution(&p).unwrap();
        let ClientObjective::Quadratic { hessian, linear } = &p.clients[1] else { unreachable!() };
        let own = linalg::solve(hessian, linear).unwrap();
        assert!((r.x_star - own).norm() < 1e-12);
    }

    #[test]
    fn logistic_reference_is_iterative_and_accurate() {
        let p = make_logistic(5, 3, 4, 40, 0.1, 0.5).unwrap();
        let r = reference_solution(&p).unwrap();
        assert_eq!(r.method, SolutionMethod::HighAccuracyIterative);
        assert!(r.residual <= 1e-10 * p.smoothness * (1.0 + r.x_star.norm()));
        // fixed point of one exact gradient step
        let (_, g) = p.global_value_grad(&r.x_star);
        assert!((g / p.smoothness).norm() <= 1e-9);
    }

    #[test]
    fn zero_sigma_is_exact() {
        let p = make_quadratic(1, 2, 3, 1.0, 4.0, 1.0).unwrap();
        let mut stream = Stream::seed_from_u64(9);
        let x = Vector::from_vec(alloc::vec![0.3, -1.0, 2.0]);
        assert_eq!(p.stoch_grad(1, &x, &mut stream).unwrap(), p.evaluate(1, &x).unwrap().1);
    }

    #[test]
    fn nonconvex_instance_has_negative_curvature_somewhere() {
        let p = make_nonconvex(2, 2, 3, 30, 1e-3, 1.0, 0.5).unwrap();
        let x = Vector::from_element(3, 1.0);
        let eig = linalg::sym_eigenvalues(&p.global_hessian(&x));
        assert!(eig[0] < 0.0);
        assert!(eig[2] <= p.smoothness);
    }
}
