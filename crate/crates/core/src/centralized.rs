//! GA-MSGD: gradient ascent on the dual of the reformulated centralized
//! Lagrangian with multiple local SGD steps on the primal.
//!
//! Client 0 is the coordinator holding `x_1`; clients `1..M` are workers,
//! each with one dual row `lambda_m` for the constraint `x_m = x_1`. The
//! reformulated Lagrangian subtracts `(mu/4M)||x_m||^2` from every worker and
//! adds `(mu (M-1)/4M)||x_1||^2` to the coordinator.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::local::{InnerSolver, LocalProblem, StepRule};
use crate::params;
use crate::problems::{ConvexityClass, GapOracle, ProblemSpec};
use crate::record::{self, Clock, Guard, NoClock, RoundAlgorithm, RunRecord};
use crate::rng::{self, Stream};

/// Initial dual variable.
#[derive(Debug, Clone, PartialEq)]
pub enum DualInit {
    /// `lambda_m = -(1/M) g_m(x0) + (L / 2M) x0`.
    PaperL,
    /// `lambda_m = -(1/M) g_m(x0) + (mu / 2M) x0`, the first-order optimality
    /// form of the reformulated Lagrangian.
    OptimalityMu,
    Zero,
    Given(Matrix),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaMsgdParams {
    pub rounds: usize,
    pub inner: InnerSolver,
    /// Dual step; `None` resolves to `mu / (4M)`.
    pub dual_step: Option<f64>,
    pub init: DualInit,
    /// Shared initial point; zero when `None`.
    pub x0: Option<Vector>,
}

impl GaMsgdParams {
    pub fn new(rounds: usize, inner: InnerSolver) -> Self {
        Self { rounds, inner, dual_step: None, init: DualInit::PaperL, x0: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CentralState {
    /// Row 0 is the coordinator `x_1`, rows `1..M` the workers.
    pub primal: Matrix,
    /// One row per consensus constraint `x_m = x_1`, `m = 2..M`.
    pub lambda: Matrix,
    pub round: usize,
    pub samples_per_client: usize,
}

/// Computes `lambda^0` from one stochastic gradient per worker. Row `r`
/// belongs to client `r + 1`; `streams[m]` must be client `m`'s stream.
pub fn init_dual_centralized(p: &ProblemSpec, x0: &Vector, mode: &DualInit, streams: &mut [Stream]) -> Result<Matrix> {
    let m = p.num_clients();
    let coefficient = match mode {
        DualInit::PaperL => p.smoothness / (2.0 * m as f64),
        DualInit::OptimalityMu => p.mu / (2.0 * m as f64),
        DualInit::Zero => return Ok(Matrix::zeros(m - 1, p.dim)),
        DualInit::Given(lambda) => {
            if lambda.nrows() != m - 1 || lambda.ncols() != p.dim {
                return Err(Error::Shape {
                    expected: alloc::format!("{}x{} dual", m - 1, p.dim),
                    got: alloc::format!("{}x{}", lambda.nrows(), lambda.ncols()),
                });
            }
            return Ok(lambda.clone());
        }
    };
    let mut lambda = Matrix::zeros(m - 1, p.dim);
    for (client, stream) in streams.iter_mut().enumerate().take(m).skip(1) {
        let g = p.stoch_grad(client, x0, stream)?;
        let row = x0 * coefficient - g / m as f64;
        lambda.set_row(client - 1, &row.transpose());
    }
    Ok(lambda)
}

pub struct GaMsgd<'a> {
    problem: &'a ProblemSpec,
    state: CentralState,
    inner: InnerSolver,
    worker_rule: StepRule,
    coordinator_rule: StepRule,
    dual_step: f64,
    streams: Vec<Stream>,
    guard: Guard,
}

impl<'a> GaMsgd<'a> {
    pub fn new(problem: &'a ProblemSpec, params: &GaMsgdParams, master_seed: u64) -> Result<Self> {
        if problem.class != ConvexityClass::StronglyConvex || !(problem.mu > 0.0) {
            return Err(Error::InvalidParameter {
                name: "problem",
                reason: "GA-MSGD needs strongly convex clients".into(),
            });
        }
        params.inner.validate(problem)?;
        let m = problem.num_clients();
        let dual_step = params.dual_step.unwrap_or_else(|| params::ga_msgd_dual_step(problem.mu, m));
        if !(dual_step > 0.0 && dual_step.is_finite()) {
            return Err(Error::InvalidParameter { name: "dual_step", reason: alloc::format!("{dual_step}") });
        }
        let x0 = params.x0.clone().unwrap_or_else(|| Vector::zeros(problem.dim));
        if x0.len() != problem.dim {
            return Err(Error::Shape { expected: alloc::format!("x0 of length {}", problem.dim), got: alloc::format!("{}", x0.len()) });
        }
        let mut streams = rng::client_streams(master_seed, m);
        let lambda = init_dual_centralized(problem, &x0, &params.init, &mut streams)?;
        let primal = crate::linalg::broadcast_rows(&x0, m);
        let (worker_rule, coordinator_rule) = match params.inner {
            InnerSolver::Sgd { rule, .. } => (
                rule.resolve(params::central_worker_constants(problem.mu, problem.smoothness, m), problem.sigma),
                rule.resolve(params::central_coordinator_constants(problem.mu, problem.smoothness, m), problem.sigma),
            ),
            InnerSolver::Exact => (StepRule::Auto, StepRule::Auto),
        };
        Ok(Self {
            problem,
            guard: Guard::new(&primal),
            state: CentralState { primal, lambda, round: 0, samples_per_client: 0 },
            inner: params.inner,
            worker_rule,
            coordinator_rule,
            dual_step,
            streams,
        })
    }

    pub fn state(&self) -> &CentralState {
        &self.state
    }

    pub fn dual_step(&self) -> f64 {
        self.dual_step
    }

    /// Average of all `M` primal iterates.
    pub fn average(&self) -> Vector {
        crate::linalg::row_mean(&self.state.primal)
    }
}

impl RoundAlgorithm for GaMsgd<'_> {
    fn name(&self) -> &'static str {
        "ga-msgd"
    }

    fn params(&self) -> Vec<(String, f64)> {
        let mut out = alloc::vec![("dual_step".into(), self.dual_step)];
        out.push(("inner_steps".into(), self.inner.samples_per_round() as f64));
        out
    }

    fn step(&mut self) -> Result<()> {
        let p = self.problem;
        let m = p.num_clients();
        let mf = m as f64;
        let mu = p.mu;
        let lambda = &self.state.lambda;
        let mut next = self.state.primal.clone();
        for client in 0..m {
            let (shift, linear, rule) = if client == 0 {
                let mut total = Vector::zeros(p.dim);
                for row in lambda.row_iter() {
                    total += row.transpose();
                }
                (0.5 * mu * (mf - 1.0) / mf, -total, self.coordinator_rule)
            } else {
                (-0.5 * mu / mf, lambda.row(client - 1).transpose(), self.worker_rule)
            };
            let local = LocalProblem { problem: p, client, shift, linear };
            let mut x = next.row(client).transpose();
            local.solve(&mut x, &self.inner, rule, &mut self.streams[client])?;
            next.set_row(client, &x.transpose());
        }
        // one synchronous exchange: broadcast x_1, update and gather lambda
        let coordinator = next.row(0).into_owned();
        for client in 1..m {
            let diff = next.row(client) - &coordinator;
            let mut row = self.state.lambda.row_mut(client - 1);
            row += diff * self.dual_step;
        }
        self.state.primal = next;
        self.state.round += 1;
        self.state.samples_per_client += self.inner.samples_per_round();
        self.guard.check(&self.state.primal, self.state.round, self.dual_step)
    }

    fn iterates(&self) -> &Matrix {
        &self.state.primal
    }

    fn rounds(&self) -> usize {
        self.state.round
    }

    fn samples_per_client(&self) -> usize {
        self.state.samples_per_client
    }

    fn dual_residual(&self) -> f64 {
        let x = &self.state.primal;
        let coordinator = x.row(0);
        x.row_iter().skip(1).map(|r| (r - coordinator).norm_squared()).sum::<f64>().sqrt()
    }
}

/// Runs `params.rounds` rounds of GA-MSGD and records the gap of the
/// averaged iterate every round.
pub fn run_ga_msgd(p: &ProblemSpec, params: &GaMsgdParams, master_seed: u64) -> Result<RunRecord> {
    run_ga_msgd_with_clock(p, params, master_seed, &NoClock)
}

pub fn run_ga_msgd_with_clock(p: &ProblemSpec, params: &GaMsgdParams, master_seed: u64, clock: &dyn Clock) -> Result<RunRecord> {
    let oracle = GapOracle::for_problem(p)?;
    let mut alg = GaMsgd::new(p, params, master_seed)?;
    record::drive(&mut alg, p, &oracle, params.rounds, master_seed, clock)
}
