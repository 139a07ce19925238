//! Acc-GA-MSGD, LED and the centralized accelerated variant.
//!
//! All three run on the Lagrangian `H(X) + <lambda, U X>` through the
//! substitution `zeta = U lambda`, so only `I - W` (one gossip round) is
//! needed at runtime and `U` is never formed:
//!
//! ```text
//! x_m <- x_m - tau1 [ (1/M) g_m(x_m) + zeta~_m ]        (K local steps)
//! zeta^{t+1}  = zeta~^t + tau2 (I - W) X
//! zeta~^{t+1} = zeta^{t+1} + beta (zeta^{t+1} - zeta^t)
//! ```
//!
//! LED is the `beta = 0` member of the family; the centralized variant
//! replaces `(I - W) X` by `X - 1 xbar^T`.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::local::{InnerSolver, LocalProblem, StepRule};
use crate::params;
use crate::problems::{GapOracle, ProblemSpec};
use crate::record::{self, Clock, Guard, NoClock, RoundAlgorithm, RunRecord};
use crate::rng::{self, Stream};
use crate::topology::Topology;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum DualMode {
    Accelerated,
    Led,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccParams {
    pub rounds: usize,
    pub inner: InnerSolver,
    /// `None` resolves to `mu / (4M)` (accelerated) or `mu / (2M)` (LED).
    pub dual_step: Option<f64>,
    /// `None` resolves to the topology-aware momentum; LED requires 0.
    pub momentum: Option<f64>,
    pub mode: DualMode,
    /// Initial client iterates; zero when `None`.
    pub x0: Option<Matrix>,
}

impl AccParams {
    pub fn accelerated(rounds: usize, inner: InnerSolver) -> Self {
        Self { rounds, inner, dual_step: None, momentum: None, mode: DualMode::Accelerated, x0: None }
    }

    pub fn led(rounds: usize, inner: InnerSolver) -> Self {
        Self { mode: DualMode::Led, ..Self::accelerated(rounds, inner) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecenState {
    pub x: Matrix,
    pub zeta: Matrix,
    pub zeta_prev: Matrix,
    pub zeta_tilde: Matrix,
    pub round: usize,
    pub samples_per_client: usize,
}

#[derive(Debug, Clone, Copy)]
enum Coupling<'a> {
    Gossip(&'a Topology),
    Average,
}

/// One of the three dual-ascent local-update methods.
pub struct LocalDualAscent<'a> {
    problem: &'a ProblemSpec,
    coupling: Coupling<'a>,
    mode: DualMode,
    state: DecenState,
    inner: InnerSolver,
    rule: StepRule,
    dual_step: f64,
    momentum: f64,
    streams: Vec<Stream>,
    guard: Guard,
}

impl<'a> LocalDualAscent<'a> {
    /// Acc-GA-MSGD (or LED when `params.mode` is `Led`) over a gossip matrix.
    pub fn decentralized(problem: &'a ProblemSpec, topology: &'a Topology, params: &AccParams, master_seed: u64) -> Result<Self> {
        if topology.num_nodes() != problem.num_clients() {
            return Err(Error::Shape {
                expected: alloc::format!("topology on {} nodes", problem.num_clients()),
                got: alloc::format!("{} nodes", topology.num_nodes()),
            });
        }
        Self::build(problem, Coupling::Gossip(topology), params, master_seed)
    }

    /// The centralized accelerated variant: explicit averaging, no `W`.
    pub fn centralized(problem: &'a ProblemSpec, params: &AccParams, master_seed: u64) -> Result<Self> {
        Self::build(problem, Coupling::Average, params, master_seed)
    }

    fn build(problem: &'a ProblemSpec, coupling: Coupling<'a>, params: &AccParams, master_seed: u64) -> Result<Self> {
        params.inner.validate(problem)?;
        let m = problem.num_clients();
        let sigma2 = match coupling {
            Coupling::Gossip(t) => t.sigma2(),
            Coupling::Average => 0.0,
        };
        let needs_mu = params.dual_step.is_none() || (params.mode == DualMode::Accelerated && params.momentum.is_none());
        if needs_mu && !(problem.mu > 0.0) {
            return Err(Error::InvalidParameter {
                name: "problem",
                reason: "default dual parameters need strongly convex clients".into(),
            });
        }
        let dual_step = params.dual_step.unwrap_or_else(|| match params.mode {
            DualMode::Accelerated => params::acc_dual_step(problem.mu, m),
            DualMode::Led => params::led_dual_step(problem.mu, m),
        });
        if !(dual_step >= 0.0 && dual_step.is_finite()) {
            return Err(Error::InvalidParameter { name: "dual_step", reason: alloc::format!("{dual_step}") });
        }
        let momentum = match (params.mode, params.momentum) {
            (DualMode::Led, Some(b)) if b != 0.0 => {
                return Err(Error::InvalidParameter { name: "momentum", reason: "LED runs without momentum".into() });
            }
            (DualMode::Led, _) => 0.0,
            (DualMode::Accelerated, Some(b)) => b,
            (DualMode::Accelerated, None) => params::acc_momentum(problem.mu, problem.smoothness, sigma2),
        };
        if !(0.0..1.0).contains(&momentum) {
            return Err(Error::InvalidParameter { name: "momentum", reason: alloc::format!("{momentum} not in [0, 1)") });
        }
        let x = match &params.x0 {
            Some(x0) if x0.nrows() != m || x0.ncols() != problem.dim => {
                return Err(Error::Shape {
                    expected: alloc::format!("{m}x{} initial iterates", problem.dim),
                    got: alloc::format!("{}x{}", x0.nrows(), x0.ncols()),
                });
            }
            Some(x0) => x0.clone(),
            None => Matrix::zeros(m, problem.dim),
        };
        let rule = match params.inner {
            InnerSolver::Sgd { rule, .. } => {
                rule.resolve(params::decentral_constants(problem.mu, problem.smoothness, m), problem.sigma)
            }
            InnerSolver::Exact => StepRule::Auto,
        };
        let zeros = Matrix::zeros(m, problem.dim);
        Ok(Self {
            problem,
            coupling,
            mode: params.mode,
            guard: Guard::new(&x),
            state: DecenState {
                x,
                zeta: zeros.clone(),
                zeta_prev: zeros.clone(),
                zeta_tilde: zeros,
                round: 0,
                samples_per_client: 0,
            },
            inner: params.inner,
            rule,
            dual_step,
            momentum,
            streams: rng::client_streams(master_seed, m),
        })
    }

    pub fn state(&self) -> &DecenState {
        &self.state
    }

    pub fn dual_step(&self) -> f64 {
        self.dual_step
    }

    pub fn momentum(&self) -> f64 {
        self.momentum
    }

    /// Constraint residual: `(I - W) X`, or `X - 1 xbar^T` when averaging.
    /// Computing it for gossip costs one communication round.
    fn disagreement(&self, x: &Matrix) -> Result<Matrix> {
        match self.coupling {
            Coupling::Gossip(t) => Ok(x - t.mix(x)?),
            Coupling::Average => {
                let mean = linalg::row_mean(x);
                Ok(x - linalg::broadcast_rows(&mean, x.nrows()))
            }
        }
    }
}

impl RoundAlgorithm for LocalDualAscent<'_> {
    fn name(&self) -> &'static str {
        match (self.coupling, self.mode) {
            (Coupling::Average, _) => "centralized-acc",
            (Coupling::Gossip(_), DualMode::Accelerated) => "acc-ga-msgd",
            (Coupling::Gossip(_), DualMode::Led) => "led",
        }
    }

    fn params(&self) -> Vec<(String, f64)> {
        alloc::vec![
            ("dual_step".into(), self.dual_step),
            ("momentum".into(), self.momentum),
            ("inner_steps".into(), self.inner.samples_per_round() as f64),
        ]
    }

    fn step(&mut self) -> Result<()> {
        let p = self.problem;
        // LED's inner loop reads zeta directly; with beta = 0 zeta~ == zeta.
        let dual = match self.mode {
            DualMode::Accelerated => &self.state.zeta_tilde,
            DualMode::Led => &self.state.zeta,
        };
        let mut next = self.state.x.clone();
        for client in 0..p.num_clients() {
            let local = LocalProblem { problem: p, client, shift: 0.0, linear: dual.row(client).transpose() };
            let mut x = next.row(client).transpose();
            local.solve(&mut x, &self.inner, self.rule, &mut self.streams[client])?;
            next.set_row(client, &x.transpose());
        }
        let residual = self.disagreement(&next)?;
        let state = &mut self.state;
        match self.mode {
            DualMode::Accelerated => {
                let zeta_next = &state.zeta_tilde + residual * self.dual_step;
                state.zeta_tilde = &zeta_next + (&zeta_next - &state.zeta) * self.momentum;
                state.zeta_prev = core::mem::replace(&mut state.zeta, zeta_next);
            }
            DualMode::Led => {
                let zeta_next = &state.zeta + residual * self.dual_step;
                state.zeta_prev = core::mem::replace(&mut state.zeta, zeta_next);
                state.zeta_tilde = state.zeta.clone();
            }
        }
        state.x = next;
        state.round += 1;
        state.samples_per_client += self.inner.samples_per_round();
        self.guard.check(&self.state.x, self.state.round, self.dual_step)
    }

    fn iterates(&self) -> &Matrix {
        &self.state.x
    }

    fn rounds(&self) -> usize {
        self.state.round
    }

    fn samples_per_client(&self) -> usize {
        self.state.samples_per_client
    }

    fn dual_residual(&self) -> f64 {
        let x = &self.state.x;
        match self.coupling {
            Coupling::Gossip(t) => (t.laplacian() * x).norm(),
            Coupling::Average => {
                let mean = linalg::row_mean(x);
                (x - linalg::broadcast_rows(&mean, x.nrows())).norm()
            }
        }
    }
}

pub fn run_acc_ga_msgd(p: &ProblemSpec, t: &Topology, params: &AccParams, master_seed: u64) -> Result<RunRecord> {
    let mut params = params.clone();
    params.mode = DualMode::Accelerated;
    run_decentralized_with_clock(p, t, &params, master_seed, &NoClock)
}

pub fn run_led(p: &ProblemSpec, t: &Topology, params: &AccParams, master_seed: u64) -> Result<RunRecord> {
    let mut params = params.clone();
    params.mode = DualMode::Led;
    run_decentralized_with_clock(p, t, &params, master_seed, &NoClock)
}

pub fn run_decentralized_with_clock(
    p: &ProblemSpec,
    t: &Topology,
    params: &AccParams,
    master_seed: u64,
    clock: &dyn Clock,
) -> Result<RunRecord> {
    let oracle = GapOracle::for_problem(p)?;
    let mut alg = LocalDualAscent::decentralized(p, t, params, master_seed)?;
    record::drive(&mut alg, p, &oracle, params.rounds, master_seed, clock)
}

pub fn run_centralized_acc(p: &ProblemSpec, params: &AccParams, master_seed: u64) -> Result<RunRecord> {
    run_centralized_acc_with_clock(p, params, master_seed, &NoClock)
}

pub fn run_centralized_acc_with_clock(p: &ProblemSpec, params: &AccParams, master_seed: u64, clock: &dyn Clock) -> Result<RunRecord> {
    let oracle = GapOracle::for_problem(p)?;
    let mut alg = LocalDualAscent::centralized(p, params, master_seed)?;
    record::drive(&mut alg, p, &oracle, params.rounds, master_seed, clock)
}
