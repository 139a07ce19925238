//! Catalyst outer loop, in a shared-center (centralized) and a per-client
//! center (decentralized) layout.
//!
//! Each outer iteration approximately minimizes `F(x) + L ||x - y^s||^2`
//! to accuracy `eps^s` with a round-based inner method, then extrapolates
//! the prox center.

use alloc::string::String;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::centralized::{GaMsgd, GaMsgdParams};
use crate::decentralized::{AccParams, LocalDualAscent};
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::local::InnerSolver;
use crate::params;
use crate::problems::{
    reference_descent, reference_solution, ClientObjective, ConvexityClass, GapOracle, ProblemSpec,
};
use crate::record::{self, Clock, NoClock, RoundAlgorithm, RoundRow, RunRecord};
use crate::rng;
use crate::topology::Topology;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum CatalystMode {
    StronglyConvex,
    Convex,
    Nonconvex,
}

impl CatalystMode {
    fn admits(self, class: ConvexityClass) -> bool {
        match self {
            CatalystMode::StronglyConvex => class == ConvexityClass::StronglyConvex,
            CatalystMode::Convex => class != ConvexityClass::Nonconvex,
            CatalystMode::Nonconvex => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatalystSchedule {
    pub mode: CatalystMode,
    pub q: f64,
    /// Current `alpha_s`.
    pub alpha: f64,
    /// Last extrapolation weight.
    pub beta: f64,
    pub gamma: f64,
    /// Planned outer iterations `S`.
    pub outer: usize,
    pub delta0: f64,
}

impl CatalystSchedule {
    pub fn new(mode: CatalystMode, mu: f64, smoothness: f64, outer: usize, delta0: f64, gamma: f64) -> Result<Self> {
        if mode == CatalystMode::Convex && !(gamma > 0.0) {
            return Err(Error::InvalidParameter { name: "gamma", reason: alloc::format!("{gamma} must be positive") });
        }
        if !(delta0 > 0.0 && delta0.is_finite()) {
            return Err(Error::InvalidParameter { name: "delta0", reason: alloc::format!("{delta0} must be positive") });
        }
        let q = match mode {
            CatalystMode::StronglyConvex => params::catalyst_q(mu, smoothness),
            _ => 0.0,
        };
        let alpha = if mode == CatalystMode::StronglyConvex { q.sqrt() } else { 1.0 };
        Ok(Self { mode, q, alpha, beta: 0.0, gamma, outer, delta0 })
    }

    /// `eps^s` for this schedule.
    pub fn epsilon(&self, s: usize) -> Result<f64> {
        epsilon_schedule(self.mode, s, self.delta0, self.q, self.outer, self.gamma)
    }

    /// Advances `alpha` and sets `beta`; returns the new pair.
    pub fn advance(&mut self) -> (f64, f64) {
        let (alpha, beta) = momentum_schedule(self.mode, self.q, self.alpha);
        self.alpha = alpha;
        self.beta = beta;
        (alpha, beta)
    }
}

/// Next `alpha` (positive root of `a^2 + (a_prev^2 - q) a - a_prev^2 = 0`)
/// and the extrapolation weight built from it.
pub fn momentum_schedule(mode: CatalystMode, q: f64, alpha_prev: f64) -> (f64, f64) {
    let p2 = alpha_prev * alpha_prev;
    let b = p2 - q;
    // Stable form of (-b + sqrt(b^2 + 4 p2)) / 2.
    let disc = (b * b + 4.0 * p2).sqrt();
    let alpha = if b >= 0.0 { 2.0 * p2 / (b + disc) } else { 0.5 * (disc - b) };
    let beta = match mode {
        CatalystMode::Nonconvex => 0.0,
        _ => alpha_prev * (1.0 - alpha_prev) / (p2 + alpha),
    };
    (alpha, beta)
}

/// Subproblem accuracy `eps^s` (`s >= 1`).
pub fn epsilon_schedule(mode: CatalystMode, s: usize, delta0: f64, q: f64, outer: usize, gamma: f64) -> Result<f64> {
    if s == 0 {
        return Err(Error::InvalidParameter { name: "s", reason: "outer iterations count from 1".into() });
    }
    match mode {
        CatalystMode::StronglyConvex => Ok(2.0 * (1.0 - 0.9 * q.sqrt()).powi(s as i32) * delta0 / 9.0),
        CatalystMode::Convex if !(gamma > 0.0) => {
            Err(Error::InvalidParameter { name: "gamma", reason: alloc::format!("{gamma} must be positive") })
        }
        CatalystMode::Convex => Ok(2.0 * delta0 / (9.0 * ((s + 1) as f64).powf(4.0 + gamma))),
        CatalystMode::Nonconvex => Ok(delta0 / outer.max(1) as f64),
    }
}

/// Strongly convex guarantee on `F(x^s) - F*`: `800 (1 - 0.9 sqrt q)^{s+1} Delta / q`.
pub fn sc_envelope(q: f64, s: usize, delta0: f64) -> f64 {
    800.0 * (1.0 - 0.9 * q.sqrt()).powi(s as i32 + 1) * delta0 / q
}

/// Nonconvex guarantee on the average (hence the minimum) of
/// `||grad F(x^s)||^2`: `32 L Delta / S`.
pub fn nonconvex_bound(smoothness: f64, delta0: f64, outer: usize) -> f64 {
    32.0 * smoothness * delta0 / outer as f64
}

/// The regularized problem `F_m(x) + L ||x - y_m||^2` for every client.
#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemSpec {
    /// Regularized clients; `mu` and `smoothness` carry the certified
    /// subproblem constants.
    pub problem: ProblemSpec,
    pub centers: Matrix,
    pub reg_weight: f64,
}

/// Builds the subproblem with modulus `mu + 2L` (`L` for nonconvex bases,
/// which are only `L`-weakly convex) and smoothness `3L`.
pub fn make_subproblem(p: &ProblemSpec, centers: &Matrix) -> Result<SubproblemSpec> {
    if centers.nrows() != p.num_clients() || centers.ncols() != p.dim {
        return Err(Error::Shape {
            expected: alloc::format!("{}x{} centers", p.num_clients(), p.dim),
            got: alloc::format!("{}x{}", centers.nrows(), centers.ncols()),
        });
    }
    let l = p.smoothness;
    let n = p.dim;
    let clients = p
        .clients
        .iter()
        .enumerate()
        .map(|(m, c)| {
            let y = centers.row(m).transpose();
            match c {
                ClientObjective::Quadratic { hessian, linear } => ClientObjective::Quadratic {
                    hessian: hessian + Matrix::identity(n, n) * (2.0 * l),
                    linear: linear + y * (2.0 * l),
                },
                other => ClientObjective::Proximal { base: alloc::boxed::Box::new(other.clone()), weight: l, center: y },
            }
        })
        .collect();
    let mu = match p.class {
        ConvexityClass::Nonconvex => l,
        _ => p.mu + 2.0 * l,
    };
    let problem = ProblemSpec::new(clients, mu, 3.0 * l, p.sigma, ConvexityClass::StronglyConvex)?;
    Ok(SubproblemSpec { problem, centers: centers.clone(), reg_weight: l })
}

/// Result of one inexact subproblem solve.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerOutcome {
    /// Final client iterates.
    pub iterates: Matrix,
    pub rounds: usize,
    pub samples: usize,
    /// Certified subproblem gap at the averaged iterate.
    pub gap: f64,
    pub dual_residual: f64,
}

/// An inner method that returns iterates whose averaged subproblem gap is
/// certified below `target`.
pub trait SubproblemSolver {
    fn name(&self) -> &'static str;
    fn solve(&mut self, sub: &SubproblemSpec, warm: &Matrix, certifier: &GapOracle, target: f64, seed: u64)
        -> Result<InnerOutcome>;
}

/// Round-based inner methods.
#[derive(Debug, Clone)]
pub enum InnerMethod {
    AccGaMsgd(Topology),
    Led(Topology),
    CentralAcc,
    GaMsgd,
}

/// Runs an [`InnerMethod`] until the certificate holds, failing after
/// `max_rounds` rounds. At least one round is always run.
#[derive(Debug, Clone)]
pub struct RoundInner {
    pub method: InnerMethod,
    pub inner: InnerSolver,
    pub max_rounds: usize,
}

impl RoundInner {
    pub fn new(method: InnerMethod, inner: InnerSolver) -> Self {
        Self { method, inner, max_rounds: 100_000 }
    }
}

fn run_until(
    alg: &mut dyn RoundAlgorithm,
    p: &ProblemSpec,
    certifier: &GapOracle,
    target: f64,
    max_rounds: usize,
) -> Result<InnerOutcome> {
    loop {
        alg.step()?;
        let gap = certifier.gap(p, &linalg::row_mean(alg.iterates()));
        if gap <= target || alg.rounds() >= max_rounds {
            if gap > target {
                return Err(Error::BudgetExceeded { rounds: alg.rounds(), achieved: gap, target });
            }
            return Ok(InnerOutcome {
                iterates: alg.iterates().clone(),
                rounds: alg.rounds(),
                samples: alg.samples_per_client(),
                gap,
                dual_residual: alg.dual_residual(),
            });
        }
    }
}

impl SubproblemSolver for RoundInner {
    fn name(&self) -> &'static str {
        match self.method {
            InnerMethod::AccGaMsgd(_) => "acc-ga-msgd",
            InnerMethod::Led(_) => "led",
            InnerMethod::CentralAcc => "centralized-acc",
            InnerMethod::GaMsgd => "ga-msgd",
        }
    }

    fn solve(&mut self, sub: &SubproblemSpec, warm: &Matrix, certifier: &GapOracle, target: f64, seed: u64) -> Result<InnerOutcome> {
        let p = &sub.problem;
        let acc = |mut params: AccParams| {
            params.x0 = Some(warm.clone());
            params
        };
        match &self.method {
            InnerMethod::AccGaMsgd(t) => {
                let params = acc(AccParams::accelerated(0, self.inner));
                let mut alg = LocalDualAscent::decentralized(p, t, &params, seed)?;
                run_until(&mut alg, p, certifier, target, self.max_rounds)
            }
            InnerMethod::Led(t) => {
                let params = acc(AccParams::led(0, self.inner));
                let mut alg = LocalDualAscent::decentralized(p, t, &params, seed)?;
                run_until(&mut alg, p, certifier, target, self.max_rounds)
            }
            InnerMethod::CentralAcc => {
                let params = acc(AccParams::accelerated(0, self.inner));
                let mut alg = LocalDualAscent::centralized(p, &params, seed)?;
                run_until(&mut alg, p, certifier, target, self.max_rounds)
            }
            InnerMethod::GaMsgd => {
                let mut params = GaMsgdParams::new(0, self.inner);
                params.x0 = Some(linalg::row_mean(warm));
                let mut alg = GaMsgd::new(p, &params, seed)?;
                run_until(&mut alg, p, certifier, target, self.max_rounds)
            }
        }
    }
}

/// Idealized inner solver returning the exact subproblem minimizer on
/// every client. Charged one round and no samples.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactInner;

impl SubproblemSolver for ExactInner {
    fn name(&self) -> &'static str {
        "exact"
    }

    fn solve(&mut self, sub: &SubproblemSpec, warm: &Matrix, certifier: &GapOracle, _target: f64, _seed: u64) -> Result<InnerOutcome> {
        let x = reference_solution(&sub.problem)?.x_star;
        Ok(InnerOutcome {
            iterates: linalg::broadcast_rows(&x, warm.nrows()),
            rounds: 1,
            samples: 0,
            gap: certifier.gap(&sub.problem, &x),
            dual_residual: 0.0,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum CatalystLayout {
    /// One prox center broadcast by a coordinator (one round per outer
    /// iteration).
    Centralized,
    /// Per-client centers extrapolated locally.
    Decentralized,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CatalystParams {
    pub outer: usize,
    pub mode: CatalystMode,
    pub layout: CatalystLayout,
    pub gamma: f64,
    /// Initial gap; estimated when `None`.
    pub delta0: Option<f64>,
    pub x0: Option<Vector>,
    /// Descent iterations used to estimate `F*` for nonconvex problems.
    pub descent_iters: usize,
}

impl CatalystParams {
    pub fn new(outer: usize, mode: CatalystMode, layout: CatalystLayout) -> Self {
        Self { outer, mode, layout, gamma: 1.0, delta0: None, x0: None, descent_iters: 20_000 }
    }
}

/// One outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct CatalystStep {
    pub s: usize,
    /// Averaged iterate `xbar^s`.
    pub x_bar: Vector,
    /// Mean of the next prox centers.
    pub next_center: Vector,
    pub alpha: f64,
    pub beta: f64,
    pub epsilon: f64,
    pub inner_rounds: usize,
    pub inner_gap: f64,
    /// `F(xbar^s) - F*`, or `||grad F(xbar^s)||^2` for nonconvex problems.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CatalystRun {
    pub record: RunRecord,
    pub trace: Vec<CatalystStep>,
    pub schedule: CatalystSchedule,
}

/// `Delta = F(x0) - F*`, with `F*` replaced by the best value of a long
/// gradient descent when no reference minimizer exists.
pub fn estimate_delta(p: &ProblemSpec, x0: &Vector, descent_iters: usize) -> Result<f64> {
    let delta = if p.class == ConvexityClass::Nonconvex {
        let (best, _) = reference_descent(p, x0, descent_iters);
        p.global_value_grad(x0).0 - best
    } else {
        GapOracle::for_problem(p)?.gap(p, x0)
    };
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter { name: "delta0", reason: alloc::format!("initial gap {delta:e} is not positive") });
    }
    Ok(delta)
}

pub fn run_catalyst(p: &ProblemSpec, inner: &mut dyn SubproblemSolver, params: &CatalystParams, master_seed: u64) -> Result<CatalystRun> {
    run_catalyst_with_clock(p, inner, params, master_seed, &NoClock)
}

pub fn run_catalyst_with_clock(
    p: &ProblemSpec,
    inner: &mut dyn SubproblemSolver,
    params: &CatalystParams,
    master_seed: u64,
    clock: &dyn Clock,
) -> Result<CatalystRun> {
    if !params.mode.admits(p.class) {
        return Err(Error::InvalidParameter {
            name: "mode",
            reason: alloc::format!("{:?} Catalyst does not apply to a {:?} problem", params.mode, p.class),
        });
    }
    let m = p.num_clients();
    let x0 = params.x0.clone().unwrap_or_else(|| Vector::zeros(p.dim));
    if x0.len() != p.dim {
        return Err(Error::Shape { expected: alloc::format!("x0 of length {}", p.dim), got: alloc::format!("{}", x0.len()) });
    }
    let delta0 = match params.delta0 {
        Some(d) => d,
        None => estimate_delta(p, &x0, params.descent_iters)?,
    };
    let mut schedule = CatalystSchedule::new(params.mode, p.mu, p.smoothness, params.outer, delta0, params.gamma)?;
    let oracle = GapOracle::for_problem(p)?;
    let extrapolate = match params.mode {
        CatalystMode::Nonconvex => 0.0,
        _ => 2.0 * p.smoothness / (2.0 * p.smoothness + p.mu),
    };
    let broadcast = usize::from(params.layout == CatalystLayout::Centralized);

    let start = linalg::broadcast_rows(&x0, m);
    let mut x_prev = start.clone();
    let mut y_prev = start.clone();
    let mut y = start.clone();
    let (mut rounds, mut samples) = (0usize, 0usize);
    let mut rows = Vec::with_capacity(params.outer + 1);
    rows.push(RoundRow {
        round: 0,
        cumulative_rounds: 0,
        cumulative_samples: 0,
        gap: oracle.gap(p, &x0),
        consensus: 0.0,
        dual_residual: 0.0,
        wall_ms: clock.elapsed_ms(),
    });
    let mut trace = Vec::with_capacity(params.outer);

    for s in 1..=params.outer {
        let epsilon = schedule.epsilon(s)?;
        let sub = make_subproblem(p, &y)?;
        let certifier = GapOracle::certifier(&sub.problem)?;
        let warm = &x_prev + (&y - &y_prev) * extrapolate;
        let outcome = inner.solve(&sub, &warm, &certifier, epsilon, rng::derive_seed(master_seed, s as u64))?;
        let mut x = outcome.iterates;
        if params.layout == CatalystLayout::Centralized {
            x = linalg::broadcast_rows(&linalg::row_mean(&x), m);
        }
        let (alpha, beta) = schedule.advance();
        let y_next = &x + (&x - &x_prev) * beta;
        rounds += outcome.rounds + broadcast;
        samples += outcome.samples;

        let x_bar = linalg::row_mean(&x);
        let gap = oracle.gap(p, &x_bar);
        rows.push(RoundRow {
            round: s,
            cumulative_rounds: rounds,
            cumulative_samples: samples,
            gap,
            consensus: linalg::consensus_violation(&x),
            dual_residual: outcome.dual_residual,
            wall_ms: clock.elapsed_ms(),
        });
        trace.push(CatalystStep {
            s,
            next_center: linalg::row_mean(&y_next),
            x_bar,
            alpha,
            beta,
            epsilon,
            inner_rounds: outcome.rounds,
            inner_gap: outcome.gap,
            gap,
        });
        y_prev = core::mem::replace(&mut y, y_next);
        x_prev = x;
    }

    let name = match params.layout {
        CatalystLayout::Centralized => "catalyst",
        CatalystLayout::Decentralized => "decentralized-catalyst",
    };
    let param_list: Vec<(String, f64)> = alloc::vec![
        ("q".into(), schedule.q),
        ("outer".into(), params.outer as f64),
        ("delta0".into(), delta0),
        ("gamma".into(), params.gamma),
    ];
    Ok(CatalystRun {
        record: RunRecord {
            algorithm: alloc::format!("{name}/{}", inner.name()),
            params: param_list,
            master_seed,
            rows,
            final_states: record::states_to_rows(&x_prev),
        },
        trace,
        schedule,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{make_quadratic, ConvexityClass};
    use crate::topology::TopologyKind;
    use approx::assert_relative_eq;

    #[test]
    fn golden_ratio_step() {
        let (a, _) = momentum_schedule(CatalystMode::Convex, 0.0, 1.0);
        assert_relative_eq!(a, (5f64.sqrt() - 1.0) / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn strongly_convex_fixed_point() {
        let q: f64 = 0.04;
        let (a, b) = momentum_schedule(CatalystMode::StronglyConvex, q, q.sqrt());
        assert_relative_eq!(a, q.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(b, (1.0 - q.sqrt()) / (1.0 + q.sqrt()), epsilon = 1e-15);
        assert_eq!(momentum_schedule(CatalystMode::Nonconvex, 0.0, 0.7).1, 0.0);
    }

    #[test]
    fn epsilon_examples() {
        assert_relative_eq!(epsilon_schedule(CatalystMode::StronglyConvex, 1, 9.0, 0.25, 5, 1.0).unwrap(), 1.1, epsilon = 1e-14);
        assert_relative_eq!(epsilon_schedule(CatalystMode::Convex, 1, 9.0, 0.0, 5, 1.0).unwrap(), 0.0625, epsilon = 1e-15);
        for s in [1, 7, 100] {
            assert_relative_eq!(epsilon_schedule(CatalystMode::Nonconvex, s, 10.0, 0.0, 100, 1.0).unwrap(), 0.1);
        }
        assert!(epsilon_schedule(CatalystMode::Convex, 1, 9.0, 0.0, 5, 0.0).is_err());
    }

    #[test]
    fn scalar_subproblem() {
        let client = ClientObjective::Quadratic { hessian: Matrix::identity(2, 2), linear: Vector::zeros(2) };
        let p = ProblemSpec::new(alloc::vec![client], 1.0, 1.0, 0.0, ConvexityClass::StronglyConvex).unwrap();
        let sub = make_subproblem(&p, &Matrix::from_row_slice(1, 2, &[1.0, 0.0])).unwrap();
        let x = reference_solution(&sub.problem).unwrap().x_star;
        assert_relative_eq!(x[0], 2.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(x[1], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn huge_tolerance_takes_one_inner_round() {
        let p = make_quadratic(1, 3, 2, 1.0, 10.0, 1.0).unwrap();
        let mut inner = RoundInner::new(InnerMethod::CentralAcc, InnerSolver::sgd(5));
        let mut params = CatalystParams::new(1, CatalystMode::StronglyConvex, CatalystLayout::Centralized);
        params.delta0 = Some(1e12);
        let run = run_catalyst(&p, &mut inner, &params, 0).unwrap();
        assert_eq!(run.trace[0].inner_rounds, 1);
        assert_eq!(run.record.rows[1].cumulative_rounds, 2);
        let expected = &run.trace[0].x_bar * (1.0 + run.trace[0].beta);
        assert!((&run.trace[0].next_center - expected).norm() < 1e-14);
    }

    #[test]
    fn layouts_agree_with_consensual_inner() {
        let p = make_quadratic(5, 4, 3, 0.1, 10.0, 1.0).unwrap();
        let central = CatalystParams::new(15, CatalystMode::StronglyConvex, CatalystLayout::Centralized);
        let decentral = CatalystParams { layout: CatalystLayout::Decentralized, ..central.clone() };
        let a = run_catalyst(&p, &mut ExactInner, &central, 3).unwrap();
        let b = run_catalyst(&p, &mut ExactInner, &decentral, 3).unwrap();
        for (sa, sb) in a.trace.iter().zip(&b.trace) {
            assert!((&sa.x_bar - &sb.x_bar).amax() < 1e-10);
        }
    }

    #[test]
    fn rejects_mode_mismatch() {
        let p = make_quadratic(1, 2, 2, 1.0, 10.0, 1.0).unwrap();
        let t = Topology::build(TopologyKind::Ring, 3).unwrap();
        let mut inner = RoundInner::new(InnerMethod::AccGaMsgd(t), InnerSolver::Exact);
        let mut params = CatalystParams::new(2, CatalystMode::StronglyConvex, CatalystLayout::Decentralized);
        params.x0 = Some(Vector::zeros(3));
        assert!(run_catalyst(&p, &mut inner, &params, 0).is_err());
    }
}
