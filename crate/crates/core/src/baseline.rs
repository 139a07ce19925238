//! Local SGD with periodic averaging (FedAvg), the non-primal-dual
//! reference.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::local::{InnerSolver, LocalProblem, StepRule};
use crate::params;
use crate::problems::{GapOracle, ProblemSpec};
use crate::record::{self, Clock, Guard, NoClock, RoundAlgorithm, RunRecord};
use crate::rng::{self, Stream};

#[derive(Debug, Clone, PartialEq)]
pub struct FedAvgParams {
    pub rounds: usize,
    pub inner: InnerSolver,
    pub x0: Option<Vector>,
}

pub struct FedAvg<'a> {
    problem: &'a ProblemSpec,
    x: Matrix,
    inner: InnerSolver,
    rule: StepRule,
    round: usize,
    samples: usize,
    streams: Vec<Stream>,
    guard: Guard,
}

impl<'a> FedAvg<'a> {
    pub fn new(problem: &'a ProblemSpec, params: &FedAvgParams, master_seed: u64) -> Result<Self> {
        params.inner.validate(problem)?;
        let m = problem.num_clients();
        let x0 = params.x0.clone().unwrap_or_else(|| Vector::zeros(problem.dim));
        if x0.len() != problem.dim {
            return Err(Error::Shape { expected: alloc::format!("length {}", problem.dim), got: alloc::format!("{}", x0.len()) });
        }
        let rule = match params.inner {
            InnerSolver::Sgd { rule, .. } => {
                let c = params::decentral_constants(problem.mu.max(0.0), problem.smoothness, m);
                match (rule, c.nu > 0.0, problem.sigma > 0.0) {
                    (StepRule::Auto, false, true) => {
                        return Err(Error::InvalidParameter {
                            name: "inner_step",
                            reason: "auto step needs mu > 0 when gradients are noisy".into(),
                        });
                    }
                    _ => rule.resolve(c, problem.sigma),
                }
            }
            InnerSolver::Exact => StepRule::Auto,
        };
        let x = linalg::broadcast_rows(&x0, m);
        Ok(Self {
            problem,
            guard: Guard::new(&x),
            x,
            inner: params.inner,
            rule,
            round: 0,
            samples: 0,
            streams: rng::client_streams(master_seed, m),
        })
    }
}

impl RoundAlgorithm for FedAvg<'_> {
    fn name(&self) -> &'static str {
        "fedavg"
    }

    fn params(&self) -> Vec<(String, f64)> {
        alloc::vec![("inner_steps".into(), self.inner.samples_per_round() as f64)]
    }

    fn step(&mut self) -> Result<()> {
        let n = self.problem.dim;
        let mut next = self.x.clone();
        for client in 0..self.problem.num_clients() {
            let local = LocalProblem { problem: self.problem, client, shift: 0.0, linear: Vector::zeros(n) };
            let mut x = next.row(client).transpose();
            local.solve(&mut x, &self.inner, self.rule, &mut self.streams[client])?;
            next.set_row(client, &x.transpose());
        }
        let mean = linalg::row_mean(&next);
        self.x = linalg::broadcast_rows(&mean, self.problem.num_clients());
        self.round += 1;
        self.samples += self.inner.samples_per_round();
        self.guard.check(&self.x, self.round, self.rule.step(0))
    }

    fn iterates(&self) -> &Matrix {
        &self.x
    }

    fn rounds(&self) -> usize {
        self.round
    }

    fn samples_per_client(&self) -> usize {
        self.samples
    }

    fn dual_residual(&self) -> f64 {
        0.0
    }
}

pub fn run_fedavg(p: &ProblemSpec, params: &FedAvgParams, master_seed: u64) -> Result<RunRecord> {
    run_fedavg_with_clock(p, params, master_seed, &NoClock)
}

pub fn run_fedavg_with_clock(p: &ProblemSpec, params: &FedAvgParams, master_seed: u64, clock: &dyn Clock) -> Result<RunRecord> {
    let oracle = GapOracle::for_problem(p)?;
    let mut alg = FedAvg::new(p, params, master_seed)?;
    record::drive(&mut alg, p, &oracle, params.rounds, master_seed, clock)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{make_identical_quadratic, make_quadratic};

    #[test]
    fn identical_clients_converge() {
        let p = make_identical_quadratic(2, 4, 3, 1.0, 5.0).unwrap();
        let params = FedAvgParams { rounds: 200, inner: InnerSolver::sgd(5), x0: None };
        let record = run_fedavg(&p, &params, 0).unwrap();
        assert!(record.final_gap().unwrap() < 1e-12);
    }

    #[test]
    fn heterogeneous_clients_stall_at_drift() {
        let p = make_quadratic(2, 4, 3, 1.0, 10.0, 3.0).unwrap();
        let params = FedAvgParams { rounds: 300, inner: InnerSolver::sgd(50), x0: None };
        let record = run_fedavg(&p, &params, 0).unwrap();
        assert!(record.final_gap().unwrap() > 1e-6);
        assert_eq!(record.rows.last().unwrap().consensus, 0.0);
    }
}
