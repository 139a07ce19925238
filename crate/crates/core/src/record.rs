//! Per-round run traces and the generic round driver.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::problems::{GapOracle, ProblemSpec};

/// One logged communication round.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RoundRow {
    pub round: usize,
    pub cumulative_rounds: usize,
    pub cumulative_samples: usize,
    /// `F(xbar) - F*`, or `||grad F(xbar)||^2` for nonconvex problems.
    pub gap: f64,
    /// `(1/M) sum_m ||x_m - xbar||^2`.
    pub consensus: f64,
    pub dual_residual: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RunRecord {
    pub algorithm: String,
    /// Resolved parameter snapshot, `(name, value)` pairs.
    pub params: Vec<(String, f64)>,
    pub master_seed: u64,
    pub rows: Vec<RoundRow>,
    /// Final client iterates, one row per client.
    pub final_states: Vec<Vec<f64>>,
}

impl RunRecord {
    pub fn final_gap(&self) -> Option<f64> {
        self.rows.last().map(|r| r.gap)
    }

    /// `(round, gap)` series for rate fitting.
    pub fn gap_series(&self) -> Vec<(f64, f64)> {
        self.rows.iter().map(|r| (r.round as f64, r.gap)).collect()
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }
}

pub fn states_to_rows(x: &Matrix) -> Vec<Vec<f64>> {
    x.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Millisecond clock supplied by the caller; the core has no time source.
pub trait Clock {
    fn elapsed_ms(&self) -> f64;
}

/// Clock that always reads zero.
pub struct NoClock;

impl Clock for NoClock {
    fn elapsed_ms(&self) -> f64 {
        0.0
    }
}

/// A synchronous round-based distributed algorithm.
pub trait RoundAlgorithm {
    fn name(&self) -> &'static str;
    fn params(&self) -> Vec<(String, f64)>;
    /// Executes one outer round (local steps plus its communication).
    fn step(&mut self) -> Result<()>;
    /// Current client iterates, one row per client.
    fn iterates(&self) -> &Matrix;
    fn rounds(&self) -> usize;
    fn samples_per_client(&self) -> usize;
    fn dual_residual(&self) -> f64;
}

/// Divergence guard: fails when iterates are non-finite or their norm
/// exceeds `1e6` times the initial scale.
pub(crate) struct Guard {
    limit: f64,
}

impl Guard {
    pub fn new(initial: &Matrix) -> Self {
        Self { limit: 1e6 * initial.norm().max(1.0) }
    }

    pub fn check(&self, x: &Matrix, round: usize, step: f64) -> Result<()> {
        if !linalg::is_finite(x) {
            return Err(Error::Divergence { round, step, detail: "non-finite iterate".into() });
        }
        let norm = x.norm();
        if norm > self.limit {
            return Err(Error::Divergence {
                round,
                step,
                detail: alloc::format!("iterate norm {norm:e} exceeds {:e}", self.limit),
            });
        }
        Ok(())
    }
}

/// Runs `rounds` rounds of `alg`, logging a row before the first round and
/// after every round.
pub fn drive(
    alg: &mut dyn RoundAlgorithm,
    problem: &ProblemSpec,
    oracle: &GapOracle,
    rounds: usize,
    master_seed: u64,
    clock: &dyn Clock,
) -> Result<RunRecord> {
    let mut rows = Vec::with_capacity(rounds + 1);
    rows.push(observe(alg, problem, oracle, 0, clock));
    for t in 1..=rounds {
        alg.step()?;
        rows.push(observe(alg, problem, oracle, t, clock));
    }
    Ok(RunRecord {
        algorithm: alg.name().into(),
        params: alg.params(),
        master_seed,
        rows,
        final_states: states_to_rows(alg.iterates()),
    })
}

fn observe(alg: &dyn RoundAlgorithm, problem: &ProblemSpec, oracle: &GapOracle, round: usize, clock: &dyn Clock) -> RoundRow {
    let x = alg.iterates();
    let mean = linalg::row_mean(x);
    RoundRow {
        round,
        cumulative_rounds: alg.rounds(),
        cumulative_samples: alg.samples_per_client(),
        gap: oracle.gap(problem, &mean),
        consensus: linalg::consensus_violation(x),
        dual_residual: alg.dual_residual(),
        wall_ms: clock.elapsed_ms(),
    }
}
