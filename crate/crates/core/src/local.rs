//! Inner-loop (communication-free) solvers for the per-client primal
//! problems `min_x (1/M) F_m(x) + (shift/2) ||x||^2 + <v, x>`.

use alloc::format;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::params::LocalConstants;
use crate::problems::{ClientObjective, ProblemSpec};
use crate::rng::Stream;

/// Inner step-size schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum StepRule {
    /// Resolved from the local constants: constant `1/ell` without noise,
    /// the decreasing schedule otherwise.
    Auto,
    Constant(f64),
    /// `min(1/ell, c / (nu (k + k0)))` with `c = 2`, `k0 = 2 ell / nu`.
    Decreasing { ell: f64, nu: f64 },
}

impl StepRule {
    pub fn resolve(self, constants: LocalConstants, sigma: f64) -> StepRule {
        match self {
            StepRule::Auto if sigma > 0.0 => StepRule::Decreasing { ell: constants.ell, nu: constants.nu },
            StepRule::Auto => StepRule::Constant(1.0 / constants.ell),
            other => other,
        }
    }

    /// Step size at inner iteration `k` (zero-based).
    pub fn step(&self, k: usize) -> f64 {
        match *self {
            StepRule::Auto => f64::NAN,
            StepRule::Constant(tau) => tau,
            StepRule::Decreasing { ell, nu } => {
                let k0 = 2.0 * ell / nu;
                (1.0 / ell).min(2.0 / (nu * (k as f64 + k0)))
            }
        }
    }
}

/// How each client approximates its primal minimizer between
/// communication rounds.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum InnerSolver {
    /// `steps` stochastic gradient steps per round.
    Sgd { steps: usize, rule: StepRule },
    /// Direct linear solve; quadratic clients only. Draws no samples.
    Exact,
}

impl InnerSolver {
    pub fn sgd(steps: usize) -> Self {
        InnerSolver::Sgd { steps, rule: StepRule::Auto }
    }

    /// Gradient samples drawn per client per round.
    pub fn samples_per_round(&self) -> usize {
        match self {
            InnerSolver::Sgd { steps, .. } => *steps,
            InnerSolver::Exact => 0,
        }
    }

    pub(crate) fn validate(&self, p: &ProblemSpec) -> Result<()> {
        match self {
            InnerSolver::Sgd { steps: 0, .. } => {
                Err(Error::InvalidParameter { name: "inner_steps", reason: "K must be at least 1".into() })
            }
            InnerSolver::Sgd { rule: StepRule::Constant(tau), .. } if !(*tau > 0.0) => {
                Err(Error::InvalidParameter { name: "inner_step", reason: format!("{tau} is not positive") })
            }
            InnerSolver::Exact if !p.is_quadratic() => Err(Error::NotQuadratic),
            _ => Ok(()),
        }
    }
}

/// One client's local problem for a fixed dual variable.
pub(crate) struct LocalProblem<'a> {
    pub problem: &'a ProblemSpec,
    pub client: usize,
    /// Curvature added by the Lagrangian reformulation (may be negative).
    pub shift: f64,
    /// Linear term contributed by the dual variable.
    pub linear: Vector,
}

impl LocalProblem<'_> {
    fn scale(&self) -> f64 {
        1.0 / self.problem.num_clients() as f64
    }

    /// Runs the configured inner solver starting from `x` in place.
    pub fn solve(&self, x: &mut Vector, inner: &InnerSolver, rule: StepRule, stream: &mut Stream) -> Result<()> {
        match inner {
            InnerSolver::Exact => {
                *x = self.exact()?;
                Ok(())
            }
            InnerSolver::Sgd { steps, .. } => {
                let scale = self.scale();
                for k in 0..*steps {
                    let g = self.problem.stoch_grad(self.client, x, stream)?;
                    let direction = g * scale + &*x * self.shift + &self.linear;
                    *x -= direction * rule.step(k);
                }
                Ok(())
            }
        }
    }

    fn exact(&self) -> Result<Vector> {
        let ClientObjective::Quadratic { hessian, linear } = self.problem.client(self.client)? else {
            return Err(Error::NotQuadratic);
        };
        let n = linear.len();
        let scale = self.scale();
        let system = hessian * scale + Matrix::identity(n, n) * self.shift;
        let rhs = linear * scale - &self.linear;
        linalg::solve(&system, &rhs)
            .ok_or_else(|| Error::NoUniqueMinimizer(format!("local system of client {} is singular", self.client)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::make_quadratic;
    use rand::SeedableRng;

    #[test]
    fn decreasing_schedule_starts_at_inverse_smoothness() {
        let rule = StepRule::Decreasing { ell: 4.0, nu: 0.5 };
        assert!((rule.step(0) - 0.25).abs() < 1e-15);
        assert!(rule.step(100) < rule.step(10));
        let c = LocalConstants { ell: 2.0, nu: 1.0 };
        assert_eq!(StepRule::Auto.resolve(c, 0.0), StepRule::Constant(0.5));
        assert_eq!(StepRule::Auto.resolve(c, 1.0), StepRule::Decreasing { ell: 2.0, nu: 1.0 });
    }

    #[test]
    fn many_sgd_steps_match_exact_solve() {
        let p = make_quadratic(3, 3, 4, 1.0, 5.0, 1.0).unwrap();
        let local = LocalProblem { problem: &p, client: 1, shift: 0.1, linear: Vector::from_element(4, 0.2) };
        let mut stream = Stream::seed_from_u64(0);
        let mut exact = Vector::zeros(4);
        local.solve(&mut exact, &InnerSolver::Exact, StepRule::Auto, &mut stream).unwrap();
        let mut x = Vector::zeros(4);
        let inner = InnerSolver::sgd(2000);
        let rule = StepRule::Constant(1.0 / (5.0 / 3.0 + 0.1));
        local.solve(&mut x, &inner, rule, &mut stream).unwrap();
        assert!((x - exact).norm() < 1e-10);
    }
}
