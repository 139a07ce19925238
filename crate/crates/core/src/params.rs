//! Default ("auto") parameter table.
//!
//! Every constant the algorithms derive from `mu`, `L` and `sigma2` lives
//! here so configs never carry them.


// Float supplies sqrt/exp/ln when std is absent.
#[allow(unused_imports)]
use num_traits::Float;

/// GA-MSGD dual step `mu / (4M)`.
pub fn ga_msgd_dual_step(mu: f64, clients: usize) -> f64 {
    mu / (4.0 * clients as f64)
}

/// Acc-GA-MSGD dual step `mu / (4M)`.
pub fn acc_dual_step(mu: f64, clients: usize) -> f64 {
    mu / (4.0 * clients as f64)
}

/// LED dual step `mu / (2M)`.
pub fn led_dual_step(mu: f64, clients: usize) -> f64 {
    mu / (2.0 * clients as f64)
}

/// Acc-GA-MSGD dual momentum
/// `(2 sqrt(2L) - sqrt((1 - sigma2) mu)) / (2 sqrt(2L) + sqrt((1 - sigma2) mu))`.
pub fn acc_momentum(mu: f64, smoothness: f64, sigma2: f64) -> f64 {
    let a = 2.0 * (2.0 * smoothness).sqrt();
    let b = ((1.0 - sigma2) * mu).sqrt();
    (a - b) / (a + b)
}

/// Per-round dual contraction bound of Acc-GA-MSGD,
/// `exp(-sqrt(mu (1 - sigma2)) / (2 sqrt(2L)))`.
pub fn acc_rate_bound(mu: f64, smoothness: f64, sigma2: f64) -> f64 {
    (-(mu * (1.0 - sigma2)).sqrt() / (2.0 * (2.0 * smoothness).sqrt())).exp()
}

/// Per-round dual contraction bound of LED, `1 - (1 - sigma2) mu / (4L)`.
pub fn led_rate_bound(mu: f64, smoothness: f64, sigma2: f64) -> f64 {
    1.0 - (1.0 - sigma2) * mu / (4.0 * smoothness)
}

/// Per-round contraction bound of GA-MSGD, `1 - mu / (6L)`.
pub fn ga_msgd_rate_bound(mu: f64, smoothness: f64) -> f64 {
    1.0 - mu / (6.0 * smoothness)
}

/// Smoothness and strong convexity of one local problem, used to pick
/// inner step sizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalConstants {
    pub ell: f64,
    pub nu: f64,
}

/// Worker block of the reformulated centralized Lagrangian:
/// `(1/M) F_m(x) - (mu / 4M) ||x||^2`.
pub fn central_worker_constants(mu: f64, smoothness: f64, clients: usize) -> LocalConstants {
    let m = clients as f64;
    LocalConstants { ell: (smoothness - 0.5 * mu) / m, nu: mu / (2.0 * m) }
}

/// Coordinator block: `(1/M) F_1(x) + (mu (M-1) / 4M) ||x||^2`.
pub fn central_coordinator_constants(mu: f64, smoothness: f64, clients: usize) -> LocalConstants {
    let m = clients as f64;
    let extra = 0.5 * mu * (m - 1.0);
    LocalConstants { ell: (smoothness + extra) / m, nu: (mu + extra) / m }
}

/// Decentralized local block `(1/M) F_m(x) + <zeta_m, x>`.
pub fn decentral_constants(mu: f64, smoothness: f64, clients: usize) -> LocalConstants {
    let m = clients as f64;
    LocalConstants { ell: smoothness / m, nu: mu / m }
}

/// Catalyst `q = mu / (mu + 2L)`.
pub fn catalyst_q(mu: f64, smoothness: f64) -> f64 {
    mu / (mu + 2.0 * smoothness)
}
