//! Lemma suite run by `pdlocal verify`: dual conditioning, gradient
//! identities, strong concavity on `span(U)`, argmin Lipschitz bounds and
//! gossip contraction, each over a small grid of generated instances.

use pdlocal_core::analysis::{self, Formulation};
use pdlocal_core::linalg::{self, Matrix};
use pdlocal_core::problems::{make_quadratic, ProblemSpec};
use pdlocal_core::rng;
use pdlocal_core::topology::{Topology, TopologyKind};
use rand::Rng;
use rand_distr::StandardNormal;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub cases: usize,
    pub detail: String,
}

const KINDS: [TopologyKind; 3] = [TopologyKind::Complete, TopologyKind::Ring, TopologyKind::Path];

/// Ring and path graphs need three nodes, so two-node instances only get
/// the complete graph.
fn graphs(m: usize) -> Vec<Topology> {
    KINDS.iter().filter_map(|&k| Topology::build(k, m).ok()).collect()
}

fn ring_or_complete(m: usize) -> Topology {
    Topology::build(TopologyKind::Ring, m)
        .or_else(|_| Topology::build(TopologyKind::Complete, m))
        .expect("complete graph on at least two nodes")
}

fn instances() -> Vec<ProblemSpec> {
    let mut out = Vec::new();
    let mut seed = 100;
    for m in [2, 4, 8] {
        for n in [1, 3] {
            for kappa in [1.0, 10.0, 100.0] {
                seed += 1;
                out.push(make_quadratic(seed, m, n, 1.0, kappa, 1.0).expect("valid generator constants"));
            }
        }
    }
    out
}

fn gaussian(rows: usize, cols: usize, stream: &mut rng::Stream) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| stream.sample(StandardNormal))
}

fn fold(name: &'static str, results: impl IntoIterator<Item = Result<f64, String>>, what: &str) -> Check {
    let mut cases = 0;
    let mut worst = f64::INFINITY;
    let mut failure = None;
    for r in results {
        cases += 1;
        match r {
            Ok(margin) => worst = worst.min(margin),
            Err(e) => {
                failure.get_or_insert(e);
            }
        }
    }
    let passed = failure.is_none() && worst >= 0.0;
    let detail = failure.unwrap_or_else(|| format!("worst {what} margin {worst:.3e}"));
    Check { name, passed, cases, detail }
}

fn central_conditioning(ps: &[ProblemSpec]) -> Check {
    let results = ps.iter().map(|p| {
        let q = analysis::dual_hessian_centralized(p).map_err(|e| e.to_string())?;
        let m = p.num_clients() as f64;
        let (lo, hi) = (2.0 * m / (3.0 * p.smoothness), 4.0 * m / p.mu);
        let (a, b) = q.extremes();
        Ok(((a - lo) / lo).min((hi - b) / hi) + 1e-9)
    });
    fold("centralized dual conditioning", results, "relative")
}

fn decentral_conditioning(ps: &[ProblemSpec]) -> Check {
    let results = ps.iter().flat_map(|p| {
        graphs(p.num_clients()).into_iter().map(move |t| {
            let q = analysis::dual_hessian_decentralized(p, &t).map_err(|e| e.to_string())?;
            let m = p.num_clients() as f64;
            let (lo, hi) = (m * (1.0 - t.sigma2()) / p.smoothness, 2.0 * m / p.mu);
            let (a, b) = q.extremes();
            let ones = Matrix::from_element(p.num_clients(), p.dim, 1.0);
            let null = (&q.hessian * analysis::vec(&ones)).amax();
            Ok(((a - lo) / lo).min((hi - b) / hi).min(1e-9 - null) + 1e-9)
        })
    });
    fold("decentralized dual conditioning", results, "relative")
}

fn gradient_identities(ps: &[ProblemSpec]) -> Check {
    let mut stream = rng::client_stream(7, 0);
    let mut results = Vec::new();
    for p in ps {
        let m = p.num_clients();
        let t = ring_or_complete(m);
        for _ in 0..3 {
            let lc = gaussian(m - 1, p.dim, &mut stream);
            let ld = gaussian(m, p.dim, &mut stream);
            let rel = |a: &Matrix, b: &Matrix| (a - b).norm() / b.norm().max(1e-12);
            let r = (|| {
                let g = analysis::central_dual_gradient(p, &lc)?;
                let fd = analysis::finite_difference_gradient(|l| analysis::central_dual_value(p, l), &lc)?;
                let gd = analysis::decentral_dual_gradient(p, &t, &ld)?;
                let fdd = analysis::finite_difference_gradient(|l| analysis::decentral_dual_value(p, &t, l), &ld)?;
                Ok::<f64, pdlocal_core::Error>(1e-6 - rel(&g, &fd).max(rel(&gd, &fdd)))
            })();
            results.push(r.map_err(|e| e.to_string()));
        }
    }
    fold("dual gradient identities", results, "absolute")
}

fn monotonicity(ps: &[ProblemSpec]) -> Check {
    let mut stream = rng::client_stream(8, 0);
    let mut results = Vec::new();
    for p in ps {
        for t in graphs(p.num_clients()) {
            let basis = t.span_basis();
            for _ in 0..20 {
                let l1 = &basis * gaussian(basis.ncols(), p.dim, &mut stream);
                let l2 = &basis * gaussian(basis.ncols(), p.dim, &mut stream);
                results.push(analysis::monotonicity_margin(p, &t, &l1, &l2).map(|m| m + 1e-9).map_err(|e| e.to_string()));
            }
        }
    }
    fold("strong concavity on span(U)", results, "absolute")
}

fn argmin_lipschitz(ps: &[ProblemSpec]) -> Check {
    let mut stream = rng::client_stream(9, 0);
    let mut results = Vec::new();
    for p in ps {
        let m = p.num_clients();
        let t = ring_or_complete(m);
        for _ in 0..10 {
            let r = (|| {
                let (a, b) = (gaussian(m - 1, p.dim, &mut stream), gaussian(m - 1, p.dim, &mut stream));
                let xa = analysis::primal_argmin_given_dual(p, &a, Formulation::CentralReformulated)?;
                let xb = analysis::primal_argmin_given_dual(p, &b, Formulation::CentralReformulated)?;
                let kc = analysis::argmin_lipschitz_bound(p, Formulation::CentralReformulated, None)?;
                let central = kc * (&a - &b).norm() - (xa - xb).norm();
                let u = t.sqrt_laplacian();
                let (a, b) = (gaussian(m, p.dim, &mut stream), gaussian(m, p.dim, &mut stream));
                let xa = analysis::primal_argmin_given_dual(p, &(&u * &a), Formulation::Decentral)?;
                let xb = analysis::primal_argmin_given_dual(p, &(&u * &b), Formulation::Decentral)?;
                let kd = analysis::argmin_lipschitz_bound(p, Formulation::Decentral, Some(&t))?;
                let decentral = kd * (&a - &b).norm() - (xa - xb).norm();
                Ok::<f64, pdlocal_core::Error>(central.min(decentral) + 1e-9)
            })();
            results.push(r.map_err(|e| e.to_string()));
        }
    }
    fold("argmin Lipschitz bound", results, "absolute")
}

fn gossip_contraction() -> Check {
    let mut stream = rng::client_stream(10, 0);
    let t = Topology::build(TopologyKind::Ring, 8).expect("ring");
    let mut x = gaussian(8, 3, &mut stream);
    let mean = linalg::row_mean(&x);
    let results = (0..20).map(|_| {
        let before = linalg::consensus_violation(&x).sqrt();
        x = t.mix(&x).map_err(|e| e.to_string())?;
        let after = linalg::consensus_violation(&x).sqrt();
        let drift = (linalg::row_mean(&x) - &mean).norm();
        Ok((t.sigma2() * before - after + 1e-12).min(1e-12 - drift))
    });
    fold("gossip contraction (ring, M = 8)", results.collect::<Vec<_>>(), "absolute")
}

pub fn lemma_suite() -> Vec<Check> {
    let ps = instances();
    vec![
        central_conditioning(&ps),
        decentral_conditioning(&ps),
        gradient_identities(&ps),
        monotonicity(&ps),
        argmin_lipschitz(&ps),
        gossip_contraction(),
    ]
}

pub fn render(checks: &[Check]) -> String {
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    let mut out = String::new();
    for c in checks {
        let status = if c.passed { "PASS" } else { "FAIL" };
        out.push_str(&format!("{status}  {:width$}  {:>4} cases  {}\n", c.name, c.cases, c.detail));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes() {
        let checks = lemma_suite();
        assert!(checks.iter().all(|c| c.passed), "{}", render(&checks));
    }
}
