//! Acceptance suite: one line per criterion, non-zero exit if any fails.

use std::error::Error;
use std::time::Instant;

use pdlocal::config::ExperimentConfig;
use pdlocal::grid;
use pdlocal_core::analysis::{self, DualQuadratic, Formulation};
use pdlocal_core::catalyst::{
    momentum_schedule, run_catalyst, CatalystLayout, CatalystMode, CatalystParams, ExactInner, InnerMethod, RoundInner,
};
use pdlocal_core::centralized::{run_ga_msgd, GaMsgdParams};
use pdlocal_core::decentralized::{AccParams, LocalDualAscent};
use pdlocal_core::linalg::{self, Matrix, Vector};
use pdlocal_core::local::InnerSolver;
use pdlocal_core::problems::{
    make_nonconvex, make_quadratic, reference_solution, ClientObjective, ConvexityClass, GapOracle, ProblemSpec,
};
use pdlocal_core::rate::fit_geometric_rate;
use pdlocal_core::record::RoundAlgorithm;
use pdlocal_core::rng;
use pdlocal_core::topology::{Topology, TopologyKind};
use rand::Rng;
use rand_distr::StandardNormal;

type Res<T> = Result<T, Box<dyn Error>>;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Res<Outcome> {
    Ok(Outcome { passed, detail })
}

fn gaussian(rows: usize, cols: usize, stream: &mut rng::Stream) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| stream.sample(StandardNormal))
}

const KINDS: [TopologyKind; 3] = [TopologyKind::Complete, TopologyKind::Ring, TopologyKind::Path];

struct Instance {
    m: usize,
    n: usize,
    kappa: f64,
    p: ProblemSpec,
}

fn instances() -> Vec<Instance> {
    let mut out = Vec::new();
    let mut seed = 1000;
    for m in [2, 4, 8] {
        for n in [1, 3, 5] {
            for kappa in [1.0, 10.0, 100.0] {
                seed += 1;
                let p = make_quadratic(seed, m, n, 1.0, kappa, 1.0).expect("generator");
                out.push(Instance { m, n, kappa, p });
            }
        }
    }
    out
}

/// Ring and path graphs need at least three nodes.
fn graphs(m: usize) -> Vec<Topology> {
    KINDS.iter().filter_map(|&k| Topology::build(k, m).ok()).collect()
}

/// Central-difference Jacobian of a dual gradient, row-major vectorized.
fn jacobian(g: impl Fn(&Matrix) -> Res<Matrix>, at: &Matrix) -> Res<Matrix> {
    let d = at.len();
    let n = at.ncols();
    let mut jac = Matrix::zeros(d, d);
    for j in 0..d {
        let (r, c) = (j / n, j % n);
        let mut up = at.clone();
        up[(r, c)] += 1e-3;
        let mut down = at.clone();
        down[(r, c)] -= 1e-3;
        let col = (analysis::vec(&g(&up)?) - analysis::vec(&g(&down)?)) / 2e-3;
        jac.set_column(j, &col);
    }
    Ok(jac)
}

fn relative(a: &Matrix, b: &Matrix) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

fn spectrum_margin(q: &DualQuadratic, lo: f64, hi: f64) -> f64 {
    let (a, b) = q.extremes();
    ((a - lo) / lo).min((hi - b) / hi)
}

fn c1_central_conditioning() -> Res<Outcome> {
    let mut worst = f64::INFINITY;
    let mut count = 0;
    for inst in instances() {
        let q = analysis::dual_hessian_centralized(&inst.p)?;
        let m = inst.m as f64;
        worst = worst.min(spectrum_margin(&q, 2.0 * m / (3.0 * inst.kappa), 4.0 * m));
        count += 1;
    }
    // two clients, F_m = x^2 / 2: the negated dual Hessian is 16/3.
    let clients = (0..2)
        .map(|_| ClientObjective::Quadratic { hessian: Matrix::identity(1, 1), linear: Vector::zeros(1) })
        .collect();
    let hand = ProblemSpec::new(clients, 1.0, 1.0, 0.0, ConvexityClass::StronglyConvex)?;
    let hand_err = (analysis::dual_hessian_centralized(&hand)?.hessian[(0, 0)] - 16.0 / 3.0).abs();
    // The closed form must agree with a Jacobian of the gradient.
    let mut jac_err: f64 = 0.0;
    let mut stream = rng::client_stream(21, 0);
    for inst in instances().iter().filter(|i| i.n == 3 && i.kappa == 10.0) {
        let q = analysis::dual_hessian_centralized(&inst.p)?;
        let at = gaussian(inst.m - 1, inst.n, &mut stream);
        let jac = jacobian(|l| Ok(analysis::central_dual_gradient(&inst.p, l)?), &at)?;
        jac_err = jac_err.max(relative(&(-jac), &q.hessian));
    }
    outcome(
        worst >= -1e-9 && hand_err <= 1e-12 && jac_err <= 1e-6,
        format!("{count} instances, worst relative margin {worst:.3e}, 16/3 error {hand_err:.1e}, jacobian error {jac_err:.1e}"),
    )
}

fn c2_decentral_conditioning() -> Res<Outcome> {
    let mut worst = f64::INFINITY;
    let mut null: f64 = 0.0;
    let mut jac_err: f64 = 0.0;
    let mut count = 0;
    let mut stream = rng::client_stream(22, 0);
    for inst in instances() {
        for t in graphs(inst.m) {
            let q = analysis::dual_hessian_decentralized(&inst.p, &t)?;
            let m = inst.m as f64;
            worst = worst.min(spectrum_margin(&q, m * (1.0 - t.sigma2()) / inst.kappa, 2.0 * m));
            for k in 0..inst.n {
                let mut e = Matrix::zeros(inst.m, inst.n);
                e.column_mut(k).fill(1.0);
                null = null.max((&q.hessian * analysis::vec(&e)).norm() / q.hessian.norm());
            }
            if inst.n == 3 && inst.kappa == 10.0 {
                let at = gaussian(inst.m, inst.n, &mut stream);
                let jac = jacobian(|l| Ok(analysis::decentral_dual_gradient(&inst.p, &t, l)?), &at)?;
                jac_err = jac_err.max(relative(&(-jac), &q.hessian));
            }
            count += 1;
        }
    }
    outcome(
        worst >= -1e-9 && null <= 1e-9 && jac_err <= 1e-6,
        format!("{count} instance/graph pairs, worst relative margin {worst:.3e}, null direction {null:.1e}, jacobian error {jac_err:.1e}"),
    )
}

fn c3_gradient_identities() -> Res<Outcome> {
    let mut stream = rng::client_stream(23, 0);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for inst in instances() {
        let p = &inst.p;
        for _ in 0..10 {
            let lambda = gaussian(inst.m - 1, inst.n, &mut stream);
            let x = analysis::primal_argmin_given_dual(p, &lambda, Formulation::CentralReformulated)?;
            let identity = Matrix::from_fn(inst.m - 1, inst.n, |r, c| x[(r + 1, c)] - x[(0, c)]);
            let fd = analysis::finite_difference_gradient(|l| analysis::central_dual_value(p, l), &lambda)?;
            worst = worst.max(relative(&fd, &identity));
            count += 1;
        }
        for t in graphs(inst.m) {
            let u = t.sqrt_laplacian();
            for _ in 0..10 {
                let lambda = gaussian(inst.m, inst.n, &mut stream);
                let x = analysis::primal_argmin_given_dual(p, &(&u * &lambda), Formulation::Decentral)?;
                let identity = &u * x;
                let fd = analysis::finite_difference_gradient(|l| analysis::decentral_dual_value(p, &t, l), &lambda)?;
                worst = worst.max(relative(&fd, &identity));
                count += 1;
            }
        }
    }
    outcome(worst <= 1e-6, format!("{count} duals, worst relative error {worst:.3e}"))
}

fn c4_monotonicity() -> Res<Outcome> {
    let mut stream = rng::client_stream(24, 0);
    let mut worst = f64::INFINITY;
    let mut pairs = 0;
    for inst in instances() {
        let p = &inst.p;
        for t in graphs(inst.m) {
            let u = t.sqrt_laplacian();
            let basis = t.span_basis();
            let modulus = analysis::monotonicity_modulus(p, &t);
            let grad = |l: &Matrix| -> Res<Matrix> {
                Ok(&u * analysis::primal_argmin_given_dual(p, &(&u * l), Formulation::Decentral)?)
            };
            for _ in 0..1000 {
                let l1 = &basis * gaussian(basis.ncols(), inst.n, &mut stream);
                let l2 = &basis * gaussian(basis.ncols(), inst.n, &mut stream);
                let diff = &l1 - &l2;
                let margin = (grad(&l2)? - grad(&l1)?).dot(&diff) - modulus * diff.norm_squared();
                worst = worst.min(margin);
                pairs += 1;
            }
        }
    }
    outcome(worst >= -1e-9, format!("{pairs} pairs, worst margin {worst:.3e}"))
}

fn c5_ga_msgd_rate() -> Res<Outcome> {
    let (mu, l) = (1.0, 10.0);
    let p = make_quadratic(11, 4, 5, mu, l, 1.0)?;
    let run = run_ga_msgd(&p, &GaMsgdParams::new(400, InnerSolver::Exact), 11)?;
    let fit = fit_geometric_rate(&run.gap_series())?;
    let bound = 1.0 - mu / (6.0 * l) + 0.005;
    outcome(
        fit.rate <= bound && fit.r_squared >= 0.99,
        format!("rate {:.5} (bound {bound:.5}), r2 {:.4}, {} points", fit.rate, fit.r_squared, fit.points),
    )
}

struct DualTrace {
    /// `(round, ||lambda - lambda*||^2)`.
    errors: Vec<(f64, f64)>,
    gaps: Vec<f64>,
    zetas: Vec<Matrix>,
}

fn trace_dual(p: &ProblemSpec, t: &Topology, params: &AccParams) -> Res<(DualTrace, f64, f64)> {
    let pinv = analysis::sqrt_laplacian_pinv(t);
    let zeta_star = analysis::optimal_zeta(p)?;
    let oracle = GapOracle::for_problem(p)?;
    let mut alg = LocalDualAscent::decentralized(p, t, params, 12)?;
    let mut out = DualTrace { errors: Vec::new(), gaps: Vec::new(), zetas: Vec::new() };
    for r in 0..=params.rounds {
        if r > 0 {
            alg.step()?;
        }
        let s = alg.state();
        out.errors.push((r as f64, analysis::dual_error(&pinv, &s.zeta, &zeta_star)));
        out.gaps.push(oracle.gap(p, &linalg::row_mean(&s.x)));
        out.zetas.push(s.zeta.clone());
    }
    Ok((out, alg.dual_step(), alg.momentum()))
}

fn ring8() -> Res<(ProblemSpec, Topology)> {
    Ok((make_quadratic(12, 8, 3, 1.0, 10.0, 1.0)?, Topology::build(TopologyKind::Ring, 8)?))
}

fn c6_acc_rate() -> Res<(Outcome, f64)> {
    let (p, t) = ring8()?;
    let (mu, l, s2) = (p.mu, p.smoothness, t.sigma2());
    let params = AccParams::accelerated(600, InnerSolver::Exact);
    let (trace, step, momentum) = trace_dual(&p, &t, &params)?;
    let fit = fit_geometric_rate(&trace.errors)?;
    let bound = (-(mu * (1.0 - s2)).sqrt() / (2.0 * (2.0 * l).sqrt())).exp() + 0.005;

    // With exact inner solves the method is Nesterov ascent on the dual.
    let q = analysis::dual_hessian_decentralized(&p, &t)?;
    let u = t.sqrt_laplacian();
    let lambdas = analysis::accelerated_dual_ascent(&q, step, momentum, 100);
    let mismatch = lambdas
        .iter()
        .zip(&trace.zetas)
        .map(|(lam, z)| (&u * lam - z).norm())
        .fold(0.0, f64::max);

    let x_star = reference_solution(&p)?.x_star;
    let x0_dist = p.num_clients() as f64 * x_star.norm_squared();
    let predicted = 2.0 * (2.0 * l).sqrt() / (mu * (1.0 - s2)).sqrt()
        * (p.num_clients() as f64 * l.powi(3) * x0_dist / (mu * mu * (1.0 - s2) * 1e-8)).ln();
    let reached = trace.gaps.iter().position(|&g| g <= 1e-8);
    let within = reached.is_some_and(|r| r as f64 <= 10.0 * predicted);
    let o = Outcome {
        passed: fit.rate <= bound && mismatch <= 1e-9 && within,
        detail: format!(
            "rate {:.5} (bound {bound:.5}), gap <= 1e-8 at round {} (10x prediction {:.0}), dual recursion mismatch {mismatch:.1e}",
            fit.rate,
            reached.map_or("never".into(), |r| r.to_string()),
            10.0 * predicted
        ),
    };
    Ok((o, fit.rate))
}

fn c7_led_rate(acc_rate: f64) -> Res<Outcome> {
    let (p, t) = ring8()?;
    let params = AccParams::led(3000, InnerSolver::Exact);
    let (trace, _, _) = trace_dual(&p, &t, &params)?;
    let fit = fit_geometric_rate(&trace.errors)?;
    let bound = 1.0 - (1.0 - t.sigma2()) * p.mu / (4.0 * p.smoothness) + 0.005;
    outcome(
        fit.rate <= bound && fit.rate > acc_rate,
        format!("rate {:.5} (bound {bound:.5}), accelerated {acc_rate:.5}", fit.rate),
    )
}

fn lockstep(a: &mut dyn RoundAlgorithm, b: &mut dyn RoundAlgorithm, rounds: usize) -> Res<f64> {
    let mut worst: f64 = 0.0;
    for _ in 0..rounds {
        a.step()?;
        b.step()?;
        worst = worst.max((a.iterates() - b.iterates()).amax());
    }
    Ok(worst)
}

fn c8_identities() -> Res<Outcome> {
    let p = make_quadratic(18, 5, 3, 1.0, 10.0, 1.0)?.with_sigma(0.5);
    let ring = Topology::build(TopologyKind::Ring, 5)?;
    let inner = InnerSolver::sgd(10);
    let step = pdlocal_core::params::led_dual_step(p.mu, p.num_clients());

    let mut acc = AccParams::accelerated(50, inner);
    acc.momentum = Some(0.0);
    acc.dual_step = Some(step);
    let mut led = AccParams::led(50, inner);
    led.dual_step = Some(step);
    let mut a = LocalDualAscent::decentralized(&p, &ring, &acc, 5)?;
    let mut b = LocalDualAscent::decentralized(&p, &ring, &led, 5)?;
    let mut diff_a: f64 = 0.0;
    for _ in 0..50 {
        a.step()?;
        b.step()?;
        diff_a = diff_a
            .max((a.iterates() - b.iterates()).amax())
            .max((&a.state().zeta - &b.state().zeta).amax());
    }

    let complete = Topology::build(TopologyKind::Complete, 5)?;
    let params = AccParams::accelerated(50, inner);
    let mut gossip = LocalDualAscent::decentralized(&p, &complete, &params, 6)?;
    let mut central = LocalDualAscent::centralized(&p, &params, 6)?;
    let diff_b = lockstep(&mut gossip, &mut central, 50)?;

    let q = make_quadratic(19, 4, 3, 0.5, 10.0, 1.0)?;
    let run = |layout| run_catalyst(&q, &mut ExactInner, &CatalystParams::new(15, CatalystMode::StronglyConvex, layout), 3);
    let (c, d) = (run(CatalystLayout::Centralized)?, run(CatalystLayout::Decentralized)?);
    let diff_c = c.trace.iter().zip(&d.trace).map(|(x, y)| (&x.x_bar - &y.x_bar).amax()).fold(0.0, f64::max);
    let consensual = d.record.rows.iter().all(|r| r.consensus <= 1e-24);

    outcome(
        diff_a <= 1e-12 && diff_b <= 1e-12 && diff_c <= 1e-10 && consensual,
        format!("beta=0 vs LED {diff_a:.1e}, complete graph vs centralized {diff_b:.1e}, Catalyst layouts {diff_c:.1e}"),
    )
}

fn c9_span_invariant() -> Res<Outcome> {
    let mut worst: f64 = 0.0;
    let mut rounds = 0;
    for (seed, m, sigma) in [(31, 5, 0.0), (32, 8, 0.5), (33, 4, 1.0)] {
        let p = make_quadratic(seed, m, 3, 1.0, 10.0, 1.0)?.with_sigma(sigma);
        for t in graphs(m) {
            for params in [AccParams::accelerated(100, InnerSolver::sgd(10)), AccParams::led(100, InnerSolver::sgd(10))] {
                let mut alg = LocalDualAscent::decentralized(&p, &t, &params, seed)?;
                for _ in 0..=params.rounds {
                    let s = alg.state();
                    worst = worst.max(analysis::span_residual(&s.zeta)).max(analysis::span_residual(&s.zeta_tilde));
                    rounds += 1;
                    alg.step()?;
                }
            }
        }
    }
    outcome(worst <= 1e-10, format!("{rounds} logged rounds, worst span residual {worst:.1e}"))
}

fn c10_catalyst_schedules() -> Res<Outcome> {
    let p = make_quadratic(13, 4, 5, 0.1, 10.0, 1.0)?;
    let ring = Topology::build(TopologyKind::Ring, 4)?;
    let mut inner = RoundInner::new(InnerMethod::AccGaMsgd(ring), InnerSolver::sgd(20));
    let run = run_catalyst(&p, &mut inner, &CatalystParams::new(40, CatalystMode::StronglyConvex, CatalystLayout::Decentralized), 0)?;
    let q = p.mu / (p.mu + 2.0 * p.smoothness);

    let mut residual: f64 = 0.0;
    let mut prev = q.sqrt();
    for step in &run.trace {
        let a = step.alpha;
        residual = residual.max((a * a - (1.0 - a) * prev * prev - q * a).abs());
        prev = a;
    }
    let (a, b) = momentum_schedule(CatalystMode::StronglyConvex, q, q.sqrt());
    let fixed = (a - q.sqrt()).abs().max((b - (1.0 - q.sqrt()) / (1.0 + q.sqrt())).abs());

    let x_star = reference_solution(&p)?;
    let delta = p.global_value_grad(&Vector::zeros(p.dim)).0 - x_star.f_star;
    let mut slack = f64::INFINITY;
    for row in &run.record.rows {
        let envelope = 800.0 * (1.0 - 0.9 * q.sqrt()).powi(row.round as i32 + 1) * delta / q;
        slack = slack.min((envelope - row.gap) / envelope);
    }
    outcome(
        residual <= 1e-12 && fixed <= 1e-15 && slack >= 0.0,
        format!(
            "{} steps, recursion residual {residual:.1e}, fixed point error {fixed:.1e}, min relative envelope slack {slack:.3}",
            run.trace.len()
        ),
    )
}

fn c11_nonconvex_catalyst() -> Res<Outcome> {
    let p = make_nonconvex(14, 4, 5, 40, 0.01, 1.0, 1.0)?;
    let ring = Topology::build(TopologyKind::Ring, 4)?;
    let mut inner = RoundInner::new(InnerMethod::AccGaMsgd(ring), InnerSolver::sgd(20));
    let outer = 50;
    let run = run_catalyst(&p, &mut inner, &CatalystParams::new(outer, CatalystMode::Nonconvex, CatalystLayout::Decentralized), 0)?;
    let delta = run.record.param("delta0").ok_or("delta0 missing")?;
    let best = run.trace.iter().map(|s| s.gap).fold(f64::INFINITY, f64::min);
    let bound = 32.0 * p.smoothness * delta / outer as f64;
    outcome(best <= bound, format!("min squared gradient norm {best:.3e} (bound {bound:.3e})"))
}

const STOCHASTIC: &str = r#"
[[problem]]
name = "noisy"
generator = "quadratic"
clients = 4
dim = 5
mu = 1.0
smoothness = 10.0
heterogeneity = 1.0
sigma = 1.0
seed = 41

[[algorithm]]
name = "ga-msgd"
label = "K10"
inner_steps = 10

[[algorithm]]
name = "ga-msgd"
label = "K100"
inner_steps = 100

[[algorithm]]
name = "ga-msgd"
label = "K1000"
inner_steps = 1000

[budget]
max_rounds = 100

[run]
repetitions = 10
base_seed = 500
"#;

fn c12_stochastic() -> Res<Outcome> {
    let cfg = ExperimentConfig::from_toml(STOCHASTIC)?;
    let out = grid::run_experiment(&cfg)?;
    let gaps: Vec<f64> = ["K10", "K100", "K1000"]
        .iter()
        .map(|label| {
            out.summaries
                .iter()
                .find(|s| s.algorithm.starts_with(label))
                .and_then(|s| (s.completed == 10).then_some(s.mean_final_gap).flatten())
                .ok_or_else(|| format!("{label} did not complete"))
        })
        .collect::<Result<_, _>>()?;
    let monotone = gaps.windows(2).all(|w| w[1] <= w[0]);

    let p = make_quadratic(42, 2, 5, 1.0, 10.0, 1.0)?.with_sigma(1.0);
    let x = Vector::from_element(5, -0.7);
    let exact = p.evaluate(0, &x)?.1;
    let mut stream = rng::client_stream(42, 0);
    let draws = 100_000;
    let (mut mean, mut second) = (Vector::zeros(5), 0.0);
    for _ in 0..draws {
        let e = p.stoch_grad(0, &x, &mut stream)? - &exact;
        second += e.norm_squared();
        mean += e;
    }
    let second = second / draws as f64;
    let bias = mean.norm() / draws as f64;
    let moments = (second - 1.0).abs() <= 0.05 && bias <= 0.05;
    outcome(
        monotone && moments,
        format!(
            "mean final gaps {:.3e} / {:.3e} / {:.3e} for K = 10 / 100 / 1000, noise second moment {second:.4}, mean norm {bias:.1e}",
            gaps[0], gaps[1], gaps[2]
        ),
    )
}

fn c13_gossip() -> Res<Outcome> {
    let t = Topology::build(TopologyKind::Ring, 8)?;
    let s2 = t.sigma2();
    let mut stream = rng::client_stream(43, 0);
    let x0 = gaussian(8, 3, &mut stream);
    let mean0 = linalg::row_mean(&x0);
    let mut x = x0.clone();
    let (mut worst_ratio, mut drift): (f64, f64) = (0.0, 0.0);
    for _ in 0..20 {
        let next = t.gossip_average(&x, 1)?;
        worst_ratio = worst_ratio.max(linalg::consensus_violation(&next) / linalg::consensus_violation(&x));
        drift = drift.max((linalg::row_mean(&next) - &mean0).amax());
        x = next;
    }
    let batch = (t.gossip_average(&x0, 20)? - &x).amax();
    outcome(
        worst_ratio.sqrt() <= s2 + 1e-12 && drift <= 1e-12 && batch <= 1e-12,
        format!("worst per-round norm contraction {:.5} (sigma2 {s2:.5}), mean drift {drift:.1e}", worst_ratio.sqrt()),
    )
}

fn report(number: usize, title: &str, result: Res<Outcome>, passed: &mut Vec<bool>) {
    let (ok, detail) = match result {
        Ok(o) => (o.passed, o.detail),
        Err(e) => (false, format!("error: {e}")),
    };
    println!("[{}] {number:>2} {title}: {detail}", if ok { "PASS" } else { "FAIL" });
    passed.push(ok);
}

fn main() {
    let start = Instant::now();
    let mut passed = Vec::new();
    report(1, "centralized dual conditioning", c1_central_conditioning(), &mut passed);
    report(2, "decentralized dual conditioning", c2_decentral_conditioning(), &mut passed);
    report(3, "dual gradient identities", c3_gradient_identities(), &mut passed);
    report(4, "strong concavity on span(U)", c4_monotonicity(), &mut passed);
    report(5, "GA-MSGD rate envelope", c5_ga_msgd_rate(), &mut passed);
    let acc = c6_acc_rate();
    let acc_rate = acc.as_ref().map(|(_, r)| *r).unwrap_or(f64::NAN);
    report(6, "Acc-GA-MSGD rate envelope", acc.map(|(o, _)| o), &mut passed);
    report(7, "LED rate envelope", c7_led_rate(acc_rate), &mut passed);
    report(8, "algorithmic identities", c8_identities(), &mut passed);
    report(9, "dual span invariant", c9_span_invariant(), &mut passed);
    report(10, "Catalyst schedules and envelope", c10_catalyst_schedules(), &mut passed);
    report(11, "nonconvex Catalyst", c11_nonconvex_catalyst(), &mut passed);
    report(12, "stochastic sanity", c12_stochastic(), &mut passed);
    report(13, "gossip postprocessing", c13_gossip(), &mut passed);
    let failed = passed.iter().filter(|&&p| !p).count();
    println!("{} of {} criteria passed in {:.1}s", passed.len() - failed, passed.len(), start.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
