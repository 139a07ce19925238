//! Grid planning and execution.
//!
//! Planning resolves every `"auto"` parameter against its problem and
//! topology before anything runs, so config mistakes surface as
//! field-path errors. Execution never aborts the grid: a failing cell is
//! recorded with its error.

use pdlocal_core::baseline::{run_fedavg_with_clock, FedAvgParams};
use pdlocal_core::catalyst::{
    run_catalyst_with_clock, CatalystLayout, CatalystMode, CatalystParams, InnerMethod, RoundInner,
};
use pdlocal_core::centralized::{run_ga_msgd_with_clock, DualInit, GaMsgdParams};
use pdlocal_core::decentralized::{run_centralized_acc_with_clock, run_decentralized_with_clock, AccParams};
use pdlocal_core::local::{InnerSolver, StepRule};
use pdlocal_core::params;
use pdlocal_core::problems::{
    make_identical_quadratic, make_logistic, make_nonconvex, make_quadratic, ConvexityClass, ProblemSpec,
};
use pdlocal_core::record::RunRecord;
use pdlocal_core::topology::{Topology, TopologyKind};
use rayon::prelude::*;
use serde::Serialize;

use crate::clock::WallClock;
use crate::config::{AlgorithmConfig, AlgorithmName, ExperimentConfig, Generator, ProblemConfig, TopologyChoice};
use crate::error::{Error, Result};
use crate::files;

/// A fully resolved algorithm instance.
#[derive(Debug, Clone)]
pub enum AlgorithmSpec {
    GaMsgd(GaMsgdParams),
    /// Acc-GA-MSGD or LED, by `mode`.
    Decentralized(AccParams),
    CentralizedAcc(AccParams),
    FedAvg(FedAvgParams),
    Catalyst { params: CatalystParams, inner: RoundInner },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct CellKey {
    pub algorithm: String,
    pub problem: String,
    pub topology: Option<String>,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct Cell {
    pub key: CellKey,
    pub problem: usize,
    pub topology: Option<usize>,
    pub spec: AlgorithmSpec,
}

pub struct Plan {
    pub problems: Vec<(String, ProblemSpec)>,
    /// Per problem, the instantiated topologies (sized to its clients).
    pub topologies: Vec<Vec<(String, Topology)>>,
    pub cells: Vec<Cell>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CellFailure {
    pub key: CellKey,
    pub error: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct CellSummary {
    pub algorithm: String,
    pub problem: String,
    pub topology: Option<String>,
    pub completed: usize,
    pub failed: usize,
    pub mean_final_gap: Option<f64>,
    /// Per-round mean gap over completed seeds (truncated to the shortest).
    pub mean_gaps: Vec<f64>,
}

pub struct ExperimentOutput {
    /// Successful runs, in plan order.
    pub records: Vec<RunRecord>,
    pub keys: Vec<CellKey>,
    pub failures: Vec<CellFailure>,
    pub summaries: Vec<CellSummary>,
}

impl ExperimentOutput {
    pub fn all_completed(&self) -> bool {
        self.failures.is_empty()
    }
}

fn need<T: Copy>(value: Option<T>, field: String) -> Result<T> {
    value.ok_or_else(|| Error::config(field, "required for this generator"))
}

pub fn build_problem(cfg: &ExperimentConfig, index: usize, pc: &ProblemConfig) -> Result<ProblemSpec> {
    let f = |name: &str| format!("problem[{index}].{name}");
    let seed = pc.seed.unwrap_or(0);
    let het = pc.heterogeneity.unwrap_or(0.0);
    let wrap = |r: pdlocal_core::Result<ProblemSpec>| r.map_err(|e| Error::config(format!("problem[{index}]"), e.to_string()));
    let p = match pc.generator {
        Generator::Quadratic => wrap(make_quadratic(
            seed,
            need(pc.clients, f("clients"))?,
            need(pc.dim, f("dim"))?,
            need(pc.mu, f("mu"))?,
            need(pc.smoothness, f("smoothness"))?,
            het,
        ))?,
        Generator::IdenticalQuadratic => wrap(make_identical_quadratic(
            seed,
            need(pc.clients, f("clients"))?,
            need(pc.dim, f("dim"))?,
            need(pc.mu, f("mu"))?,
            need(pc.smoothness, f("smoothness"))?,
        ))?,
        Generator::Logistic => wrap(make_logistic(
            seed,
            need(pc.clients, f("clients"))?,
            need(pc.dim, f("dim"))?,
            need(pc.samples, f("samples"))?,
            need(pc.l2, f("l2"))?,
            het,
        ))?,
        Generator::Nonconvex => wrap(make_nonconvex(
            seed,
            need(pc.clients, f("clients"))?,
            need(pc.dim, f("dim"))?,
            need(pc.samples, f("samples"))?,
            pc.l2.unwrap_or(0.0),
            need(pc.penalty, f("penalty"))?,
            het,
        ))?,
        Generator::File => {
            let path = pc.path.as_ref().ok_or_else(|| Error::config(f("path"), "required for generator = \"file\""))?;
            files::load_problem(&cfg.resolve_path(path))?
        }
    };
    match pc.sigma {
        Some(s) if !(s >= 0.0 && s.is_finite()) => Err(Error::config(f("sigma"), format!("{s} must be >= 0"))),
        Some(s) => Ok(p.with_sigma(s)),
        None => Ok(p),
    }
}

fn build_topology(cfg: &ExperimentConfig, index: usize, clients: usize) -> Result<(String, Topology)> {
    let tc = &cfg.topology[index];
    let field = format!("topology[{index}]");
    let kind = match tc.kind {
        TopologyChoice::Complete => Some(TopologyKind::Complete),
        TopologyChoice::Ring => Some(TopologyKind::Ring),
        TopologyChoice::Path => Some(TopologyKind::Path),
        TopologyChoice::File => None,
    };
    let t = match kind {
        Some(kind) => Topology::build(kind, clients).map_err(|e| Error::config(&field, e.to_string()))?,
        None => {
            let path = tc.path.as_ref().ok_or_else(|| Error::config(format!("{field}.path"), "required for kind = \"file\""))?;
            files::load_topology(&cfg.resolve_path(path))?
        }
    };
    if t.num_nodes() != clients {
        return Err(Error::config(field, format!("{} nodes for a {clients}-client problem", t.num_nodes())));
    }
    let name = tc.name.clone().unwrap_or_else(|| format!("{:?}", tc.kind).to_lowercase());
    Ok((name, t))
}

fn positive(value: f64, field: &str) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::config(field, format!("resolved to {value}, which is not finite and positive")))
    }
}

fn inner_solver(ac: &AlgorithmConfig, f: &dyn Fn(&str) -> String) -> Result<InnerSolver> {
    use crate::config::Param;
    let rule = match ac.inner_step.resolve(&f("inner_step"))? {
        None => StepRule::Auto,
        Some(tau) => StepRule::Constant(positive(tau, &f("inner_step"))?),
    };
    match &ac.inner_steps {
        Param::Text(t) if t == "exact" => Ok(InnerSolver::Exact),
        Param::Number(k) if *k >= 1.0 && k.fract() == 0.0 => Ok(InnerSolver::Sgd { steps: *k as usize, rule }),
        other => Err(Error::config(f("inner_steps"), format!("expected a positive integer or \"exact\", got {other:?}"))),
    }
}

/// Rounds allowed by the budget for a method drawing `per_round` samples.
fn budget_rounds(cfg: &ExperimentConfig, per_round: usize) -> usize {
    match cfg.budget.max_samples {
        Some(cap) if per_round > 0 => cfg.budget.max_rounds.min(cap / per_round),
        _ => cfg.budget.max_rounds,
    }
}

fn needs_topology(ac: &AlgorithmConfig) -> bool {
    match ac.name {
        AlgorithmName::AccGaMsgd | AlgorithmName::Led => true,
        AlgorithmName::Catalyst => matches!(ac.inner, Some(AlgorithmName::AccGaMsgd | AlgorithmName::Led)),
        _ => false,
    }
}

/// Resolves one algorithm block for a concrete problem and topology.
pub fn resolve_algorithm(
    cfg: &ExperimentConfig,
    index: usize,
    p: &ProblemSpec,
    t: Option<&Topology>,
) -> Result<AlgorithmSpec> {
    let ac = &cfg.algorithm[index];
    let f = |name: &str| format!("algorithm[{index}].{name}");
    let inner = inner_solver(ac, &f)?;
    let m = p.num_clients();
    let rounds = budget_rounds(cfg, inner.samples_per_round());
    let require_mu = |what: &str| -> Result<()> {
        if p.mu > 0.0 {
            Ok(())
        } else {
            Err(Error::config(f(what), "\"auto\" needs a strongly convex problem (mu > 0)"))
        }
    };
    let x0 = None;
    Ok(match ac.name {
        AlgorithmName::GaMsgd => {
            let dual_step = match ac.dual_step.resolve(&f("dual_step"))? {
                Some(v) => v,
                None => {
                    require_mu("dual_step")?;
                    params::ga_msgd_dual_step(p.mu, m)
                }
            };
            let init = match ac.dual_init.as_deref() {
                None | Some("paper_l") => DualInit::PaperL,
                Some("optimality_mu") => DualInit::OptimalityMu,
                Some("zero") => DualInit::Zero,
                Some(other) => return Err(Error::config(f("dual_init"), format!("unknown initialization {other:?}"))),
            };
            AlgorithmSpec::GaMsgd(GaMsgdParams {
                rounds,
                inner,
                dual_step: Some(positive(dual_step, &f("dual_step"))?),
                init,
                x0,
            })
        }
        AlgorithmName::AccGaMsgd | AlgorithmName::Led | AlgorithmName::CentralizedAcc => {
            let led = ac.name == AlgorithmName::Led;
            let sigma2 = t.map_or(0.0, Topology::sigma2);
            let dual_step = match ac.dual_step.resolve(&f("dual_step"))? {
                Some(v) => v,
                None if led => {
                    require_mu("dual_step")?;
                    params::led_dual_step(p.mu, m)
                }
                None => {
                    require_mu("dual_step")?;
                    params::acc_dual_step(p.mu, m)
                }
            };
            let momentum = match ac.momentum.resolve(&f("momentum"))? {
                Some(b) if !(0.0..1.0).contains(&b) => {
                    return Err(Error::config(f("momentum"), format!("{b} not in [0, 1)")));
                }
                Some(b) => b,
                None if led => 0.0,
                None => {
                    require_mu("momentum")?;
                    params::acc_momentum(p.mu, p.smoothness, sigma2)
                }
            };
            let base = if led { AccParams::led(rounds, inner) } else { AccParams::accelerated(rounds, inner) };
            let params = AccParams { dual_step: Some(positive(dual_step, &f("dual_step"))?), momentum: Some(momentum), ..base };
            if ac.name == AlgorithmName::CentralizedAcc {
                AlgorithmSpec::CentralizedAcc(params)
            } else {
                AlgorithmSpec::Decentralized(params)
            }
        }
        AlgorithmName::Fedavg => AlgorithmSpec::FedAvg(FedAvgParams { rounds, inner, x0 }),
        AlgorithmName::Catalyst => {
            let method = match (ac.inner, t) {
                (Some(AlgorithmName::AccGaMsgd), Some(t)) => InnerMethod::AccGaMsgd(t.clone()),
                (Some(AlgorithmName::Led), Some(t)) => InnerMethod::Led(t.clone()),
                (Some(AlgorithmName::CentralizedAcc), _) => InnerMethod::CentralAcc,
                (Some(AlgorithmName::GaMsgd), _) => InnerMethod::GaMsgd,
                (None, _) => return Err(Error::config(f("inner"), "catalyst needs an inner method")),
                (Some(other), _) => {
                    return Err(Error::config(f("inner"), format!("{} cannot serve as a catalyst inner method", other.as_str())));
                }
            };
            let mode = match ac.mode.as_deref() {
                None | Some("auto") => match p.class {
                    ConvexityClass::StronglyConvex => CatalystMode::StronglyConvex,
                    ConvexityClass::Convex => CatalystMode::Convex,
                    ConvexityClass::Nonconvex => CatalystMode::Nonconvex,
                },
                Some("strongly_convex") => CatalystMode::StronglyConvex,
                Some("convex") => CatalystMode::Convex,
                Some("nonconvex") => CatalystMode::Nonconvex,
                Some(other) => return Err(Error::config(f("mode"), format!("unknown mode {other:?}"))),
            };
            let layout = match ac.layout.as_deref() {
                None if t.is_some() => CatalystLayout::Decentralized,
                None | Some("centralized") => CatalystLayout::Centralized,
                Some("decentralized") => CatalystLayout::Decentralized,
                Some(other) => return Err(Error::config(f("layout"), format!("unknown layout {other:?}"))),
            };
            let mut params = CatalystParams::new(ac.outer.unwrap_or(20), mode, layout);
            params.gamma = ac.gamma.unwrap_or(1.0);
            if mode == CatalystMode::Convex {
                positive(params.gamma, &f("gamma"))?;
            }
            if let Some(d) = ac.delta0.resolve(&f("delta0"))? {
                params.delta0 = Some(positive(d, &f("delta0"))?);
            }
            let mut round_inner = RoundInner::new(method, inner);
            if let Some(cap) = ac.max_inner_rounds {
                round_inner.max_rounds = cap;
            }
            AlgorithmSpec::Catalyst { params, inner: round_inner }
        }
    })
}

/// Validates the whole config and lays out the grid.
pub fn plan(cfg: &ExperimentConfig) -> Result<Plan> {
    if cfg.problem.is_empty() {
        return Err(Error::config("problem", "at least one [[problem]] block is required"));
    }
    if cfg.algorithm.is_empty() {
        return Err(Error::config("algorithm", "at least one [[algorithm]] block is required"));
    }
    let seeds = cfg.run.seed_list();
    if seeds.is_empty() {
        return Err(Error::config("run.seeds", "no seeds to run"));
    }
    let mut problems = Vec::new();
    let mut topologies = Vec::new();
    for (i, pc) in cfg.problem.iter().enumerate() {
        let p = build_problem(cfg, i, pc)?;
        let ts = (0..cfg.topology.len()).map(|k| build_topology(cfg, k, p.num_clients())).collect::<Result<Vec<_>>>()?;
        let name = pc.name.clone().unwrap_or_else(|| format!("problem{i}"));
        problems.push((name, p));
        topologies.push(ts);
    }
    let many_problems = problems.len() > 1;
    let mut cells = Vec::new();
    for (pi, (pname, p)) in problems.iter().enumerate() {
        for (ai, ac) in cfg.algorithm.iter().enumerate() {
            let choices: Vec<Option<usize>> = if needs_topology(ac) {
                if topologies[pi].is_empty() {
                    return Err(Error::config(format!("algorithm[{ai}]"), "needs a [[topology]] block"));
                }
                (0..topologies[pi].len()).map(Some).collect()
            } else {
                vec![None]
            };
            for ti in choices {
                let t = ti.map(|k| &topologies[pi][k].1);
                let spec = resolve_algorithm(cfg, ai, p, t)?;
                let mut label = ac.label.clone().unwrap_or_else(|| ac.name.as_str().to_string());
                if many_problems {
                    label = format!("{label}@{pname}");
                }
                if let Some(k) = ti {
                    label = format!("{label}/{}", topologies[pi][k].0);
                }
                for &seed in &seeds {
                    cells.push(Cell {
                        key: CellKey {
                            algorithm: label.clone(),
                            problem: pname.clone(),
                            topology: ti.map(|k| topologies[pi][k].0.clone()),
                            seed,
                        },
                        problem: pi,
                        topology: ti,
                        spec: spec.clone(),
                    });
                }
            }
        }
    }
    Ok(Plan { problems, topologies, cells })
}

/// Runs one cell. The record's `algorithm` field carries the cell label.
pub fn run_cell(plan: &Plan, cell: &Cell) -> pdlocal_core::Result<RunRecord> {
    let p = &plan.problems[cell.problem].1;
    let t = cell.topology.map(|k| &plan.topologies[cell.problem][k].1);
    let clock = WallClock::start();
    let seed = cell.key.seed;
    let mut record = match &cell.spec {
        AlgorithmSpec::GaMsgd(params) => run_ga_msgd_with_clock(p, params, seed, &clock)?,
        AlgorithmSpec::Decentralized(params) => {
            let t = t.ok_or(pdlocal_core::Error::Topology("missing topology".into()))?;
            run_decentralized_with_clock(p, t, params, seed, &clock)?
        }
        AlgorithmSpec::CentralizedAcc(params) => run_centralized_acc_with_clock(p, params, seed, &clock)?,
        AlgorithmSpec::FedAvg(params) => run_fedavg_with_clock(p, params, seed, &clock)?,
        AlgorithmSpec::Catalyst { params, inner } => {
            let mut inner = inner.clone();
            run_catalyst_with_clock(p, &mut inner, params, seed, &clock)?.record
        }
    };
    record.algorithm = cell.key.algorithm.clone();
    Ok(record)
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let plan = plan(cfg)?;
    let results: Vec<pdlocal_core::Result<RunRecord>> = if cfg.run.parallel {
        plan.cells.par_iter().map(|c| run_cell(&plan, c)).collect()
    } else {
        plan.cells.iter().map(|c| run_cell(&plan, c)).collect()
    };
    let mut records = Vec::new();
    let mut keys = Vec::new();
    let mut failures = Vec::new();
    for (cell, result) in plan.cells.iter().zip(results) {
        match result {
            Ok(r) => {
                records.push(r);
                keys.push(cell.key.clone());
            }
            Err(e) => failures.push(CellFailure { key: cell.key.clone(), error: e.to_string() }),
        }
    }
    let summaries = summarize(&plan, &records, &keys, &failures);
    Ok(ExperimentOutput { records, keys, failures, summaries })
}

fn summarize(plan: &Plan, records: &[RunRecord], keys: &[CellKey], failures: &[CellFailure]) -> Vec<CellSummary> {
    let mut out: Vec<CellSummary> = Vec::new();
    for cell in &plan.cells {
        let k = &cell.key;
        if out.iter().any(|s| s.algorithm == k.algorithm && s.problem == k.problem && s.topology == k.topology) {
            continue;
        }
        let same = |o: &CellKey| o.algorithm == k.algorithm && o.problem == k.problem && o.topology == k.topology;
        let runs: Vec<&RunRecord> = keys.iter().zip(records).filter(|(o, _)| same(o)).map(|(_, r)| r).collect();
        let failed = failures.iter().filter(|f| same(&f.key)).count();
        let finals: Vec<f64> = runs.iter().filter_map(|r| r.final_gap()).collect();
        let shortest = runs.iter().map(|r| r.rows.len()).min().unwrap_or(0);
        let mean_gaps = (0..shortest)
            .map(|i| runs.iter().map(|r| r.rows[i].gap).sum::<f64>() / runs.len() as f64)
            .collect();
        out.push(CellSummary {
            algorithm: k.algorithm.clone(),
            problem: k.problem.clone(),
            topology: k.topology.clone(),
            completed: runs.len(),
            failed,
            mean_final_gap: (!finals.is_empty()).then(|| finals.iter().sum::<f64>() / finals.len() as f64),
            mean_gaps,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
[[problem]]
generator = "quadratic"
clients = 4
dim = 3
mu = 1.0
smoothness = 10.0
heterogeneity = 1.0
seed = 3

[[topology]]
kind = "ring"
"#;

    #[test]
    fn auto_parameters_resolve_from_table() {
        let cfg = ExperimentConfig::from_toml(&format!("{BASE}\n[[algorithm]]\nname = \"acc-ga-msgd\"\n")).unwrap();
        let plan = plan(&cfg).unwrap();
        let AlgorithmSpec::Decentralized(params) = &plan.cells[0].spec else { panic!() };
        assert_eq!(params.dual_step, Some(1.0 / 16.0));
        let t = &plan.topologies[0][0].1;
        assert_eq!(params.momentum, Some(params::acc_momentum(1.0, 10.0, t.sigma2())));
    }

    #[test]
    fn missing_field_reports_path() {
        let cfg = ExperimentConfig::from_toml("[[problem]]\ngenerator = \"quadratic\"\nclients = 2\n[[algorithm]]\nname = \"led\"\n").unwrap();
        let err = plan(&cfg).err().unwrap().to_string();
        assert!(err.starts_with("problem[0].dim"), "{err}");
    }

    #[test]
    fn decentralized_method_without_topology_is_rejected() {
        let text = BASE.replace("[[topology]]\nkind = \"ring\"\n", "");
        let cfg = ExperimentConfig::from_toml(&format!("{text}\n[[algorithm]]\nname = \"led\"\n")).unwrap();
        assert!(plan(&cfg).err().unwrap().to_string().starts_with("algorithm[0]"));
    }

    #[test]
    fn sample_budget_caps_rounds() {
        let cfg = ExperimentConfig::from_toml(&format!(
            "{BASE}\n[[algorithm]]\nname = \"ga-msgd\"\ninner_steps = 7\n[budget]\nmax_rounds = 100\nmax_samples = 50\n"
        ))
        .unwrap();
        let out = run_experiment(&cfg).unwrap();
        assert_eq!(out.records[0].rows.len(), 8);
    }
}
