//! Problem files (JSON, row-major matrices) and topology files (whitespace
//! separated weight matrix).

use std::fs;
use std::path::Path;

use pdlocal_core::linalg::{Matrix, Vector};
use pdlocal_core::problems::{ClientObjective, ConvexityClass, LogisticData, ProblemSpec};
use pdlocal_core::topology::Topology;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub mu: f64,
    pub smoothness: f64,
    #[serde(default)]
    pub sigma: f64,
    pub class: ConvexityClass,
    pub clients: Vec<ClientRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClientRecord {
    Quadratic { hessian: Vec<Vec<f64>>, linear: Vec<f64> },
    Logistic { features: Vec<Vec<f64>>, labels: Vec<f64>, l2: f64 },
    PenalizedLogistic { features: Vec<Vec<f64>>, labels: Vec<f64>, l2: f64, penalty: f64 },
}

fn rows_of(m: &Matrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn matrix_from(rows: &[Vec<f64>], what: &str) -> std::result::Result<Matrix, String> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(format!("{what}: rows have different lengths"));
    }
    Ok(Matrix::from_row_iterator(rows.len(), cols, rows.iter().flatten().copied()))
}

impl ProblemFile {
    pub fn from_spec(p: &ProblemSpec) -> Result<Self> {
        let clients = p
            .clients
            .iter()
            .enumerate()
            .map(|(m, c)| match c {
                ClientObjective::Quadratic { hessian, linear } => {
                    Ok(ClientRecord::Quadratic { hessian: rows_of(hessian), linear: linear.iter().copied().collect() })
                }
                ClientObjective::Logistic(d) => Ok(ClientRecord::Logistic {
                    features: rows_of(&d.features),
                    labels: d.labels.iter().copied().collect(),
                    l2: d.l2,
                }),
                ClientObjective::PenalizedLogistic { data, penalty } => Ok(ClientRecord::PenalizedLogistic {
                    features: rows_of(&data.features),
                    labels: data.labels.iter().copied().collect(),
                    l2: data.l2,
                    penalty: *penalty,
                }),
                ClientObjective::Proximal { .. } => {
                    Err(Error::config(format!("clients[{m}]"), "proximal clients cannot be exported"))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { mu: p.mu, smoothness: p.smoothness, sigma: p.sigma, class: p.class, clients })
    }

    pub fn to_spec(&self) -> Result<ProblemSpec> {
        let clients = self
            .clients
            .iter()
            .enumerate()
            .map(|(m, c)| {
                let field = |e: String| Error::config(format!("clients[{m}]"), e);
                let logistic = |features: &[Vec<f64>], labels: &[f64], l2: f64| -> Result<LogisticData> {
                    let features = matrix_from(features, "features").map_err(field)?;
                    if features.nrows() != labels.len() {
                        return Err(field(format!("{} feature rows but {} labels", features.nrows(), labels.len())));
                    }
                    Ok(LogisticData { features, labels: Vector::from_column_slice(labels), l2 })
                };
                Ok(match c {
                    ClientRecord::Quadratic { hessian, linear } => ClientObjective::Quadratic {
                        hessian: matrix_from(hessian, "hessian").map_err(field)?,
                        linear: Vector::from_column_slice(linear),
                    },
                    ClientRecord::Logistic { features, labels, l2 } => {
                        ClientObjective::Logistic(logistic(features, labels, *l2)?)
                    }
                    ClientRecord::PenalizedLogistic { features, labels, l2, penalty } => {
                        ClientObjective::PenalizedLogistic { data: logistic(features, labels, *l2)?, penalty: *penalty }
                    }
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ProblemSpec::new(clients, self.mu, self.smoothness, self.sigma, self.class)?)
    }
}

pub fn load_problem(path: &Path) -> Result<ProblemSpec> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: ProblemFile =
        serde_json::from_str(&text).map_err(|e| Error::Parse { path: path.into(), message: e.to_string() })?;
    file.to_spec()
}

pub fn save_problem(p: &ProblemSpec, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(&ProblemFile::from_spec(p)?)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_topology(path: &Path) -> Result<Topology> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Topology::parse_matrix(&text).map_err(|e| Error::Parse { path: path.into(), message: e.to_string() })
}

pub fn save_topology(t: &Topology, path: &Path) -> Result<()> {
    fs::write(path, t.to_text()).map_err(|e| Error::io(path, e))
}
