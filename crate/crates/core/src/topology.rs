//! Gossip weight matrices, their spectral quantities, and plain consensus
//! averaging.

// Float supplies sqrt/exp/ln when std is absent.
#[allow(unused_imports)]
use num_traits::Float;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;


use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};

/// Absolute tolerance for symmetry, row sums and spectrum checks.
const VALIDATION_TOL: f64 = 1e-12;
/// Eigenvalues of `I - W` at or below this are treated as the null space.
const NULL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum TopologyKind {
    Complete,
    Ring,
    Path,
    Star,
    Custom,
}

/// A validated gossip matrix: `W = W^T`, `-I <= W <= I`, `W 1 = 1`,
/// `sigma2 < 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    kind: TopologyKind,
    weights: Matrix,
    sigma2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spectrum {
    /// Second largest singular value of `W`.
    pub sigma2: f64,
    /// `1 - sigma2`.
    pub gap: f64,
    /// Smallest nonzero singular value of `U = sqrt(I - W)`.
    pub sigma_min_u: f64,
    /// Largest singular value of `U`.
    pub sigma_max_u: f64,
}

impl Topology {
    /// Builds one of the standard graphs on `m` nodes. The ring uses self
    /// weight 1/2 and neighbor weights 1/4; the path uses 1/4 per edge with
    /// the remainder on the diagonal; the complete graph is `(1/M) 1 1^T`.
    pub fn build(kind: TopologyKind, m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::Topology(format!("need at least 2 nodes, got {m}")));
        }
        let weights = match kind {
            TopologyKind::Complete => Matrix::from_element(m, m, 1.0 / m as f64),
            TopologyKind::Ring | TopologyKind::Path if m < 3 => {
                return Err(Error::Topology(format!("{kind:?} needs at least 3 nodes, got {m}")));
            }
            TopologyKind::Ring => {
                let mut w = Matrix::identity(m, m) * 0.5;
                for i in 0..m {
                    w[(i, (i + 1) % m)] += 0.25;
                    w[(i, (i + m - 1) % m)] += 0.25;
                }
                w
            }
            TopologyKind::Path => {
                let mut w = Matrix::zeros(m, m);
                for i in 0..m - 1 {
                    w[(i, i + 1)] = 0.25;
                    w[(i + 1, i)] = 0.25;
                }
                for i in 0..m {
                    let off: f64 = w.row(i).sum();
                    w[(i, i)] = 1.0 - off;
                }
                w
            }
            TopologyKind::Star => {
                return Err(Error::Topology(
                    "star networks run through the coordinator algorithms, not a gossip matrix".into(),
                ));
            }
            TopologyKind::Custom => {
                return Err(Error::Topology("custom topologies are built with Topology::custom".into()));
            }
        };
        Self::validated(kind, weights)
    }

    /// Validates a user-supplied weight matrix. Errors name the failed
    /// invariant and, where applicable, the offending row and column.
    pub fn custom(weights: Matrix) -> Result<Self> {
        Self::validated(TopologyKind::Custom, weights)
    }

    fn validated(kind: TopologyKind, weights: Matrix) -> Result<Self> {
        let m = weights.nrows();
        if weights.ncols() != m {
            return Err(Error::Topology(format!("matrix is {}x{}, not square", m, weights.ncols())));
        }
        if m < 2 {
            return Err(Error::Topology(format!("need at least 2 nodes, got {m}")));
        }
        for i in 0..m {
            for j in 0..m {
                let w = weights[(i, j)];
                if !w.is_finite() {
                    return Err(Error::Topology(format!("entry (row {i}, column {j}) is not finite")));
                }
                if (w - weights[(j, i)]).abs() > VALIDATION_TOL {
                    return Err(Error::Topology(format!(
                        "symmetry violated at (row {i}, column {j}): {w} vs {}",
                        weights[(j, i)]
                    )));
                }
            }
            let sum: f64 = weights.row(i).sum();
            if (sum - 1.0).abs() > VALIDATION_TOL {
                return Err(Error::Topology(format!("stochasticity violated: row {i} sums to {sum}")));
            }
        }
        let eig = linalg::sym_eigenvalues(&weights);
        if eig[0] < -1.0 - VALIDATION_TOL || eig[m - 1] > 1.0 + VALIDATION_TOL {
            return Err(Error::Topology(format!(
                "spectrum [{}, {}] not within [-1, 1]",
                eig[0],
                eig[m - 1]
            )));
        }
        let sigma2 = second_singular_value(&eig);
        if sigma2 >= 1.0 - VALIDATION_TOL {
            return Err(Error::Topology(format!(
                "connectivity violated: second singular value {sigma2} is not below 1"
            )));
        }
        Ok(Self { kind, weights, sigma2 })
    }

    pub fn kind(&self) -> TopologyKind {
        self.kind
    }

    pub fn num_nodes(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn spectral_gap(&self) -> f64 {
        1.0 - self.sigma2
    }

    /// `I - W`.
    pub fn laplacian(&self) -> Matrix {
        Matrix::identity(self.num_nodes(), self.num_nodes()) - &self.weights
    }

    /// Spectral summary computed by symmetric eigendecomposition of `W` and
    /// of `I - W`.
    pub fn spectrum(&self) -> Spectrum {
        let eig = linalg::sym_eigenvalues(&self.laplacian());
        let nonzero: Vec<f64> = eig.iter().copied().filter(|&v| v > NULL_TOL).collect();
        Spectrum {
            sigma2: self.sigma2,
            gap: 1.0 - self.sigma2,
            sigma_min_u: nonzero.first().copied().unwrap_or(0.0).sqrt(),
            sigma_max_u: eig.last().copied().unwrap_or(0.0).max(0.0).sqrt(),
        }
    }

    /// `U = sqrt(I - W)` with eigenvalues of `I - W` below the tolerance
    /// clipped to zero. Runtime algorithms never need this; the analysis
    /// module does.
    pub fn sqrt_laplacian(&self) -> Matrix {
        let (values, vectors) = linalg::sym_eigen(&self.laplacian());
        let roots: Vec<f64> = values
            .iter()
            .map(|&v| if v <= VALIDATION_TOL { 0.0 } else { v.sqrt() })
            .collect();
        &vectors * Matrix::from_diagonal(&nalgebra::DVector::from_vec(roots)) * vectors.transpose()
    }

    /// Orthonormal basis (columns) of span(U): eigenvectors of `I - W` with
    /// eigenvalue above the null tolerance.
    pub fn span_basis(&self) -> Matrix {
        let (values, vectors) = linalg::sym_eigen(&self.laplacian());
        let keep: Vec<usize> = (0..values.len()).filter(|&i| values[i] > NULL_TOL).collect();
        Matrix::from_fn(self.num_nodes(), keep.len(), |r, c| vectors[(r, keep[c])])
    }

    /// One communication round: returns `W X`.
    pub fn mix(&self, x: &Matrix) -> Result<Matrix> {
        if x.nrows() != self.num_nodes() {
            return Err(Error::Shape {
                expected: format!("{} rows", self.num_nodes()),
                got: format!("{} rows", x.nrows()),
            });
        }
        Ok(&self.weights * x)
    }

    /// Applies [`Topology::mix`] `rounds` times.
    pub fn gossip_average(&self, x: &Matrix, rounds: usize) -> Result<Matrix> {
        let mut out = x.clone();
        for _ in 0..rounds {
            out = self.mix(&out)?;
        }
        Ok(out)
    }

    /// Parses a row-major, whitespace-separated matrix and validates it.
    pub fn parse_matrix(text: &str) -> Result<Self> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (line_no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let row = line
                .split_whitespace()
                .enumerate()
                .map(|(col, tok)| {
                    tok.parse::<f64>().map_err(|_| {
                        Error::Topology(format!(
                            "row {}, column {col}: cannot parse {tok:?} (line {})",
                            rows.len(),
                            line_no + 1
                        ))
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        let m = rows.len();
        if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != m) {
            return Err(Error::Topology(format!("row {i} has {} columns, expected {m}", row.len())));
        }
        Self::custom(Matrix::from_fn(m, m, |i, j| rows[i][j]))
    }

    /// Row-major text form accepted by [`Topology::parse_matrix`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for row in self.weights.row_iter() {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            out.push_str(&cells.join(" "));
            out.push('\n');
        }
        out
    }
}

fn second_singular_value(eigenvalues: &[f64]) -> f64 {
    let mut singular: Vec<f64> = eigenvalues.iter().map(|v| v.abs()).collect();
    singular.sort_by(|a, b| b.total_cmp(a));
    singular.get(1).copied().unwrap_or(0.0)
}
