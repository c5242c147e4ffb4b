use std::collections::BTreeMap;

use qpolar::matcore::{GenMatrix, SymMatrix, TolerancePolicy};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const FORMAT_VERSION: &str = "1";

fn default_hbar() -> f64 {
    1.0
}

/// Problem file shared by every subcommand.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub version: String,
    #[serde(default = "default_hbar")]
    pub hbar: f64,
    pub n: usize,
    #[serde(default)]
    pub matrices: BTreeMap<String, Vec<Vec<f64>>>,
    #[serde(default)]
    pub params: Params,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub body: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub space: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub level: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub half_widths: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_xx: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_pp: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_grid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probe_trials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_x: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance_rel: Option<f64>,
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let p: ProblemFile =
            serde_json::from_str(text).map_err(|e| CliError::Validation(format!("problem file: {e}")))?;
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.version != FORMAT_VERSION {
            return Err(CliError::Validation(format!(
                "unsupported version {:?}, expected {FORMAT_VERSION:?}",
                self.version
            )));
        }
        if !(self.hbar.is_finite() && self.hbar > 0.0) {
            return Err(CliError::Validation(format!("hbar must be positive, got {}", self.hbar)));
        }
        if self.n == 0 {
            return Err(CliError::Validation("n must be at least 1".into()));
        }
        for (name, rows) in &self.matrices {
            let d = rows.len();
            if d != self.n && d != 2 * self.n {
                return Err(CliError::Validation(format!(
                    "matrix {name} has {d} rows; expected n = {} or 2n = {}",
                    self.n,
                    2 * self.n
                )));
            }
            if let Some(r) = rows.iter().find(|r| r.len() != d) {
                return Err(CliError::Validation(format!(
                    "matrix {name} is not square: row of length {} in a {d}-row matrix",
                    r.len()
                )));
            }
            if rows.iter().flatten().any(|v| !v.is_finite()) {
                return Err(CliError::Validation(format!("matrix {name} has a non-finite entry")));
            }
        }
        Ok(())
    }

    fn rows(&self, name: &str, dim: usize) -> Result<&Vec<Vec<f64>>, CliError> {
        let rows = self
            .matrices
            .get(name)
            .ok_or_else(|| CliError::Validation(format!("missing matrix {name}")))?;
        if rows.len() != dim {
            return Err(CliError::Validation(format!(
                "matrix {name} must be {dim}×{dim}, found {}×{}",
                rows.len(),
                rows.len()
            )));
        }
        Ok(rows)
    }

    pub fn has(&self, name: &str) -> bool {
        self.matrices.contains_key(name)
    }

    /// Symmetric `n×n` (or `2n×2n` when `phase`) matrix.
    pub fn sym(&self, name: &str, phase: bool, tol: &TolerancePolicy) -> Result<SymMatrix, CliError> {
        let dim = if phase { 2 * self.n } else { self.n };
        let rows = self.rows(name, dim)?;
        let m = GenMatrix::from_rows(rows)?;
        Ok(SymMatrix::with_tolerance(m.into_mat(), tol)?)
    }

    pub fn require_f64(&self, v: Option<f64>, name: &str) -> Result<f64, CliError> {
        v.ok_or_else(|| CliError::Validation(format!("missing parameter {name}")))
    }
}
