//! Germ description files.
//!
//! TOML schema: `dim`, `trunc`, `mode`, `critical_count`, `variables`,
//! `components` (expression strings), optional `declared_resonances`
//! (`primary = [[k, n...]]`, `secondary = [[n...]]`) and `tolerances`
//! (`coeff`, `res`, `eig`, `residual`, `series`). Validation collects every
//! schema violation before giving up.

use serde::Deserialize;
use thiserror::Error;

use crate::config::{CoeffMode, Tolerances, DEFAULT_TRUNC};
use crate::germ::{GermError, GermMap};
use crate::multiseries::{Coeff, Series};
use crate::resonance::DeclaredResonances;

use super::expr::{parse_expr, ExprError};

#[derive(Debug, Error)]
pub enum FileError {
    #[error("TOML parse error: {0}")]
    Toml(String),
    #[error("schema violations:\n{}", .0.join("\n"))]
    Schema(Vec<String>),
    #[error("component {index}: {source}")]
    Expr { index: usize, source: ExprError },
    #[error("germ error: {0}")]
    Germ(#[from] GermError),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGermFile {
    dim: Option<usize>,
    trunc: Option<u32>,
    mode: Option<String>,
    critical_count: Option<usize>,
    variables: Vec<String>,
    components: Vec<String>,
    #[serde(default)]
    declared_resonances: RawDeclared,
    #[serde(default)]
    tolerances: RawTolerances,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawDeclared {
    #[serde(default)]
    primary: Vec<Vec<i64>>,
    #[serde(default)]
    secondary: Vec<Vec<i64>>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawTolerances {
    coeff: Option<f64>,
    res: Option<f64>,
    eig: Option<f64>,
    residual: Option<f64>,
    series: Option<f64>,
}

/// A validated germ file, before expression evaluation.
#[derive(Debug, Clone)]
pub struct GermFile {
    pub dim: usize,
    pub trunc: u32,
    pub mode: CoeffMode,
    pub critical_count: usize,
    pub variables: Vec<String>,
    pub components: Vec<String>,
    pub declared: DeclaredResonances,
    pub tolerances: Tolerances,
}

impl GermFile {
    /// Parse and validate the document; schema violations are reported all
    /// at once.
    pub fn parse(doc: &str) -> Result<GermFile, FileError> {
        let raw: RawGermFile =
            toml::from_str(doc).map_err(|e| FileError::Toml(e.to_string()))?;
        let mut errs: Vec<String> = Vec::new();
        let dim = raw.dim.unwrap_or(raw.variables.len());
        if dim == 0 {
            errs.push("dim must be at least 1".into());
        }
        if raw.variables.len() != dim {
            errs.push(format!(
                "expected {dim} variables, found {}",
                raw.variables.len()
            ));
        }
        let mut seen = std::collections::BTreeSet::new();
        for v in &raw.variables {
            if v == "i" {
                errs.push("variable name `i` collides with the imaginary unit".into());
            }
            if v.is_empty()
                || !v.bytes().next().is_some_and(|b| b.is_ascii_alphabetic() || b == b'_')
                || !v.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_')
            {
                errs.push(format!("invalid variable name `{v}`"));
            }
            if !seen.insert(v.clone()) {
                errs.push(format!("duplicate variable name `{v}`"));
            }
        }
        if raw.components.len() != dim {
            errs.push(format!(
                "expected {dim} components, found {}",
                raw.components.len()
            ));
        }
        let critical_count = raw.critical_count.unwrap_or(0);
        if critical_count > dim {
            errs.push(format!(
                "critical_count {critical_count} exceeds dimension {dim}"
            ));
        }
        let mode = match raw.mode.as_deref() {
            None | Some("float") => CoeffMode::Float,
            Some("exact") => CoeffMode::Exact,
            Some(other) => {
                errs.push(format!("mode must be `exact` or `float`, found `{other}`"));
                CoeffMode::Float
            }
        };
        let trunc = raw.trunc.unwrap_or(DEFAULT_TRUNC);
        if trunc == 0 {
            errs.push("trunc must be at least 1".into());
        }
        let defaults = Tolerances::default();
        let tolerances = Tolerances {
            coeff: raw.tolerances.coeff.unwrap_or(defaults.coeff),
            res: raw.tolerances.res.unwrap_or(defaults.res),
            eig: raw.tolerances.eig.unwrap_or(defaults.eig),
            residual: raw.tolerances.residual.unwrap_or(defaults.residual),
            series: raw.tolerances.series.unwrap_or(defaults.series),
        };
        for t in [
            tolerances.coeff,
            tolerances.res,
            tolerances.eig,
            tolerances.residual,
            tolerances.series,
        ] {
            if !(t >= 0.0 && t.is_finite()) {
                errs.push(format!("tolerances must be finite and nonnegative, found {t}"));
            }
        }
        let mut declared = DeclaredResonances::default();
        for (i, row) in raw.declared_resonances.primary.iter().enumerate() {
            if row.len() < 2 {
                errs.push(format!(
                    "declared_resonances.primary[{i}] needs [k, n...] with at least one index"
                ));
                continue;
            }
            if row[0] < 1 || row[1..].iter().any(|&e| e < 0) {
                errs.push(format!(
                    "declared_resonances.primary[{i}] must have k ≥ 1 and n ≥ 0"
                ));
                continue;
            }
            declared
                .primary
                .push((row[0] as usize, row[1..].iter().map(|&e| e as u32).collect()));
        }
        for (i, row) in raw.declared_resonances.secondary.iter().enumerate() {
            if row.iter().any(|&e| e < 0) {
                errs.push(format!("declared_resonances.secondary[{i}] must be nonnegative"));
                continue;
            }
            declared.secondary.push(row.iter().map(|&e| e as u32).collect());
        }
        if !errs.is_empty() {
            return Err(FileError::Schema(errs));
        }
        Ok(GermFile {
            dim,
            trunc,
            mode,
            critical_count,
            variables: raw.variables,
            components: raw.components,
            declared,
            tolerances,
        })
    }

    /// Evaluate the component expressions in the chosen coefficient backend.
    pub fn build<C: Coeff>(&self) -> Result<GermMap<C>, FileError> {
        let mut comps: Vec<Series<C>> = Vec::with_capacity(self.dim);
        for (index, src) in self.components.iter().enumerate() {
            let s = parse_expr(src, &self.variables, self.trunc)
                .map_err(|source| FileError::Expr { index, source })?;
            comps.push(s);
        }
        Ok(GermMap::new(comps, self.critical_count, self.tolerances)?)
    }
}
