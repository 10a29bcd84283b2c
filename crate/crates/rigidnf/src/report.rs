//! Serializable records of analysis outcomes, shared by the CLI and the
//! Python bindings. Numbers are rendered with full precision: exact
//! rationals as `p/q` text, floats with 17 significant digits.

use serde::Serialize;

use crate::classify3d::ClassRow;
use crate::germ::{BlockStructure, ContractionReport, GermMap, RigidityCertificate};
use crate::lang::series_to_expr;
use crate::multiseries::{Coeff, ExponentMatrix};
use crate::normalizer::{PassName, PipelineRun};
use crate::resonance::ResonanceReport;

#[derive(Serialize, Clone, Debug)]
pub struct GermRecord {
    pub dim: usize,
    pub trunc: u32,
    pub critical_count: usize,
    pub variables: Vec<String>,
    pub components: Vec<String>,
}

impl GermRecord {
    pub fn new<C: Coeff>(germ: &GermMap<C>, variables: &[String]) -> Self {
        GermRecord {
            dim: germ.dim(),
            trunc: germ.trunc(),
            critical_count: germ.critical_count(),
            variables: variables.to_vec(),
            components: germ
                .components()
                .iter()
                .map(|c| series_to_expr(c, variables))
                .collect(),
        }
    }
}

fn matrix_rows(m: &ExponentMatrix) -> Vec<Vec<i64>> {
    (0..m.rows)
        .map(|i| (0..m.cols).map(|j| m[(i, j)]).collect())
        .collect()
}

#[derive(Serialize, Clone, Debug)]
pub struct RigidityRecord {
    pub rigid: bool,
    pub jacobian_monomial: Vec<u32>,
    pub jacobian_unit_constant: String,
    pub internal_action: Vec<Vec<i64>>,
    pub unit_constants: Vec<String>,
    pub verified_to_degree: u32,
}

impl RigidityRecord {
    pub fn new<C: Coeff>(cert: &RigidityCertificate<C>) -> Self {
        RigidityRecord {
            rigid: true,
            jacobian_monomial: cert.jacobian_monomial.0.clone(),
            jacobian_unit_constant: cert.jacobian_unit_constant.render(),
            internal_action: matrix_rows(&cert.pullback.matrix),
            unit_constants: cert.unit_constants.iter().map(|c| c.render()).collect(),
            verified_to_degree: cert.verified_to_degree,
        }
    }
}

#[derive(Serialize, Clone, Debug)]
pub struct ContractionRecord {
    pub contracting: bool,
    pub spectral_radius: f64,
    pub eigenvalue_moduli: Vec<f64>,
}

impl ContractionRecord {
    pub fn new(rep: &ContractionReport) -> Self {
        let mut moduli: Vec<f64> = rep.eigenvalues.iter().map(|z| z.norm()).collect();
        moduli.sort_by(|a, b| b.total_cmp(a));
        ContractionRecord {
            contracting: rep.contracting,
            spectral_radius: rep.spectral_radius,
            eigenvalue_moduli: moduli,
        }
    }
}

#[derive(Serialize, Clone, Debug)]
pub struct BlocksRecord {
    pub q: usize,
    pub r: usize,
    pub p: usize,
    pub e: usize,
    pub s: usize,
    pub eta: usize,
    pub prepare_permutation: Vec<usize>,
    pub periodic_map: Vec<usize>,
    pub c_block: Vec<Vec<i64>>,
    pub d_block: Vec<Vec<i64>>,
    pub alpha: Vec<String>,
    pub beta: Vec<String>,
    pub mu: Vec<String>,
}

impl BlocksRecord {
    pub fn new<C: Coeff>(b: &BlockStructure<C>) -> Self {
        BlocksRecord {
            q: b.q,
            r: b.r,
            p: b.p,
            e: b.e,
            s: b.s(),
            eta: b.eta,
            prepare_permutation: b.prepare_perm.clone(),
            periodic_map: b.b_map.clone(),
            c_block: matrix_rows(&b.c_block),
            d_block: matrix_rows(&b.d_block),
            alpha: b.alpha.iter().map(|c| c.render()).collect(),
            beta: b.beta.iter().map(|c| c.render()).collect(),
            mu: b.mu.iter().map(|c| c.render()).collect(),
        }
    }
}

#[derive(Serialize, Clone, Debug)]
pub struct CertificateRecord {
    pub phi: Vec<String>,
    pub normalized: GermRecord,
    pub residual: f64,
    pub residual_exact_zero: bool,
    pub passes: Vec<PassName>,
    pub kept_primary: Vec<String>,
    pub kept_secondary: Vec<String>,
    pub affine_applied: bool,
}

#[derive(Serialize, Clone, Debug)]
pub struct NormalizeRecord {
    pub rigidity: RigidityRecord,
    pub contraction: ContractionRecord,
    pub blocks: BlocksRecord,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resonances: Option<ResonanceReport>,
    pub certificate: CertificateRecord,
}

impl NormalizeRecord {
    pub fn new<C: Coeff>(run: &PipelineRun<C>, variables: &[String]) -> Self {
        // The normalized germ lives in prepared coordinates; rename the
        // variables accordingly.
        let mut prepared_vars = vec![String::new(); variables.len()];
        for (i, &pi) in run.blocks.prepare_perm.iter().enumerate() {
            prepared_vars[pi] = variables[i].clone();
        }
        NormalizeRecord {
            rigidity: RigidityRecord::new(&run.rigidity),
            contraction: ContractionRecord::new(&run.contraction),
            blocks: BlocksRecord::new(&run.blocks),
            resonances: run.resonances.clone(),
            certificate: CertificateRecord {
                phi: run
                    .certificate
                    .phi
                    .iter()
                    .map(|s| series_to_expr(s, &prepared_vars))
                    .collect(),
                normalized: GermRecord::new(&run.certificate.normalized, &prepared_vars),
                residual: run.certificate.residual.max,
                residual_exact_zero: run.certificate.residual.exact_zero,
                passes: run.certificate.passes.clone(),
                kept_primary: run
                    .kept_primary
                    .iter()
                    .map(|(k, n)| format!("k={k} n={n}"))
                    .collect(),
                kept_secondary: run.kept_secondary.iter().map(|n| format!("{n}")).collect(),
                affine_applied: run.affine_applied,
            },
        }
    }
}

#[derive(Serialize, Clone, Debug)]
pub struct ClassifyRecord {
    pub normalize: NormalizeRecord,
    pub class: ClassRow,
}
