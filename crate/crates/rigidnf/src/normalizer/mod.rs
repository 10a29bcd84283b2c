//! Conjugation passes, the full normalization pipeline, the conjugacy
//! verifier, and the brute-force oracle.

pub mod affine;
pub mod linear;
pub mod oracle;
pub mod primary;
pub mod secondary;
pub mod solver;

use serde::Serialize;
use thiserror::Error;

use crate::germ::{
    detect_blocks, is_contracting, jordan_split, rigidity_check, BlockError, BlockStructure,
    ContractionError, ContractionReport, GermError, GermMap, RigidityCertificate, RigidityError,
};
use crate::multiseries::{compose_tuple, invert_diffeo, Coeff, MultiIndex, Series};
use crate::resonance::{resonance_report, DeclaredResonances, ResonanceError, ResonanceReport};

pub use affine::{pass_affine, AffineOutcome};
pub use linear::{pass_linear, LinearOutcome};
pub use oracle::{oracle_solve, OracleOutcome, TargetShape};
pub use primary::{pass_primary, PrimaryOutcome};
pub use secondary::{pass_secondary, SecondaryOutcome};
pub use solver::SolverError;

/// Stages a certificate may record.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PassName {
    Prepare,
    Linear,
    Jordan,
    Primary,
    Secondary,
    Affine,
}

impl std::fmt::Display for PassName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            PassName::Prepare => "prepare",
            PassName::Linear => "linear",
            PassName::Jordan => "jordan",
            PassName::Primary => "primary",
            PassName::Secondary => "secondary",
            PassName::Affine => "affine",
        };
        write!(f, "{s}")
    }
}

/// How far the pipeline runs.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum PassSelector {
    Linear,
    Jordan,
    Primary,
    Secondary,
    Affine,
    All,
}

impl PassSelector {
    fn includes(&self, stage: PassName) -> bool {
        let rank = |p: PassName| match p {
            PassName::Prepare => 0,
            PassName::Linear => 1,
            PassName::Jordan => 2,
            PassName::Primary => 3,
            PassName::Secondary => 4,
            PassName::Affine => 5,
        };
        let own = match self {
            PassSelector::Linear => 1,
            PassSelector::Jordan => 2,
            PassSelector::Primary => 3,
            PassSelector::Secondary => 4,
            PassSelector::Affine | PassSelector::All => 5,
        };
        rank(stage) <= own
    }
}

/// Knobs for the passes; `None` fields take the documented defaults.
#[derive(Clone, Copy, Debug, Default)]
pub struct PassOptions {
    /// Degree up to which the coefficient induction runs; the analytic tail
    /// sums handle the rest. Defaults to the full truncation in exact mode
    /// and to the resonance degree bound in float mode.
    pub induction_cutoff: Option<u32>,
    /// Iteration cap for analytic products and tail sums.
    pub n_max: Option<usize>,
}

impl PassOptions {
    pub(crate) fn induction_cutoff(&self, degree_bound: u32, trunc: u32, exact: bool) -> u32 {
        match self.induction_cutoff {
            Some(c) => c.min(trunc),
            None if exact => trunc,
            None => degree_bound.max(2).min(trunc),
        }
    }
}

/// Iteration cap `~ 2·log(tol)/log(Λ)` for geometric tail summation.
pub(crate) fn tail_iteration_cap(spectral_radius: f64, tol_series: f64) -> usize {
    if !(0.0..1.0).contains(&spectral_radius) || spectral_radius == 0.0 {
        return 8;
    }
    let n = (tol_series.ln() / spectral_radius.ln()).ceil();
    ((2.0 * n) as usize).clamp(8, 600)
}

/// `Φ ∘ f ∘ Φ^{-1}` computed honestly by composition.
pub fn conjugate_germ<C: Coeff>(
    f: &GermMap<C>,
    phi: &[Series<C>],
) -> Result<GermMap<C>, SolverError> {
    let phi_inv = invert_diffeo(phi, 1e-12)?;
    let f_inner = compose_tuple(f.components(), &phi_inv)?;
    let comps = compose_tuple(phi, &f_inner)?;
    Ok(GermMap::new(comps, f.critical_count(), f.tols)?)
}

/// Conjugacy residual data.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Residual {
    pub max: f64,
    pub exact_zero: bool,
}

/// Max coefficient modulus of `Φ∘f − f̃∘Φ` over all components, at the
/// truncation degree.
pub fn verify_conjugacy<C: Coeff>(
    f: &GermMap<C>,
    f_tilde: &GermMap<C>,
    phi: &[Series<C>],
) -> Result<Residual, SolverError> {
    let lhs = compose_tuple(phi, f.components())?;
    let rhs = compose_tuple(f_tilde.components(), phi)?;
    let mut max = 0.0f64;
    let mut exact = true;
    for (l, r) in lhs.iter().zip(&rhs) {
        let diff = l.sub(r)?;
        max = max.max(diff.max_abs());
        exact = exact && diff.is_zero_tol(0.0);
    }
    Ok(Residual { max, exact_zero: exact })
}

/// The conjugacy certificate of a (partial or full) normalization.
#[derive(Clone)]
pub struct Certificate<C: Coeff> {
    pub phi: Vec<Series<C>>,
    pub normalized: GermMap<C>,
    pub residual: Residual,
    pub passes: Vec<PassName>,
}

/// Full pipeline record.
pub struct PipelineRun<C: Coeff> {
    pub rigidity: RigidityCertificate<C>,
    pub contraction: ContractionReport,
    pub blocks: BlockStructure<C>,
    pub resonances: Option<ResonanceReport>,
    pub certificate: Certificate<C>,
    pub kept_primary: Vec<(usize, MultiIndex)>,
    pub kept_secondary: Vec<MultiIndex>,
    pub affine_applied: bool,
    pub affine_data: Option<(C, MultiIndex)>,
}

#[derive(Debug, Error)]
pub enum NormalizeError {
    #[error("not rigid: {0}")]
    Rigidity(#[from] RigidityError),
    #[error("not contracting: spectral radius {0}")]
    NotContracting(f64),
    #[error("contraction test failed: {0}")]
    Contraction(#[from] ContractionError),
    #[error("non-injective internal action (det D = 0); cannot normalize the non-periodic block")]
    NonInjective,
    #[error("block analysis failed: {0}")]
    Block(BlockError),
    #[error("resonance analysis failed: {0}")]
    Resonance(#[from] ResonanceError),
    #[error("solver failed in pass {pass}: {source}")]
    Solver { pass: PassName, source: SolverError },
    #[error("germ error: {0}")]
    Germ(#[from] GermError),
}

impl From<BlockError> for NormalizeError {
    fn from(e: BlockError) -> Self {
        match e {
            BlockError::NonInjectiveAction => NormalizeError::NonInjective,
            other => NormalizeError::Block(other),
        }
    }
}

fn solver_err(pass: PassName) -> impl FnOnce(SolverError) -> NormalizeError {
    move |source| NormalizeError::Solver { pass, source }
}

fn check_stage<C: Coeff>(
    name: PassName,
    input: &GermMap<C>,
    output: &GermMap<C>,
    phi: &[Series<C>],
) -> Result<(), NormalizeError> {
    let res = verify_conjugacy(input, output, phi).map_err(solver_err(name))?;
    if res.max > input.tols.residual {
        return Err(NormalizeError::Solver {
            pass: name,
            source: SolverError::ResidualTooLarge {
                residual: res.max,
                tol: input.tols.residual,
            },
        });
    }
    Ok(())
}

/// Run the pipeline: rigidity, contraction, blocks, then the passes up to
/// `selector`, composing every change of coordinates into one certificate
/// whose residual against the input germ is verified.
pub fn normalize_full<C: Coeff>(
    f: &GermMap<C>,
    declared: Option<&DeclaredResonances>,
    opts: &PassOptions,
    selector: PassSelector,
) -> Result<PipelineRun<C>, NormalizeError> {
    let d = f.dim();
    let n_trunc = f.trunc();
    let tols = f.tols;
    let rigidity = rigidity_check(f)?;
    let contraction = is_contracting(f)?;
    if !contraction.contracting {
        return Err(NormalizeError::NotContracting(contraction.spectral_radius));
    }
    let (g_prep, blocks0) = detect_blocks(f, &rigidity)?;
    let perm_phi: Vec<Series<C>> = {
        // Coordinate i of the input moves to position prepare_perm[i].
        let mut inv = vec![0usize; d];
        for (i, &pi) in blocks0.prepare_perm.iter().enumerate() {
            inv[pi] = i;
        }
        (0..d).map(|j| Series::variable(inv[j], d, n_trunc)).collect()
    };
    let mut passes = vec![PassName::Prepare];
    let mut phi_total = perm_phi;
    let mut germ = g_prep;
    let mut blocks = blocks0;
    let mut resonances = None;
    let mut kept_primary = Vec::new();
    let mut kept_secondary = Vec::new();
    let mut affine_applied = false;
    let mut affine_data = None;

    let compose_err = |pass: PassName| {
        move |e: crate::multiseries::SeriesError| NormalizeError::Solver {
            pass,
            source: e.into(),
        }
    };

    let lin = pass_linear(&germ, &blocks, opts).map_err(solver_err(PassName::Linear))?;
    check_stage(PassName::Linear, &germ, &lin.germ, &lin.phi)?;
    phi_total = compose_tuple(&lin.phi, &phi_total).map_err(compose_err(PassName::Linear))?;
    germ = lin.germ;
    passes.push(PassName::Linear);

    if selector.includes(PassName::Jordan) {
        let (g2, b2, jphi) = jordan_split(&germ, &blocks)?;
        check_stage(PassName::Jordan, &germ, &g2, &jphi)?;
        phi_total = compose_tuple(&jphi, &phi_total).map_err(compose_err(PassName::Jordan))?;
        germ = g2;
        blocks = b2;
        passes.push(PassName::Jordan);
    }

    if selector.includes(PassName::Primary) {
        let report = resonance_report(&blocks, declared, tols.res)?;
        let prim =
            pass_primary(&germ, &blocks, &report, opts).map_err(solver_err(PassName::Primary))?;
        check_stage(PassName::Primary, &germ, &prim.germ, &prim.phi)?;
        phi_total = compose_tuple(&prim.phi, &phi_total).map_err(compose_err(PassName::Primary))?;
        germ = prim.germ;
        kept_primary = prim.kept;
        passes.push(PassName::Primary);

        if selector.includes(PassName::Secondary) {
            let sec = pass_secondary(&germ, &blocks, &report, opts)
                .map_err(solver_err(PassName::Secondary))?;
            check_stage(PassName::Secondary, &germ, &sec.germ, &sec.phi)?;
            phi_total =
                compose_tuple(&sec.phi, &phi_total).map_err(compose_err(PassName::Secondary))?;
            germ = sec.germ;
            kept_secondary = sec.kept;
            passes.push(PassName::Secondary);

            if selector.includes(PassName::Affine) && blocks.s() + blocks.p == d - 1 {
                let aff =
                    pass_affine(&germ, &blocks, opts).map_err(solver_err(PassName::Affine))?;
                check_stage(PassName::Affine, &germ, &aff.germ, &aff.phi)?;
                phi_total =
                    compose_tuple(&aff.phi, &phi_total).map_err(compose_err(PassName::Affine))?;
                germ = aff.germ;
                affine_applied = true;
                affine_data = Some((aff.nu, aff.z_monomial));
                passes.push(PassName::Affine);
            }
        }
        resonances = Some(report);
    }

    let last = *passes.last().unwrap();
    let residual = verify_conjugacy(f, &germ, &phi_total).map_err(solver_err(last))?;
    if residual.max > tols.residual {
        return Err(NormalizeError::Solver {
            pass: last,
            source: SolverError::ResidualTooLarge { residual: residual.max, tol: tols.residual },
        });
    }
    Ok(PipelineRun {
        rigidity,
        contraction,
        blocks,
        resonances,
        certificate: Certificate { phi: phi_total, normalized: germ, residual, passes },
        kept_primary,
        kept_secondary,
        affine_applied,
        affine_data,
    })
}
