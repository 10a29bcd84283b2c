//! Concrete germ files instantiating every classification-table row, plus a
//! perturbed variant per fully-specified row with junk only in slots the
//! row's normal form permits (killable unit factors, resonance-free
//! coefficients, higher-order free terms).
//!
//! Files list the critical variables first, as required by the input
//! convention; the classifier re-orders into display coordinates.

/// One fixture file with its expected classification.
pub struct TableFixture {
    pub name: &'static str,
    pub file: &'static str,
    pub expected_form_id: &'static str,
    pub expected_resolved: bool,
    /// Set when this is the perturbed variant of another fixture.
    pub perturbed_of: Option<&'static str>,
}

macro_rules! fixture {
    ($name:literal, $id:literal, $resolved:expr, $pert:expr, $file:literal) => {
        TableFixture {
            name: $name,
            file: $file,
            expected_form_id: $id,
            expected_resolved: $resolved,
            perturbed_of: $pert,
        }
    };
}

/// One concrete instantiation per table row plus a perturbed variant per
/// fully-specified row; the unresolved rows are present and expected to
/// come back unresolved.
pub fn table_fixtures() -> Vec<TableFixture> {
    vec![
        fixture!("pd", "q0_r0_s3_pd", true, None, r#"
            trunc = 8
            critical_count = 0
            variables = ["X", "Y", "Z"]
            components = ["X/2", "Y/3", "Z/5"]
        "#),
        fixture!("pd_perturbed", "q0_r0_s3_pd", true, Some("pd"), r#"
            trunc = 8
            critical_count = 0
            variables = ["X", "Y", "Z"]
            components = ["X/2", "Y/3 + X*Z", "Z/5 - X*Y + Y^2"]
        "#),
        fixture!("anycurve", "q1_r0_s0", false, None, r#"
            trunc = 8
            critical_count = 1
            variables = ["X", "Y", "Z"]
            components = ["X^2/2", "X*Y + Z^2", "X*Z + (3/2)*X*Y*Z + Z^3"]
        "#),
        fixture!("q1_r0_s1", "q1_r0_s1", true, None, r#"
            trunc = 8
            critical_count = 1
            variables = ["Y", "X", "Z"]
            components = ["Y^2", "X/2", "(7/10)*Y*Z + X^2"]
        "#),
        fixture!("q1_r0_s1_perturbed", "q1_r0_s1", true, Some("q1_r0_s1"), r#"
            trunc = 8
            critical_count = 1
            variables = ["Y", "X", "Z"]
            components = ["Y^2*(1 + X/2)", "X/2", "(7/10)*Y*Z*(1 + Z/3) + X^2"]
        "#),
        fixture!("q1_r1_s1", "q1_r1_s1", false, None, r#"
            trunc = 8
            critical_count = 1
            variables = ["X", "Y", "Z"]
            components = ["X/2", "X*Y + Z^2", "X*Z"]
        "#),
        fixture!("q1_r1_s2_critX", "q1_r1_s2_critX", true, None, r#"
            trunc = 8
            critical_count = 1
            variables = ["X", "Y", "Z"]
            components = ["X/2", "Y/4 + X^2", "X*Z + Y^3"]
        "#),
        fixture!("q1_r1_s2_critX_perturbed", "q1_r1_s2_critX", true, Some("q1_r1_s2_critX"), r#"
            trunc = 8
            critical_count = 1
            variables = ["X", "Y", "Z"]
            components = ["X/2*(1 + Y/5)", "Y/4 + X^2 + X^3", "X*Z*(1 + X/7) + Y^3"]
        "#),
        fixture!("q1_r1_s2_critY", "q1_r1_s2_critY", true, None, r#"
            trunc = 8
            critical_count = 1
            variables = ["A", "B", "C"]
            components = ["A/4", "B/2", "A*C + B^2"]
        "#),
        fixture!("q1_r1_s2_critY_perturbed", "q1_r1_s2_critY", true, Some("q1_r1_s2_critY"), r#"
            trunc = 8
            critical_count = 1
            variables = ["A", "B", "C"]
            components = ["A/4*(1 + B/3)", "B/2 + A^2*B", "A*C + B^2 + A^2"]
        "#),
        fixture!("q2_r0_s0", "q2_r0_s0", true, None, r#"
            trunc = 8
            critical_count = 2
            variables = ["X", "Y", "Z"]
            components = ["(3/10)*X^2*Y", "(7/10)*X*Y", "(9/10)*X*Z + X^2"]
        "#),
        fixture!("q2_r0_s0_perturbed", "q2_r0_s0", true, Some("q2_r0_s0"), r#"
            trunc = 8
            critical_count = 2
            variables = ["X", "Y", "Z"]
            components = ["(3/10)*X^2*Y*(1 + Z/2)", "(7/10)*X*Y*(1 + X/4)", "(9/10)*X*Z + X^2 + X^3"]
        "#),
        fixture!("q2_r0_s1", "q2_r0_s1", true, None, r#"
            trunc = 8
            critical_count = 2
            variables = ["Y", "Z", "X"]
            components = ["(1/2)*Y^2*Z", "(4/5)*Y*Z", "X/2"]
        "#),
        fixture!("q2_r0_s1_perturbed", "q2_r0_s1", true, Some("q2_r0_s1"), r#"
            trunc = 8
            critical_count = 2
            variables = ["Y", "Z", "X"]
            components = ["(1/2)*Y^2*Z*(1 + X^2/3)", "(4/5)*Y*Z*(1 + X/6)", "X/2"]
        "#),
        fixture!("q2_r1_s1", "q2_r1_s1", true, None, r#"
            trunc = 8
            critical_count = 2
            variables = ["X", "Y", "Z"]
            components = ["X/2", "X*Y^2", "(9/10)*X*Z + Y"]
        "#),
        fixture!("q2_r1_s1_perturbed", "q2_r1_s1", true, Some("q2_r1_s1"), r#"
            trunc = 8
            critical_count = 2
            variables = ["X", "Y", "Z"]
            components = ["X/2*(1 + Y/9)", "X*Y^2*(1 + X/5)", "(9/10)*X*Z*(1 + Z/8) + Y"]
        "#),
        fixture!("q2_r1_s2_critXZ", "q2_r1_s2_critXZ", true, None, r#"
            trunc = 8
            critical_count = 2
            variables = ["X", "Z", "Y"]
            components = ["X/2", "X*Z^2", "Y/4 + X^2"]
        "#),
        fixture!("q2_r1_s2_critXZ_perturbed", "q2_r1_s2_critXZ", true, Some("q2_r1_s2_critXZ"), r#"
            trunc = 8
            critical_count = 2
            variables = ["X", "Z", "Y"]
            components = ["X/2*(1 + Y/2)", "X*Z^2*(1 + X/3)", "Y/4 + X^2 + X^2*Y"]
        "#),
        fixture!("q2_r1_s2_critYZ", "q2_r1_s2_critYZ", true, None, r#"
            trunc = 8
            critical_count = 2
            variables = ["Y", "Z", "X"]
            components = ["Y/3", "Y*Z^2", "X/2"]
        "#),
        fixture!("q2_r1_s2_critYZ_perturbed", "q2_r1_s2_critYZ", true, Some("q2_r1_s2_critYZ"), r#"
            trunc = 8
            critical_count = 2
            variables = ["Y", "Z", "X"]
            components = ["Y/3", "Y*Z^2*(1 + X^2*Y^3)", "X/2"]
        "#),
        fixture!("q2_r2_s2_eta1", "q2_r2_s2_eta1", true, None, r#"
            trunc = 8
            critical_count = 2
            variables = ["X", "Y", "Z"]
            components = ["X/2", "Y/3", "X*Y*Z + X^2"]
        "#),
        fixture!("q2_r2_s2_eta1_perturbed", "q2_r2_s2_eta1", true, Some("q2_r2_s2_eta1"), r#"
            trunc = 8
            critical_count = 2
            variables = ["X", "Y", "Z"]
            components = ["X/2*(1 + Y/4)", "Y/3*(1 + X/5)", "X*Y*Z*(1 + Z/2) + X^2 + X^2*Y"]
        "#),
        fixture!("q2_r2_s2_eta2", "q2_r2_s2_eta2", true, None, r#"
            trunc = 8
            critical_count = 2
            variables = ["X", "Y", "Z"]
            components = ["(3/10)*Y", "(2/5)*X", "X*Y*Z + X^2"]
        "#),
        fixture!("q2_r2_s2_eta2_perturbed", "q2_r2_s2_eta2", true, Some("q2_r2_s2_eta2"), r#"
            trunc = 8
            critical_count = 2
            variables = ["X", "Y", "Z"]
            components = ["(3/10)*Y*(1 + X/6)", "(2/5)*X", "X*Y*Z + X^2 + Y^3"]
        "#),
        fixture!("q3_r0_s0", "q3_r0_s0", true, None, r#"
            trunc = 8
            critical_count = 3
            variables = ["X", "Y", "Z"]
            components = ["(1/2)*X^2*Y", "(7/10)*Y*Z", "(9/10)*X*Z^2"]
        "#),
        fixture!("q3_r0_s0_perturbed", "q3_r0_s0", true, Some("q3_r0_s0"), r#"
            trunc = 8
            critical_count = 3
            variables = ["X", "Y", "Z"]
            components = ["(1/2)*X^2*Y*(1 + Z/3)", "(7/10)*Y*Z*(1 + X/2)", "(9/10)*X*Z^2"]
        "#),
        fixture!("q3_r1_s1", "q3_r1_s1", true, None, r#"
            trunc = 8
            critical_count = 3
            variables = ["X", "Y", "Z"]
            components = ["X/2", "(3/5)*X*Y^2*Z", "(4/5)*Y*Z^2"]
        "#),
        fixture!("q3_r1_s1_perturbed", "q3_r1_s1", true, Some("q3_r1_s1"), r#"
            trunc = 8
            critical_count = 3
            variables = ["X", "Y", "Z"]
            components = ["X/2*(1 + Y*Z)", "(3/5)*X*Y^2*Z*(1 + X/4)", "(4/5)*Y*Z^2*(1 + X^2/5)"]
        "#),
        fixture!("q3_r2_s2_eta1", "q3_r2_s2_eta1", true, None, r#"
            trunc = 8
            critical_count = 3
            variables = ["X", "Y", "Z"]
            components = ["X/2", "Y/3", "X*Y*Z^2"]
        "#),
        fixture!("q3_r2_s2_eta1_perturbed", "q3_r2_s2_eta1", true, Some("q3_r2_s2_eta1"), r#"
            trunc = 8
            critical_count = 3
            variables = ["X", "Y", "Z"]
            components = ["X/2*(1 + Z/7)", "Y/3", "X*Y*Z^2*(1 + X/2 + Y/3)"]
        "#),
        fixture!("q3_r2_s2_eta2", "q3_r2_s2_eta2", true, None, r#"
            trunc = 8
            critical_count = 3
            variables = ["X", "Y", "Z"]
            components = ["(3/10)*Y", "(2/5)*X", "X*Y*Z^2"]
        "#),
        fixture!("q3_r2_s2_eta2_perturbed", "q3_r2_s2_eta2", true, Some("q3_r2_s2_eta2"), r#"
            trunc = 8
            critical_count = 3
            variables = ["X", "Y", "Z"]
            components = ["(3/10)*Y*(1 + X*Y)", "(2/5)*X*(1 + Z/5)", "X*Y*Z^2"]
        "#),
    ]
}

/// The worked rejection example: rigid but with a non-injective internal
/// action, refused by block detection.
pub const MANYIMAGES_FILE: &str = r#"
    trunc = 8
    critical_count = 3
    variables = ["X", "Y", "Z"]
    components = ["X/2", "X*(1 + Y^2)", "X*Y*Z^2"]
"#;

/// The worked non-rigid 2-dimensional example.
pub const NONRIGID2D_FILE: &str = r#"
    trunc = 8
    critical_count = 2
    variables = ["X", "Y"]
    components = ["X*Y*(1 + X)", "X*Y*(1 + Y)"]
"#;

/// Secondary-resonance example: D = [[2,1],[1,0]] with the eigenvalue
/// declared resonant at degree 1.
pub const SECONDARY_RESONANT_FILE: &str = r#"
    trunc = 8
    critical_count = 2
    variables = ["Y1", "Y2", "X"]
    components = [
        "(1/2)*Y1^2*Y2*(1 + X)",
        "(9/10)*Y1",
        "-0.41421356237309515*X",
    ]
    [declared_resonances]
    secondary = [[1]]
"#;

/// Same internal action with a generic eigenvalue: no resonance.
pub const SECONDARY_GENERIC_FILE: &str = r#"
    trunc = 8
    critical_count = 2
    variables = ["Y1", "Y2", "X"]
    components = [
        "(1/2)*Y1^2*Y2*(1 + X)",
        "(9/10)*Y1",
        "X/2",
    ]
"#;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::GermFile;
    use crate::multiseries::Cf64;

    #[test]
    fn fixture_files_parse_and_build() {
        for fx in table_fixtures() {
            let gf = GermFile::parse(fx.file)
                .unwrap_or_else(|e| panic!("{}: {e}", fx.name));
            let germ = gf
                .build::<Cf64>()
                .unwrap_or_else(|e| panic!("{}: {e}", fx.name));
            assert_eq!(germ.dim(), 3, "{}", fx.name);
        }
        for file in [MANYIMAGES_FILE, NONRIGID2D_FILE, SECONDARY_RESONANT_FILE] {
            let gf = GermFile::parse(file).unwrap();
            gf.build::<Cf64>().unwrap();
        }
    }
}
