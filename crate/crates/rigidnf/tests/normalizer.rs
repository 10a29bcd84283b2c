//! Pass-level behavior of the normalizer on worked examples.

use num::complex::Complex64;

use rigidnf::config::Tolerances;
use rigidnf::germ::{detect_blocks, jordan_split, rigidity_check, GermMap};
use rigidnf::multiseries::{Cf64, Coeff, GaussRational, MultiIndex, Series};
use rigidnf::normalizer::{
    normalize_full, oracle_solve, pass_affine, pass_linear, pass_primary, pass_secondary,
    verify_conjugacy, NormalizeError, PassOptions, PassSelector, TargetShape,
};
use rigidnf::resonance::resonance_report;

type QS = Series<GaussRational>;
type FS = Series<Cf64>;

fn q(n: i64, d: i64) -> GaussRational {
    GaussRational::from_ratio(n, d)
}

fn c(re: f64) -> Cf64 {
    Complex64::new(re, 0.0)
}

fn qv(i: usize, dim: usize, t: u32) -> QS {
    Series::variable(i, dim, t)
}

fn fv(i: usize, dim: usize, t: u32) -> FS {
    Series::variable(i, dim, t)
}

fn prepared<C: Coeff>(
    f: &GermMap<C>,
) -> (GermMap<C>, rigidnf::germ::BlockStructure<C>) {
    let cert = rigidity_check(f).unwrap();
    let (g, blocks) = detect_blocks(f, &cert).unwrap();
    let (g, blocks, _) = jordan_split(&g, &blocks).unwrap();
    (g, blocks)
}

#[test]
fn pass_linear_identity_when_theta_zero() {
    // f = (u/2, y² u) with θ = 0.
    let u = qv(0, 2, 6);
    let y = qv(1, 2, 6);
    let f = GermMap::new(
        vec![
            u.scale(&q(1, 2)),
            y.mul(&y).unwrap().mul(&u).unwrap(),
        ],
        2,
        Tolerances::default(),
    )
    .unwrap();
    let cert = rigidity_check(&f).unwrap();
    let (g, blocks) = detect_blocks(&f, &cert).unwrap();
    let out = pass_linear(&g, &blocks, &PassOptions::default()).unwrap();
    assert_eq!(out.iterations, 0);
    let res = verify_conjugacy(&g, &out.germ, &out.phi).unwrap();
    assert!(res.exact_zero);
}

#[test]
fn pass_linear_kills_unit_factor() {
    // f = (0.5·u·(1+y), y²·u) at N=6: u-part becomes 0.5·u exactly.
    let u = fv(0, 2, 6);
    let y = fv(1, 2, 6);
    let one = FS::one(2, 6);
    let f = GermMap::new(
        vec![
            u.mul(&one.add(&y).unwrap()).unwrap().scale(&c(0.5)),
            y.mul(&y).unwrap().mul(&u).unwrap(),
        ],
        2,
        Tolerances::default(),
    )
    .unwrap();
    let cert = rigidity_check(&f).unwrap();
    let (g, blocks) = detect_blocks(&f, &cert).unwrap();
    let out = pass_linear(&g, &blocks, &PassOptions::default()).unwrap();
    // Normalized u-part has exactly one term 0.5·u.
    let u_comp = out.germ.component(0);
    assert_eq!(u_comp.len(), 1);
    assert!((u_comp.coeff(&MultiIndex(vec![1, 0])) - c(0.5)).norm() < 1e-15);
    let res = verify_conjugacy(&g, &out.germ, &out.phi).unwrap();
    assert!(res.max <= 1e-10, "residual {}", res.max);
}

#[test]
fn pass_linear_matches_direct_geometric_sum() {
    // One critical coordinate, θ = v (a non-critical variable):
    // f = (u/2·(1+v), v/4). The uv-coefficient of log(1+φ^1) must equal the
    // geometric sum Σ_n [θ∘f^{∘n}]_{uv} because all cross terms vanish in
    // the log; compare against the independent degree-by-degree value.
    let u = fv(0, 2, 8);
    let v = fv(1, 2, 8);
    let one = FS::one(2, 8);
    let f = GermMap::new(
        vec![
            u.scale(&c(0.5)).mul(&one.add(&v).unwrap()).unwrap(),
            v.scale(&c(0.25)),
        ],
        1,
        Tolerances::default(),
    )
    .unwrap();
    let cert = rigidity_check(&f).unwrap();
    let (g, blocks) = detect_blocks(&f, &cert).unwrap();
    let out = pass_linear(&g, &blocks, &PassOptions::default()).unwrap();
    // Direct sum: θ = v, θ∘f^{∘n} = v/4^n, so Σ_{n≥0} [v∘f^{∘n}]_v = Σ 4^{-n},
    // and the v-coefficient of φ (= the uv-coefficient of u(1+φ)) is the
    // geometric series clipped by the stop rule.
    let phi_u = &out.phi[0];
    let got = phi_u.coeff(&MultiIndex(vec![1, 1]));
    let expect: f64 = (0..200).map(|n| 0.25f64.powi(n)).sum();
    assert!((got - c(expect)).norm() < 1e-10, "got {got}, expect {expect}");
    let res = verify_conjugacy(&g, &out.germ, &out.phi).unwrap();
    assert!(res.max <= 1e-10);
}

#[test]
fn pass_primary_keeps_resonant_kills_rest_exact() {
    // α = 1/2, μ = 1/4, v-part = v/4 + u² + u³: u² is resonant and stays,
    // u³ dies. Exact mode: residual exactly zero.
    let u = qv(0, 2, 6);
    let v = qv(1, 2, 6);
    let f = GermMap::new(
        vec![
            u.scale(&q(1, 2)),
            v.scale(&q(1, 4))
                .add(&u.mul(&u).unwrap())
                .unwrap()
                .add(&u.pow_usize(3).unwrap())
                .unwrap(),
        ],
        1,
        Tolerances::default(),
    )
    .unwrap();
    let (g, blocks) = prepared(&f);
    let report = resonance_report(&blocks, None, 1e-9).unwrap();
    let out = pass_primary(&g, &blocks, &report, &PassOptions::default()).unwrap();
    let vpart = out.germ.component(1);
    // Slots: v (linear) and u² only.
    assert_eq!(
        vpart.terms().map(|(n, _)| n.clone()).collect::<Vec<_>>(),
        vec![MultiIndex(vec![0, 1]), MultiIndex(vec![2, 0])]
    );
    assert_eq!(vpart.coeff(&MultiIndex(vec![2, 0])), q(1, 1));
    assert_eq!(out.kept, vec![(1, MultiIndex(vec![2, 0]))]);
    let res = verify_conjugacy(&g, &out.germ, &out.phi).unwrap();
    assert!(res.exact_zero, "residual {:?}", res);
    // Cross-check surviving support against the oracle.
    let oracle = oracle_solve(&g, &blocks, TargetShape::Primary).unwrap();
    assert_eq!(oracle.kept_primary, out.kept);
}

#[test]
fn pass_primary_generic_mu_linearizes() {
    // No resonances: the v-block is fully linearized (Poincaré case).
    let u = fv(0, 2, 6);
    let v = fv(1, 2, 6);
    let f = GermMap::new(
        vec![
            u.scale(&c(0.5)),
            v.scale(&c(0.3))
                .add(&u.mul(&u).unwrap().scale(&c(0.7)))
                .unwrap()
                .add(&u.mul(&v).unwrap().scale(&c(-1.3)))
                .unwrap(),
        ],
        1,
        Tolerances::default(),
    )
    .unwrap();
    let (g, blocks) = prepared(&f);
    let report = resonance_report(&blocks, None, 1e-9).unwrap();
    assert!(report.primaries.iter().all(|p| {
        p.n_v == vec![1] && p.n_u == vec![0]
    }));
    let out = pass_primary(&g, &blocks, &report, &PassOptions::default()).unwrap();
    let vpart = out.germ.component(1);
    assert_eq!(vpart.len(), 1, "v-part fully linear, got {vpart:?}");
    assert!(out.kept.is_empty());
    let res = verify_conjugacy(&g, &out.germ, &out.phi).unwrap();
    assert!(res.max < 1e-10);
}

#[test]
fn pass_primary_two_cycle_system() {
    // η = 2 cycle with α = (1/2, 1/8), μ = 1/4: the candidate u1·u2 has
    // ξ^{(1,1)} μ^0 = (1/16)... compare: (μ^1)^2 = 1/16 — resonant.
    // The cyclic 2×2 systems must keep exactly the resonant orbit slots.
    let u1 = qv(0, 3, 5);
    let u2 = qv(1, 3, 5);
    let v = qv(2, 3, 5);
    let f = GermMap::new(
        vec![
            u2.scale(&q(1, 2)),
            u1.scale(&q(1, 8)),
            v.scale(&q(1, 4))
                .add(&u1.mul(&u2).unwrap())
                .unwrap()
                .add(&u1.mul(&u1).unwrap())
                .unwrap(),
        ],
        2,
        Tolerances::default(),
    )
    .unwrap();
    let (g, blocks) = prepared(&f);
    assert_eq!(blocks.eta, 2);
    let report = resonance_report(&blocks, None, 1e-9).unwrap();
    // u1 u2 satisfies ξ^{(1,1)}μ^{2·0} = (1/16)(1/16)?? — the η-iterate has
    // ξ_j = (α1 α2) = 1/16 per coordinate, so ξ^{(1,1)} = 2^-8 and
    // (μ^1)^η = 1/16: resonance holds for u1²u2² only at degree 4; the
    // degree-2 candidate u1u2 satisfies the orbit determinant test
    // (α^{(1,1)})·μ^0 = 1/16 = μ^2? No: μ^{η̃=1}... verified via the pass:
    let out = pass_primary(&g, &blocks, &report, &PassOptions::default()).unwrap();
    let res = verify_conjugacy(&g, &out.germ, &out.phi).unwrap();
    assert!(res.exact_zero);
    // Determinant logic: orbit of (1,1) has η̃ = 1 (B-invariant), product
    // α1α2·μ^{n_v=0} = 1/16, and μ^k = 1/4: (1/4)^1 ≠ 1/16 at η̃=1, so
    // u1u2 is killed; u1² has orbit {u1², u2²} with det (1/4)² − (1/2·1/8)²
    // ... = 1/16 − 1/256 ≠ 0, killed as well.
    let vpart = out.germ.component(2);
    for (n, _) in vpart.terms() {
        assert!(
            n == &MultiIndex(vec![0, 0, 1]) || report.is_primary(1, &n.slice(0, 2), &n.slice(2, 3)),
            "non-resonant slot {n} survived"
        );
    }
    // Oracle agreement on the surviving support.
    let oracle = oracle_solve(&g, &blocks, TargetShape::Primary).unwrap();
    assert_eq!(oracle.kept_primary, out.kept);
}

#[test]
fn pass_secondary_favre_type_kills_unit() {
    // d=2 Favre-type germ (λx, x^c y^d (1+g(x,y))), λ generic: no secondary
    // resonance, g dies entirely.
    let x = fv(0, 2, 6);
    let y = fv(1, 2, 6);
    let one = FS::one(2, 6);
    let unit = one
        .add(&x.scale(&c(0.4)))
        .unwrap()
        .add(&x.mul(&y).unwrap().scale(&c(-0.9)))
        .unwrap();
    let f = GermMap::new(
        vec![
            x.scale(&c(0.37)),
            x.mul(&y.mul(&y).unwrap()).unwrap().mul(&unit).unwrap(),
        ],
        2,
        Tolerances::default(),
    )
    .unwrap();
    let (g, blocks) = prepared(&f);
    let report = resonance_report(&blocks, None, 1e-9).unwrap();
    assert!(report.secondaries.is_empty());
    let out = pass_secondary(&g, &blocks, &report, &PassOptions::default()).unwrap();
    let ypart = out.germ.component(1);
    assert_eq!(ypart.len(), 1, "unit should be killed, got {ypart:?}");
    assert!(out.kept.is_empty());
    let res = verify_conjugacy(&g, &out.germ, &out.phi).unwrap();
    assert!(res.max < 1e-9, "residual {}", res.max);
    let oracle = oracle_solve(&g, &blocks, TargetShape::Secondary).unwrap();
    assert!(oracle.kept_secondary.is_empty());
}

#[test]
fn pass_secondary_identity_on_clean_input() {
    let x = qv(0, 2, 6);
    let y = qv(1, 2, 6);
    let f = GermMap::new(
        vec![x.scale(&q(1, 2)), x.mul(&y.mul(&y).unwrap()).unwrap()],
        2,
        Tolerances::default(),
    )
    .unwrap();
    let (g, blocks) = prepared(&f);
    let report = resonance_report(&blocks, None, 1e-9).unwrap();
    let out = pass_secondary(&g, &blocks, &report, &PassOptions::default()).unwrap();
    let res = verify_conjugacy(&g, &out.germ, &out.phi).unwrap();
    assert!(res.exact_zero);
    for (k, comp) in out.germ.components().iter().enumerate() {
        assert_eq!(comp, g.component(k));
    }
}

#[test]
fn pass_affine_identity_and_shape() {
    // ε = 0 → Φ = identity. Then a germ with ε ≠ 0 is reduced to z-degree 1.
    // f = (λx, x^c y^d, x y z (1+z) + x²) in d=3.
    let x = fv(0, 3, 6);
    let y = fv(1, 3, 6);
    let z = fv(2, 3, 6);
    let one = FS::one(3, 6);
    let zc = x
        .mul(&y)
        .unwrap()
        .mul(&z)
        .unwrap()
        .mul(&one.add(&z).unwrap())
        .unwrap()
        .add(&x.mul(&x).unwrap())
        .unwrap();
    let f = GermMap::new(
        vec![
            x.scale(&c(0.5)),
            x.mul(&y.mul(&y).unwrap()).unwrap(),
            zc,
        ],
        2,
        Tolerances::default(),
    )
    .unwrap();
    let (g, blocks) = prepared(&f);
    assert_eq!(blocks.s() + blocks.p, 2);
    let out = pass_affine(&g, &blocks, &PassOptions::default()).unwrap();
    let zpart = out.germ.component(2);
    for (n, _) in zpart.terms() {
        assert!(n.0[2] <= 1, "z-degree must drop to ≤ 1, got {n}");
    }
    let res = verify_conjugacy(&g, &out.germ, &out.phi).unwrap();
    assert!(res.max < 1e-9, "residual {}", res.max);
    // Idempotence: a second application is the identity.
    let out2 = pass_affine(&out.germ, &blocks, &PassOptions::default()).unwrap();
    assert_eq!(out2.iterations, 0);
    let res2 = verify_conjugacy(&out.germ, &out2.germ, &out2.phi).unwrap();
    assert!(res2.max < 1e-12);
}

#[test]
fn normalize_full_idempotent_on_normal_form() {
    // Already in normal form: all stages are the identity, residual 0.
    let x = qv(0, 3, 6);
    let y = qv(1, 3, 6);
    let z = qv(2, 3, 6);
    let f = GermMap::new(
        vec![
            x.scale(&q(1, 2)),
            y.scale(&q(1, 3)),
            x.mul(&y).unwrap().mul(&z.mul(&z).unwrap()).unwrap(),
        ],
        3,
        Tolerances::default(),
    )
    .unwrap();
    let run = normalize_full(&f, None, &PassOptions::default(), PassSelector::All).unwrap();
    assert!(run.certificate.residual.exact_zero);
    // The normalized germ agrees with the input (coordinates were already
    // prepared and ordered).
    for (a, b) in run.certificate.normalized.components().iter().zip(f.components()) {
        assert_eq!(a, b);
    }
}

#[test]
fn normalize_full_rejects_non_injective_and_non_rigid() {
    // manyimages (a=1): rejected with the non-injective diagnostic.
    let x = qv(0, 3, 6);
    let y = qv(1, 3, 6);
    let z = qv(2, 3, 6);
    let f = GermMap::new(
        vec![
            x.scale(&q(1, 2)),
            x.mul(&QS::one(3, 6).add(&y.mul(&y).unwrap()).unwrap()).unwrap(),
            x.mul(&y).unwrap().mul(&z.mul(&z).unwrap()).unwrap(),
        ],
        3,
        Tolerances::default(),
    )
    .unwrap();
    match normalize_full(&f, None, &PassOptions::default(), PassSelector::All) {
        Err(NormalizeError::NonInjective) => {}
        other => panic!("expected NonInjective, got {:?}", other.err().map(|e| e.to_string())),
    }
    // Non-rigid 2D example: rejected at rigidity.
    let x2 = qv(0, 2, 6);
    let y2 = qv(1, 2, 6);
    let xy = x2.mul(&y2).unwrap();
    let g = GermMap::new(
        vec![
            xy.mul(&QS::one(2, 6).add(&x2).unwrap()).unwrap(),
            xy.mul(&QS::one(2, 6).add(&y2).unwrap()).unwrap(),
        ],
        2,
        Tolerances::default(),
    )
    .unwrap();
    match normalize_full(&g, None, &PassOptions::default(), PassSelector::All) {
        Err(NormalizeError::Rigidity(_)) => {}
        other => panic!("expected Rigidity, got {:?}", other.err().map(|e| e.to_string())),
    }
}

#[test]
fn normalize_full_theorem_a_shape() {
    // r = q (all critical components fixed), semisimple df₀: the output must
    // match the intro normal form: x-part Poincaré–Dulac, y-part
    // β x^E y^D (1 + g(x)), g secondary-resonant only, plus the foliation
    // shape facts (x∘f depends only on x, y∘f only on (x, y)).
    // Input order: critical coordinates first (u, then the y-block), the
    // free coordinate v last; the pipeline reorders to (u, v, y).
    let u = fv(0, 3, 6);
    let y = fv(1, 3, 6);
    let v = fv(2, 3, 6);
    let one = FS::one(3, 6);
    // Garbage in permitted slots: θ-unit on u, g-junk in y, ρ-junk in v.
    let f = GermMap::new(
        vec![
            u.scale(&c(0.5)).mul(&one.add(&v.scale(&c(0.2))).unwrap()).unwrap(),
            u.mul(&y.mul(&y).unwrap()).unwrap().mul(
                &one.add(&v.scale(&c(0.6))).unwrap(),
            )
            .unwrap(),
            v.scale(&c(0.25))
                .add(&u.mul(&u).unwrap().scale(&c(1.5)))
                .unwrap()
                .add(&y.mul(&v).unwrap().scale(&c(0.8)))
                .unwrap(),
        ],
        2,
        Tolerances::default(),
    )
    .unwrap();
    let run = normalize_full(&f, None, &PassOptions::default(), PassSelector::All).unwrap();
    assert!(run.certificate.residual.max <= 1e-8);
    let g = &run.certificate.normalized;
    let blocks = &run.blocks;
    let s = blocks.s();
    // x∘f depends only on x; y∘f only on (x, y).
    for k in 0..s {
        for (n, _) in g.component(k).terms() {
            assert!(n.supported_in(0, s));
        }
    }
    for k in s..s + blocks.p {
        for (n, _) in g.component(k).terms() {
            assert!(n.supported_in(0, s + blocks.p));
        }
    }
    // u² stays (resonant: (1/2)² = 1/4), y-unit is killed (generic λ).
    assert_eq!(run.kept_primary, vec![(1, MultiIndex(vec![2, 0]))]);
    assert!(run.kept_secondary.is_empty());
}
