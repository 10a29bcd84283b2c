use num::complex::Complex64;
use rigidnf::config::Tolerances;
use rigidnf::germ::{detect_blocks, jordan_split, monomial_unit_factor, rigidity_check, GermMap};
use rigidnf::multiseries::{Cf64, Series};

fn c(re: f64) -> Cf64 { Complex64::new(re, 0.0) }
fn show(tag: &str, s: &Series<Cf64>) {
    let terms: Vec<String> = s.terms().map(|(n, cf)| format!("{}:{:.3}", n, cf.re)).collect();
    println!("{tag} (trunc {}): {}", s.trunc(), terms.join(" "));
}

fn main() {
    type FS = Series<Cf64>;
    let x: FS = Series::variable(0, 3, 6);
    let y: FS = Series::variable(1, 3, 6);
    let z: FS = Series::variable(2, 3, 6);
    let one = FS::one(3, 6);
    let zc = x.mul(&y).unwrap().mul(&z).unwrap().mul(&one.add(&z).unwrap()).unwrap()
        .add(&x.mul(&x).unwrap()).unwrap();
    let f = GermMap::new(vec![x.scale(&c(0.5)), x.mul(&y.mul(&y).unwrap()).unwrap(), zc], 2, Tolerances::default()).unwrap();
    let cert = rigidity_check(&f).unwrap();
    let (g, blocks) = detect_blocks(&f, &cert).unwrap();
    let (g, _blocks, _) = jordan_split(&g, &blocks).unwrap();
    let h = g.component(2);
    show("h", h);
    let dh = h.partial_derivative(2).unwrap();
    show("dh", &dh);
    let (mono, unit) = monomial_unit_factor(&dh, 1e-12).unwrap();
    println!("mono {mono}");
    show("unit", &unit);
    let nu = unit.constant_term();
    let mut zeta = unit.scale(&rigidnf::multiseries::Coeff::inv(&nu).unwrap());
    zeta.add_term(rigidnf::multiseries::MultiIndex::zero(3), Complex64::new(-1.0, 0.0));
    show("zeta", &zeta);
    let eps = zeta.tau_integral(2).unwrap();
    show("eps", &eps);
    let omega = h.subst_zero(2).unwrap();
    show("omega", &omega);
}
