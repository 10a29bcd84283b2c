//! Complex scalar backends for series coefficients.
//!
//! Two modes exist, selected per run: `Cf64` (double-precision complex, all
//! zero tests take a tolerance) and `GaussRational` (exact complex rationals,
//! zero tests are decidable equality). Everything downstream is generic over
//! [`Coeff`], so the two modes share one implementation of the algorithms.

use std::fmt;

use num::bigint::BigInt;
use num::complex::Complex64;
use num::rational::{BigRational, Ratio};
use num::{One, Signed, ToPrimitive, Zero};

/// A complex scalar usable as a series coefficient.
///
/// `abs` is always an f64 approximation of the modulus; in exact mode it is
/// used only for size comparisons (eigenvalue ordering, degree bounds), never
/// for equality decisions.
pub trait Coeff: Clone + PartialEq + fmt::Debug + fmt::Display + Send + Sync + 'static {
    /// True when arithmetic is exact and `is_zero` ignores the tolerance.
    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn imaginary_unit() -> Self;
    fn from_ratio(num: i64, den: i64) -> Self;
    fn from_big_ratio(re: &BigRational) -> Self;
    /// Exact decimal literal, e.g. `"1.25"` or `"3e-2"`. Exact mode keeps it
    /// as a decimal fraction, float mode parses to f64.
    fn from_decimal(text: &str) -> Option<Self>;

    fn add(&self, rhs: &Self) -> Self;
    fn sub(&self, rhs: &Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn neg(&self) -> Self;
    /// Multiplicative inverse; `None` for (exact) zero.
    fn inv(&self) -> Option<Self>;
    fn conj(&self) -> Self;
    fn div_usize(&self, n: usize) -> Self;

    fn abs(&self) -> f64;
    fn to_c64(&self) -> Complex64;
    /// Lossy import of a double-precision value; exact mode stores the
    /// shortest decimal that round-trips the float. Numeric-only paths
    /// (eigenvalue means, canonical rescales) use this.
    fn from_c64(z: Complex64) -> Self {
        let re = Self::from_decimal(&format!("{:e}", z.re)).expect("f64 renders as decimal");
        let im = Self::from_decimal(&format!("{:e}", z.im)).expect("f64 renders as decimal");
        re.add(&im.mul(&Self::imaginary_unit()))
    }
    fn is_zero(&self, tol: f64) -> bool;

    fn pow_usize(&self, mut e: usize) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        acc
    }

    /// Rendered with full precision: rational text in exact mode, 17
    /// significant digits in float mode.
    fn render(&self) -> String;
}

/// Float-mode coefficient.
pub type Cf64 = Complex64;

impl Coeff for Complex64 {
    const EXACT: bool = false;

    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn imaginary_unit() -> Self {
        Complex64::new(0.0, 1.0)
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        Complex64::new(num as f64 / den as f64, 0.0)
    }
    fn from_big_ratio(re: &BigRational) -> Self {
        Complex64::new(big_ratio_to_f64(re), 0.0)
    }
    fn from_decimal(text: &str) -> Option<Self> {
        text.parse::<f64>().ok().map(|x| Complex64::new(x, 0.0))
    }

    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn neg(&self) -> Self {
        -self
    }
    fn inv(&self) -> Option<Self> {
        if self.norm() == 0.0 {
            None
        } else {
            Some(Complex64::new(1.0, 0.0) / self)
        }
    }
    fn conj(&self) -> Self {
        Complex64::conj(self)
    }
    fn div_usize(&self, n: usize) -> Self {
        self / n as f64
    }

    fn abs(&self) -> f64 {
        self.norm()
    }
    fn to_c64(&self) -> Complex64 {
        *self
    }
    fn is_zero(&self, tol: f64) -> bool {
        self.norm() <= tol
    }

    fn render(&self) -> String {
        if self.im == 0.0 {
            format!("{:.16e}", self.re)
        } else {
            format!("{:.16e}{:+.16e}i", self.re, self.im)
        }
    }
}

/// Exact-mode coefficient: a Gaussian rational `re + im*i`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GaussRational {
    pub re: BigRational,
    pub im: BigRational,
}

impl GaussRational {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        GaussRational { re, im }
    }

    pub fn from_int(n: i64) -> Self {
        Self::from_ratio(n, 1)
    }

    fn norm_sq(&self) -> BigRational {
        &self.re * &self.re + &self.im * &self.im
    }
}

impl fmt::Display for GaussRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_zero() {
            write!(f, "{}", self.re)
        } else if self.re.is_zero() {
            write!(f, "{}i", self.im)
        } else if self.im.is_negative() {
            write!(f, "{}{}i", self.re, self.im)
        } else {
            write!(f, "{}+{}i", self.re, self.im)
        }
    }
}

fn big_ratio_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // Out-of-range extremes; fall back to a sign-preserving infinity.
        if r.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

impl Coeff for GaussRational {
    const EXACT: bool = true;

    fn zero() -> Self {
        GaussRational::new(BigRational::zero(), BigRational::zero())
    }
    fn one() -> Self {
        GaussRational::new(BigRational::one(), BigRational::zero())
    }
    fn imaginary_unit() -> Self {
        GaussRational::new(BigRational::zero(), BigRational::one())
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        GaussRational::new(
            Ratio::new(BigInt::from(num), BigInt::from(den)),
            BigRational::zero(),
        )
    }
    fn from_big_ratio(re: &BigRational) -> Self {
        GaussRational::new(re.clone(), BigRational::zero())
    }
    fn from_decimal(text: &str) -> Option<Self> {
        parse_exact_decimal(text).map(|re| GaussRational::new(re, BigRational::zero()))
    }

    fn add(&self, rhs: &Self) -> Self {
        GaussRational::new(&self.re + &rhs.re, &self.im + &rhs.im)
    }
    fn sub(&self, rhs: &Self) -> Self {
        GaussRational::new(&self.re - &rhs.re, &self.im - &rhs.im)
    }
    fn mul(&self, rhs: &Self) -> Self {
        GaussRational::new(
            &self.re * &rhs.re - &self.im * &rhs.im,
            &self.re * &rhs.im + &self.im * &rhs.re,
        )
    }
    fn neg(&self) -> Self {
        GaussRational::new(-self.re.clone(), -self.im.clone())
    }
    fn inv(&self) -> Option<Self> {
        let n = self.norm_sq();
        if n.is_zero() {
            return None;
        }
        Some(GaussRational::new(&self.re / &n, -(&self.im / &n)))
    }
    fn conj(&self) -> Self {
        GaussRational::new(self.re.clone(), -self.im.clone())
    }
    fn div_usize(&self, n: usize) -> Self {
        let d = BigRational::from_integer(BigInt::from(n));
        GaussRational::new(&self.re / &d, &self.im / &d)
    }

    fn abs(&self) -> f64 {
        self.to_c64().norm()
    }
    fn to_c64(&self) -> Complex64 {
        Complex64::new(big_ratio_to_f64(&self.re), big_ratio_to_f64(&self.im))
    }
    fn is_zero(&self, _tol: f64) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    fn render(&self) -> String {
        self.to_string()
    }
}

/// Parse a decimal literal (`123`, `1.25`, `3e-2`, `1.5e4`) into an exact
/// rational. Returns `None` on malformed input.
pub fn parse_exact_decimal(text: &str) -> Option<BigRational> {
    let (mantissa, exp10) = match text.find(['e', 'E']) {
        Some(pos) => {
            let e: i64 = text[pos + 1..].parse().ok()?;
            (&text[..pos], e)
        }
        None => (text, 0i64),
    };
    let (int_part, frac_part) = match mantissa.find('.') {
        Some(pos) => (&mantissa[..pos], &mantissa[pos + 1..]),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let num: BigInt = digits.parse().ok()?;
    let shift = exp10 - frac_part.len() as i64;
    let ten = BigInt::from(10);
    let scale = ten.pow(shift.unsigned_abs() as u32);
    Some(if shift >= 0 {
        BigRational::from_integer(num * scale)
    } else {
        Ratio::new(num, scale)
    })
}
