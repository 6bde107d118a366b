//! Scalars that remember an exact rational value, phase evaluation with exact
//! argument reduction, compensated sums and `sinc`.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::Complex;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type Complex64 = Complex<f64>;
pub type Rational = BigRational;

pub const TWO_PI: f64 = std::f64::consts::TAU;

/// Parses `"p/q"`, decimals such as `"-0.125"` and `"1.5e-3"`, or integers.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let s = text.trim();
    if s.is_empty() {
        return Err(Error::Parse("empty number".into()));
    }
    if let Some((num, den)) = s.split_once('/') {
        let n = parse_rational(num)?;
        let d = parse_rational(den)?;
        if d.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {s:?}")));
        }
        return Ok(n / d);
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => {
            let exp: i32 = s[pos + 1..]
                .parse()
                .map_err(|_| Error::Parse(format!("bad exponent in {s:?}")))?;
            (&s[..pos], exp)
        }
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(Error::Parse(format!("no digits in {s:?}")));
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(Error::Parse(format!("not a number: {s:?}")));
    }
    let all: String = [int_part, frac_part].concat();
    let numer = BigInt::from_str(if all.is_empty() { "0" } else { &all }).map_err(|e| Error::Parse(e.to_string()))?;
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10u32);
    let mut r = if scale >= 0 {
        Rational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    if negative {
        r = -r;
    }
    Ok(r)
}

/// `"p/q"`, or `"p"` for integers.
pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// The exact value of a finite float.
pub fn rational_from_f64(x: f64) -> Option<Rational> {
    Rational::from_float(x)
}

/// Fractional part in `[0, 1)`.
pub fn frac(r: &Rational) -> Rational {
    r - r.floor()
}

/// A real number that may also carry its exact rational value.
#[derive(Debug, Clone, PartialEq)]
pub struct Scalar {
    value: f64,
    exact: Option<Rational>,
}

impl Scalar {
    pub fn approx(value: f64) -> Self {
        Scalar { value, exact: None }
    }

    pub fn exact(r: Rational) -> Self {
        Scalar {
            value: rational_to_f64(&r),
            exact: Some(r),
        }
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        Self::exact(Rational::new(num.into(), den.into()))
    }

    pub fn integer(n: i64) -> Self {
        Self::exact(Rational::from_integer(n.into()))
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn as_rational(&self) -> Option<&Rational> {
        self.exact.as_ref()
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }
}

impl From<f64> for Scalar {
    /// Floats are read through their shortest decimal form, so `0.1` becomes
    /// exactly `1/10`.
    fn from(x: f64) -> Self {
        if !x.is_finite() {
            return Scalar::approx(x);
        }
        match parse_rational(&format!("{x}")) {
            Ok(r) => Scalar {
                value: x,
                exact: Some(r),
            },
            Err(_) => Scalar::approx(x),
        }
    }
}

impl FromStr for Scalar {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_rational(s).map(Scalar::exact)
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.exact {
            Some(r) => f.write_str(&format_rational(r)),
            None => write!(f, "{}", self.value),
        }
    }
}

impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match &self.exact {
            Some(r) => s.serialize_str(&format_rational(r)),
            None => s.serialize_f64(self.value),
        }
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(Scalar::from(x)),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Dot product with exact arithmetic when every coordinate is exact.
pub fn exact_dot(a: &[Scalar], b: &[Scalar]) -> Option<Rational> {
    let mut acc = Rational::zero();
    for (x, y) in a.iter().zip(b) {
        acc += x.as_rational()? * y.as_rational()?;
    }
    Some(acc)
}

/// `e^{2πi x}` after reducing `x` to `[-1/2, 1/2]`; quarter turns are exact.
pub fn exp_2pi_i(x: f64) -> Complex64 {
    let r = x - x.round();
    exp_2pi_i_reduced(r)
}

/// `e^{2πi r}` for an exact rational, reduced mod 1 before rounding.
pub fn exp_2pi_i_rational(r: &Rational) -> Complex64 {
    let mut f = frac(r);
    if f > Rational::new(1.into(), 2.into()) {
        f -= Rational::one();
    }
    exp_2pi_i_reduced(rational_to_f64(&f))
}

fn exp_2pi_i_reduced(r: f64) -> Complex64 {
    if r == 0.0 {
        Complex64::new(1.0, 0.0)
    } else if r == 0.25 {
        Complex64::new(0.0, 1.0)
    } else if r == -0.25 {
        Complex64::new(0.0, -1.0)
    } else if r == 0.5 || r == -0.5 {
        Complex64::new(-1.0, 0.0)
    } else {
        let (s, c) = (TWO_PI * r).sin_cos();
        Complex64::new(c, s)
    }
}

/// `e^{2πi a·λ}` with exact reduction when both vectors are exact.
pub fn character(a: &[Scalar], lambda: &[Scalar]) -> Complex64 {
    match exact_dot(a, lambda) {
        Some(r) => exp_2pi_i_rational(&r),
        None => exp_2pi_i(a.iter().zip(lambda).map(|(x, y)| x.value() * y.value()).sum()),
    }
}

/// `sin(x)/x`, with a Taylor branch near the origin.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// Neumaier-compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Compensated complex accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct ComplexSum {
    re: CompensatedSum,
    im: CompensatedSum,
}

impl ComplexSum {
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

/// Best rational approximation with denominator at most `max_den`, returned
/// only when it lies within `tol` of `x`.
pub fn snap_rational(x: f64, max_den: u64, tol: f64) -> Option<Rational> {
    if !x.is_finite() {
        return None;
    }
    let exact = rational_from_f64(x)?;
    let (mut h0, mut h1) = (BigInt::zero(), BigInt::one());
    let (mut k0, mut k1) = (BigInt::one(), BigInt::zero());
    let mut rest = exact;
    let limit = BigInt::from(max_den);
    let mut best: Option<Rational> = None;
    for _ in 0..64 {
        let a = rest.floor().to_integer();
        let h2 = &a * &h1 + &h0;
        let k2 = &a * &k1 + &k0;
        if k2 > limit {
            break;
        }
        best = Some(Rational::new(h2.clone(), k2.clone()));
        let f = &rest - Rational::from_integer(a);
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        if f.is_zero() {
            break;
        }
        rest = f.recip();
    }
    best.filter(|r| (rational_to_f64(r) - x).abs() <= tol)
}

/// True when `r` is an integer.
pub fn is_integer(r: &Rational) -> bool {
    r.denom().is_one()
}

/// True when `r` is an odd integer.
pub fn is_odd_integer(r: &Rational) -> bool {
    is_integer(r) && r.numer().is_odd()
}

/// `|r|`.
pub fn abs(r: &Rational) -> Rational {
    r.abs()
}
