//! Bernoulli convolutions `μ_λ` in product form
//! `μ̂_λ(t) = ∏_{k≥1} cos(2πλ^k t)`, the digit set
//! `Γ = {Σ a_i 4^i : a_i ∈ {0, 1}}` and exact certificates for zeros of `μ̂_λ`.
//!
//! A factor vanishes exactly when `λ^k t ∈ 1/4 + ℤ/2`, i.e. `4λ^k t` is an odd
//! integer, so zeros of rational `t` are decided in rational arithmetic.
//! The maps `x ↦ λx ± 1` give the same measure dilated by `1/λ`; see
//! [`AffineIfs::bernoulli_maps`].

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed};
use serde::{Serialize, Serializer};

use crate::criteria::{h_profile, FrequencySet, HProfile};
use crate::error::{check_tol, Error, Result};
use crate::measure::{AffineIfs, BoundedComplex, MeasureModel, DEFAULT_MAX_FACTORS};
use crate::numeric::{
    exp_2pi_i_rational, format_rational, is_odd_integer, parse_rational, rational_to_f64, Complex64, Rational, Scalar,
    TWO_PI,
};
use crate::par;

/// Largest supported level of `Γ_m`.
pub const GAMMA_LEVEL_CAP: u32 = 20;

/// A contraction ratio `λ ∈ (0, 1)`, held exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct BernoulliParams {
    lambda: Rational,
}

impl BernoulliParams {
    pub fn new(lambda: Rational) -> Result<Self> {
        if !(lambda.is_positive() && lambda < Rational::one()) {
            return Err(Error::InvalidInput(format!(
                "λ must lie in (0, 1), got {}",
                format_rational(&lambda)
            )));
        }
        Ok(BernoulliParams { lambda })
    }

    pub fn ratio(num: i64, den: i64) -> Result<Self> {
        Self::new(Rational::new(num.into(), den.into()))
    }

    pub fn lambda(&self) -> &Rational {
        &self.lambda
    }

    pub fn value(&self) -> f64 {
        rational_to_f64(&self.lambda)
    }

    /// `R = 1/λ`, `B = {−1, 1}`: the same transform as [`mu_hat_bernoulli`].
    pub fn ifs(&self) -> Result<AffineIfs> {
        AffineIfs::bernoulli(self.value())
    }
}

impl FromStr for BernoulliParams {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::new(parse_rational(s)?)
    }
}

impl fmt::Display for BernoulliParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_rational(&self.lambda))
    }
}

impl Serialize for BernoulliParams {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Truncated product with tail `Σ_{k>K} |1 − cos(2πλ^k t)| ≤ 2π²t²λ^{2(K+1)}/(1 − λ²)`.
/// Exact `t` has every factor reduced mod 1 in rational arithmetic, so exact
/// zeros come out as exact zeros.
pub fn mu_hat_bernoulli(params: &BernoulliParams, t: &Scalar, tol: f64) -> Result<BoundedComplex> {
    check_tol(tol)?;
    let lam = params.value();
    let tv = t.value();
    if tv == 0.0 {
        return Ok(BoundedComplex::exact(Complex64::new(1.0, 0.0)));
    }
    let geometric = 1.0 / (1.0 - lam * lam);
    let tail = |x: f64| 2.0 * std::f64::consts::PI.powi(2) * x * x * lam * lam * geometric;

    let mut product = 1.0f64;
    let mut exact_arg = t.as_rational().cloned();
    let mut x = tv;
    let mut k = 0usize;
    loop {
        // x = λ^k t; the remaining factors start at k + 1
        let bound = tail(x);
        if bound <= tol || product == 0.0 {
            let err = if product == 0.0 { 0.0 } else { product.abs() * bound };
            return Ok(BoundedComplex {
                value: Complex64::new(product, 0.0),
                err: err + 4.0 * f64::EPSILON * (k as f64 + 1.0),
            });
        }
        if k >= DEFAULT_MAX_FACTORS {
            return Err(Error::TolUnreachable {
                tol,
                cap: DEFAULT_MAX_FACTORS,
            });
        }
        k += 1;
        let factor = match exact_arg.as_mut() {
            Some(r) => {
                *r *= &params.lambda;
                x = rational_to_f64(r);
                exp_2pi_i_rational(r).re
            }
            None => {
                x *= lam;
                (TWO_PI * x).cos()
            }
        };
        product *= factor;
    }
}

/// `λ^k t = (2m + 1)/4`, so the `k`-th factor `cos(2πλ^k t)` vanishes.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalZeroCertificate {
    pub lambda: Rational,
    pub t: Rational,
    pub k: u32,
    pub m: BigInt,
}

impl RationalZeroCertificate {
    /// `λ^k t`.
    pub fn scaled(&self) -> Rational {
        pow(&self.lambda, self.k) * &self.t
    }

    /// Re-checks the identity in exact arithmetic.
    pub fn verify(&self) -> bool {
        let want = Rational::new(BigInt::from(2) * &self.m + 1, BigInt::from(4));
        self.k >= 1 && self.scaled() == want
    }
}

impl Serialize for RationalZeroCertificate {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("RationalZeroCertificate", 5)?;
        st.serialize_field("lambda", &format_rational(&self.lambda))?;
        st.serialize_field("t", &format_rational(&self.t))?;
        st.serialize_field("k", &self.k)?;
        st.serialize_field("m", &self.m.to_string())?;
        st.serialize_field("scaled", &format_rational(&self.scaled()))?;
        st.end()
    }
}

fn pow(r: &Rational, k: u32) -> Rational {
    let mut out = Rational::one();
    for _ in 0..k {
        out *= r;
    }
    out
}

/// `m` with `x = (2m + 1)/4`, if there is one.
fn odd_quarter(x: &Rational) -> Option<BigInt> {
    let four = x * Rational::from_integer(BigInt::from(4));
    if !is_odd_integer(&four) {
        return None;
    }
    let n: BigInt = four.to_integer() - BigInt::one();
    Some(n.div_floor(&BigInt::from(2)))
}

/// Certificate for the factor `k` if `4λ^k t` is an odd integer.
fn certificate_at(lambda: &Rational, t: &Rational, k: u32) -> Option<RationalZeroCertificate> {
    odd_quarter(&(pow(lambda, k) * t)).map(|m| RationalZeroCertificate {
        lambda: lambda.clone(),
        t: t.clone(),
        k,
        m,
    })
}

/// First `k ≥ 1` with `λ^k t ∈ 1/4 + ℤ/2`, searched while `|λ^k t| ≥ 1/4`.
/// Beyond that point no factor can vanish, so `None` means `μ̂_λ(t) ≠ 0`.
pub fn certify_zero(params: &BernoulliParams, t: &Rational) -> Option<RationalZeroCertificate> {
    let quarter = Rational::new(1.into(), 4.into());
    let lambda = &params.lambda;
    let mut x = t.clone();
    let mut k = 0u32;
    loop {
        x *= lambda;
        k += 1;
        if x.abs() < quarter {
            return None;
        }
        if let Some(m) = odd_quarter(&x) {
            return Some(RationalZeroCertificate {
                lambda: lambda.clone(),
                t: t.clone(),
                k,
                m,
            });
        }
    }
}

/// For a zero `t = 4^{k−1}(2m + 1)` of `μ̂_{1/4}`, the factor `k` of
/// `μ̂_{3/4}` vanishes too: `(3/4)^k t = 3^k(2m + 1)/4` with odd numerator.
pub fn zero_inclusion_witness(t: &Rational) -> Result<RationalZeroCertificate> {
    let quarter = BernoulliParams::ratio(1, 4)?;
    let source = certify_zero(&quarter, t).ok_or_else(|| Error::NotAZero(format_rational(t)))?;
    let three_quarters = Rational::new(3.into(), 4.into());
    let witness = certificate_at(&three_quarters, t, source.k)
        .ok_or_else(|| Error::NotAZero(format!("{} for λ = 3/4", format_rational(t))))?;
    debug_assert!(witness.verify());
    Ok(witness)
}

/// `Γ_m = {Σ_{i<m} a_i 4^i : a_i ∈ {0, 1}}`.
pub fn gamma_set(m: u32) -> Result<FrequencySet> {
    if m > GAMMA_LEVEL_CAP {
        return Err(Error::LevelCap {
            level: m,
            cap: GAMMA_LEVEL_CAP,
        });
    }
    FrequencySet::digit_expansion(4, vec![0, 1], m)
}

/// Elements of `Γ_m` in ascending order.
pub fn gamma_integers(m: u32) -> Result<Vec<i64>> {
    gamma_set(m)?.expand_integers(usize::MAX)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaReport {
    pub lambda: BernoulliParams,
    pub level: u32,
    pub size: usize,
    pub unordered_pairs: usize,
    /// Ordered differences `γ − γ′`, `γ ≠ γ′`, with a certificate.
    pub ordered_certified: usize,
    /// Differences without a certificate.
    pub failures: Vec<i64>,
    /// One certificate per unordered pair, for `t = γ′ − γ > 0`.
    pub certificates: Vec<RationalZeroCertificate>,
    pub all_certified: bool,
}

/// Certifies `μ̂_λ(γ − γ′) = 0` for all distinct `γ, γ′ ∈ Γ_m`.
pub fn gamma_orthogonality(params: &BernoulliParams, m: u32) -> Result<GammaReport> {
    let gamma = gamma_integers(m)?;
    let pairs: Vec<(usize, usize)> = (0..gamma.len())
        .flat_map(|i| (i + 1..gamma.len()).map(move |j| (i, j)))
        .collect();
    let results = par::map_slice(&pairs, |&(i, j)| {
        let d = gamma[j] - gamma[i];
        let up = certify_zero(params, &Rational::from_integer(d.into()));
        let down = certify_zero(params, &Rational::from_integer((-d).into()));
        (d, up, down.is_some())
    });
    let mut certificates = Vec::with_capacity(pairs.len());
    let mut failures = Vec::new();
    let mut ordered = 0;
    for (d, up, down) in results {
        ordered += usize::from(up.is_some()) + usize::from(down);
        if !down {
            failures.push(-d);
        }
        match up {
            Some(c) => certificates.push(c),
            None => failures.push(d),
        }
    }
    Ok(GammaReport {
        lambda: params.clone(),
        level: m,
        size: gamma.len(),
        unordered_pairs: pairs.len(),
        ordered_certified: ordered,
        all_certified: failures.is_empty(),
        failures,
        certificates,
    })
}

/// `h_{Γ_m}` for `μ_λ` on a grid.
pub fn completeness_probe(params: &BernoulliParams, m: u32, grid: &[f64], tol: f64) -> Result<HProfile> {
    let measure = MeasureModel::from(params.ifs()?);
    let freqs = gamma_set(m)?.expand_with_cap(1 << GAMMA_LEVEL_CAP)?;
    let grid: Vec<Vec<f64>> = grid.iter().map(|&t| vec![t]).collect();
    h_profile(&measure, &freqs, &grid, tol)
}

/// Splits a nonzero integer as `4^j · r` with `r` not divisible by 4.
pub fn quaternary_valuation(d: i64) -> (u32, i64) {
    assert!(d != 0, "zero has no valuation");
    let mut j = 0;
    let mut r = d;
    while r % 4 == 0 {
        r /= 4;
        j += 1;
    }
    (j, r)
}
