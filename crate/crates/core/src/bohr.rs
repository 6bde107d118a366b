//! Means of trigonometric polynomials over growing cubes and the inner product
//! of `L²` of the Bohr compactification, where distinct characters are
//! orthonormal. Everything reduces to closed forms on coefficients.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::criteria::gram_matrix;
use crate::error::{check_tol, Error, Result};
use crate::measure::MeasureModel;
use crate::numeric::{exp_2pi_i, sinc, Complex64, ComplexSum, Scalar, TWO_PI};
use crate::par;

/// `f = Σ c_λ e_λ` with finitely many distinct frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPolynomial {
    freqs: Vec<Vec<f64>>,
    coeffs: Vec<Complex64>,
}

impl TrigPolynomial {
    pub fn new(terms: Vec<(Vec<f64>, Complex64)>) -> Result<Self> {
        let dim = terms.first().map_or(1, |(f, _)| f.len());
        if dim == 0 {
            return Err(Error::Shape("frequencies need at least one coordinate".into()));
        }
        for (i, (f, c)) in terms.iter().enumerate() {
            if f.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: f.len(),
                });
            }
            if f.iter().any(|x| !x.is_finite()) || !(c.re.is_finite() && c.im.is_finite()) {
                return Err(Error::InvalidInput("non-finite term".into()));
            }
            if let Some(j) = terms[..i].iter().position(|(g, _)| g == f) {
                return Err(Error::DuplicateFrequencies(j, i));
            }
        }
        let (freqs, coeffs) = terms.into_iter().unzip();
        Ok(TrigPolynomial { freqs, coeffs })
    }

    /// A single exponential `e_λ`.
    pub fn exponential(freq: Vec<f64>) -> Self {
        TrigPolynomial {
            freqs: vec![freq],
            coeffs: vec![Complex64::new(1.0, 0.0)],
        }
    }

    pub fn dim(&self) -> usize {
        self.freqs.first().map_or(1, Vec::len)
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[f64], Complex64)> {
        self.freqs.iter().map(Vec::as_slice).zip(self.coeffs.iter().copied())
    }

    /// Coefficient of `e_λ`, zero when absent.
    pub fn coefficient(&self, freq: &[f64]) -> Complex64 {
        self.freqs
            .iter()
            .position(|f| f == freq)
            .map_or(Complex64::new(0.0, 0.0), |i| self.coeffs[i])
    }

    pub fn supported_on(&self, lambda: &[Vec<f64>]) -> bool {
        self.freqs.iter().all(|f| lambda.contains(f))
    }

    pub fn eval(&self, x: &[f64]) -> Complex64 {
        let mut s = ComplexSum::default();
        for (f, c) in self.terms() {
            s.add(c * exp_2pi_i(dot(f, x)));
        }
        s.value()
    }

    /// `Σ |c_λ|²`.
    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(Complex64::norm_sqr).sum()
    }

    fn map_coeffs(&self, f: impl Fn(&[f64], Complex64) -> Complex64) -> Self {
        TrigPolynomial {
            freqs: self.freqs.clone(),
            coeffs: self.terms().map(|(l, c)| f(l, c)).collect(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct RawTerm {
    freq: Vec<Scalar>,
    #[serde(default)]
    re: f64,
    #[serde(default)]
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct RawPolynomial {
    terms: Vec<RawTerm>,
}

impl Serialize for TrigPolynomial {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RawPolynomial {
            terms: self
                .terms()
                .map(|(f, c)| RawTerm {
                    freq: f.iter().map(|&x| Scalar::approx(x)).collect(),
                    re: c.re,
                    im: c.im,
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for TrigPolynomial {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawPolynomial::deserialize(d)?;
        TrigPolynomial::new(
            raw.terms
                .into_iter()
                .map(|t| (t.freq.iter().map(Scalar::value).collect(), Complex64::new(t.re, t.im)))
                .collect(),
        )
        .map_err(serde::de::Error::custom)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `⟨f⟩_T` against its limit `c_0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BohrMeanResult {
    pub t: f64,
    pub value: Complex64,
    pub limit: Complex64,
    /// `⟨e_λ⟩_T` per term, in term order.
    pub factors: Vec<f64>,
    /// `Σ_{λ≠0} |c_λ| ∏_j min(1, 1/(2π|λ_j|T))`, a bound on `|value − limit|`.
    pub bound: f64,
}

/// `⟨e_λ⟩_T = ∏_j sin(2πλ_j T)/(2πλ_j T)`.
pub fn cube_mean(freq: &[f64], t: f64) -> f64 {
    freq.iter().map(|&l| sinc(TWO_PI * l * t)).product()
}

/// `∏_j min(1, 1/(2π|λ_j|T))` over the nonzero coordinates.
pub fn mean_decay_bound(freq: &[f64], t: f64) -> f64 {
    freq.iter()
        .filter(|l| **l != 0.0)
        .map(|l| (1.0 / (TWO_PI * l.abs() * t)).min(1.0))
        .product()
}

pub fn bohr_mean_t(f: &TrigPolynomial, t: f64) -> Result<BohrMeanResult> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidInput(format!("T must be positive, got {t}")));
    }
    let factors: Vec<f64> = f.freqs.iter().map(|l| cube_mean(l, t)).collect();
    let mut value = ComplexSum::default();
    let mut bound = 0.0;
    let mut limit = Complex64::new(0.0, 0.0);
    for ((l, c), m) in f.terms().zip(&factors) {
        value.add(c * *m);
        if l.iter().all(|x| *x == 0.0) {
            limit = c;
        } else {
            bound += c.norm() * mean_decay_bound(l, t);
        }
    }
    Ok(BohrMeanResult {
        t,
        value: value.value(),
        limit,
        factors,
        bound,
    })
}

/// `⟨f, g⟩ = Σ_λ c_λ conj(d_λ)`: distinct characters are orthonormal.
pub fn bohr_inner_product(f: &TrigPolynomial, g: &TrigPolynomial) -> Complex64 {
    let mut s = ComplexSum::default();
    for (l, c) in f.terms() {
        s.add(c * g.coefficient(l).conj());
    }
    s.value()
}

/// Bohr Gram matrix of `{e_λ}`, row-major.
pub fn bohr_gram(freqs: &[Vec<f64>]) -> Vec<Complex64> {
    let polys: Vec<TrigPolynomial> = freqs.iter().map(|l| TrigPolynomial::exponential(l.clone())).collect();
    polys
        .iter()
        .flat_map(|p| polys.iter().map(move |q| bohr_inner_product(p, q)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IsometryReport {
    /// `Σ c_λ conj(c_λ′) μ̂(λ − λ′)`.
    pub mu_norm_sqr: f64,
    /// `Σ |c_λ|²`.
    pub bohr_norm_sqr: f64,
    pub defect: f64,
    /// Bound on the error in `mu_norm_sqr` from truncated transforms.
    pub err: f64,
}

/// `|‖f‖²_{L²(μ)} − ‖f‖²_{L²(G)}|` for `f` supported on `Λ`.
pub fn isometry_defect(m: &MeasureModel, lambda: &[Vec<f64>], f: &TrigPolynomial, tol: f64) -> Result<IsometryReport> {
    check_tol(tol)?;
    if !f.supported_on(lambda) {
        return Err(Error::InvalidInput("polynomial has frequencies outside Λ".into()));
    }
    let gram = gram_matrix(m, lambda, tol)?;
    let c: Vec<Complex64> = lambda.iter().map(|l| f.coefficient(l)).collect();
    let mut s = ComplexSum::default();
    let mut err = 0.0;
    for i in 0..c.len() {
        for j in 0..c.len() {
            s.add(c[i] * c[j].conj() * gram.get(i, j));
            err += c[i].norm() * c[j].norm() * gram.err(i, j);
        }
    }
    let mu = s.value().re;
    let bohr = f.norm_sqr();
    Ok(IsometryReport {
        mu_norm_sqr: mu,
        bohr_norm_sqr: bohr,
        defect: (mu - bohr).abs(),
        err,
    })
}

/// Local translation in the Fourier domain: `c_λ ↦ e^{2πi t·λ} c_λ`, i.e.
/// `e_λ(x + t) = e_λ(t) e_λ(x)` term by term.
pub fn local_translation_apply(lambda: &[Vec<f64>], f: &TrigPolynomial, t: &[f64]) -> Result<TrigPolynomial> {
    check_support(lambda, f, t)?;
    Ok(f.map_coeffs(|l, c| {
        let phase = l
            .iter()
            .zip(t)
            .fold(Complex64::new(1.0, 0.0), |acc, (x, y)| acc * exp_2pi_i(x * y));
        c * phase
    }))
}

/// Largest coefficient discrepancy between translating by `a` and then
/// embedding, and embedding and then multiplying each character `χ` by the
/// character of `a`.
pub fn intertwining_check(lambda: &[Vec<f64>], f: &TrigPolynomial, a: &[f64]) -> Result<f64> {
    let translated = local_translation_apply(lambda, f, a)?;
    // Bohr side: (a·χ)(λ) = e^{2πi a·λ} χ(λ) on the coefficient of ẽ_λ
    let residuals = par::map_slice(&f.freqs, |l| {
        let bohr = f.coefficient(l) * exp_2pi_i(dot(a, l));
        (bohr - translated.coefficient(l)).norm()
    });
    Ok(residuals.into_iter().fold(0.0, f64::max))
}

fn check_support(lambda: &[Vec<f64>], f: &TrigPolynomial, t: &[f64]) -> Result<()> {
    if !f.supported_on(lambda) {
        return Err(Error::InvalidInput("polynomial has frequencies outside Λ".into()));
    }
    if !f.is_empty() && t.len() != f.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            got: t.len(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{AffineIfs, IntervalUnion};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn poly(terms: &[(f64, Complex64)]) -> TrigPolynomial {
        TrigPolynomial::new(terms.iter().map(|&(l, c)| (vec![l], c)).collect()).unwrap()
    }

    #[test]
    fn cube_means() {
        let one = bohr_mean_t(&TrigPolynomial::exponential(vec![0.0]), 3.7).unwrap();
        assert_eq!(one.value, c(1.0, 0.0));
        let e1 = bohr_mean_t(&TrigPolynomial::exponential(vec![1.0]), 10.0).unwrap();
        assert!(e1.value.norm() < 1e-15);
        for t in [10.0, 100.0, 1000.0] {
            let r = bohr_mean_t(&TrigPolynomial::exponential(vec![1.0 / 3.0]), t).unwrap();
            assert!(r.value.norm() <= 3.0 / (TWO_PI * t));
            assert!((r.value - r.limit).norm() <= r.bound);
        }
    }

    #[test]
    fn inner_products() {
        let e1 = TrigPolynomial::exponential(vec![1.0]);
        let e2 = TrigPolynomial::exponential(vec![2.0]);
        assert_eq!(bohr_inner_product(&e1, &e1), c(1.0, 0.0));
        assert_eq!(bohr_inner_product(&e1, &e2), c(0.0, 0.0));
        let f = poly(&[(1.0, c(2.0, 0.0)), (3.0, c(0.0, 1.0))]);
        assert_eq!(
            bohr_inner_product(&f, &TrigPolynomial::exponential(vec![3.0])),
            c(0.0, 1.0)
        );
    }

    #[test]
    fn duplicate_terms_are_rejected() {
        let r = TrigPolynomial::new(vec![(vec![1.0], c(1.0, 0.0)), (vec![1.0], c(2.0, 0.0))]);
        assert!(matches!(r, Err(Error::DuplicateFrequencies(0, 1))));
    }

    #[test]
    fn isometry_fixtures() {
        let leb: MeasureModel = IntervalUnion::new(vec![(0.0, 1.0)]).unwrap().into();
        let lambda = vec![vec![0.0], vec![1.0], vec![2.0]];
        let f = poly(&[(0.0, c(1.0, 0.0)), (1.0, c(1.0, 0.0))]);
        let r = isometry_defect(&leb, &lambda, &f, 1e-12).unwrap();
        assert!(r.defect < 1e-15);
        assert_eq!(r.bohr_norm_sqr, 2.0);

        let lambda = vec![vec![0.0], vec![0.5]];
        let f = poly(&[(0.0, c(1.0, 0.0)), (0.5, c(0.0, 1.0))]);
        let r = isometry_defect(&leb, &lambda, &f, 1e-12).unwrap();
        assert!((r.defect - 4.0 / std::f64::consts::PI).abs() < 1e-14);
        // with a real coefficient the cross term μ̂(±1/2) = ∓2i/π is purely imaginary
        let g = poly(&[(0.0, c(1.0, 0.0)), (0.5, c(1.0, 0.0))]);
        assert!(isometry_defect(&leb, &lambda, &g, 1e-12).unwrap().defect < 1e-15);
    }

    #[test]
    fn isometric_on_gamma() {
        let m: MeasureModel = AffineIfs::bernoulli(0.25).unwrap().into();
        let lambda: Vec<Vec<f64>> = crate::bernoulli::gamma_integers(4)
            .unwrap()
            .into_iter()
            .map(|g| vec![g as f64])
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let f = TrigPolynomial::new(
            lambda
                .iter()
                .map(|l| (l.clone(), c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))))
                .collect(),
        )
        .unwrap();
        assert!(isometry_defect(&m, &lambda, &f, 1e-12).unwrap().defect <= 1e-8);
    }

    #[test]
    fn translation_is_a_unitary_group() {
        let lambda: Vec<Vec<f64>> = (-3..=3).map(|k| vec![k as f64]).collect();
        let f = poly(&[(-2.0, c(0.3, 1.0)), (1.0, c(-0.7, 0.2)), (3.0, c(0.1, 0.0))]);
        let same = local_translation_apply(&lambda, &f, &[0.0]).unwrap();
        assert_eq!(same, f);
        let ab =
            local_translation_apply(&lambda, &local_translation_apply(&lambda, &f, &[0.2]).unwrap(), &[0.45]).unwrap();
        let direct = local_translation_apply(&lambda, &f, &[0.65]).unwrap();
        for ((_, x), (_, y)) in ab.terms().zip(direct.terms()) {
            assert!((x - y).norm() < 1e-15);
        }
        assert!((ab.norm_sqr() - f.norm_sqr()).abs() < 1e-15);
        // pointwise: the translated series evaluates the shifted function
        for x in [0.0, 0.13, 0.77] {
            assert!((direct.eval(&[x]) - f.eval(&[x + 0.65])).norm() < 1e-13);
        }
        let outside = TrigPolynomial::exponential(vec![10.0]);
        assert!(local_translation_apply(&lambda, &outside, &[0.1]).is_err());
    }

    #[test]
    fn intertwining() {
        let lambda: Vec<Vec<f64>> = crate::bernoulli::gamma_integers(3)
            .unwrap()
            .into_iter()
            .map(|g| vec![g as f64])
            .collect();
        let f = TrigPolynomial::exponential(vec![5.0]);
        assert_eq!(intertwining_check(&lambda, &f, &[0.0]).unwrap(), 0.0);
        assert!(intertwining_check(&lambda, &f, &[0.37]).unwrap() <= 1e-15);
    }

    /// `exp(−1/(x(w − x)))` on `(0, w)`, zero elsewhere.
    fn bump(x: f64, w: f64) -> f64 {
        if x <= 0.0 || x >= w {
            0.0
        } else {
            (-1.0 / (x * (w - x))).exp()
        }
    }

    #[test]
    fn smooth_bump_translation() {
        let w = 0.4;
        let nodes = 8192;
        // the bump is smooth and 1-periodic, so the trapezoid rule is spectrally accurate
        let coeff = |k: i64| {
            let mut s = ComplexSum::default();
            for j in 0..nodes {
                let x = j as f64 / nodes as f64;
                s.add(exp_2pi_i(-(k as f64) * x) * bump(x, w));
            }
            s.value() / nodes as f64
        };
        let lambda: Vec<Vec<f64>> = (-64..=64).map(|k| vec![k as f64]).collect();
        let f = TrigPolynomial::new((-64..=64).map(|k| (vec![k as f64], coeff(k))).collect()).unwrap();
        let tail: f64 = (65..=1024).map(|k| 2.0 * coeff(k).norm_sqr()).sum::<f64>().sqrt();

        let t = 0.25;
        let g = local_translation_apply(&lambda, &f, &[t]).unwrap();
        // L² distance on O = [0, 0.15], where O + t stays inside the bump's period cell
        let samples = 1500;
        let h = 0.15 / samples as f64;
        let mut acc = 0.0;
        for j in 0..samples {
            let x = (j as f64 + 0.5) * h;
            acc += (g.eval(&[x]) - bump(x + t, w)).norm_sqr() * h;
        }
        assert!(acc.sqrt() <= tail + 1e-12, "{} > {}", acc.sqrt(), tail);

        // μ(O + t) = μ(O) for Lebesgue measure on a covering interval
        let leb = IntervalUnion::new(vec![(0.0, 1.0)]).unwrap();
        assert_eq!(leb.measure_of(0.0, 0.125), leb.measure_of(0.25, 0.375));
    }

    #[test]
    fn json_form() {
        let p: TrigPolynomial =
            serde_json::from_str(r#"{"terms":[{"freq":[1],"re":2},{"freq":["1/3"],"im":-1}]}"#).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p.coefficient(&[1.0 / 3.0]), c(0.0, -1.0));
    }
}
