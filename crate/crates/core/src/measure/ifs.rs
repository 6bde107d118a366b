use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{check_tol, Error, Result};
use crate::numeric::{exp_2pi_i, Complex64, ComplexSum};

/// Default slack required above 1 for every eigenvalue modulus of `R`.
pub const DEFAULT_EXPANSION_MARGIN: f64 = 1e-9;

/// Largest power tried when looking for `‖R^{-p}‖ < 1`.
const MAX_CONTRACTION_POWER: usize = 64;

const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Small dense row-major square matrix used on the hot paths.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Shape("empty matrix".into()));
        }
        if let Some(bad) = rows.iter().position(|r| r.len() != n) {
            return Err(Error::Shape(format!(
                "row {bad} has {} entries, expected {n}",
                rows[bad].len()
            )));
        }
        if rows.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::Shape("non-finite matrix entry".into()));
        }
        Ok(Matrix { n, data: rows.concat() })
    }

    pub fn scalar(x: f64) -> Self {
        Matrix { n: 1, data: vec![x] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n).map(<[f64]>::to_vec).collect()
    }

    pub fn transpose(&self) -> Self {
        let n = self.n;
        let data = (0..n * n).map(|k| self.get(k % n, k / n)).collect();
        Matrix { n, data }
    }

    /// `out = self · x`.
    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.data[i * self.n..(i + 1) * self.n];
            *o = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.apply_into(x, &mut out);
        out
    }

    /// Entrywise absolute value, used for interval images of boxes.
    pub fn abs(&self) -> Self {
        Matrix {
            n: self.n,
            data: self.data.iter().map(|x| x.abs()).collect(),
        }
    }

    fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.data)
    }

    fn from_dmatrix(m: &DMatrix<f64>) -> Self {
        let n = m.nrows();
        let data = (0..n * n).map(|k| m[(k / n, k % n)]).collect();
        Matrix { n, data }
    }
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    m.clone().singular_values().max()
}

/// Geometric decay data for `S^{-k}`: the first power `p` with
/// `‖S^{-p}‖ < 1` and the norms of `S^{-1} … S^{-p}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Contraction {
    pub power: usize,
    pub norms: Vec<f64>,
}

impl Contraction {
    fn find(r_inv: &DMatrix<f64>) -> std::result::Result<Self, f64> {
        let mut acc = r_inv.clone();
        let mut norms = Vec::new();
        for p in 1..=MAX_CONTRACTION_POWER {
            let nrm = spectral_norm(&acc);
            norms.push(nrm);
            if nrm < 1.0 {
                return Ok(Contraction { power: p, norms });
            }
            acc = &acc * r_inv;
        }
        Err(norms.into_iter().fold(f64::INFINITY, f64::min))
    }

    /// `‖S^{-p}‖`.
    pub fn rate(&self) -> f64 {
        self.norms[self.power - 1]
    }

    /// `G` with `Σ_{j≥1} |S^{-j} s| ≤ G |s|`.
    pub fn tail_factor(&self) -> f64 {
        self.norms.iter().sum::<f64>() / (1.0 - self.rate())
    }

    /// Upper bound on `‖S^{-k}‖`.
    pub fn power_bound(&self, k: usize) -> f64 {
        if k == 0 {
            return 1.0;
        }
        let p = self.power;
        let (q, r) = (k / p, k % p);
        let head = if r == 0 { 1.0 } else { self.norms[r - 1] };
        head * self.rate().powi(q as i32)
    }
}

/// An affine iterated function system `τ_b(x) = R^{-1}(x + b)` with digit
/// probabilities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AffineIfs {
    r: Matrix,
    r_inv: Matrix,
    s_inv: Matrix,
    digits: Vec<Vec<f64>>,
    weights: Vec<f64>,
    digit_radius: f64,
    inv_norm: f64,
    contraction: Option<Contraction>,
    margin: f64,
}

impl AffineIfs {
    /// Validates an IFS with the default expansion margin. `weights = None`
    /// means equal weights.
    pub fn new(r: &[Vec<f64>], digits: &[Vec<f64>], weights: Option<&[f64]>) -> Result<Self> {
        Self::with_margin(r, digits, weights, DEFAULT_EXPANSION_MARGIN)
    }

    pub fn equal_weights(r: &[Vec<f64>], digits: &[Vec<f64>]) -> Result<Self> {
        Self::new(r, digits, None)
    }

    pub fn with_margin(r: &[Vec<f64>], digits: &[Vec<f64>], weights: Option<&[f64]>, margin: f64) -> Result<Self> {
        let r = Matrix::from_rows(r)?;
        let inv = r
            .to_dmatrix()
            .try_inverse()
            .ok_or(Error::NonExpansive { modulus: 0.0, margin })?;
        Self::build(r, Matrix::from_dmatrix(&inv), digits, weights, margin)
    }

    /// One-dimensional system with `R = 1/ratio` where `ratio` is the exact
    /// contraction, so `R^{-1}` is not re-rounded.
    pub fn one_dimensional(ratio: f64, digits: &[f64], weights: Option<&[f64]>) -> Result<Self> {
        let digits: Vec<Vec<f64>> = digits.iter().map(|&b| vec![b]).collect();
        Self::build(
            Matrix::scalar(1.0 / ratio),
            Matrix::scalar(ratio),
            &digits,
            weights,
            DEFAULT_EXPANSION_MARGIN,
        )
    }

    /// Bernoulli convolution in product normal form: `R = 1/λ`, `B = {−1, 1}`,
    /// so `μ̂(t) = ∏_{k≥1} cos(2πλ^k t)`.
    pub fn bernoulli(lambda: f64) -> Result<Self> {
        Self::one_dimensional(lambda, &[-1.0, 1.0], None)
    }

    /// Bernoulli convolution for the maps `τ_±(x) = λx ± 1`, i.e. digits
    /// `±1/λ`. This is [`AffineIfs::bernoulli`] dilated by `1/λ`; its transform is
    /// `∏_{k≥0} cos(2πλ^k t)` and its attractor is `[−1/(1−λ), 1/(1−λ)]`.
    pub fn bernoulli_maps(lambda: f64) -> Result<Self> {
        Self::one_dimensional(lambda, &[-1.0 / lambda, 1.0 / lambda], None)
    }

    fn build(r: Matrix, r_inv: Matrix, digits: &[Vec<f64>], weights: Option<&[f64]>, margin: f64) -> Result<Self> {
        let n = r.dim();
        if digits.is_empty() {
            return Err(Error::Shape("digit set is empty".into()));
        }
        for b in digits {
            if b.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: b.len(),
                });
            }
            if b.iter().any(|x| !x.is_finite()) {
                return Err(Error::Shape("non-finite digit".into()));
            }
        }
        for i in 0..digits.len() {
            for j in i + 1..digits.len() {
                if digits[i] == digits[j] {
                    return Err(Error::DuplicateDigits(i, j));
                }
            }
        }

        let eigen_moduli: Vec<f64> = if n == 1 {
            vec![r.get(0, 0).abs()]
        } else {
            r.to_dmatrix().complex_eigenvalues().iter().map(|z| z.norm()).collect()
        };
        let smallest = eigen_moduli.iter().copied().fold(f64::INFINITY, f64::min);
        if !(smallest > 1.0 + margin) {
            return Err(Error::NonExpansive {
                modulus: smallest,
                margin,
            });
        }

        let count = digits.len();
        let weights = match weights {
            Some(w) => {
                if w.len() != count {
                    return Err(Error::BadWeights(format!("{} weights for {count} digits", w.len())));
                }
                if let Some(bad) = w.iter().find(|&&p| !(p > 0.0 && p <= 1.0)) {
                    return Err(Error::BadWeights(format!("weight {bad} outside (0, 1)")));
                }
                let total: f64 = w.iter().sum();
                if (total - 1.0).abs() > WEIGHT_SUM_TOL {
                    return Err(Error::BadWeights(format!("weights sum to {total}")));
                }
                w.to_vec()
            }
            None => vec![1.0 / count as f64; count],
        };

        let r_inv_d = r_inv.to_dmatrix();
        let contraction = Contraction::find(&r_inv_d.transpose()).ok();
        let inv_norm = spectral_norm(&r_inv_d);
        let digit_radius = digits.iter().map(|b| norm(b)).fold(0.0, f64::max);
        Ok(AffineIfs {
            s_inv: r_inv.transpose(),
            r,
            r_inv,
            digits: digits.to_vec(),
            weights,
            digit_radius,
            inv_norm,
            contraction,
            margin,
        })
    }

    pub fn dim(&self) -> usize {
        self.r.dim()
    }

    pub fn digit_count(&self) -> usize {
        self.digits.len()
    }

    pub fn digits(&self) -> &[Vec<f64>] {
        &self.digits
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn r(&self) -> &Matrix {
        &self.r
    }

    /// `S = Rᵗ`.
    pub fn s(&self) -> Matrix {
        self.r.transpose()
    }

    pub fn r_inv(&self) -> &Matrix {
        &self.r_inv
    }

    /// `S^{-1} = (R^{-1})ᵗ`.
    pub fn s_inv(&self) -> &Matrix {
        &self.s_inv
    }

    /// Operator 2-norm of `R^{-1}`.
    pub fn inverse_norm(&self) -> f64 {
        self.inv_norm
    }

    /// `max_b |b|`.
    pub fn digit_radius(&self) -> f64 {
        self.digit_radius
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn contraction(&self) -> Result<&Contraction> {
        self.contraction
            .as_ref()
            .ok_or(Error::NoConvergence { factor: self.inv_norm })
    }

    pub fn has_equal_weights(&self) -> bool {
        let first = self.weights[0];
        self.weights.iter().all(|&p| (p - first).abs() <= WEIGHT_SUM_TOL)
    }

    /// `τ_b(x) = R^{-1}(x + b)`.
    pub fn map(&self, digit: usize, x: &[f64]) -> Vec<f64> {
        let shifted: Vec<f64> = x.iter().zip(&self.digits[digit]).map(|(a, b)| a + b).collect();
        self.r_inv.apply(&shifted)
    }

    /// `τ_b^{-1}(y) = R y − b`.
    pub fn map_inverse(&self, digit: usize, y: &[f64]) -> Vec<f64> {
        let mut out = self.r.apply(y);
        for (o, b) in out.iter_mut().zip(&self.digits[digit]) {
            *o -= b;
        }
        out
    }

    /// The weighted mask `m_p(s) = Σ_b p_b e^{2πi b·s}`.
    pub fn mask_hat(&self, s: &[f64]) -> Complex64 {
        let mut acc = ComplexSum::default();
        for (b, &p) in self.digits.iter().zip(&self.weights) {
            acc.add(exp_2pi_i(dot(b, s)) * p);
        }
        acc.value()
    }

    /// Axis-aligned hull of the attractor, widened by at most `tol`.
    ///
    /// In one dimension the hull is computed from the extremal fixed points.
    /// Otherwise each face comes from the support-function series
    /// `h(u) = Σ_{k≥1} max_b (S^{-k}u)·b`, truncated with a geometric tail bound.
    pub fn attractor_box(&self, tol: f64) -> Result<BoundingBox> {
        check_tol(tol)?;
        if self.dim() == 1 {
            return Ok(self.interval_hull());
        }
        let n = self.dim();
        let mut lo = vec![0.0; n];
        let mut hi = vec![0.0; n];
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            hi[j] = self.support_function(&e, tol)?;
            e[j] = -1.0;
            lo[j] = -self.support_function(&e, tol)?;
        }
        Ok(BoundingBox { lo, hi })
    }

    fn interval_hull(&self) -> BoundingBox {
        let c = self.r_inv.get(0, 0);
        let bmin = self.digits.iter().map(|b| b[0]).fold(f64::INFINITY, f64::min);
        let bmax = self.digits.iter().map(|b| b[0]).fold(f64::NEG_INFINITY, f64::max);
        let (lo, hi) = if c > 0.0 {
            (c * bmin / (1.0 - c), c * bmax / (1.0 - c))
        } else {
            // lo = c·hi + c·bmax and hi = c·lo + c·bmin
            let det = 1.0 - c * c;
            ((c * c * bmin + c * bmax) / det, (c * c * bmax + c * bmin) / det)
        };
        BoundingBox {
            lo: vec![lo],
            hi: vec![hi],
        }
    }

    /// Upper bound on `sup_{x∈X} u·x`, within `tol` of the true value.
    pub fn support_function(&self, u: &[f64], tol: f64) -> Result<f64> {
        let contraction = self.contraction()?;
        let g = contraction.tail_factor();
        let mut s = u.to_vec();
        let mut next = vec![0.0; s.len()];
        let mut total = 0.0;
        for _ in 0..100_000 {
            let tail = self.digit_radius * g * norm(&s);
            if tail <= tol {
                return Ok(total + tail);
            }
            self.s_inv.apply_into(&s, &mut next);
            std::mem::swap(&mut s, &mut next);
            total += self.digits.iter().map(|b| dot(b, &s)).fold(f64::NEG_INFINITY, f64::max);
        }
        Err(Error::NoConvergence {
            factor: contraction.rate(),
        })
    }

    /// Outer box of `τ_b(box)`.
    pub fn map_box(&self, digit: usize, bx: &BoundingBox) -> BoundingBox {
        let center = self.map(digit, &bx.center());
        let half: Vec<f64> = bx.lo.iter().zip(&bx.hi).map(|(l, h)| 0.5 * (h - l)).collect();
        let spread = self.r_inv.abs().apply(&half);
        BoundingBox {
            lo: center.iter().zip(&spread).map(|(c, s)| c - s).collect(),
            hi: center.iter().zip(&spread).map(|(c, s)| c + s).collect(),
        }
    }
}

/// Axis-aligned box `∏ [lo_j, hi_j]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundingBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoundingBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        if lo.iter().zip(&hi).any(|(l, h)| !(l <= h)) {
            return Err(Error::Shape("box with lo > hi".into()));
        }
        Ok(BoundingBox { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(l, h)| 0.5 * (l + h)).collect()
    }

    pub fn diameter(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| (h - l) * (h - l))
            .sum::<f64>()
            .sqrt()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.contains_within(x, 0.0)
    }

    pub fn contains_within(&self, x: &[f64], slack: f64) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (l, h))| *v >= l - slack && *v <= h + slack)
    }

    pub fn contains_box(&self, other: &BoundingBox, slack: f64) -> bool {
        self.contains_within(&other.lo, slack) && self.contains_within(&other.hi, slack)
    }

    pub fn inflate(&self, by: f64) -> Self {
        BoundingBox {
            lo: self.lo.iter().map(|l| l - by).collect(),
            hi: self.hi.iter().map(|h| h + by).collect(),
        }
    }

    pub fn intersect(&self, other: &BoundingBox) -> Option<BoundingBox> {
        let lo: Vec<f64> = self.lo.iter().zip(&other.lo).map(|(a, b)| a.max(*b)).collect();
        let hi: Vec<f64> = self.hi.iter().zip(&other.hi).map(|(a, b)| a.min(*b)).collect();
        lo.iter()
            .zip(&hi)
            .all(|(l, h)| l <= h)
            .then_some(BoundingBox { lo, hi })
    }

    pub fn hull(&self, other: &BoundingBox) -> BoundingBox {
        BoundingBox {
            lo: self.lo.iter().zip(&other.lo).map(|(a, b)| a.min(*b)).collect(),
            hi: self.hi.iter().zip(&other.hi).map(|(a, b)| a.max(*b)).collect(),
        }
    }

    /// Smallest side length.
    pub fn min_width(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| h - l)
            .fold(f64::INFINITY, f64::min)
    }
}
