//! Measures with computable Fourier transforms `μ̂(t) = ∫ e^{2πi t·x} dμ(x)`.

mod ifs;
mod sample;

pub use ifs::{AffineIfs, BoundingBox, Contraction, Matrix, DEFAULT_EXPANSION_MARGIN};
pub use sample::{chaos_game_sample, Samples, BATCH_SIZE, BURN_IN};

pub(crate) use ifs::{dot, norm};

use serde::Serialize;

use crate::error::{check_tol, Error, Result};
use crate::numeric::{exp_2pi_i, sinc, Complex64, ComplexSum};

/// Default cap on the number of product factors for self-affine transforms.
pub const DEFAULT_MAX_FACTORS: usize = 10_000;

const WEIGHT_SUM_TOL: f64 = 1e-12;

/// A complex value with a rigorous absolute error bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundedComplex {
    pub value: Complex64,
    pub err: f64,
}

impl BoundedComplex {
    pub fn exact(value: Complex64) -> Self {
        BoundedComplex { value, err: 0.0 }
    }

    pub fn norm(&self) -> f64 {
        self.value.norm()
    }

    /// True when the enclosure `value ± err` contains `z`.
    pub fn contains(&self, z: Complex64) -> bool {
        (self.value - z).norm() <= self.err
    }
}

/// Finitely many atoms with positive weights.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AtomicMeasure {
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl AtomicMeasure {
    pub fn new(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        let Some(first) = points.first() else {
            return Err(Error::Shape("atomic measure without atoms".into()));
        };
        let n = first.len();
        if n == 0 {
            return Err(Error::Shape("zero-dimensional atom".into()));
        }
        if let Some(p) = points.iter().find(|p| p.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: p.len(),
            });
        }
        if weights.len() != points.len() {
            return Err(Error::BadWeights(format!(
                "{} weights for {} atoms",
                weights.len(),
                points.len()
            )));
        }
        if let Some(w) = weights.iter().find(|&&w| !(w > 0.0)) {
            return Err(Error::BadWeights(format!("non-positive weight {w}")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::BadWeights(format!("weights sum to {total}")));
        }
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                if points[i] == points[j] {
                    return Err(Error::DuplicatePoints(i, j));
                }
            }
        }
        Ok(AtomicMeasure { points, weights })
    }

    /// Normalized counting measure `δ_A`.
    pub fn uniform(points: Vec<Vec<f64>>) -> Result<Self> {
        let w = 1.0 / points.len().max(1) as f64;
        let weights = vec![w; points.len()];
        Self::new(points, weights)
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }
}

/// Normalized Lebesgue measure on a finite union of closed intervals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalUnion {
    intervals: Vec<(f64, f64)>,
    total: f64,
}

impl IntervalUnion {
    pub fn new(mut intervals: Vec<(f64, f64)>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::BadIntervals("no intervals".into()));
        }
        for &(a, b) in &intervals {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(Error::BadIntervals(format!("[{a}, {b}] is not a proper interval")));
            }
        }
        intervals.sort_by(|x, y| x.0.total_cmp(&y.0));
        for w in intervals.windows(2) {
            if w[1].0 < w[0].1 {
                return Err(Error::BadIntervals(format!(
                    "[{}, {}] overlaps [{}, {}]",
                    w[0].0, w[0].1, w[1].0, w[1].1
                )));
            }
        }
        let total = intervals.iter().map(|(a, b)| b - a).sum();
        Ok(IntervalUnion { intervals, total })
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn total_length(&self) -> f64 {
        self.total
    }

    /// Normalized mass of `[lo, hi]`.
    pub fn measure_of(&self, lo: f64, hi: f64) -> f64 {
        let covered: f64 = self
            .intervals
            .iter()
            .map(|&(a, b)| (b.min(hi) - a.max(lo)).max(0.0))
            .sum();
        covered / self.total
    }

    fn transform(&self, t: f64) -> BoundedComplex {
        let mut acc = ComplexSum::default();
        let mut err = 0.0;
        for &(a, b) in &self.intervals {
            let len = b - a;
            let w = len / self.total;
            // ∫_a^b e^{2πitx} dx = len · e^{πit(a+b)} · sinc(πt·len)
            let z = exp_2pi_i(0.5 * t * (a + b)) * (w * sinc(std::f64::consts::PI * t * len));
            acc.add(z);
            err += w * (8.0 + std::f64::consts::TAU * t.abs() * (a.abs() + b.abs()));
        }
        BoundedComplex {
            value: acc.value(),
            err: err * f64::EPSILON,
        }
    }
}

/// Any measure whose transform this crate can evaluate.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MeasureModel {
    Atomic(AtomicMeasure),
    SelfAffine(AffineIfs),
    LebesgueOnIntervals(IntervalUnion),
}

impl MeasureModel {
    pub fn dim(&self) -> usize {
        match self {
            MeasureModel::Atomic(a) => a.dim(),
            MeasureModel::SelfAffine(ifs) => ifs.dim(),
            MeasureModel::LebesgueOnIntervals(_) => 1,
        }
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self, MeasureModel::Atomic(_))
    }

    pub fn kind(&self) -> &'static str {
        match self {
            MeasureModel::Atomic(_) => "atomic",
            MeasureModel::SelfAffine(_) => "self_affine",
            MeasureModel::LebesgueOnIntervals(_) => "lebesgue_intervals",
        }
    }

    /// `μ̂(t)` with an absolute error bound at most `tol` plus rounding.
    pub fn mu_hat(&self, t: &[f64], tol: f64) -> Result<BoundedComplex> {
        mu_hat_with(self, t, tol, DEFAULT_MAX_FACTORS)
    }
}

impl From<AffineIfs> for MeasureModel {
    fn from(ifs: AffineIfs) -> Self {
        MeasureModel::SelfAffine(ifs)
    }
}

impl From<AtomicMeasure> for MeasureModel {
    fn from(a: AtomicMeasure) -> Self {
        MeasureModel::Atomic(a)
    }
}

impl From<IntervalUnion> for MeasureModel {
    fn from(u: IntervalUnion) -> Self {
        MeasureModel::LebesgueOnIntervals(u)
    }
}

/// `μ̂(t)` with the default factor cap.
pub fn mu_hat(m: &MeasureModel, t: &[f64], tol: f64) -> Result<BoundedComplex> {
    mu_hat_with(m, t, tol, DEFAULT_MAX_FACTORS)
}

/// `μ̂(t)`; self-affine products stop once the tail bound is below `tol`
/// and fail with [`Error::TolUnreachable`] beyond `max_factors` factors.
pub fn mu_hat_with(m: &MeasureModel, t: &[f64], tol: f64, max_factors: usize) -> Result<BoundedComplex> {
    check_tol(tol)?;
    if t.len() != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: m.dim(),
            got: t.len(),
        });
    }
    if t.iter().all(|&x| x == 0.0) {
        return Ok(BoundedComplex::exact(Complex64::new(1.0, 0.0)));
    }
    match m {
        MeasureModel::Atomic(a) => Ok(atomic_transform(a, t)),
        MeasureModel::LebesgueOnIntervals(u) => Ok(u.transform(t[0])),
        MeasureModel::SelfAffine(ifs) => self_affine_transform(ifs, t, tol, max_factors),
    }
}

fn atomic_transform(a: &AtomicMeasure, t: &[f64]) -> BoundedComplex {
    let n = t.len() as f64;
    let mut acc = ComplexSum::default();
    let mut err = 0.0;
    for (p, &w) in a.points.iter().zip(&a.weights) {
        let phase = dot(p, t);
        acc.add(exp_2pi_i(phase) * w);
        err += w * (4.0 + std::f64::consts::TAU * n * phase.abs());
    }
    BoundedComplex {
        value: acc.value(),
        err: err * f64::EPSILON,
    }
}

/// `∏_{k≥1} m_p(S^{-k} t)` truncated at the first `K` with
/// `|P_K| · 2π max|b| · G |S^{-K}t| ≤ tol`, where `G` bounds
/// `Σ_{j≥1} ‖S^{-j}‖`. The bound uses `|1 − m_p(s)| ≤ 2π max|b| |s|` and
/// `|∏a_k − ∏b_k| ≤ Σ|a_k − b_k|` on the unit disk.
fn self_affine_transform(ifs: &AffineIfs, t: &[f64], tol: f64, max_factors: usize) -> Result<BoundedComplex> {
    let g = ifs.contraction()?.tail_factor();
    let lipschitz = std::f64::consts::TAU * ifs.digit_radius();
    let n = t.len() as f64;
    let per_factor = ifs.digit_count() as f64 + 3.0;

    let mut s = t.to_vec();
    let mut next = vec![0.0; s.len()];
    let mut product = Complex64::new(1.0, 0.0);
    let mut rounding = 0.0;
    for k in 0..=max_factors {
        let tail = product.norm() * lipschitz * g * norm(&s);
        if tail <= tol {
            return Ok(BoundedComplex {
                value: product,
                err: tail + rounding,
            });
        }
        if k == max_factors {
            break;
        }
        ifs.s_inv().apply_into(&s, &mut next);
        std::mem::swap(&mut s, &mut next);
        product *= ifs.mask_hat(&s);
        let phase_drift = lipschitz * norm(&s) * (k as f64 + 1.0) * n;
        rounding += f64::EPSILON * (per_factor + phase_drift);
    }
    Err(Error::TolUnreachable { tol, cap: max_factors })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lebesgue01() -> MeasureModel {
        IntervalUnion::new(vec![(0.0, 1.0)]).unwrap().into()
    }

    fn dyadic() -> MeasureModel {
        AffineIfs::equal_weights(&[vec![2.0]], &[vec![0.0], vec![1.0]])
            .unwrap()
            .into()
    }

    /// `(e^{2πit} − 1)/(2πit)`, the transform of Lebesgue measure on [0,1].
    fn lebesgue_closed_form(t: f64) -> Complex64 {
        if t == 0.0 {
            return Complex64::new(1.0, 0.0);
        }
        let i2pt = Complex64::new(0.0, std::f64::consts::TAU * t);
        (i2pt.exp() - 1.0) / i2pt
    }

    #[test]
    fn lebesgue_at_integer_vanishes() {
        let v = lebesgue01().mu_hat(&[3.0], 1e-12).unwrap();
        assert!(v.norm() <= 1e-15);
        assert!(v.err < 1e-13);
    }

    #[test]
    fn dyadic_product_matches_lebesgue() {
        let v = dyadic().mu_hat(&[3.0], 1e-12).unwrap();
        assert!(v.norm() <= 1e-12 + v.err);
        for i in 0..100 {
            let t = -25.0 + 0.5137 * i as f64;
            let v = dyadic().mu_hat(&[t], 1e-12).unwrap();
            let want = lebesgue_closed_form(t);
            assert!((v.value - want).norm() <= v.err + 1e-14, "t={t}");
            assert!(v.err <= 1e-12 + 1e-13);
        }
    }

    #[test]
    fn two_atoms() {
        let m: MeasureModel = AtomicMeasure::uniform(vec![vec![0.0], vec![0.5]]).unwrap().into();
        let v = m.mu_hat(&[1.0], 1e-12).unwrap();
        assert!(v.norm() < 1e-15);
    }

    #[test]
    fn zero_frequency_is_exact() {
        for m in [lebesgue01(), dyadic()] {
            let v = m.mu_hat(&[0.0], 1e-12).unwrap();
            assert_eq!(v.value, Complex64::new(1.0, 0.0));
            assert_eq!(v.err, 0.0);
        }
    }

    #[test]
    fn factor_cap_is_enforced() {
        let slow = AffineIfs::bernoulli(0.999).unwrap().into();
        let err = mu_hat_with(&slow, &[10.0], 1e-12, 50).unwrap_err();
        assert!(matches!(err, Error::TolUnreachable { cap: 50, .. }));
    }

    #[test]
    fn bad_arguments() {
        assert!(matches!(
            lebesgue01().mu_hat(&[1.0, 2.0], 1e-12),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            lebesgue01().mu_hat(&[1.0], 0.0),
            Err(Error::InvalidTolerance(_))
        ));
    }

    #[test]
    fn interval_validation_and_mass() {
        assert!(IntervalUnion::new(vec![(0.0, 2.0), (1.0, 3.0)]).is_err());
        assert!(IntervalUnion::new(vec![(1.0, 1.0)]).is_err());
        let u = IntervalUnion::new(vec![(2.0, 3.0), (0.0, 1.0)]).unwrap();
        assert_eq!(u.intervals()[0], (0.0, 1.0));
        assert_eq!(u.measure_of(0.25, 0.5), 0.125);
        // translation inside the support preserves mass
        assert_eq!(u.measure_of(0.125, 0.375), u.measure_of(2.125, 2.375));
    }

    #[test]
    fn atomic_validation() {
        assert!(matches!(
            AtomicMeasure::new(vec![vec![0.0], vec![0.0]], vec![0.5, 0.5]),
            Err(Error::DuplicatePoints(0, 1))
        ));
        assert!(matches!(
            AtomicMeasure::new(vec![vec![0.0], vec![1.0]], vec![0.5, 0.4]),
            Err(Error::BadWeights(_))
        ));
    }

    #[test]
    fn four_digit_system_matches_interval_union() {
        let digits: Vec<Vec<f64>> = [0.0, 1.0, 8.0, 9.0].iter().map(|&b| vec![b]).collect();
        let ifs: MeasureModel = AffineIfs::equal_weights(&[vec![4.0]], &digits).unwrap().into();
        let leb: MeasureModel = IntervalUnion::new(vec![(0.0, 1.0), (2.0, 3.0)]).unwrap().into();
        for i in 0..50 {
            let t = -7.3 + 0.31 * i as f64;
            let a = ifs.mu_hat(&[t], 1e-12).unwrap();
            let b = leb.mu_hat(&[t], 1e-12).unwrap();
            assert!((a.value - b.value).norm() <= a.err + b.err + 1e-15, "t={t}");
        }
    }
}
