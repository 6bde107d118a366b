use serde::Serialize;

use super::gram::{gram_matrix, orthogonality_of, Orthogonality, OrthogonalityReport};
use super::{difference, transform_tol};
use crate::error::{check_tol, Result};
use crate::measure::MeasureModel;
use crate::par;

/// `h_Λ(t) = Σ_λ |μ̂(t − λ)|²` sampled on a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HProfile {
    pub grid: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub errors: Vec<f64>,
    pub frequencies: usize,
    /// Tolerance each transform was evaluated to.
    pub transform_tol: f64,
}

impl HProfile {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Smallest value and its grid index.
    pub fn min(&self) -> Option<(usize, f64)> {
        argext(&self.values, |a, b| a < b)
    }

    pub fn max(&self) -> Option<(usize, f64)> {
        argext(&self.values, |a, b| a > b)
    }

    pub fn max_err(&self) -> f64 {
        self.errors.iter().copied().fold(0.0, f64::max)
    }
}

fn argext(v: &[f64], better: impl Fn(f64, f64) -> bool) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &x) in v.iter().enumerate() {
        if best.is_none_or(|(_, b)| better(x, b)) {
            best = Some((i, x));
        }
    }
    best
}

/// Each grid point is independent; per-term error is `2|μ̂|·err + err²`.
pub fn h_profile(m: &MeasureModel, freqs: &[Vec<f64>], grid: &[Vec<f64>], tol: f64) -> Result<HProfile> {
    check_tol(tol)?;
    let ttol = transform_tol(tol);
    let points = par::map_slice(grid, |t| -> Result<(f64, f64)> {
        let mut h = 0.0;
        let mut err = 0.0;
        for lambda in freqs {
            let v = m.mu_hat(&difference(t, lambda), ttol)?;
            let a = v.norm();
            h += a * a;
            err += 2.0 * a * v.err + v.err * v.err;
        }
        // rounding in the sum of squares
        err += 2.0 * f64::EPSILON * freqs.len() as f64 * h;
        Ok((h, err))
    });
    let mut values = Vec::with_capacity(grid.len());
    let mut errors = Vec::with_capacity(grid.len());
    for p in points {
        let (h, e) = p?;
        values.push(h);
        errors.push(e);
    }
    Ok(HProfile {
        grid: grid.to_vec(),
        values,
        errors,
        frequencies: freqs.len(),
        transform_tol: ttol,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    NotOrthogonal,
    Orthogonal,
    MaximalCandidate,
    SpectrumCandidate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassifyReport {
    pub verdict: Classification,
    /// Set for verdicts that rest on sampling the grid rather than a proof.
    pub grid_limited: bool,
    pub orthogonality: OrthogonalityReport,
    /// Largest `h_Λ(λ₀)` over `λ₀ ∈ Λ`, read off the Gram rows.
    pub max_h_on_lambda: Option<f64>,
    pub profile: Option<HProfile>,
    pub min_h: Option<f64>,
    pub max_deviation_from_one: Option<f64>,
    pub tol: f64,
}

/// NotOrthogonal when the Gram check fails or some `h(λ₀) > 1 + tol`;
/// otherwise Orthogonal, upgraded to MaximalCandidate when `h > tol` on the
/// whole grid and to SpectrumCandidate when `|h − 1| ≤ tol` on the whole grid.
pub fn classify(m: &MeasureModel, freqs: &[Vec<f64>], grid: &[Vec<f64>], tol: f64) -> Result<ClassifyReport> {
    check_tol(tol)?;
    let gram = gram_matrix(m, freqs, transform_tol(tol))?;
    let orthogonality = orthogonality_of(&gram, freqs, tol);
    let mut row_excess = false;
    let mut max_h = None;
    for i in 0..gram.dim() {
        let (h, e) = gram.row_energy(i);
        row_excess |= h - e > 1.0 + tol;
        max_h = Some(max_h.map_or(h, |x: f64| x.max(h)));
    }
    let mut report = ClassifyReport {
        verdict: Classification::NotOrthogonal,
        grid_limited: false,
        orthogonality,
        max_h_on_lambda: max_h,
        profile: None,
        min_h: None,
        max_deviation_from_one: None,
        tol,
    };
    if report.orthogonality.verdict == Orthogonality::NotOrthogonal || row_excess {
        return Ok(report);
    }

    let profile = h_profile(m, freqs, grid, tol)?;
    report.verdict = Classification::Orthogonal;
    if !profile.is_empty() {
        let pairs = || profile.values.iter().zip(&profile.errors);
        let maximal = pairs().all(|(h, e)| h - e > tol);
        let spectrum = pairs().all(|(h, e)| (h - 1.0).abs() <= tol + e);
        report.min_h = profile.min().map(|(_, h)| h);
        report.max_deviation_from_one = pairs().map(|(h, _)| (h - 1.0).abs()).reduce(f64::max);
        if spectrum && maximal {
            report.verdict = Classification::SpectrumCandidate;
        } else if maximal {
            report.verdict = Classification::MaximalCandidate;
        }
        report.grid_limited = report.verdict > Classification::Orthogonal;
    }
    report.profile = Some(profile);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criteria::{linspace, FrequencySet};
    use crate::measure::{AffineIfs, AtomicMeasure, IntervalUnion};

    fn scalars(v: &[f64]) -> Vec<Vec<f64>> {
        v.iter().map(|&x| vec![x]).collect()
    }

    fn lebesgue01() -> MeasureModel {
        IntervalUnion::new(vec![(0.0, 1.0)]).unwrap().into()
    }

    fn sinc2_partial(t: f64, m: i64) -> f64 {
        (-m..=m)
            .map(|k| {
                let x = std::f64::consts::PI * (t - k as f64);
                if x == 0.0 {
                    1.0
                } else {
                    (x.sin() / x).powi(2)
                }
            })
            .sum()
    }

    #[test]
    fn lebesgue_partial_sums() {
        for m in [1, 4, 16] {
            let freqs: Vec<f64> = (-m..=m).map(|k| k as f64).collect();
            let p = h_profile(&lebesgue01(), &scalars(&freqs), &[vec![0.5]], 1e-12).unwrap();
            let oracle = sinc2_partial(0.5, m);
            assert!((p.values[0] - oracle).abs() < 1e-13);
            assert!(p.values[0] < 1.0);
        }
    }

    #[test]
    fn empty_set_gives_zero() {
        let p = h_profile(&lebesgue01(), &[], &[vec![0.1], vec![0.7]], 1e-12).unwrap();
        assert_eq!(p.values, vec![0.0, 0.0]);
    }

    #[test]
    fn gamma_at_zero_is_one() {
        let m = AffineIfs::bernoulli(0.25).unwrap().into();
        for level in 0..6 {
            let freqs = FrequencySet::digit_expansion(4, vec![0, 1], level)
                .unwrap()
                .expand()
                .unwrap();
            let p = h_profile(&m, &freqs, &[vec![0.0]], 1e-10).unwrap();
            assert_eq!(p.values[0], 1.0);
        }
    }

    #[test]
    fn two_atom_pair_is_spectrum_candidate() {
        let m = AtomicMeasure::uniform(vec![vec![0.0], vec![0.5]]).unwrap().into();
        let grid = scalars(&linspace(-1.0, 1.0, 41));
        let r = classify(&m, &scalars(&[0.0, 1.0]), &grid, 1e-12).unwrap();
        assert_eq!(r.verdict, Classification::SpectrumCandidate);
        assert!(r.grid_limited);
    }

    #[test]
    fn single_frequency_is_not_maximal() {
        let m = AffineIfs::bernoulli(0.25).unwrap().into();
        let r = classify(&m, &[vec![0.0]], &[vec![0.5], vec![1.0]], 1e-10).unwrap();
        assert_eq!(r.verdict, Classification::Orthogonal);
        assert!(!r.grid_limited);
        let p = r.profile.unwrap();
        assert!(p.values[1] <= p.errors[1]);
    }

    #[test]
    fn truncated_integers_are_maximal_not_complete() {
        let freqs: Vec<f64> = (-20..=20).map(|k| k as f64).collect();
        let grid = scalars(&linspace(0.0, 1.0, 64));
        let r = classify(&lebesgue01(), &scalars(&freqs), &grid, 1e-10).unwrap();
        assert_eq!(r.verdict, Classification::MaximalCandidate);
        assert!(r.max_deviation_from_one.unwrap() > 1e-3);
    }

    #[test]
    fn overlapping_frequencies_fail() {
        let r = classify(&lebesgue01(), &scalars(&[0.0, 0.5]), &[vec![0.0]], 1e-10).unwrap();
        assert_eq!(r.verdict, Classification::NotOrthogonal);
        assert!(r.orthogonality.witness.is_some());
        assert!(r.max_h_on_lambda.unwrap() > 1.0);
    }

    #[test]
    fn unequal_atom_weights_are_not_spectrum_candidates() {
        let m = AtomicMeasure::new(vec![vec![0.0], vec![0.5]], vec![0.4, 0.6])
            .unwrap()
            .into();
        let grid = scalars(&linspace(0.0, 1.0, 17));
        let r = classify(&m, &scalars(&[0.0, 1.0]), &grid, 1e-12).unwrap();
        assert!(r.verdict < Classification::SpectrumCandidate);
    }
}
