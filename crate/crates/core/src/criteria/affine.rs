use std::collections::HashMap;

use serde::Serialize;

use super::{transform_tol, FrequencySet};
use crate::error::{check_tol, Error, Result};
use crate::measure::{AffineIfs, BoundedComplex, MeasureModel};
use crate::numeric::{exp_2pi_i, Complex64, ComplexSum};
use crate::par;

/// Residual of the cross identity at one sample pair and one ordered digit pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairResidual {
    pub sample: usize,
    pub b: usize,
    pub b_prime: usize,
    pub residual: f64,
    pub err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityLevel {
    pub level: usize,
    pub size: usize,
    /// `Σ_λ |μ̂(t − S⁻¹λ)|²` per sample.
    pub partial_sums: Vec<f64>,
    pub partial_sum_errs: Vec<f64>,
    pub residuals: Vec<PairResidual>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AffineIdentityReport {
    pub digits: usize,
    pub tol: f64,
    pub levels: Vec<IdentityLevel>,
    /// Every partial sum is at most `N + tol + err`.
    pub bounded: bool,
    /// Partial sums never drop from one level to the next beyond their errors.
    pub monotone: bool,
    /// Every cross residual is no larger than at the previous level, up to errors.
    pub residuals_monotone: bool,
}

/// Evaluates, for each truncation level of `Λ` and each sample `(t, t′)`,
///
/// * `Σ_λ |μ̂(t − S⁻¹λ)|²`, which equals `N` for a spectrum, and
/// * `|Σ_λ e^{−2πi S⁻¹λ·(b−b′)} e^{2πi(t·b − t′·b′)} μ̂(t − S⁻¹λ) conj μ̂(t′ − S⁻¹λ)|`
///   for every ordered `b ≠ b′`, which vanishes for a spectrum.
///
/// Requires equal weights.
pub fn check_affine_identities(
    ifs: &AffineIfs,
    set: &FrequencySet,
    samples: &[(Vec<f64>, Vec<f64>)],
    tol: f64,
) -> Result<AffineIdentityReport> {
    check_tol(tol)?;
    if !ifs.has_equal_weights() {
        return Err(Error::UnequalWeights);
    }
    let n = ifs.dim();
    if set.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: set.dim(),
        });
    }
    for (t, u) in samples {
        if t.len() != n || u.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: t.len().max(u.len()),
            });
        }
    }
    let ttol = transform_tol(tol);
    let model = MeasureModel::from(ifs.clone());
    let digits = ifs.digits();
    let nd = digits.len();

    let top = set.expand()?;
    let shifted: Vec<Vec<f64>> = top.iter().map(|l| ifs.s_inv().apply(l)).collect();
    // transforms at t − S⁻¹λ and t′ − S⁻¹λ for every sample, keyed by λ
    let table = par::map_slice(&shifted, |sl| -> Result<Vec<(BoundedComplex, BoundedComplex)>> {
        samples
            .iter()
            .map(|(t, u)| {
                let a: Vec<f64> = t.iter().zip(sl).map(|(x, y)| x - y).collect();
                let b: Vec<f64> = u.iter().zip(sl).map(|(x, y)| x - y).collect();
                Ok((model.mu_hat(&a, ttol)?, model.mu_hat(&b, ttol)?))
            })
            .collect()
    });
    let mut lookup: HashMap<Vec<u64>, usize> = HashMap::with_capacity(top.len());
    let mut values = Vec::with_capacity(top.len());
    for (i, (l, row)) in top.iter().zip(table).enumerate() {
        lookup.insert(key(l), i);
        values.push(row?);
    }

    let mut levels = Vec::new();
    for (level, sub) in set.levels().iter().enumerate() {
        let lambdas = sub.expand()?;
        let idx: Vec<usize> = lambdas.iter().map(|l| lookup[&key(l)]).collect();
        let mut partial_sums = Vec::with_capacity(samples.len());
        let mut partial_sum_errs = Vec::with_capacity(samples.len());
        let mut residuals = Vec::new();
        for (s, (t, u)) in samples.iter().enumerate() {
            let mut h = 0.0;
            let mut he = 0.0;
            for &i in &idx {
                let v = &values[i][s].0;
                let a = v.norm();
                h += a * a;
                he += 2.0 * a * v.err + v.err * v.err;
            }
            partial_sums.push(h);
            partial_sum_errs.push(he + 2.0 * f64::EPSILON * idx.len() as f64 * h);

            for b in 0..nd {
                for bp in 0..nd {
                    if b == bp {
                        continue;
                    }
                    let db: Vec<f64> = digits[b].iter().zip(&digits[bp]).map(|(x, y)| x - y).collect();
                    let outer = exp_2pi_i(dot(t, &digits[b]) - dot(u, &digits[bp]));
                    let mut sum = ComplexSum::default();
                    let mut err = 0.0;
                    for &i in &idx {
                        let phase = exp_2pi_i(-dot(&shifted[i], &db));
                        let (x, y) = &values[i][s];
                        sum.add(phase * x.value * y.value.conj());
                        err += x.norm() * y.err + y.norm() * x.err + x.err * y.err;
                    }
                    let total: Complex64 = outer * sum.value();
                    residuals.push(PairResidual {
                        sample: s,
                        b,
                        b_prime: bp,
                        residual: total.norm(),
                        err: err + 4.0 * f64::EPSILON * idx.len() as f64,
                    });
                }
            }
        }
        levels.push(IdentityLevel {
            level,
            size: lambdas.len(),
            partial_sums,
            partial_sum_errs,
            residuals,
        });
    }

    let cap = nd as f64;
    let bounded = levels.iter().all(|l| {
        l.partial_sums
            .iter()
            .zip(&l.partial_sum_errs)
            .all(|(h, e)| *h <= cap + tol + e)
    });
    let monotone = levels.windows(2).all(|w| {
        (0..samples.len()).all(|s| {
            w[1].partial_sums[s] + w[1].partial_sum_errs[s] + w[0].partial_sum_errs[s] + tol >= w[0].partial_sums[s]
        })
    });
    let residuals_monotone = levels.windows(2).all(|w| {
        w[0].residuals
            .iter()
            .zip(&w[1].residuals)
            .all(|(a, b)| b.residual <= a.residual + a.err + b.err)
    });
    Ok(AffineIdentityReport {
        digits: nd,
        tol,
        levels,
        bounded,
        monotone,
        residuals_monotone,
    })
}

fn key(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
