use serde::Serialize;

use super::FiniteSet;
use crate::error::{check_tol, Error, Result};
use crate::measure::AffineIfs;
use crate::numeric::{exact_dot, exp_2pi_i, exp_2pi_i_rational, is_integer, Complex64, ComplexSum, Rational, Scalar};

/// Tolerance for membership tests on inexact inputs.
const LATTICE_TOL: f64 = 1e-12;

/// `a·λ`, exact when both sides are.
#[derive(Debug, Clone)]
pub(crate) enum Phase {
    Exact(Rational),
    Approx(f64),
}

impl Phase {
    pub(crate) fn of(a: &[Scalar], lambda: &[Scalar]) -> Self {
        match exact_dot(a, lambda) {
            Some(r) => Phase::Exact(r),
            None => Phase::Approx(a.iter().zip(lambda).map(|(x, y)| x.value() * y.value()).sum()),
        }
    }

    /// `e^{2πi(self − other)}`, reducing exactly when possible.
    pub(crate) fn exp_diff(&self, other: &Phase) -> Complex64 {
        match (self, other) {
            (Phase::Exact(p), Phase::Exact(q)) => exp_2pi_i_rational(&(p - q)),
            _ => exp_2pi_i(self.approx() - other.approx()),
        }
    }

    fn approx(&self) -> f64 {
        match self {
            Phase::Exact(r) => crate::numeric::rational_to_f64(r),
            Phase::Approx(x) => *x,
        }
    }
}

/// Evidence for or against `(1/√N)(e^{2πi a·λ})` being unitary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairCertificate {
    pub size: usize,
    pub is_pair: bool,
    /// Largest `|(1/N) Σ_a e^{2πi a·(λ − λ′)}|` over `λ ≠ λ′`.
    pub max_column_defect: f64,
    pub column_pair: Option<(usize, usize)>,
    /// Largest `|(1/N) Σ_λ e^{2πi (a − a′)·λ}|` over `a ≠ a′`.
    pub max_row_defect: f64,
    pub row_pair: Option<(usize, usize)>,
    /// All phases were reduced in exact rational arithmetic.
    pub exact: bool,
    pub tol: f64,
}

/// `(A, Λ)` is a spectral pair iff the column inner products all vanish
/// within `tol`. Exact inputs have their phases reduced mod 1 exactly and
/// summed with compensation.
pub fn is_spectral_pair(a: &FiniteSet, lambda: &FiniteSet, tol: f64) -> Result<PairCertificate> {
    check_tol(tol)?;
    if a.len() != lambda.len() {
        return Err(Error::SizeMismatch {
            points: a.len(),
            frequencies: lambda.len(),
        });
    }
    if a.dim() != lambda.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: lambda.dim(),
        });
    }
    let n = a.len();
    let table: Vec<Vec<Phase>> = a
        .points()
        .iter()
        .map(|p| lambda.points().iter().map(|l| Phase::of(p, l)).collect())
        .collect();

    let inner = |pairs: &mut dyn Iterator<Item = (&Phase, &Phase)>| {
        let mut s = ComplexSum::default();
        for (p, q) in pairs {
            s.add(p.exp_diff(q));
        }
        s.value().norm() / n as f64
    };
    let (mut col, mut col_pair) = (0.0, None);
    for j in 0..n {
        for k in j + 1..n {
            let v = inner(&mut table.iter().map(|row| (&row[j], &row[k])));
            if col_pair.is_none() || v > col {
                (col, col_pair) = (v, Some((j, k)));
            }
        }
    }
    let (mut row, mut row_pair) = (0.0, None);
    for i in 0..n {
        for k in i + 1..n {
            let v = inner(&mut table[i].iter().zip(&table[k]));
            if row_pair.is_none() || v > row {
                (row, row_pair) = (v, Some((i, k)));
            }
        }
    }
    Ok(PairCertificate {
        size: n,
        is_pair: col <= tol,
        max_column_defect: col,
        column_pair: col_pair,
        max_row_defect: row,
        row_pair,
        exact: a.is_exact() && lambda.is_exact(),
        tol,
    })
}

/// `p ∈ Per(δ̂_B)`, characterised as `b·p ∈ ℤ` for every `b ∈ B`. Exact for
/// rational inputs, otherwise within `1e−12`. Requires `0 ∈ B`.
pub fn period_lattice_membership(b: &FiniteSet, p: &[Scalar]) -> Result<bool> {
    if p.len() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: b.dim(),
            got: p.len(),
        });
    }
    if !b.contains_origin() {
        return Err(Error::InvalidInput("digit set must contain 0".into()));
    }
    Ok(b.points().iter().all(|d| match exact_dot(d, p) {
        Some(r) => is_integer(&r),
        None => {
            let x: f64 = d.iter().zip(p).map(|(u, v)| u.value() * v.value()).sum();
            (x - x.round()).abs() <= LATTICE_TOL
        }
    }))
}

/// Checks of a decomposition `Λ = ⋃ (a_i + SΛ_i)` with `Λ_i ⊂ Per(δ̂_B)`:
/// whether `p = N` and `{S⁻¹a_i}` is a spectrum for `δ_B`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompositionReport {
    pub parts: usize,
    pub digits: usize,
    pub count_matches: bool,
    /// Per part, whether every element lies in the period lattice.
    pub periodic: Vec<bool>,
    pub disjoint: bool,
    pub pair: Option<PairCertificate>,
    pub holds: bool,
}

pub fn decomposition_check(
    ifs: &AffineIfs,
    offsets: &[Vec<f64>],
    parts: &[Vec<Vec<f64>>],
    tol: f64,
) -> Result<DecompositionReport> {
    check_tol(tol)?;
    if offsets.len() != parts.len() {
        return Err(Error::InvalidInput(format!(
            "{} offsets for {} parts",
            offsets.len(),
            parts.len()
        )));
    }
    let dim = ifs.dim();
    if let Some(v) = offsets.iter().chain(parts.iter().flatten()).find(|v| v.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: v.len(),
        });
    }
    let digits = FiniteSet::new(
        ifs.digits()
            .iter()
            .map(|d| d.iter().map(|&x| Scalar::from(x)).collect())
            .collect(),
    )?;
    let periodic = parts
        .iter()
        .map(|part| -> Result<bool> {
            for l in part {
                let p: Vec<Scalar> = l.iter().map(|&x| Scalar::from(x)).collect();
                if !period_lattice_membership(&digits, &p)? {
                    return Ok(false);
                }
            }
            Ok(true)
        })
        .collect::<Result<Vec<_>>>()?;

    let s = ifs.s();
    let mut union: Vec<Vec<f64>> = Vec::new();
    for (a, part) in offsets.iter().zip(parts) {
        for l in part {
            union.push(a.iter().zip(s.apply(l)).map(|(x, y)| x + y).collect());
        }
    }
    let disjoint = (0..union.len()).all(|i| {
        (i + 1..union.len()).all(|j| union[i].iter().zip(&union[j]).any(|(x, y)| (x - y).abs() > LATTICE_TOL))
    });

    let count_matches = offsets.len() == digits.len();
    let pair = if count_matches && !offsets.is_empty() {
        let reduced = FiniteSet::new(
            offsets
                .iter()
                .map(|a| ifs.s_inv().apply(a).into_iter().map(Scalar::from).collect())
                .collect(),
        )?;
        Some(is_spectral_pair(&digits, &reduced, tol)?)
    } else {
        None
    };
    let holds = count_matches && disjoint && periodic.iter().all(|&p| p) && pair.as_ref().is_some_and(|c| c.is_pair);
    Ok(DecompositionReport {
        parts: offsets.len(),
        digits: digits.len(),
        count_matches,
        periodic,
        disjoint,
        pair,
        holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[(i64, i64)]) -> FiniteSet {
        FiniteSet::ratios(v).unwrap()
    }

    #[test]
    fn hadamard_pairs() {
        let c = is_spectral_pair(&set(&[(0, 1), (1, 2)]), &set(&[(0, 1), (1, 1)]), 1e-12).unwrap();
        assert!(c.is_pair && c.exact);
        assert_eq!(c.max_column_defect, 0.0);
        let c = is_spectral_pair(&set(&[(0, 1), (1, 3), (2, 3)]), &set(&[(0, 1), (1, 1), (2, 1)]), 1e-12).unwrap();
        assert!(c.is_pair);
        assert!(c.max_row_defect <= 1e-15);
    }

    #[test]
    fn perturbed_frequency_fails_with_two_term_certificate() {
        let c = is_spectral_pair(&set(&[(0, 1), (1, 2)]), &set(&[(0, 1), (101, 100)]), 1e-12).unwrap();
        assert!(!c.is_pair);
        // |1 + e^{2πi·(1/2)·1.01}| / 2
        let oracle = (Complex64::new(1.0, 0.0) + Complex64::from_polar(1.0, std::f64::consts::PI * 1.01)).norm() / 2.0;
        assert!((c.max_column_defect - oracle).abs() < 1e-15);
        assert!((oracle - (0.005 * std::f64::consts::PI).sin()).abs() < 1e-15);
    }

    #[test]
    fn size_mismatch() {
        let r = is_spectral_pair(&set(&[(0, 1)]), &set(&[(0, 1), (1, 1)]), 1e-12);
        assert!(matches!(r, Err(Error::SizeMismatch { .. })));
    }

    #[test]
    fn period_lattice() {
        let b = set(&[(0, 1), (1, 1)]);
        assert!(period_lattice_membership(&b, &[Scalar::integer(1)]).unwrap());
        assert!(!period_lattice_membership(&b, &[Scalar::ratio(1, 2)]).unwrap());
        let b = set(&[(0, 1), (1, 1), (8, 1), (9, 1)]);
        assert!(period_lattice_membership(&b, &[Scalar::integer(1)]).unwrap());
        let no_origin = set(&[(1, 1), (2, 1)]);
        assert!(period_lattice_membership(&no_origin, &[Scalar::integer(1)]).is_err());
    }

    #[test]
    fn quaternary_decomposition() {
        // R = 4, B = {0, 2} has spectrum Γ = {0, 1} + 4Γ; parts are truncations of Γ
        let ifs = AffineIfs::equal_weights(&[vec![4.0]], &[vec![0.0], vec![2.0]]).unwrap();
        let part: Vec<Vec<f64>> = vec![vec![0.0], vec![1.0], vec![4.0], vec![5.0]];
        let r = decomposition_check(&ifs, &[vec![0.0], vec![1.0]], &[part.clone(), part.clone()], 1e-12).unwrap();
        assert!(r.count_matches && r.disjoint);
        assert!(r.periodic.iter().all(|&p| p));
        assert!(r.pair.as_ref().unwrap().is_pair);
        assert!(r.holds);

        let r = decomposition_check(&ifs, &[vec![0.0], vec![2.0]], &[part.clone(), part], 1e-12).unwrap();
        assert!(!r.holds);
    }
}
