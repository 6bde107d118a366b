//! Finite sets and their spectra: Hadamard checks, spectrum search, the
//! local-translation group `U(t)` and recovery of `Λ` from its eigenphases.

mod group;
mod pair;
mod search;

pub use group::{
    c_function_checks, recover_spectrum_from_group, verify_group_axioms, CFunction, CFunctionReport, GroupReport,
    LocalTranslationGroup, RecoveredSpectrum, RECOVERY_SEED,
};
pub use pair::{
    decomposition_check, is_spectral_pair, period_lattice_membership, DecompositionReport, PairCertificate,
};
pub use search::{search_spectrum, SearchOptions, SearchResult, MAX_DENOMINATOR};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::Scalar;

/// `N ≥ 1` distinct points of `ℝⁿ`, with exact coordinates where available.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiniteSet {
    points: Vec<Vec<Scalar>>,
    #[serde(skip)]
    values: Vec<Vec<f64>>,
}

impl FiniteSet {
    pub fn new(points: Vec<Vec<Scalar>>) -> Result<Self> {
        let Some(first) = points.first() else {
            return Err(Error::InvalidInput("a finite set needs at least one point".into()));
        };
        let dim = first.len();
        if dim == 0 {
            return Err(Error::Shape("points must have at least one coordinate".into()));
        }
        if let Some(p) = points.iter().find(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: p.len(),
            });
        }
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                if same_point(&points[i], &points[j]) {
                    return Err(Error::DuplicatePoints(i, j));
                }
            }
        }
        let values = points.iter().map(|p| p.iter().map(Scalar::value).collect()).collect();
        Ok(FiniteSet { points, values })
    }

    /// Floating-point coordinates, treated as inexact.
    pub fn from_f64(points: &[Vec<f64>]) -> Result<Self> {
        Self::new(
            points
                .iter()
                .map(|p| p.iter().map(|&x| Scalar::approx(x)).collect())
                .collect(),
        )
    }

    /// One-dimensional points.
    pub fn scalars(points: Vec<Scalar>) -> Result<Self> {
        Self::new(points.into_iter().map(|p| vec![p]).collect())
    }

    /// One-dimensional exact points `num/den`.
    pub fn ratios(points: &[(i64, i64)]) -> Result<Self> {
        Self::scalars(points.iter().map(|&(n, d)| Scalar::ratio(n, d)).collect())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn points(&self) -> &[Vec<Scalar>] {
        &self.points
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn is_exact(&self) -> bool {
        self.points.iter().flatten().all(Scalar::is_exact)
    }

    pub fn contains_origin(&self) -> bool {
        self.points.iter().any(|p| {
            p.iter().all(|x| match x.as_rational() {
                Some(r) => num_traits::Zero::is_zero(r),
                None => x.value() == 0.0,
            })
        })
    }
}

fn same_point(a: &[Scalar], b: &[Scalar]) -> bool {
    a.iter().zip(b).all(|(x, y)| match (x.as_rational(), y.as_rational()) {
        (Some(p), Some(q)) => p == q,
        _ => x.value() == y.value(),
    })
}
