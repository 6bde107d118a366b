use nalgebra::DMatrix;
use serde::Serialize;

use super::{difference, transform_tol};
use crate::error::{check_tol, Error, Result};
use crate::measure::MeasureModel;
use crate::numeric::Complex64;
use crate::par;

/// Hermitian Gram matrix `G[i][j] = μ̂(λ_i − λ_j)` with per-entry error bounds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GramMatrix {
    n: usize,
    values: Vec<Complex64>,
    errors: Vec<f64>,
}

impl GramMatrix {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.values[i * self.n + j]
    }

    pub fn err(&self, i: usize, j: usize) -> f64 {
        self.errors[i * self.n + j]
    }

    pub fn max_err(&self) -> f64 {
        self.errors.iter().copied().fold(0.0, f64::max)
    }

    /// `Σ_j |G[i][j]|²`, i.e. `h_Λ(λ_i)`, with its error bound.
    pub fn row_energy(&self, i: usize) -> (f64, f64) {
        (0..self.n).fold((0.0, 0.0), |(h, e), j| {
            let (v, d) = (self.get(i, j).norm(), self.err(i, j));
            (h + v * v, e + 2.0 * v * d + d * d)
        })
    }

    pub fn to_dmatrix(&self) -> DMatrix<Complex64> {
        DMatrix::from_row_slice(self.n, self.n, &self.values)
    }
}

/// Upper triangle evaluated in parallel, lower triangle mirrored by conjugation.
pub fn gram_matrix(m: &MeasureModel, freqs: &[Vec<f64>], tol: f64) -> Result<GramMatrix> {
    check_tol(tol)?;
    let n = freqs.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let entries = par::map_slice(&pairs, |&(i, j)| m.mu_hat(&difference(&freqs[i], &freqs[j]), tol));

    let mut values = vec![Complex64::new(0.0, 0.0); n * n];
    let mut errors = vec![0.0; n * n];
    for i in 0..n {
        values[i * n + i] = Complex64::new(1.0, 0.0);
    }
    for (&(i, j), entry) in pairs.iter().zip(entries) {
        let e = entry?;
        values[i * n + j] = e.value;
        values[j * n + i] = e.value.conj();
        errors[i * n + j] = e.err;
        errors[j * n + i] = e.err;
    }
    Ok(GramMatrix { n, values, errors })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Orthogonality {
    Orthogonal,
    NotOrthogonal,
}

/// A pair `(λ_i, λ_j)` with `|μ̂(λ_i − λ_j)| > tol + err`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub i: usize,
    pub j: usize,
    pub lambda_i: Vec<f64>,
    pub lambda_j: Vec<f64>,
    pub magnitude: f64,
    pub err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrthogonalityReport {
    pub size: usize,
    pub tol: f64,
    pub max_off_diagonal: f64,
    pub max_pair: Option<(usize, usize)>,
    pub max_entry_err: f64,
    pub witness: Option<Witness>,
    pub verdict: Orthogonality,
}

/// Orthogonal iff every off-diagonal `|G[i][j]| ≤ tol + err[i][j]`. On
/// failure the witness is the pair with the largest excess.
pub fn check_orthogonal(m: &MeasureModel, freqs: &[Vec<f64>], tol: f64) -> Result<OrthogonalityReport> {
    let gram = gram_matrix(m, freqs, transform_tol(tol))?;
    Ok(orthogonality_of(&gram, freqs, tol))
}

pub(crate) fn orthogonality_of(gram: &GramMatrix, freqs: &[Vec<f64>], tol: f64) -> OrthogonalityReport {
    let n = gram.dim();
    let mut max_off = 0.0;
    let mut max_pair = None;
    let mut worst: Option<(f64, usize, usize)> = None;
    for i in 0..n {
        for j in i + 1..n {
            let v = gram.get(i, j).norm();
            if max_pair.is_none() || v > max_off {
                max_off = v;
                max_pair = Some((i, j));
            }
            let excess = v - tol - gram.err(i, j);
            if excess > 0.0 && worst.is_none_or(|(w, _, _)| excess > w) {
                worst = Some((excess, i, j));
            }
        }
    }
    let witness = worst.map(|(_, i, j)| Witness {
        i,
        j,
        lambda_i: freqs[i].clone(),
        lambda_j: freqs[j].clone(),
        magnitude: gram.get(i, j).norm(),
        err: gram.err(i, j),
    });
    OrthogonalityReport {
        size: n,
        tol,
        max_off_diagonal: max_off,
        max_pair,
        max_entry_err: gram.max_err(),
        verdict: if witness.is_some() {
            Orthogonality::NotOrthogonal
        } else {
            Orthogonality::Orthogonal
        },
        witness,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GramSpectrum {
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    pub nonsingular: bool,
}

/// Smallest Gram eigenvalue against `tol`, for measures without atoms.
pub fn gram_nonsingular(m: &MeasureModel, freqs: &[Vec<f64>], tol: f64) -> Result<GramSpectrum> {
    if m.is_atomic() {
        return Err(Error::InvalidInput(
            "nonsingularity check expects a measure without atoms".into(),
        ));
    }
    let gram = gram_matrix(m, freqs, transform_tol(tol))?;
    let (min, max) = eigen_range(&gram);
    Ok(GramSpectrum {
        min_eigenvalue: min,
        max_eigenvalue: max,
        nonsingular: min > tol,
    })
}

pub(crate) fn eigen_range(gram: &GramMatrix) -> (f64, f64) {
    if gram.dim() == 0 {
        return (f64::INFINITY, f64::NEG_INFINITY);
    }
    let eig = gram.to_dmatrix().symmetric_eigenvalues();
    (eig.min(), eig.max())
}
