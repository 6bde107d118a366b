//! Orthogonality, maximality and completeness criteria for exponential
//! families `{e_λ : λ ∈ Λ}` in `L²(μ)`.
//!
//! Gram entries are `⟨e_λ, e_λ'⟩ = μ̂(λ − λ')`; the profile
//! `h_Λ(t) = Σ_λ |μ̂(t − λ)|²` is at most 1 for orthogonal families, positive
//! for maximal ones and identically 1 for spectra. Only orthogonality failures
//! are definitive; the maximal and spectrum verdicts are limited to the grid.

mod affine;
mod frequency;
mod gram;
mod profile;

pub use affine::{check_affine_identities, AffineIdentityReport, IdentityLevel, PairResidual};
pub use frequency::{cartesian, default_grid, linspace, FrequencySet, DEFAULT_EXPANSION_CAP};
pub use gram::{
    check_orthogonal, gram_matrix, gram_nonsingular, GramMatrix, GramSpectrum, Orthogonality, OrthogonalityReport,
    Witness,
};
pub use profile::{classify, h_profile, Classification, ClassifyReport, HProfile};

/// Threshold for structural (rounding-only) checks.
pub const STRUCTURAL_TOL: f64 = 1e-12;

/// Threshold for checks that involve truncated products.
pub const TRUNCATION_TOL: f64 = 1e-10;

/// Transforms behind a check at tolerance `tol` are evaluated to `tol / 100`.
pub(crate) fn transform_tol(tol: f64) -> f64 {
    tol * 1e-2
}

pub(crate) fn difference(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}
