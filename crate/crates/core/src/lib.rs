//! Fourier analysis of atomic, interval and self-affine measures, with
//! mechanical checks of spectral-pair criteria.
//!
//! * [`measure`]: measures, transforms with error bounds, chaos-game sampling.
//! * [`criteria`]: Gram matrices, orthogonality, the `h_Λ` profile, affine identities.
//! * [`atomic`]: finite spectral sets, spectrum search, local translation groups.
//! * [`overlap`]: overlap detection and non-spectrality certificates for IFSs.
//! * [`bernoulli`]: Bernoulli convolutions, the digit spectrum `Γ`, exact zero certificates.
//! * [`bohr`]: Bohr means of trigonometric polynomials and the embedding into `L²(G)`.
//! * [`io`]: JSON descriptions of measures, frequency sets and polynomials.

pub mod atomic;
pub mod bernoulli;
pub mod bohr;
pub mod criteria;
pub mod error;
pub mod io;
pub mod measure;
pub mod numeric;
pub mod overlap;
pub mod par;

pub use error::{Error, Result};
pub use measure::{mu_hat, AffineIfs, AtomicMeasure, BoundedComplex, IntervalUnion, MeasureModel};
pub use numeric::{Complex64, Rational, Scalar};
