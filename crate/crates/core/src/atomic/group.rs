use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::pair::{is_spectral_pair, PairCertificate};
use super::FiniteSet;
use crate::error::{check_tol, Error, Result};
use crate::numeric::{exp_2pi_i, snap_rational, Complex64, ComplexSum, Scalar, TWO_PI};

/// Seed of the random Hermitian combination used for simultaneous
/// diagonalisation.
pub const RECOVERY_SEED: u64 = 0x5eed_cafe;

/// Gate used when building a group from a candidate pair.
const PAIR_TOL: f64 = 1e-10;

/// Eigenvalue gap below which recovery refuses to separate eigenvectors.
const DEGENERACY_GAP: f64 = 1e-8;

/// `c(t) = (1/N) Σ_λ e^{2πi λ·t}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CFunction {
    lambda: Vec<Vec<f64>>,
}

impl CFunction {
    pub fn new(lambda: &FiniteSet) -> Self {
        CFunction {
            lambda: lambda.values().to_vec(),
        }
    }

    pub fn eval(&self, t: &[f64]) -> Complex64 {
        let mut s = ComplexSum::default();
        for l in &self.lambda {
            s.add(exp_2pi_i(l.iter().zip(t).map(|(x, y)| x * y).sum()));
        }
        s.value() / self.lambda.len() as f64
    }
}

/// The unitary group of a spectral pair `(A, Λ)`.
///
/// [`matrix`](Self::matrix) is the table `U(t)[a][a′] = c(t + a′ − a)`; it
/// sends the row of `a` to the row of `a′` at `t = a − a′`. The operator on
/// value vectors `f ∈ ℂ^A` is its transpose, which has the exponentials
/// `e_λ|_A` as eigenvectors with eigenvalues `e_λ(t)`.
#[derive(Debug, Clone)]
pub struct LocalTranslationGroup {
    a: FiniteSet,
    lambda: FiniteSet,
    c: CFunction,
    certificate: PairCertificate,
}

impl LocalTranslationGroup {
    pub fn new(a: &FiniteSet, lambda: &FiniteSet) -> Result<Self> {
        let certificate = is_spectral_pair(a, lambda, PAIR_TOL)?;
        if !certificate.is_pair {
            return Err(Error::NotSpectralPair {
                defect: certificate.max_column_defect,
            });
        }
        Ok(LocalTranslationGroup {
            a: a.clone(),
            lambda: lambda.clone(),
            c: CFunction::new(lambda),
            certificate,
        })
    }

    pub fn points(&self) -> &FiniteSet {
        &self.a
    }

    pub fn spectrum(&self) -> &FiniteSet {
        &self.lambda
    }

    pub fn c(&self) -> &CFunction {
        &self.c
    }

    pub fn certificate(&self) -> &PairCertificate {
        &self.certificate
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    pub fn matrix(&self, t: &[f64]) -> DMatrix<Complex64> {
        let pts = self.a.values();
        let n = pts.len();
        DMatrix::from_fn(n, n, |i, j| {
            let arg: Vec<f64> = t
                .iter()
                .zip(&pts[j])
                .zip(&pts[i])
                .map(|((t, x), y)| t + x - y)
                .collect();
            self.c.eval(&arg)
        })
    }

    pub fn operator(&self, t: &[f64]) -> DMatrix<Complex64> {
        self.matrix(t).transpose()
    }

    /// `e_λ` restricted to `A`.
    pub fn exponential(&self, k: usize) -> Vec<Complex64> {
        let l = &self.lambda.values()[k];
        self.a
            .values()
            .iter()
            .map(|p| exp_2pi_i(p.iter().zip(l).map(|(x, y)| x * y).sum()))
            .collect()
    }
}

fn frobenius(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupReport {
    pub samples: usize,
    pub identity: f64,
    /// Max Frobenius norm of `U(s+t) − U(s)U(t)`.
    pub homomorphism: f64,
    pub unitarity: f64,
    /// Max over atom pairs of the residual of `U(a − a′)` moving `a` to `a′`.
    pub atom_transfer: f64,
    /// Max residual of the eigen relation `U(t)e_λ = e_λ(t)e_λ`.
    pub eigen: f64,
    pub tol: f64,
    pub passed: bool,
}

/// Group axioms of `U` over sampled `(s, t)`.
pub fn verify_group_axioms(
    g: &LocalTranslationGroup,
    samples: &[(Vec<f64>, Vec<f64>)],
    tol: f64,
) -> Result<GroupReport> {
    check_tol(tol)?;
    let n = g.a.len();
    let dim = g.dim();
    let ident = DMatrix::<Complex64>::identity(n, n);
    let identity = frobenius(&(g.matrix(&vec![0.0; dim]) - &ident));

    let pts = g.a.values();
    let mut atom_transfer: f64 = 0.0;
    for (i, a) in pts.iter().enumerate() {
        for (j, b) in pts.iter().enumerate() {
            let t: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
            let mut chi = nalgebra::DVector::<Complex64>::zeros(n);
            chi[i] = Complex64::new(1.0, 0.0);
            let moved = g.operator(&t) * chi;
            let mut want = nalgebra::DVector::<Complex64>::zeros(n);
            want[j] = Complex64::new(1.0, 0.0);
            atom_transfer = atom_transfer.max((moved - want).norm());
        }
    }

    let (mut homomorphism, mut unitarity, mut eigen) = (0.0f64, 0.0f64, 0.0f64);
    for (s, t) in samples {
        if s.len() != dim || t.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: s.len().max(t.len()),
            });
        }
        let st: Vec<f64> = s.iter().zip(t).map(|(x, y)| x + y).collect();
        let (us, ut) = (g.matrix(s), g.matrix(t));
        homomorphism = homomorphism.max(frobenius(&(g.matrix(&st) - &us * &ut)));
        unitarity = unitarity.max(frobenius(&(us.adjoint() * &us - &ident)));
        let op = ut.transpose();
        for k in 0..n {
            let e = nalgebra::DVector::from_vec(g.exponential(k));
            let l = &g.lambda.values()[k];
            let phase = exp_2pi_i(l.iter().zip(t).map(|(x, y)| x * y).sum());
            eigen = eigen.max((&op * &e - e * phase).norm());
        }
    }
    let passed = [identity, homomorphism, unitarity, atom_transfer, eigen]
        .iter()
        .all(|&r| r <= tol);
    Ok(GroupReport {
        samples: samples.len(),
        identity,
        homomorphism,
        unitarity,
        atom_transfer,
        eigen,
        tol,
        passed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CFunctionReport {
    pub samples: usize,
    /// `max |c(a′ − a) − δ_{aa′}|`.
    pub kronecker: f64,
    /// `max |c(−u) − conj c(u)|` over sampled `u₁, u₂`.
    pub conjugate: f64,
    /// `max |c(u₁ − u₂) − Σ_a c(u₁ + a) conj c(u₂ + a)|`.
    pub cocycle: f64,
    pub tol: f64,
    pub passed: bool,
}

pub fn c_function_checks(
    g: &LocalTranslationGroup,
    samples: &[(Vec<f64>, Vec<f64>)],
    tol: f64,
) -> Result<CFunctionReport> {
    check_tol(tol)?;
    let c = &g.c;
    let pts = g.a.values();
    let dim = g.dim();
    let mut kronecker: f64 = 0.0;
    for (i, a) in pts.iter().enumerate() {
        for (j, b) in pts.iter().enumerate() {
            let d: Vec<f64> = b.iter().zip(a).map(|(x, y)| x - y).collect();
            let want = if i == j { 1.0 } else { 0.0 };
            kronecker = kronecker.max((c.eval(&d) - want).norm());
        }
    }
    let (mut conjugate, mut cocycle) = (0.0f64, 0.0f64);
    for (u1, u2) in samples {
        if u1.len() != dim || u2.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: u1.len().max(u2.len()),
            });
        }
        for u in [u1, u2] {
            let neg: Vec<f64> = u.iter().map(|x| -x).collect();
            conjugate = conjugate.max((c.eval(&neg) - c.eval(u).conj()).norm());
        }
        let diff: Vec<f64> = u1.iter().zip(u2).map(|(x, y)| x - y).collect();
        let mut sum = ComplexSum::default();
        for a in pts {
            let p: Vec<f64> = u1.iter().zip(a).map(|(x, y)| x + y).collect();
            let q: Vec<f64> = u2.iter().zip(a).map(|(x, y)| x + y).collect();
            sum.add(c.eval(&p) * c.eval(&q).conj());
        }
        cocycle = cocycle.max((c.eval(&diff) - sum.value()).norm());
    }
    Ok(CFunctionReport {
        samples: samples.len(),
        kronecker,
        conjugate,
        cocycle,
        tol,
        passed: kronecker.max(conjugate).max(cocycle) <= tol,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoveredSpectrum {
    pub frequencies: Vec<Vec<Scalar>>,
    pub epsilon: f64,
    pub bound: f64,
    /// Smallest gap between eigenvalues of the Hermitian combination.
    pub eigen_gap: f64,
    pub certificate: PairCertificate,
}

/// Recovers `Λ` from the unitaries `U(ε e_j)`: their common eigenvectors are
/// the `e_λ`, and the eigenphase of `U(ε e_j)` is `2π ε λ_j` mod `2π`. Each
/// coordinate is taken as the unique representative mod `1/ε` in
/// `[−bound, bound]`; `bound` defaults to `1/(2ε)`.
pub fn recover_spectrum_from_group(
    g: &LocalTranslationGroup,
    epsilon: f64,
    bound: Option<f64>,
) -> Result<RecoveredSpectrum> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::InvalidInput(format!("step must be positive, got {epsilon}")));
    }
    let bound = bound.unwrap_or(0.5 / epsilon);
    let dim = g.dim();
    let n = g.a.len();
    let gens: Vec<DMatrix<Complex64>> = (0..dim)
        .map(|j| {
            let mut t = vec![0.0; dim];
            t[j] = epsilon;
            g.operator(&t)
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(RECOVERY_SEED);
    let mut h = DMatrix::<Complex64>::zeros(n, n);
    for u in &gens {
        let (r, s): (f64, f64) = (rng.random_range(0.5..1.5), rng.random_range(0.5..1.5));
        let adj = u.adjoint();
        h += (u + &adj) * Complex64::new(r / 2.0, 0.0);
        h += (u - &adj) * Complex64::new(0.0, -s / 2.0);
    }
    let eig = h.symmetric_eigen();
    let mut sorted: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    sorted.sort_by(f64::total_cmp);
    let eigen_gap = sorted.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    if eigen_gap < DEGENERACY_GAP {
        return Err(Error::DegenerateEigenvalues { gap: eigen_gap });
    }

    let period = 1.0 / epsilon;
    let mut recovered = Vec::with_capacity(n);
    for (index, v) in eig.eigenvectors.column_iter().enumerate() {
        let mut freq = Vec::with_capacity(dim);
        for (coordinate, u) in gens.iter().enumerate() {
            let z = (v.adjoint() * u * v)[(0, 0)];
            let base = z.arg() / (TWO_PI * epsilon);
            let lo = ((-bound - base) / period - 1e-9).ceil() as i64;
            let hi = ((bound - base) / period + 1e-9).floor() as i64;
            let candidates: Vec<f64> = (lo..=hi).map(|k| base + k as f64 * period).collect();
            if candidates.len() != 1 {
                return Err(Error::BoundTooLoose {
                    bound,
                    index,
                    coordinate,
                    candidates: candidates.len(),
                });
            }
            freq.push(snap(candidates[0]));
        }
        recovered.push(freq);
    }
    recovered.sort_by(|x, y| {
        x.iter()
            .zip(y)
            .map(|(p, q)| p.value().total_cmp(&q.value()))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let lambda = FiniteSet::new(recovered.clone())?;
    let certificate = is_spectral_pair(&g.a, &lambda, PAIR_TOL)?;
    Ok(RecoveredSpectrum {
        frequencies: recovered,
        epsilon,
        bound,
        eigen_gap,
        certificate,
    })
}

fn snap(x: f64) -> Scalar {
    match snap_rational(x, 1 << 16, 1e-8) {
        Some(r) => Scalar::exact(r),
        None => Scalar::approx(x),
    }
}
