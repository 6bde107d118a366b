use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::ifs::AffineIfs;
use crate::error::{Error, Result};
use crate::par;

/// Steps discarded before a batch starts emitting points.
pub const BURN_IN: usize = 64;

/// Points per generator stream. Batch `i` always uses stream `i`, so the output
/// does not depend on the thread count.
pub const BATCH_SIZE: usize = 4096;

/// Chaos-game realization of the invariant measure, stored flat.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Samples {
    dim: usize,
    coords: Vec<f64>,
    pub seed: u64,
    pub burn_in: usize,
    /// Upper bound on the distance from any returned point to the attractor.
    pub residual_bound: f64,
}

impl Samples {
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim)
    }

    /// Empirical mean of `f` over the samples.
    pub fn mean<T, F>(&self, f: F) -> T
    where
        T: std::iter::Sum<T> + std::ops::Div<f64, Output = T>,
        F: Fn(&[f64]) -> T,
    {
        self.iter().map(f).sum::<T>() / self.len() as f64
    }
}

/// Draws `count` points by iterating `x ← τ_b(x)` with `b` chosen by the
/// digit weights. Each batch starts at the centre of the attractor hull and
/// discards [`BURN_IN`] steps.
pub fn chaos_game_sample(ifs: &AffineIfs, count: usize, seed: u64) -> Result<Samples> {
    if count == 0 {
        return Err(Error::InvalidInput("sample count must be at least 1".into()));
    }
    let hull = ifs.attractor_box(1e-12)?;
    let start = hull.center();
    let residual_bound = ifs.contraction()?.power_bound(BURN_IN) * hull.diameter();
    let chooser = WeightedIndex::new(ifs.weights()).map_err(|e| Error::BadWeights(e.to_string()))?;

    let n = ifs.dim();
    let batches = count.div_ceil(BATCH_SIZE);
    let chunks = par::map_range(batches, |batch| {
        let len = BATCH_SIZE.min(count - batch * BATCH_SIZE);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(batch as u64);
        let mut x = start.clone();
        let mut shifted = vec![0.0; n];
        let mut step = |x: &mut Vec<f64>, rng: &mut ChaCha8Rng| {
            let b = &ifs.digits()[chooser.sample(rng)];
            for ((s, xi), bi) in shifted.iter_mut().zip(x.iter()).zip(b) {
                *s = xi + bi;
            }
            ifs.r_inv().apply_into(&shifted, x);
        };
        for _ in 0..BURN_IN {
            step(&mut x, &mut rng);
        }
        let mut out = Vec::with_capacity(len * n);
        for _ in 0..len {
            step(&mut x, &mut rng);
            out.extend_from_slice(&x);
        }
        out
    });

    Ok(Samples {
        dim: n,
        coords: chunks.concat(),
        seed,
        burn_in: BURN_IN,
        residual_bound,
    })
}
