use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on eagerly expanded frequency sets.
pub const DEFAULT_EXPANSION_CAP: usize = 1 << 16;

/// A finite set of frequencies `Λ`, listed or generated as base-`q` digit
/// expansions `{Σ_{i<m} a_i q^i : a_i ∈ D}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FrequencySet {
    List { values: Vec<Vec<f64>> },
    DigitExpansion { base: i64, digits: Vec<i64>, level: u32 },
}

impl FrequencySet {
    pub fn list(values: Vec<Vec<f64>>) -> Result<Self> {
        check_distinct(&values)?;
        Ok(FrequencySet::List { values })
    }

    /// One-dimensional list.
    pub fn scalars(values: &[f64]) -> Result<Self> {
        Self::list(values.iter().map(|&v| vec![v]).collect())
    }

    pub fn digit_expansion(base: i64, digits: Vec<i64>, level: u32) -> Result<Self> {
        if base < 2 {
            return Err(Error::InvalidInput(format!("base {base} must be at least 2")));
        }
        if digits.is_empty() {
            return Err(Error::InvalidInput("empty digit list".into()));
        }
        let set = FrequencySet::DigitExpansion { base, digits, level };
        set.expand_integers(usize::MAX)?;
        Ok(set)
    }

    pub fn dim(&self) -> usize {
        match self {
            FrequencySet::List { values } => values.first().map_or(1, Vec::len),
            FrequencySet::DigitExpansion { .. } => 1,
        }
    }

    /// Number of elements without expanding.
    pub fn size(&self) -> u128 {
        match self {
            FrequencySet::List { values } => values.len() as u128,
            FrequencySet::DigitExpansion { digits, level, .. } => (digits.len() as u128).saturating_pow(*level),
        }
    }

    pub fn expand(&self) -> Result<Vec<Vec<f64>>> {
        self.expand_with_cap(DEFAULT_EXPANSION_CAP)
    }

    pub fn expand_with_cap(&self, cap: usize) -> Result<Vec<Vec<f64>>> {
        match self {
            FrequencySet::List { values } => {
                check_distinct(values)?;
                if values.len() > cap {
                    return Err(Error::ExpansionCap {
                        size: values.len() as u128,
                        cap,
                    });
                }
                Ok(values.clone())
            }
            FrequencySet::DigitExpansion { .. } => {
                Ok(self.expand_integers(cap)?.into_iter().map(|v| vec![v as f64]).collect())
            }
        }
    }

    /// Exact integer elements of a digit expansion, sorted ascending.
    pub fn expand_integers(&self, cap: usize) -> Result<Vec<i64>> {
        let FrequencySet::DigitExpansion { base, digits, level } = self else {
            return Err(Error::InvalidInput("not a digit expansion".into()));
        };
        let size = self.size();
        if size > cap as u128 {
            return Err(Error::ExpansionCap { size, cap });
        }
        let mut values = vec![0i64];
        let mut place = 1i64;
        for _ in 0..*level {
            let mut next = Vec::with_capacity(values.len() * digits.len());
            for &d in digits {
                let shift = d
                    .checked_mul(place)
                    .ok_or_else(|| Error::InvalidInput("digit expansion overflows i64".into()))?;
                for &v in &values {
                    next.push(
                        v.checked_add(shift)
                            .ok_or_else(|| Error::InvalidInput("digit expansion overflows i64".into()))?,
                    );
                }
            }
            values = next;
            place = place.saturating_mul(*base);
        }
        values.sort_unstable();
        if let Some(i) = values.windows(2).position(|w| w[0] == w[1]) {
            return Err(Error::DuplicateFrequencies(i, i + 1));
        }
        Ok(values)
    }

    /// Nested truncations: levels `0..=m` for a digit expansion, the set
    /// itself for a list.
    pub fn levels(&self) -> Vec<FrequencySet> {
        match self {
            FrequencySet::List { .. } => vec![self.clone()],
            FrequencySet::DigitExpansion { base, digits, level } => (0..=*level)
                .map(|l| FrequencySet::DigitExpansion {
                    base: *base,
                    digits: digits.clone(),
                    level: l,
                })
                .collect(),
        }
    }
}

fn check_distinct(values: &[Vec<f64>]) -> Result<()> {
    if let Some(first) = values.first() {
        if let Some(v) = values.iter().find(|v| v.len() != first.len()) {
            return Err(Error::DimensionMismatch {
                expected: first.len(),
                got: v.len(),
            });
        }
    }
    if values.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("non-finite frequency".into()));
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        values[a]
            .iter()
            .zip(&values[b])
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    for w in order.windows(2) {
        if values[w[0]] == values[w[1]] {
            let (a, b) = (w[0].min(w[1]), w[0].max(w[1]));
            return Err(Error::DuplicateFrequencies(a, b));
        }
    }
    Ok(())
}

/// `count` evenly spaced points from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let step = (stop - start) / (count - 1) as f64;
            (0..count).map(|k| start + step * k as f64).collect()
        }
    }
}

/// Default evaluation grid: `per_axis` points per axis over `[0, 1/δ_j)`,
/// where `δ_j` is the smallest positive gap between coordinate values of `Λ`
/// along axis `j` (1 when there is none).
pub fn default_grid(freqs: &[Vec<f64>], per_axis: usize) -> Vec<Vec<f64>> {
    let dim = freqs.first().map_or(1, Vec::len);
    let axes: Vec<Vec<f64>> = (0..dim)
        .map(|j| {
            let mut coords: Vec<f64> = freqs.iter().map(|v| v[j]).collect();
            coords.sort_by(f64::total_cmp);
            let gap = coords
                .windows(2)
                .map(|w| w[1] - w[0])
                .filter(|&g| g > 1e-12)
                .fold(f64::INFINITY, f64::min);
            let period = if gap.is_finite() { 1.0 / gap } else { 1.0 };
            (0..per_axis).map(|k| period * k as f64 / per_axis as f64).collect()
        })
        .collect();
    cartesian(&axes)
}

/// All points of the product grid `axes[0] × axes[1] × …`, last axis fastest.
pub fn cartesian(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    axes.iter().fold(vec![Vec::new()], |acc, axis| {
        acc.iter()
            .flat_map(|prefix| {
                axis.iter().map(move |&x| {
                    let mut p = prefix.clone();
                    p.push(x);
                    p
                })
            })
            .collect()
    })
}
