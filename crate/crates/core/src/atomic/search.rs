use std::collections::HashMap;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use super::pair::{is_spectral_pair, PairCertificate, Phase};
use super::FiniteSet;
use crate::error::{Error, Result};
use crate::numeric::{ComplexSum, Rational, Scalar};
use crate::par;

/// Largest supported denominator. Nonzero sums of `N` roots of unity of order
/// at most 64 stay far above the zero threshold in double precision.
pub const MAX_DENOMINATOR: u64 = 64;

const ZERO_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct SearchOptions {
    pub max_denominator: u64,
    /// Candidates `k/D` with `lo ≤ k/D < hi` on every axis.
    pub lo: Rational,
    pub hi: Rational,
    pub max_nodes: u64,
    pub time_limit: Option<Duration>,
}

impl SearchOptions {
    pub fn new(max_denominator: u64, lo: Rational, hi: Rational) -> Self {
        SearchOptions {
            max_denominator,
            lo,
            hi,
            max_nodes: 50_000_000,
            time_limit: Some(Duration::from_secs(60)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchResult {
    /// Lexicographically first spectrum containing 0, if any.
    pub spectrum: Option<Vec<Vec<Scalar>>>,
    pub candidates: usize,
    pub nodes: u64,
    pub certificate: Option<PairCertificate>,
}

/// Backtracking search for `Λ ⊂ {k/D}ⁿ ∩ box` with `0 ∈ Λ`, `#Λ = #A` and
/// `δ̂_A(λ − λ′) = 0` for all distinct pairs.
pub fn search_spectrum(a: &FiniteSet, opts: &SearchOptions) -> Result<SearchResult> {
    let d = opts.max_denominator;
    if d == 0 || d > MAX_DENOMINATOR {
        return Err(Error::InvalidInput(format!(
            "max denominator must lie in 1..={MAX_DENOMINATOR}, got {d}"
        )));
    }
    let n = a.len();
    let dim = a.dim();
    let den = BigInt::from(d);
    let first = (&opts.lo * &den).ceil().to_integer();
    let last = (&opts.hi * &den).ceil().to_integer() - 1;
    let axis: Vec<i64> = if first <= last {
        let (f, l) = (to_i64(&first)?, to_i64(&last)?);
        (f..=l).collect()
    } else {
        Vec::new()
    };
    let grid_size = (axis.len() as u128).saturating_pow(dim as u32);
    if grid_size > 1 << 20 {
        return Err(Error::InvalidInput(format!(
            "{grid_size} candidates exceed the search cap"
        )));
    }

    let mut grid: Vec<Vec<i64>> = vec![Vec::new()];
    for _ in 0..dim {
        grid = grid
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&k| {
                    let mut q = p.clone();
                    q.push(k);
                    q
                })
            })
            .collect();
    }
    let origin = vec![0i64; dim];
    grid.retain(|p| *p != origin);
    if grid.is_empty() && n > 1 {
        return Err(Error::SearchSpaceEmpty);
    }

    let zero_test = ZeroTest::new(a, d);
    // candidates compatible with 0, in lexicographic order
    let compatible: Vec<Vec<i64>> = grid.into_iter().filter(|p| zero_test.vanishes(p)).collect();
    let m = compatible.len();
    let words = m.div_ceil(64).max(1);
    let rows = par::map_range(m, |i| {
        let mut row = vec![0u64; words];
        for j in 0..m {
            if i != j {
                let diff: Vec<i64> = compatible[i].iter().zip(&compatible[j]).map(|(x, y)| x - y).collect();
                if zero_test.vanishes(&diff) {
                    row[j / 64] |= 1 << (j % 64);
                }
            }
        }
        row
    });

    let mut dfs = Dfs {
        adj: &rows,
        target: n - 1,
        nodes: 0,
        max_nodes: opts.max_nodes,
        deadline: opts.time_limit.map(|t| Instant::now() + t),
        chosen: Vec::new(),
    };
    let all: Vec<u64> = (0..words)
        .map(|w| {
            let lo = w * 64;
            let count = m.saturating_sub(lo).min(64);
            if count == 64 {
                u64::MAX
            } else {
                (1u64 << count) - 1
            }
        })
        .collect();
    let found = dfs.run(all)?;

    let mut result = SearchResult {
        spectrum: None,
        candidates: m + 1,
        nodes: dfs.nodes,
        certificate: None,
    };
    if found {
        let mut points = vec![origin.clone()];
        points.extend(dfs.chosen.iter().map(|&i| compatible[i].clone()));
        let spectrum: Vec<Vec<Scalar>> = points
            .iter()
            .map(|p| {
                p.iter()
                    .map(|&k| Scalar::exact(Rational::new(k.into(), den.clone())))
                    .collect()
            })
            .collect();
        let lambda = FiniteSet::new(spectrum.clone())?;
        result.certificate = Some(is_spectral_pair(a, &lambda, ZERO_TOL)?);
        result.spectrum = Some(spectrum);
    }
    Ok(result)
}

fn to_i64(x: &BigInt) -> Result<i64> {
    x.to_i64()
        .ok_or_else(|| Error::InvalidInput("search box too large".into()))
}

/// `|δ̂_A(k/D)| ≤ 1e−12`, memoized on the integer vector `k`.
struct ZeroTest<'a> {
    a: &'a FiniteSet,
    den: u64,
    memo: Mutex<HashMap<Vec<i64>, bool>>,
}

impl<'a> ZeroTest<'a> {
    fn new(a: &'a FiniteSet, den: u64) -> Self {
        ZeroTest {
            a,
            den,
            memo: Mutex::new(HashMap::new()),
        }
    }

    fn vanishes(&self, k: &[i64]) -> bool {
        if let Some(&v) = self.memo.lock().expect("memo lock").get(k) {
            return v;
        }
        let freq: Vec<Scalar> = k
            .iter()
            .map(|&x| Scalar::exact(Rational::new(x.into(), (self.den as i64).into())))
            .collect();
        let zero = Phase::Exact(Rational::zero());
        let mut s = ComplexSum::default();
        for p in self.a.points() {
            s.add(Phase::of(p, &freq).exp_diff(&zero));
        }
        let v = s.value().norm() / self.a.len() as f64 <= ZERO_TOL;
        self.memo.lock().expect("memo lock").insert(k.to_vec(), v);
        v
    }
}

struct Dfs<'a> {
    adj: &'a [Vec<u64>],
    target: usize,
    nodes: u64,
    max_nodes: u64,
    deadline: Option<Instant>,
    chosen: Vec<usize>,
}

impl Dfs<'_> {
    fn run(&mut self, candidates: Vec<u64>) -> Result<bool> {
        if self.chosen.len() == self.target {
            return Ok(true);
        }
        let need = self.target - self.chosen.len();
        let mut rest = candidates;
        while let Some(v) = first_bit(&rest) {
            if count(&rest) < need {
                return Ok(false);
            }
            rest[v / 64] &= !(1 << (v % 64));
            self.nodes += 1;
            if self.nodes > self.max_nodes
                || (self.nodes.is_multiple_of(1024) && self.deadline.is_some_and(|d| Instant::now() > d))
            {
                return Err(Error::Timeout { nodes: self.nodes });
            }
            let next: Vec<u64> = rest.iter().zip(&self.adj[v]).map(|(x, y)| x & y).collect();
            self.chosen.push(v);
            if self.run(next)? {
                return Ok(true);
            }
            self.chosen.pop();
        }
        Ok(false)
    }
}

fn first_bit(bits: &[u64]) -> Option<usize> {
    bits.iter()
        .enumerate()
        .find(|(_, w)| **w != 0)
        .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
}

fn count(bits: &[u64]) -> usize {
    bits.iter().map(|w| w.count_ones() as usize).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{exp_2pi_i, Complex64};

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn values(res: &SearchResult) -> Vec<f64> {
        res.spectrum.as_ref().unwrap().iter().map(|p| p[0].value()).collect()
    }

    #[test]
    fn digits_zero_one_eight_nine() {
        let a = FiniteSet::ratios(&[(0, 1), (1, 1), (8, 1), (9, 1)]).unwrap();
        let res = search_spectrum(&a, &SearchOptions::new(16, r(0, 1), r(1, 1))).unwrap();
        assert_eq!(values(&res), vec![0.0, 1.0 / 16.0, 0.5, 9.0 / 16.0]);
        assert!(res.certificate.unwrap().is_pair);
        let text = serde_json::to_string(&res.spectrum).unwrap();
        assert_eq!(text, r#"[["0"],["1/16"],["1/2"],["9/16"]]"#);
    }

    #[test]
    fn two_points() {
        let a = FiniteSet::ratios(&[(0, 1), (1, 2)]).unwrap();
        let res = search_spectrum(&a, &SearchOptions::new(2, r(0, 1), r(2, 1))).unwrap();
        assert_eq!(values(&res), vec![0.0, 1.0]);
    }

    fn brute_force(a: &[f64], den: i64, n: usize) -> bool {
        let cands: Vec<f64> = (1..den).map(|k| k as f64 / den as f64).collect();
        let zero = |x: f64| a.iter().map(|&p| exp_2pi_i(p * x)).sum::<Complex64>().norm() < 1e-9;
        fn rec(c: &[f64], chosen: &mut Vec<f64>, n: usize, zero: &dyn Fn(f64) -> bool) -> bool {
            if chosen.len() == n {
                return true;
            }
            for (i, &x) in c.iter().enumerate() {
                if chosen.iter().all(|&y| zero(x - y)) {
                    chosen.push(x);
                    if rec(&c[i + 1..], chosen, n, zero) {
                        return true;
                    }
                    chosen.pop();
                }
            }
            false
        }
        rec(&cands, &mut vec![0.0], n, &zero)
    }

    #[test]
    fn exhausts_without_spectrum() {
        let a = FiniteSet::ratios(&[(0, 1), (1, 1), (2, 1), (4, 1)]).unwrap();
        let res = search_spectrum(&a, &SearchOptions::new(8, r(0, 1), r(1, 1))).unwrap();
        assert!(res.spectrum.is_none());
        assert!(!brute_force(&[0.0, 1.0, 2.0, 4.0], 8, 4));
        assert!(brute_force(&[0.0, 1.0, 8.0, 9.0], 16, 4));
    }

    #[test]
    fn bad_options() {
        let a = FiniteSet::ratios(&[(0, 1), (1, 2)]).unwrap();
        assert!(search_spectrum(&a, &SearchOptions::new(0, r(0, 1), r(1, 1))).is_err());
        assert!(search_spectrum(&a, &SearchOptions::new(65, r(0, 1), r(1, 1))).is_err());
        assert!(matches!(
            search_spectrum(&a, &SearchOptions::new(4, r(1, 1), r(1, 1))),
            Err(Error::SearchSpaceEmpty)
        ));
    }

    #[test]
    fn node_budget() {
        let a = FiniteSet::ratios(&[(0, 1), (1, 1), (8, 1), (9, 1)]).unwrap();
        let mut opts = SearchOptions::new(64, r(0, 1), r(1, 1));
        opts.max_nodes = 1;
        assert!(matches!(search_spectrum(&a, &opts), Err(Error::Timeout { .. })));
    }
}
