//! Overlap of the first-level pieces `τ_b(X)` of a self-affine attractor, and
//! the non-spectrality certificate it feeds.
//!
//! Membership in `X` is tested against the outer cover
//! `X_0 = K`, `X_d = K ∩ ⋃_b τ_b(X_{d−1})` where `K` is the attractor hull.
//! The covers are nested and all contain `X`, so every estimate here is biased
//! upwards. In one dimension the cover is kept as a merged interval list and
//! a fixed point of the refinement is recognised as the attractor itself.

use serde::Serialize;

use crate::error::Result;
use crate::measure::{chaos_game_sample, AffineIfs, BoundingBox, Samples};
use crate::par;

pub const DEFAULT_DEPTH_LINE: u32 = 12;
pub const DEFAULT_DEPTH_SPACE: u32 = 6;

/// Interval lists stop refining once they would exceed this many components;
/// deeper levels fall back to recursive membership.
pub const MAX_INTERVALS: usize = 1 << 16;

/// The cover slack is the mass that disappears between depth `d` and
/// `d + SLACK_LEVELS`.
pub const SLACK_LEVELS: u32 = 4;

/// Cap on the boxes enumerated per piece for higher-dimensional geometry.
const GEOMETRY_BOXES: usize = 1 << 12;

/// Components listed per intersection in a report.
const REPORTED_INTERVALS: usize = 32;

const HULL_TOL: f64 = 1e-12;

pub const CITATION: &str = "if the invariant measure with equal weights is spectral then \
μ(τ_b(X) ∩ τ_b′(X)) = 0 for all b ≠ b′";

pub fn default_depth(dim: usize) -> u32 {
    if dim == 1 {
        DEFAULT_DEPTH_LINE
    } else {
        DEFAULT_DEPTH_SPACE
    }
}

/// 99% confidence radius used throughout: `3/√M`.
pub fn confidence_radius(samples: usize) -> f64 {
    3.0 / (samples as f64).sqrt()
}

/// Depth-`d` outer cover of the attractor with a membership oracle.
#[derive(Debug, Clone)]
pub struct OuterCover<'a> {
    ifs: &'a AffineIfs,
    hull: BoundingBox,
    depth: u32,
    /// Interval list for `X_{base_depth}` (one dimension only).
    base: Option<Vec<(f64, f64)>>,
    base_depth: u32,
    exact: bool,
}

impl<'a> OuterCover<'a> {
    pub fn new(ifs: &'a AffineIfs, depth: u32) -> Result<Self> {
        let hull = ifs.attractor_box(HULL_TOL)?;
        if ifs.dim() != 1 {
            return Ok(OuterCover {
                ifs,
                hull,
                depth,
                base: None,
                base_depth: 0,
                exact: false,
            });
        }
        let k = (hull.lo[0], hull.hi[0]);
        let scale = HULL_TOL * (1.0 + k.1 - k.0);
        let mut cur = vec![k];
        let mut level = 0;
        let mut exact = false;
        while level < depth {
            let next = refine_line(ifs, &cur, k);
            if next.len() > MAX_INTERVALS {
                break;
            }
            level += 1;
            let fixed = next.len() == cur.len()
                && next
                    .iter()
                    .zip(&cur)
                    .all(|(a, b)| (a.0 - b.0).abs() <= scale && (a.1 - b.1).abs() <= scale);
            cur = next;
            if fixed {
                exact = true;
                break;
            }
        }
        Ok(OuterCover {
            ifs,
            hull,
            depth,
            base: Some(cur),
            base_depth: level,
            exact,
        })
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    /// True when the cover equals the attractor (one dimension only).
    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn hull(&self) -> &BoundingBox {
        &self.hull
    }

    /// Merged interval list backing the cover, when there is one.
    pub fn intervals(&self) -> Option<&[(f64, f64)]> {
        self.base.as_deref()
    }

    /// Depth actually represented by [`OuterCover::intervals`].
    pub fn refined_depth(&self) -> u32 {
        if self.exact {
            self.depth.max(self.base_depth)
        } else {
            self.base_depth
        }
    }

    /// `y ∈ X_d`, with every containment test widened by `slack`.
    pub fn contains(&self, y: &[f64], slack: f64) -> bool {
        self.contains_at(y, self.depth, slack)
    }

    fn contains_at(&self, y: &[f64], level: u32, slack: f64) -> bool {
        if !self.hull.contains_within(y, slack) {
            return false;
        }
        if let Some(list) = &self.base {
            if self.exact || level <= self.base_depth {
                return in_intervals(list, y[0], slack);
            }
        }
        if level == 0 {
            return true;
        }
        (0..self.ifs.digit_count()).any(|b| self.contains_at(&self.ifs.map_inverse(b, y), level - 1, slack))
    }
}

fn refine_line(ifs: &AffineIfs, cur: &[(f64, f64)], k: (f64, f64)) -> Vec<(f64, f64)> {
    let c = ifs.r_inv().get(0, 0);
    let mut out = Vec::with_capacity(cur.len() * ifs.digit_count());
    for b in ifs.digits() {
        for &(lo, hi) in cur {
            let (x, y) = (c * (lo + b[0]), c * (hi + b[0]));
            let (lo, hi) = (x.min(y).max(k.0), x.max(y).min(k.1));
            if lo <= hi {
                out.push((lo, hi));
            }
        }
    }
    merge(out)
}

fn merge(mut list: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    list.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(list.len());
    for (lo, hi) in list {
        match out.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => out.push((lo, hi)),
        }
    }
    out
}

/// Membership in a sorted list of disjoint intervals.
fn in_intervals(list: &[(f64, f64)], y: f64, slack: f64) -> bool {
    let i = list.partition_point(|iv| iv.0 <= y + slack);
    i > 0 && list[i - 1].1 >= y - slack
}

fn intersect_lists(a: &[(f64, f64)], b: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        let lo = a[i].0.max(b[j].0);
        let hi = a[i].1.min(b[j].1);
        if lo <= hi {
            out.push((lo, hi));
        }
        if a[i].1 < b[j].1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IntersectionKind {
    Empty,
    /// Pieces touch in a set with no interior, which carries no mass.
    Points,
    Proper,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Piece {
    pub digit: usize,
    pub b: Vec<f64>,
    /// `τ_b(K)`.
    pub outer_box: BoundingBox,
    /// Components of `τ_b(X_d)`.
    pub components: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairIntersection {
    pub b: usize,
    pub b_prime: usize,
    pub kind: IntersectionKind,
    pub hull: Option<BoundingBox>,
    pub components: usize,
    /// Total length of the intersection (one dimension only).
    pub length: Option<f64>,
    /// Leading components of the intersection (one dimension only).
    pub intervals: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PiecesGeometry {
    pub dim: usize,
    pub attractor: BoundingBox,
    pub depth: u32,
    pub refined_depth: u32,
    pub exact: bool,
    pub cover_components: usize,
    pub pieces: Vec<Piece>,
    pub pairs: Vec<PairIntersection>,
}

impl PiecesGeometry {
    pub fn pair(&self, b: usize, b_prime: usize) -> Option<&PairIntersection> {
        let (b, b_prime) = (b.min(b_prime), b.max(b_prime));
        self.pairs.iter().find(|p| p.b == b && p.b_prime == b_prime)
    }

    pub fn all_disjoint(&self) -> bool {
        self.pairs.iter().all(|p| p.kind == IntersectionKind::Empty)
    }
}

/// First-level pieces `τ_b(X_d)` and their pairwise intersections.
pub fn pieces_geometry(ifs: &AffineIfs, depth: u32) -> Result<PiecesGeometry> {
    let cover = OuterCover::new(ifs, depth)?;
    let k = cover.hull().clone();
    let point_tol = HULL_TOL * (1.0 + k.diameter());
    let n = ifs.digit_count();
    let outer: Vec<BoundingBox> = (0..n).map(|b| clip(&ifs.map_box(b, &k), &k)).collect();

    let (pieces, pairs, components, refined) = if let Some(list) = cover.intervals() {
        let c = ifs.r_inv().get(0, 0);
        let lists: Vec<Vec<(f64, f64)>> = ifs
            .digits()
            .iter()
            .map(|b| {
                let mut v: Vec<(f64, f64)> = list
                    .iter()
                    .map(|&(lo, hi)| {
                        let (x, y) = (c * (lo + b[0]), c * (hi + b[0]));
                        (x.min(y), x.max(y))
                    })
                    .collect();
                v.sort_by(|a, b| a.0.total_cmp(&b.0));
                v
            })
            .collect();
        let mut pairs = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let common = intersect_lists(&lists[i], &lists[j]);
                let kind = if common.is_empty() {
                    IntersectionKind::Empty
                } else if common.iter().all(|iv| iv.1 - iv.0 <= point_tol) {
                    IntersectionKind::Points
                } else {
                    IntersectionKind::Proper
                };
                let hull = match (common.first(), common.last()) {
                    (Some(f), Some(l)) => Some(BoundingBox {
                        lo: vec![f.0],
                        hi: vec![l.1],
                    }),
                    _ => None,
                };
                pairs.push(PairIntersection {
                    b: i,
                    b_prime: j,
                    kind,
                    hull,
                    components: common.len(),
                    length: Some(common.iter().map(|iv| iv.1 - iv.0).sum()),
                    intervals: common.iter().take(REPORTED_INTERVALS).map(|iv| [iv.0, iv.1]).collect(),
                });
            }
        }
        let pieces = piece_list(ifs, &outer, |b| lists[b].len());
        (pieces, pairs, list.len(), cover.refined_depth())
    } else {
        let (boxes, level) = word_boxes(ifs, &k, depth);
        let per_piece: Vec<Vec<BoundingBox>> = (0..n)
            .map(|b| boxes.iter().filter_map(|bx| ifs.map_box(b, bx).intersect(&k)).collect())
            .collect();
        let mut pairs = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let hits: Vec<Vec<BoundingBox>> = par::map_slice(&per_piece[i], |a| {
                    per_piece[j].iter().filter_map(|c| a.intersect(c)).collect()
                });
                let hits: Vec<BoundingBox> = hits.into_iter().flatten().collect();
                let kind = if hits.is_empty() {
                    IntersectionKind::Empty
                } else if hits.iter().all(|h| h.min_width() <= point_tol) {
                    IntersectionKind::Points
                } else {
                    IntersectionKind::Proper
                };
                let hull = hits.iter().cloned().reduce(|a, c| a.hull(&c));
                pairs.push(PairIntersection {
                    b: i,
                    b_prime: j,
                    kind,
                    hull,
                    components: hits.len(),
                    length: None,
                    intervals: Vec::new(),
                });
            }
        }
        let pieces = piece_list(ifs, &outer, |b| per_piece[b].len());
        (pieces, pairs, boxes.len(), level)
    };

    Ok(PiecesGeometry {
        dim: ifs.dim(),
        attractor: k,
        depth,
        refined_depth: refined,
        exact: cover.is_exact(),
        cover_components: components,
        pieces,
        pairs,
    })
}

fn piece_list(ifs: &AffineIfs, outer: &[BoundingBox], components: impl Fn(usize) -> usize) -> Vec<Piece> {
    outer
        .iter()
        .enumerate()
        .map(|(b, bx)| Piece {
            digit: b,
            b: ifs.digits()[b].clone(),
            outer_box: bx.clone(),
            components: components(b),
        })
        .collect()
}

fn clip(bx: &BoundingBox, k: &BoundingBox) -> BoundingBox {
    bx.intersect(k).unwrap_or_else(|| bx.clone())
}

/// Boxes `τ_w(K) ∩ K` for words of the deepest length `≤ depth` that keeps the
/// list (after one more map) under [`GEOMETRY_BOXES`].
fn word_boxes(ifs: &AffineIfs, k: &BoundingBox, depth: u32) -> (Vec<BoundingBox>, u32) {
    let n = ifs.digit_count();
    let mut boxes = vec![k.clone()];
    let mut level = 0;
    // the pieces are one level below the listed boxes
    while level + 1 < depth && boxes.len() * n <= GEOMETRY_BOXES {
        boxes = boxes
            .iter()
            .flat_map(|bx| (0..n).filter_map(move |b| ifs.map_box(b, bx).intersect(k)))
            .collect();
        level += 1;
    }
    (boxes, level + 1)
}

/// Monte Carlo estimate of `μ(τ_b(X) ∩ τ_b′(X))`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverlapEstimate {
    pub b: usize,
    pub b_prime: usize,
    pub estimate: f64,
    pub ci: f64,
    /// Mass lost between depth `d` and `d + SLACK_LEVELS`; zero for exact covers.
    pub slack: f64,
    pub samples: usize,
    pub seed: u64,
    pub depth: u32,
    /// Pieces are geometrically disjoint, so the estimate is exactly 0.
    pub short_circuit: bool,
}

impl OverlapEstimate {
    pub fn lower_bound(&self) -> f64 {
        self.estimate - self.ci - self.slack
    }

    pub fn is_positive(&self) -> bool {
        self.lower_bound() > 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PieceMass {
    pub digit: usize,
    pub weight: f64,
    pub estimate: f64,
    pub ci: f64,
    pub slack: f64,
}

/// Membership flags `τ_b^{-1}x ∈ X_d` for every sample and digit.
struct Membership {
    digits: usize,
    flags: Vec<bool>,
}

impl Membership {
    fn compute(ifs: &AffineIfs, cover: &OuterCover<'_>, samples: &Samples, slack: f64) -> Self {
        let n = ifs.digit_count();
        let rows = par::map_range(samples.len(), |i| {
            let x = samples.get(i);
            (0..n)
                .map(|b| cover.contains(&ifs.map_inverse(b, x), slack))
                .collect::<Vec<bool>>()
        });
        Membership {
            digits: n,
            flags: rows.concat(),
        }
    }

    fn count_piece(&self, b: usize) -> usize {
        self.flags.chunks_exact(self.digits).filter(|f| f[b]).count()
    }

    fn count_pair(&self, b: usize, c: usize) -> usize {
        self.flags.chunks_exact(self.digits).filter(|f| f[b] && f[c]).count()
    }
}

/// Chaos-game samples with membership at depth `d` and, for inexact covers,
/// at `d + SLACK_LEVELS`.
struct Evaluation {
    samples: usize,
    seed: u64,
    depth: u32,
    at_depth: Membership,
    deeper: Option<Membership>,
}

impl Evaluation {
    fn run(ifs: &AffineIfs, samples: usize, seed: u64, depth: u32) -> Result<Self> {
        let points = chaos_game_sample(ifs, samples, seed)?;
        let cover = OuterCover::new(ifs, depth)?;
        let slack = membership_slack(ifs, &points, &cover, depth + SLACK_LEVELS);
        let at_depth = Membership::compute(ifs, &cover, &points, slack);
        let deeper = if cover.is_exact() {
            None
        } else {
            let fine = OuterCover::new(ifs, depth + SLACK_LEVELS)?;
            Some(Membership::compute(ifs, &fine, &points, slack))
        };
        Ok(Evaluation {
            samples,
            seed,
            depth,
            at_depth,
            deeper,
        })
    }

    fn pair(&self, b: usize, c: usize) -> OverlapEstimate {
        let m = self.samples as f64;
        let count = self.at_depth.count_pair(b, c);
        let slack = self
            .deeper
            .as_ref()
            .map_or(0.0, |d| count.saturating_sub(d.count_pair(b, c)) as f64 / m);
        OverlapEstimate {
            b,
            b_prime: c,
            estimate: count as f64 / m,
            ci: confidence_radius(self.samples),
            slack,
            samples: self.samples,
            seed: self.seed,
            depth: self.depth,
            short_circuit: false,
        }
    }

    fn piece(&self, b: usize, weight: f64) -> PieceMass {
        let m = self.samples as f64;
        let count = self.at_depth.count_piece(b);
        let slack = self
            .deeper
            .as_ref()
            .map_or(0.0, |d| count.saturating_sub(d.count_piece(b)) as f64 / m);
        PieceMass {
            digit: b,
            weight,
            estimate: count as f64 / m,
            ci: confidence_radius(self.samples),
            slack,
        }
    }
}

/// Tolerance for testing chaos-game points, which lie within
/// `residual_bound` of `X`; each inverse map can stretch that by `‖R‖`.
fn membership_slack(ifs: &AffineIfs, samples: &Samples, cover: &OuterCover<'_>, depth: u32) -> f64 {
    let stretch = ifs
        .r()
        .abs()
        .apply(&vec![1.0; ifs.dim()])
        .into_iter()
        .fold(1.0, f64::max);
    let propagated = samples.residual_bound * stretch.powi(depth as i32 + 1);
    propagated.max(HULL_TOL * (1.0 + cover.hull().diameter()))
}

fn check_digit(ifs: &AffineIfs, b: usize) -> Result<()> {
    if b >= ifs.digit_count() {
        return Err(crate::Error::InvalidInput(format!(
            "digit index {b} out of range for {} digits",
            ifs.digit_count()
        )));
    }
    Ok(())
}

/// Fraction of chaos-game points `x` with `τ_b^{-1}x ∈ X_d` and
/// `τ_{b′}^{-1}x ∈ X_d`.
pub fn overlap_measure_mc(
    ifs: &AffineIfs,
    b: usize,
    b_prime: usize,
    samples: usize,
    seed: u64,
    depth: u32,
) -> Result<OverlapEstimate> {
    check_digit(ifs, b)?;
    check_digit(ifs, b_prime)?;
    if b == b_prime {
        return Err(crate::Error::InvalidInput("overlap needs two distinct digits".into()));
    }
    if samples == 0 {
        return Err(crate::Error::InvalidInput("sample count must be at least 1".into()));
    }
    let geometry = pieces_geometry(ifs, depth)?;
    if geometry
        .pair(b, b_prime)
        .is_some_and(|p| p.kind == IntersectionKind::Empty)
    {
        return Ok(short_circuited(b, b_prime, samples, seed, depth));
    }
    Ok(Evaluation::run(ifs, samples, seed, depth)?.pair(b, b_prime))
}

fn short_circuited(b: usize, b_prime: usize, samples: usize, seed: u64, depth: u32) -> OverlapEstimate {
    OverlapEstimate {
        b,
        b_prime,
        estimate: 0.0,
        ci: confidence_radius(samples),
        slack: 0.0,
        samples,
        seed,
        depth,
        short_circuit: true,
    }
}

/// Estimates of `μ(τ_b(X))` for every digit.
pub fn piece_masses(ifs: &AffineIfs, samples: usize, seed: u64, depth: u32) -> Result<Vec<PieceMass>> {
    let eval = Evaluation::run(ifs, samples, seed, depth)?;
    Ok(ifs
        .weights()
        .iter()
        .enumerate()
        .map(|(b, &p)| eval.piece(b, p))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapVerdict {
    NoGeometricOverlap,
    NullOverlapLikely,
    PositiveOverlap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Conclusion {
    NotSpectral,
    NoConclusion,
    /// Weights are unequal, so the theorem says nothing.
    Informational,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverlapReport {
    pub digits: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub equal_weights: bool,
    pub samples: usize,
    pub seed: u64,
    pub depth: u32,
    pub geometry: PiecesGeometry,
    pub pairs: Vec<OverlapEstimate>,
    pub masses: Vec<PieceMass>,
    pub verdict: OverlapVerdict,
    pub conclusion: Conclusion,
    pub statement: String,
    pub citation: String,
}

impl OverlapReport {
    pub fn certifies_non_spectral(&self) -> bool {
        self.conclusion == Conclusion::NotSpectral
    }
}

/// Runs the overlap test on every pair of digits. A pair with
/// `estimate − CI − slack > 0` refutes spectrality when the weights are equal.
pub fn non_spectrality_certificate(
    ifs: &AffineIfs,
    samples: usize,
    seed: u64,
    depth: Option<u32>,
) -> Result<OverlapReport> {
    if samples == 0 {
        return Err(crate::Error::InvalidInput("sample count must be at least 1".into()));
    }
    let depth = depth.unwrap_or_else(|| default_depth(ifs.dim()));
    let geometry = pieces_geometry(ifs, depth)?;
    let eval = Evaluation::run(ifs, samples, seed, depth)?;
    let pairs: Vec<OverlapEstimate> = geometry
        .pairs
        .iter()
        .map(|p| {
            if p.kind == IntersectionKind::Empty {
                short_circuited(p.b, p.b_prime, samples, seed, depth)
            } else {
                eval.pair(p.b, p.b_prime)
            }
        })
        .collect();
    let masses = ifs
        .weights()
        .iter()
        .enumerate()
        .map(|(b, &p)| eval.piece(b, p))
        .collect();

    let verdict = if pairs.iter().any(OverlapEstimate::is_positive) {
        OverlapVerdict::PositiveOverlap
    } else if geometry.all_disjoint() {
        OverlapVerdict::NoGeometricOverlap
    } else {
        OverlapVerdict::NullOverlapLikely
    };
    let equal = ifs.has_equal_weights();
    let (conclusion, statement) = match (equal, verdict) {
        (false, _) => (
            Conclusion::Informational,
            "weights are unequal, the no-overlap theorem does not apply".to_string(),
        ),
        (true, OverlapVerdict::PositiveOverlap) => (
            Conclusion::NotSpectral,
            "not spectral (contrapositive of no-overlap theorem)".to_string(),
        ),
        (true, _) => (
            Conclusion::NoConclusion,
            "no overlap detected, no conclusion".to_string(),
        ),
    };

    Ok(OverlapReport {
        digits: ifs.digits().to_vec(),
        weights: ifs.weights().to_vec(),
        equal_weights: equal,
        samples,
        seed,
        depth,
        geometry,
        pairs,
        masses,
        verdict,
        conclusion,
        statement,
        citation: CITATION.to_string(),
    })
}
