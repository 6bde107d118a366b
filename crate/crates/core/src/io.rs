//! JSON input formats. Every number may be a JSON number or an exact string
//! `"p/q"`.
//!
//! ```json
//! {"type": "self_affine", "R": [["4/3"]], "B": [["-4/3"], ["4/3"]], "p": [0.5, 0.5]}
//! {"type": "atomic", "points": [[0], ["1/2"]], "weights": [0.5, 0.5]}
//! {"type": "lebesgue_intervals", "intervals": [[0, 1], [2, 3]]}
//! ```

use std::fs;
use std::path::Path;

use serde::Deserialize;

use crate::atomic::FiniteSet;
use crate::bohr::TrigPolynomial;
use crate::criteria::FrequencySet;
use crate::error::{Error, Result};
use crate::measure::{AffineIfs, AtomicMeasure, IntervalUnion, MeasureModel};
use crate::numeric::Scalar;

#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum RawMeasure {
    SelfAffine {
        #[serde(rename = "R")]
        r: Vec<Vec<Scalar>>,
        #[serde(rename = "B")]
        b: Vec<Vec<Scalar>>,
        #[serde(default)]
        p: Option<Vec<Scalar>>,
    },
    Atomic {
        points: Vec<Vec<Scalar>>,
        #[serde(default)]
        weights: Option<Vec<Scalar>>,
    },
    LebesgueIntervals {
        intervals: Vec<[Scalar; 2]>,
    },
}

fn values(v: &[Scalar]) -> Vec<f64> {
    v.iter().map(Scalar::value).collect()
}

fn rows(v: &[Vec<Scalar>]) -> Vec<Vec<f64>> {
    v.iter().map(|r| values(r)).collect()
}

fn parse_json<'a, T: Deserialize<'a>>(text: &'a str, what: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(format!("{what}: {e}")))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

/// Reads `path`, parses it with `parse` and prefixes any error with the file name.
fn load<T>(path: &Path, parse: impl FnOnce(&str) -> Result<T>) -> Result<T> {
    let text = read(path)?;
    parse(&text).map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        Error::InvalidInput(m) => Error::InvalidInput(format!("{}: {m}", path.display())),
        other => Error::InvalidInput(format!("{}: {other}", path.display())),
    })
}

pub fn parse_measure(text: &str) -> Result<MeasureModel> {
    match parse_json::<RawMeasure>(text, "measure")? {
        RawMeasure::SelfAffine { r, b, p } => {
            let weights = p.as_deref().map(values);
            Ok(AffineIfs::new(&rows(&r), &rows(&b), weights.as_deref())?.into())
        }
        RawMeasure::Atomic { points, weights } => {
            let points = rows(&points);
            let m = match weights {
                Some(w) => AtomicMeasure::new(points, values(&w))?,
                None => AtomicMeasure::uniform(points)?,
            };
            Ok(m.into())
        }
        RawMeasure::LebesgueIntervals { intervals } => {
            let iv = intervals.iter().map(|[a, b]| (a.value(), b.value())).collect();
            Ok(IntervalUnion::new(iv)?.into())
        }
    }
}

pub fn load_measure(path: impl AsRef<Path>) -> Result<MeasureModel> {
    load(path.as_ref(), parse_measure)
}

/// Like [`parse_measure`] but insists on a self-affine description.
pub fn parse_ifs(text: &str) -> Result<AffineIfs> {
    match parse_measure(text)? {
        MeasureModel::SelfAffine(ifs) => Ok(ifs),
        other => Err(Error::InvalidInput(format!(
            "expected a self_affine measure, got {}",
            other.kind()
        ))),
    }
}

pub fn load_ifs(path: impl AsRef<Path>) -> Result<AffineIfs> {
    load(path.as_ref(), parse_ifs)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawPoints {
    Nested(Vec<Vec<Scalar>>),
    Flat(Vec<Scalar>),
    Object { points: Box<RawPoints> },
}

impl RawPoints {
    fn into_points(self) -> Vec<Vec<Scalar>> {
        match self {
            RawPoints::Nested(v) => v,
            RawPoints::Flat(v) => v.into_iter().map(|x| vec![x]).collect(),
            RawPoints::Object { points } => points.into_points(),
        }
    }
}

/// A finite point set: `[0, "1/2"]`, `[[0, 0], [1, "1/2"]]` or `{"points": ...}`.
/// Exact strings stay exact.
pub fn parse_finite_set(text: &str) -> Result<FiniteSet> {
    FiniteSet::new(parse_json::<RawPoints>(text, "point set")?.into_points())
}

pub fn load_finite_set(path: impl AsRef<Path>) -> Result<FiniteSet> {
    load(path.as_ref(), parse_finite_set)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawFrequencies {
    Tagged(FrequencySet),
    Points(RawPoints),
}

/// A frequency set: a tagged [`FrequencySet`] or a bare point list.
pub fn parse_frequencies(text: &str) -> Result<FrequencySet> {
    match parse_json::<RawFrequencies>(text, "frequency set")? {
        RawFrequencies::Tagged(FrequencySet::List { values }) => FrequencySet::list(values),
        RawFrequencies::Tagged(FrequencySet::DigitExpansion { base, digits, level }) => {
            FrequencySet::digit_expansion(base, digits, level)
        }
        RawFrequencies::Points(p) => FrequencySet::list(rows(&p.into_points())),
    }
}

pub fn load_frequencies(path: impl AsRef<Path>) -> Result<FrequencySet> {
    load(path.as_ref(), parse_frequencies)
}

pub fn parse_polynomial(text: &str) -> Result<TrigPolynomial> {
    parse_json(text, "polynomial")
}

pub fn load_polynomial(path: impl AsRef<Path>) -> Result<TrigPolynomial> {
    load(path.as_ref(), parse_polynomial)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn self_affine_with_rationals() {
        let m = parse_measure(r#"{"type":"self_affine","R":[["4/3"]],"B":[["-4/3"],["4/3"]]}"#).unwrap();
        let MeasureModel::SelfAffine(ifs) = &m else {
            panic!("wrong kind")
        };
        assert_eq!(ifs, &AffineIfs::bernoulli_maps(0.75).unwrap());
        assert_eq!(ifs.weights(), &[0.5, 0.5]);
    }

    #[test]
    fn atomic_and_intervals() {
        let m = parse_measure(r#"{"type":"atomic","points":[[0],["1/2"]],"weights":["1/4",0.75]}"#).unwrap();
        assert!(m.is_atomic());
        let m = parse_measure(r#"{"type":"lebesgue_intervals","intervals":[[0,1],[2,"3"]]}"#).unwrap();
        assert_eq!(m.kind(), "lebesgue_intervals");
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(parse_measure(r#"{"type":"circle"}"#), Err(Error::Parse(_))));
        assert!(matches!(
            parse_measure("{\n\"type\": \"atomic\",\n\"points\": [[0], [\"1/0\"]]}"),
            Err(Error::Parse(_))
        ));
        assert!(parse_measure(r#"{"type":"self_affine","R":[[0.5]],"B":[[0],[1]]}"#).is_err());
        assert!(parse_measure(r#"{"type":"lebesgue_intervals","intervals":[[1,0]]}"#).is_err());
        let e = parse_measure("{\"type\": \"atomic\",\n \"points\": [[0], }").unwrap_err();
        assert!(e.to_string().contains("line 2"), "{e}");
    }

    #[test]
    fn point_sets() {
        let a = parse_finite_set(r#"[0, "1/2"]"#).unwrap();
        assert!(a.is_exact());
        assert_eq!(a.dim(), 1);
        let b = parse_finite_set(r#"{"points": [[0, 0], [1, "1/2"]]}"#).unwrap();
        assert_eq!(b.dim(), 2);
        assert!(matches!(parse_finite_set("[1, 1]"), Err(Error::DuplicatePoints(0, 1))));
    }

    #[test]
    fn frequency_sets() {
        let f = parse_frequencies(r#"{"type":"digit_expansion","base":4,"digits":[0,1],"level":3}"#).unwrap();
        assert_eq!(f.size(), 8);
        let f = parse_frequencies(r#"[0, 1, "5/2"]"#).unwrap();
        assert_eq!(f.expand().unwrap(), vec![vec![0.0], vec![1.0], vec![2.5]]);
        assert!(parse_frequencies("[0, 0]").is_err());
    }

    #[test]
    fn loads_with_file_context() {
        let dir = std::env::temp_dir().join(format!("spectra-io-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.json");
        fs::write(&path, "{").unwrap();
        let e = load_measure(&path).unwrap_err();
        assert!(e.to_string().contains("bad.json"));
        fs::remove_dir_all(&dir).unwrap();
    }
}
