//! Semantic distances between program output vectors and pivot selection.
//!
//! Three measures are provided:
//!
//! * [`ssc_distance`]: mean absolute difference over a set of inputs, used to
//!   gate similarity-based crossover;
//! * [`distance_above_ubss`]: number of fitness cases whose absolute
//!   difference exceeds the upper bound;
//! * [`distance_in_band`]: number of fitness cases whose absolute difference
//!   lies in `[lbss, ubss]`.
//!
//! Together with the count of differences below `lbss`, the two counts
//! partition the fitness cases.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gp::SemanticsVector;

#[derive(Debug, Error, PartialEq)]
pub enum SemanticsError {
    #[error("semantics lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("input subset is empty")]
    EmptySubset,
    #[error("subset index {index} out of range for {len} fitness cases")]
    SubsetIndex { index: usize, len: usize },
    #[error("invalid similarity bounds: lbss {lbss}, ubss {ubss}")]
    Bounds { lbss: f64, ubss: f64 },
    #[error("cannot select a pivot from an empty front")]
    EmptyFront,
}

/// Lower and upper semantic-similarity bounds. `ubss` may be `+∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBounds", into = "RawBounds")]
pub struct SimilarityBounds {
    lbss: f64,
    ubss: f64,
}

impl SimilarityBounds {
    pub fn new(lbss: f64, ubss: f64) -> Result<Self, SemanticsError> {
        if lbss.is_nan() || ubss.is_nan() || lbss < 0.0 || lbss.is_infinite() || lbss > ubss {
            return Err(SemanticsError::Bounds { lbss, ubss });
        }
        Ok(SimilarityBounds { lbss, ubss })
    }

    /// `[0, +∞]`: every difference is in band.
    pub fn vacuous() -> Self {
        SimilarityBounds {
            lbss: 0.0,
            ubss: f64::INFINITY,
        }
    }

    pub fn lbss(&self) -> f64 {
        self.lbss
    }

    pub fn ubss(&self) -> f64 {
        self.ubss
    }

    pub fn contains(&self, d: f64) -> bool {
        self.lbss <= d && d <= self.ubss
    }
}

/// JSON has no infinity, so an unbounded `ubss` is written as `"inf"`.
#[derive(Serialize, Deserialize)]
struct RawBounds {
    lbss: f64,
    ubss: MaybeInfinite,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum MaybeInfinite {
    Finite(f64),
    Token(String),
}

impl From<SimilarityBounds> for RawBounds {
    fn from(b: SimilarityBounds) -> Self {
        RawBounds {
            lbss: b.lbss,
            ubss: if b.ubss.is_infinite() {
                MaybeInfinite::Token("inf".into())
            } else {
                MaybeInfinite::Finite(b.ubss)
            },
        }
    }
}

impl TryFrom<RawBounds> for SimilarityBounds {
    type Error = String;

    fn try_from(raw: RawBounds) -> Result<Self, String> {
        let ubss = match raw.ubss {
            MaybeInfinite::Finite(v) => v,
            MaybeInfinite::Token(t) if t == "inf" => f64::INFINITY,
            MaybeInfinite::Token(t) => return Err(format!("ubss must be a number or \"inf\", got {t:?}")),
        };
        SimilarityBounds::new(raw.lbss, ubss).map_err(|e| e.to_string())
    }
}

/// Which per-case counting rule measures distance to the pivot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceRule {
    /// Cases with `|p − v| > ubss`.
    Above,
    /// Cases with `lbss ≤ |p − v| ≤ ubss`.
    Band,
}

impl std::fmt::Display for DistanceRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DistanceRule::Above => "above",
            DistanceRule::Band => "band",
        })
    }
}

impl std::str::FromStr for DistanceRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "above" => Ok(DistanceRule::Above),
            "band" => Ok(DistanceRule::Band),
            other => Err(format!("unknown distance rule {other:?} (expected above or band)")),
        }
    }
}

fn check_len(a: &[f64], b: &[f64]) -> Result<(), SemanticsError> {
    if a.len() != b.len() {
        return Err(SemanticsError::LengthMismatch(a.len(), b.len()));
    }
    Ok(())
}

/// Mean absolute difference over `subset` (all cases when `None`).
pub fn ssc_distance(s1: &[f64], s2: &[f64], subset: Option<&[usize]>) -> Result<f64, SemanticsError> {
    check_len(s1, s2)?;
    match subset {
        None => {
            if s1.is_empty() {
                return Err(SemanticsError::EmptySubset);
            }
            let sum: f64 = s1.iter().zip(s2).map(|(a, b)| (a - b).abs()).sum();
            Ok(sum / s1.len() as f64)
        }
        Some(idx) => {
            if idx.is_empty() {
                return Err(SemanticsError::EmptySubset);
            }
            let mut sum = 0.0;
            for &i in idx {
                if i >= s1.len() {
                    return Err(SemanticsError::SubsetIndex { index: i, len: s1.len() });
                }
                sum += (s1[i] - s2[i]).abs();
            }
            Ok(sum / idx.len() as f64)
        }
    }
}

pub fn distance_above_ubss(p: &[f64], v: &[f64], b: &SimilarityBounds) -> Result<usize, SemanticsError> {
    check_len(p, v)?;
    Ok(p.iter().zip(v).filter(|(a, c)| (*a - *c).abs() > b.ubss).count())
}

pub fn distance_in_band(p: &[f64], v: &[f64], b: &SimilarityBounds) -> Result<usize, SemanticsError> {
    check_len(p, v)?;
    Ok(p.iter().zip(v).filter(|(a, c)| b.contains((*a - *c).abs())).count())
}

/// Distance to the pivot under `rule`.
pub fn rule_distance(
    rule: DistanceRule,
    p: &[f64],
    v: &[f64],
    b: &SimilarityBounds,
) -> Result<usize, SemanticsError> {
    match rule {
        DistanceRule::Above => distance_above_ubss(p, v, b),
        DistanceRule::Band => distance_in_band(p, v, b),
    }
}

/// The front member semantic distances are measured against.
#[derive(Debug, Clone, PartialEq)]
pub struct Pivot {
    pub semantics: SemanticsVector,
    /// Position of the pivot within the front it was selected from.
    pub index: usize,
}

/// Index of the member with the largest finite crowding distance, lowest
/// index on ties. Infinite (boundary) values are only eligible when no
/// finite value exists, in which case a uniformly random member is chosen.
pub fn pivot_index<R: Rng + ?Sized>(crowding: &[f64], rng: &mut R) -> Result<usize, SemanticsError> {
    if crowding.is_empty() {
        return Err(SemanticsError::EmptyFront);
    }
    let mut best: Option<(usize, f64)> = None;
    for (i, &c) in crowding.iter().enumerate() {
        if c.is_finite() && best.is_none_or(|(_, b)| c > b) {
            best = Some((i, c));
        }
    }
    Ok(match best {
        Some((i, _)) => i,
        None => rng.random_range(0..crowding.len()),
    })
}

/// Picks the pivot from a front given each member's semantics and crowding.
pub fn select_pivot<R: Rng + ?Sized>(
    semantics: &[&SemanticsVector],
    crowding: &[f64],
    rng: &mut R,
) -> Result<Pivot, SemanticsError> {
    assert_eq!(semantics.len(), crowding.len(), "one crowding value per member");
    let index = pivot_index(crowding, rng)?;
    Ok(Pivot {
        semantics: semantics[index].clone(),
        index,
    })
}
