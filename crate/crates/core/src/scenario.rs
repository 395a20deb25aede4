//! Scenario strings: which image regions receive which transform.
//!
//! Grammar (keywords are case-insensitive, whitespace around tokens ignored):
//!
//! ```text
//! scenario  := clause ("+" clause)+
//! clause    := region [":" transform]
//! region    := "F" | "B" | category | "!" category
//! transform := "Blur" int | "SolidBlack" | "SolidColor(" r "," g "," b ")" | "Grayscale"
//! ```
//!
//! `F` is the union of person masks, `B` its complement. A category name
//! (`bed`, `wheelchair`, ...) targets the union of that category's masks and
//! `!name` its complement. `SolidBlack` is shorthand for `SolidColor(0,0,0)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coco::KeyObject;
use crate::transform::{KernelSize, TransformKind};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScenarioError {
    #[error("scenario string is empty")]
    Empty,
    #[error("scenario {0:?} needs at least two '+'-separated clauses")]
    TooFewClauses(String),
    #[error("clause {0} is empty")]
    EmptyClause(usize),
    #[error("unknown region {0:?} (expected F, B, a key object, or !key object)")]
    UnknownRegion(String),
    #[error(
        "unknown transform {0:?} (expected BlurN, SolidBlack, SolidColor(r,g,b) or Grayscale)"
    )]
    UnknownTransform(String),
    #[error("invalid blur kernel {0}: kernel size must be odd with 3 <= k <= 31")]
    InvalidKernel(u32),
    #[error("invalid color in {0:?}: expected three integers in 0..=255")]
    BadColor(String),
    #[error("region {0} appears more than once")]
    DuplicateRegion(RegionRef),
    #[error("kernel sweep bounds must satisfy 3 <= lo <= hi <= 31, got ({lo}, {hi})")]
    SweepBounds { lo: u32, hi: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RegionRef {
    Foreground,
    Background,
    KeyObject(KeyObject),
    InverseKeyObject(KeyObject),
}

impl fmt::Display for RegionRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegionRef::Foreground => f.write_str("F"),
            RegionRef::Background => f.write_str("B"),
            RegionRef::KeyObject(k) => write!(f, "{k}"),
            RegionRef::InverseKeyObject(k) => write!(f, "!{k}"),
        }
    }
}

impl FromStr for RegionRef {
    type Err = ScenarioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let unknown = || ScenarioError::UnknownRegion(s.to_string());
        if s.eq_ignore_ascii_case("f") {
            Ok(RegionRef::Foreground)
        } else if s.eq_ignore_ascii_case("b") {
            Ok(RegionRef::Background)
        } else if let Some(rest) = s.strip_prefix('!') {
            rest.trim()
                .parse()
                .map(RegionRef::InverseKeyObject)
                .map_err(|_| unknown())
        } else {
            s.parse().map(RegionRef::KeyObject).map_err(|_| unknown())
        }
    }
}

fn parse_transform(s: &str) -> Result<TransformKind, ScenarioError> {
    let t = s.trim();
    let lower = t.to_ascii_lowercase();
    if lower == "grayscale" {
        return Ok(TransformKind::Grayscale);
    }
    if lower == "solidblack" {
        return Ok(TransformKind::SOLID_BLACK);
    }
    if let Some(digits) = lower.strip_prefix("blur") {
        let digits = digits.trim();
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(ScenarioError::UnknownTransform(t.to_string()));
        }
        let k: u32 = digits
            .parse()
            .map_err(|_| ScenarioError::InvalidKernel(u32::MAX))?;
        return KernelSize::new(k)
            .map(TransformKind::GaussianBlur)
            .map_err(|_| ScenarioError::InvalidKernel(k));
    }
    if let Some(rest) = lower.strip_prefix("solidcolor") {
        let inner = rest
            .trim()
            .strip_prefix('(')
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| ScenarioError::BadColor(t.to_string()))?;
        let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(ScenarioError::BadColor(t.to_string()));
        }
        let mut rgb = [0u8; 3];
        for (c, p) in rgb.iter_mut().zip(parts) {
            *c = p
                .parse()
                .map_err(|_| ScenarioError::BadColor(t.to_string()))?;
        }
        return Ok(TransformKind::SolidColor(rgb));
    }
    Err(ScenarioError::UnknownTransform(t.to_string()))
}

fn format_transform(t: &TransformKind) -> String {
    match t {
        TransformKind::SolidColor([0, 0, 0]) => "SolidBlack".into(),
        TransformKind::SolidColor([r, g, b]) => format!("SolidColor({r},{g},{b})"),
        TransformKind::GaussianBlur(k) => format!("Blur{k}"),
        TransformKind::Grayscale => "Grayscale".into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Clause {
    pub region: RegionRef,
    pub transform: Option<TransformKind>,
}

/// Ordered clauses with distinct regions.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Scenario {
    clauses: Vec<Clause>,
}

impl Scenario {
    pub fn new(clauses: Vec<Clause>) -> Result<Self, ScenarioError> {
        for (i, c) in clauses.iter().enumerate() {
            if clauses[..i].iter().any(|p| p.region == c.region) {
                return Err(ScenarioError::DuplicateRegion(c.region));
            }
        }
        Ok(Self { clauses })
    }

    /// `F+B`: both regions untouched.
    pub fn raw() -> Self {
        Self {
            clauses: vec![
                Clause {
                    region: RegionRef::Foreground,
                    transform: None,
                },
                Clause {
                    region: RegionRef::Background,
                    transform: None,
                },
            ],
        }
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn has_blur(&self) -> bool {
        self.clauses
            .iter()
            .any(|c| c.transform.is_some_and(|t| t.is_blur()))
    }
}

pub fn parse_scenario(s: &str) -> Result<Scenario, ScenarioError> {
    if s.trim().is_empty() {
        return Err(ScenarioError::Empty);
    }
    let parts: Vec<&str> = s.split('+').collect();
    if parts.len() < 2 {
        return Err(ScenarioError::TooFewClauses(s.to_string()));
    }
    let mut clauses = Vec::with_capacity(parts.len());
    for (i, part) in parts.iter().enumerate() {
        let part = part.trim();
        if part.is_empty() {
            return Err(ScenarioError::EmptyClause(i));
        }
        let (region, transform) = match part.split_once(':') {
            Some((r, t)) => (r, Some(parse_transform(t)?)),
            None => (part, None),
        };
        clauses.push(Clause {
            region: region.parse()?,
            transform,
        });
    }
    Scenario::new(clauses)
}

pub fn format_scenario(sc: &Scenario) -> String {
    sc.clauses
        .iter()
        .map(|c| match &c.transform {
            Some(t) => format!("{}:{}", c.region, format_transform(t)),
            None => c.region.to_string(),
        })
        .collect::<Vec<_>>()
        .join("+")
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_scenario(self))
    }
}

impl FromStr for Scenario {
    type Err = ScenarioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_scenario(s)
    }
}

impl Serialize for Scenario {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_scenario(self))
    }
}

impl<'de> Deserialize<'de> for Scenario {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        parse_scenario(&s).map_err(serde::de::Error::custom)
    }
}

/// All odd kernel sizes in `[lo, hi]`, ascending.
pub fn kernel_sweep(lo: u32, hi: u32) -> Result<Vec<KernelSize>, ScenarioError> {
    if !(KernelSize::MIN <= lo && lo <= hi && hi <= KernelSize::MAX) {
        return Err(ScenarioError::SweepBounds { lo, hi });
    }
    Ok((lo..=hi).filter_map(|k| KernelSize::new(k).ok()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k(n: u32) -> KernelSize {
        KernelSize::new(n).unwrap()
    }

    #[test]
    fn parses_background_blur() {
        let sc = parse_scenario("F+B:Blur11").unwrap();
        assert_eq!(
            sc.clauses(),
            &[
                Clause {
                    region: RegionRef::Foreground,
                    transform: None
                },
                Clause {
                    region: RegionRef::Background,
                    transform: Some(TransformKind::GaussianBlur(k(11)))
                },
            ]
        );
        assert!(sc.has_blur());
    }

    #[test]
    fn parses_solid_black_foreground() {
        let sc = parse_scenario("F:SolidBlack+B").unwrap();
        assert_eq!(
            sc.clauses()[0].transform,
            Some(TransformKind::SolidColor([0, 0, 0]))
        );
        assert_eq!(sc.clauses()[1].transform, None);
    }

    #[test]
    fn raw_baseline() {
        let sc = parse_scenario("F+B").unwrap();
        assert_eq!(sc, Scenario::raw());
        assert_eq!(format_scenario(&sc), "F+B");
        assert!(!sc.has_blur());
    }

    #[test]
    fn even_kernel_is_rejected_with_constraint() {
        let err = parse_scenario("F:Blur4+B").unwrap_err();
        assert_eq!(err, ScenarioError::InvalidKernel(4));
        assert!(err.to_string().contains("odd"));
        assert_eq!(
            parse_scenario("F+B:Blur33").unwrap_err(),
            ScenarioError::InvalidKernel(33)
        );
        assert_eq!(
            parse_scenario("F+B:Blur1").unwrap_err(),
            ScenarioError::InvalidKernel(1)
        );
    }

    #[test]
    fn case_insensitive_and_whitespace() {
        let sc = parse_scenario(" f : blur11 + b:GRAYSCALE ").unwrap();
        assert_eq!(format_scenario(&sc), "F:Blur11+B:Grayscale");
    }

    #[test]
    fn key_objects_and_inverses() {
        let sc = parse_scenario("F+bed:Blur5+!Wheelchair:SolidColor(1, 2, 3)").unwrap();
        assert_eq!(sc.clauses()[1].region, RegionRef::KeyObject(KeyObject::Bed));
        assert_eq!(
            sc.clauses()[2].region,
            RegionRef::InverseKeyObject(KeyObject::Wheelchair)
        );
        assert_eq!(
            format_scenario(&sc),
            "F+bed:Blur5+!wheelchair:SolidColor(1,2,3)"
        );
        assert_eq!(
            parse_scenario("F+SolidColor(0,0,0)").unwrap_err(),
            ScenarioError::UnknownRegion("SolidColor(0,0,0)".into())
        );
        assert_eq!(
            format_scenario(&parse_scenario("F:SolidColor(0,0,0)+B").unwrap()),
            "F:SolidBlack+B"
        );
    }

    #[test]
    fn errors() {
        assert_eq!(parse_scenario("").unwrap_err(), ScenarioError::Empty);
        assert!(matches!(
            parse_scenario("F:Blur3").unwrap_err(),
            ScenarioError::TooFewClauses(_)
        ));
        assert_eq!(
            parse_scenario("F++B").unwrap_err(),
            ScenarioError::EmptyClause(1)
        );
        assert!(matches!(
            parse_scenario("F+X").unwrap_err(),
            ScenarioError::UnknownRegion(_)
        ));
        assert!(matches!(
            parse_scenario("F+B:Sharpen").unwrap_err(),
            ScenarioError::UnknownTransform(_)
        ));
        assert!(matches!(
            parse_scenario("F+B:Blur").unwrap_err(),
            ScenarioError::UnknownTransform(_)
        ));
        assert!(matches!(
            parse_scenario("F+B:SolidColor(1,2)").unwrap_err(),
            ScenarioError::BadColor(_)
        ));
        assert!(matches!(
            parse_scenario("F+B:SolidColor(1,2,300)").unwrap_err(),
            ScenarioError::BadColor(_)
        ));
        assert_eq!(
            parse_scenario("F+B+f:Grayscale").unwrap_err(),
            ScenarioError::DuplicateRegion(RegionRef::Foreground)
        );
    }

    #[test]
    fn sweep() {
        let full: Vec<u32> = kernel_sweep(3, 31)
            .unwrap()
            .into_iter()
            .map(u32::from)
            .collect();
        assert_eq!(full, (1..=15).map(|p| 2 * p + 1).collect::<Vec<_>>());
        assert_eq!(kernel_sweep(11, 11).unwrap(), vec![k(11)]);
        let mid: Vec<u32> = kernel_sweep(4, 10)
            .unwrap()
            .into_iter()
            .map(u32::from)
            .collect();
        assert_eq!(mid, vec![5, 7, 9]);
        assert!(kernel_sweep(2, 9).is_err());
        assert!(kernel_sweep(9, 7).is_err());
        assert!(kernel_sweep(3, 33).is_err());
        assert!(kernel_sweep(4, 4).unwrap().is_empty());
    }

    #[test]
    fn serde_as_string() {
        let sc = parse_scenario("F:Grayscale+B").unwrap();
        let json = serde_json::to_string(&sc).unwrap();
        assert_eq!(json, "\"F:Grayscale+B\"");
        assert_eq!(serde_json::from_str::<Scenario>(&json).unwrap(), sc);
    }
}
