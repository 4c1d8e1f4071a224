use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{HbcError, Result};
use crate::geometry::ShadowingFraction;

/// Body segment a profile runs along. Coordinates run from the torso end
/// (`s = 0`) to the extremity (`s = 1`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Segment {
    Arm,
    Torso,
    Custom(String),
}

impl FromStr for Segment {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s {
            "arm" => Segment::Arm,
            "torso" => Segment::Torso,
            other => Segment::Custom(other.to_string()),
        })
    }
}

impl fmt::Display for Segment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Segment::Arm => f.write_str("arm"),
            Segment::Torso => f.write_str("torso"),
            Segment::Custom(name) => f.write_str(name),
        }
    }
}

/// Piecewise-linear map from body coordinate to shadowing fraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShadowingProfile {
    segment: Segment,
    anchors: Vec<(f64, f64)>,
}

impl ShadowingProfile {
    pub fn new(segment: Segment, anchors: Vec<(f64, f64)>) -> Result<Self> {
        if anchors.len() < 2 {
            return Err(HbcError::InvalidProfile(format!(
                "need at least 2 anchors, got {}",
                anchors.len()
            )));
        }
        for &(s, x) in &anchors {
            if !(0.0..=1.0).contains(&s) {
                return Err(HbcError::InvalidProfile(format!("coordinate {s} outside [0, 1]")));
            }
            if !(x > 0.0 && x <= 1.0) {
                return Err(HbcError::InvalidProfile(format!("fraction {x} outside (0, 1]")));
            }
        }
        if anchors.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(HbcError::InvalidProfile("coordinates must be strictly ascending".into()));
        }
        Ok(ShadowingProfile { segment, anchors })
    }

    /// Parses `s:x` pairs separated by commas, e.g. `0:0.2, 1:0.6`.
    pub fn parse_anchors(text: &str) -> Result<Vec<(f64, f64)>> {
        text.split(',')
            .map(|pair| {
                let (s, x) = pair
                    .split_once(':')
                    .ok_or_else(|| HbcError::InvalidProfile(format!("anchor `{}` is not `s:x`", pair.trim())))?;
                let num = |v: &str| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| HbcError::InvalidProfile(format!("`{}` is not a number", v.trim())))
                };
                Ok((num(s)?, num(x)?))
            })
            .collect()
    }

    pub fn segment(&self) -> &Segment {
        &self.segment
    }

    pub fn anchors(&self) -> &[(f64, f64)] {
        &self.anchors
    }

    /// Span of coordinates covered by the anchors.
    pub fn domain(&self) -> (f64, f64) {
        (self.anchors[0].0, self.anchors[self.anchors.len() - 1].0)
    }

    pub fn is_monotone_increasing(&self) -> bool {
        self.anchors.windows(2).all(|w| w[1].1 >= w[0].1)
    }
}

/// Shadowing fraction at body coordinate `s`.
pub fn shadowing_factor(s: f64, profile: &ShadowingProfile) -> Result<ShadowingFraction> {
    let (lo, hi) = profile.domain();
    if !(s >= lo && s <= hi) {
        return Err(HbcError::OutOfRange {
            quantity: "body coordinate",
            value: s,
            min: lo,
            max: hi,
        });
    }
    let a = profile.anchors();
    let i = a.partition_point(|&(si, _)| si < s);
    if a[i].0 == s {
        return ShadowingFraction::new(a[i].1);
    }
    let (s0, x0) = a[i - 1];
    let (s1, x1) = a[i];
    ShadowingFraction::new(x0 + (x1 - x0) * (s - s0) / (s1 - s0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arm() -> ShadowingProfile {
        ShadowingProfile::new(Segment::Arm, vec![(0.0, 0.2), (0.5, 0.35), (1.0, 0.6)]).unwrap()
    }

    #[test]
    fn anchors_are_exact() {
        let p = arm();
        for &(s, x) in p.anchors() {
            assert_eq!(shadowing_factor(s, &p).unwrap().value(), x);
        }
    }

    #[test]
    fn torso_is_constant() {
        let p = ShadowingProfile::new(Segment::Torso, vec![(0.0, 0.3), (1.0, 0.3)]).unwrap();
        for s in [0.0, 0.25, 0.7, 1.0] {
            assert_eq!(shadowing_factor(s, &p).unwrap().value(), 0.3);
        }
    }

    #[test]
    fn out_of_range_rejected() {
        assert!(shadowing_factor(-0.01, &arm()).is_err());
        assert!(shadowing_factor(1.01, &arm()).is_err());
        assert!(shadowing_factor(f64::NAN, &arm()).is_err());
    }

    #[test]
    fn invalid_profiles() {
        assert!(ShadowingProfile::new(Segment::Arm, vec![(0.0, 0.2)]).is_err());
        assert!(ShadowingProfile::new(Segment::Arm, vec![(0.0, 0.2), (0.0, 0.3)]).is_err());
        assert!(ShadowingProfile::new(Segment::Arm, vec![(0.0, 0.0), (1.0, 0.3)]).is_err());
        assert!(ShadowingProfile::new(Segment::Arm, vec![(0.0, 0.2), (1.5, 0.3)]).is_err());
    }

    #[test]
    fn anchor_text() {
        let a = ShadowingProfile::parse_anchors("0:0.2, 0.5 : 0.35,1.0:0.6").unwrap();
        assert_eq!(a, vec![(0.0, 0.2), (0.5, 0.35), (1.0, 0.6)]);
        assert!(ShadowingProfile::parse_anchors("0:0.2, 1").is_err());
        assert_eq!("arm".parse::<Segment>().unwrap(), Segment::Arm);
        assert_eq!("torso-arm".parse::<Segment>().unwrap(), Segment::Custom("torso-arm".into()));
    }

    proptest! {
        #[test]
        fn increasing_arm_profile(s in 0.0f64..1.0, ds in 1e-6f64..1.0) {
            let p = arm();
            let t = (s + ds).min(1.0);
            prop_assume!(t > s);
            prop_assert!(shadowing_factor(t, &p).unwrap() > shadowing_factor(s, &p).unwrap());
        }
    }
}
