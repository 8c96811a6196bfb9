use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{GeometryError, Result};

/// Slack allowed beyond an endpoint when testing sampled curvatures.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// Position of an interval `I` relative to `[-kappa, kappa]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntervalClass {
    Disjoint,
    Overlaps,
    Contains,
    ContainedIn,
}

/// Which side of `[-kappa, kappa]` an interval extends to. An interval that
/// is not entirely below `kappa` nor entirely above `-kappa` has no side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    /// Every element is `< kappa`.
    Below,
    /// Every element is `> -kappa`.
    Above,
}

/// An interval of the extended real line with open or closed ends.
///
/// Written as `(lo,hi)`, `[lo,hi)`, ... with `-inf`/`inf` allowed as open ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct CurvatureInterval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Membership {
    pub inside: bool,
    /// Signed distance to the nearest endpoint, positive inside.
    pub margin: f64,
}

impl CurvatureInterval {
    pub fn new(lo: f64, hi: f64, lo_closed: bool, hi_closed: bool) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo >= hi {
            return Err(GeometryError::Interval(format!("need lo < hi, got {lo}, {hi}")));
        }
        if (lo_closed && lo.is_infinite()) || (hi_closed && hi.is_infinite()) {
            return Err(GeometryError::Interval("infinite endpoints must be open".into()));
        }
        Ok(CurvatureInterval {
            lo,
            hi,
            lo_closed,
            hi_closed,
        })
    }

    pub fn open(lo: f64, hi: f64) -> Result<Self> {
        Self::new(lo, hi, false, false)
    }

    pub fn below(hi: f64) -> Self {
        Self::new(f64::NEG_INFINITY, hi, false, false).expect("finite upper bound")
    }

    pub fn above(lo: f64) -> Self {
        Self::new(lo, f64::INFINITY, false, false).expect("finite lower bound")
    }

    /// `-I`.
    pub fn negate(&self) -> Self {
        CurvatureInterval {
            lo: -self.hi,
            hi: -self.lo,
            lo_closed: self.hi_closed,
            hi_closed: self.lo_closed,
        }
    }

    pub fn contains_value(&self, v: f64) -> bool {
        let lo_ok = if self.lo_closed { v >= self.lo } else { v > self.lo };
        let hi_ok = if self.hi_closed { v <= self.hi } else { v < self.hi };
        lo_ok && hi_ok
    }

    /// Membership of a sampled value, tolerating `MEMBERSHIP_TOL` beyond
    /// closed endpoints and requiring open endpoints not to be crossed by
    /// more than the same slack.
    pub fn membership(&self, v: f64) -> Membership {
        let margin = (v - self.lo).min(self.hi - v);
        let lo_ok = if self.lo_closed {
            v >= self.lo - MEMBERSHIP_TOL
        } else {
            v > self.lo - MEMBERSHIP_TOL
        };
        let hi_ok = if self.hi_closed {
            v <= self.hi + MEMBERSHIP_TOL
        } else {
            v < self.hi + MEMBERSHIP_TOL
        };
        Membership {
            inside: lo_ok && hi_ok && !v.is_nan(),
            margin,
        }
    }

    /// True when every element is strictly less than `x`.
    pub fn lies_below(&self, x: f64) -> bool {
        self.hi < x || (self.hi == x && !self.hi_closed)
    }

    /// True when every element is strictly greater than `x`.
    pub fn lies_above(&self, x: f64) -> bool {
        self.lo > x || (self.lo == x && !self.lo_closed)
    }

    fn contains_closed(&self, a: f64, b: f64) -> bool {
        self.contains_value(a) && self.contains_value(b)
    }

    fn contained_in_closed(&self, a: f64, b: f64) -> bool {
        self.lo >= a && self.hi <= b
    }

    pub fn classify(&self, kappa: f64) -> IntervalClass {
        let (a, b) = (-kappa, kappa);
        if self.lies_below(a) || self.lies_above(b) {
            IntervalClass::Disjoint
        } else if self.contains_closed(a, b) {
            IntervalClass::Contains
        } else if self.contained_in_closed(a, b) {
            IntervalClass::ContainedIn
        } else {
            IntervalClass::Overlaps
        }
    }

    /// Side of the interval, preferring `Below` when both apply.
    pub fn side(&self, kappa: f64) -> Option<Side> {
        if self.lies_below(kappa) {
            Some(Side::Below)
        } else if self.lies_above(-kappa) {
            Some(Side::Above)
        } else {
            None
        }
    }
}

impl fmt::Display for CurvatureInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let num = |v: f64| {
            if v == f64::INFINITY {
                "inf".to_string()
            } else if v == f64::NEG_INFINITY {
                "-inf".to_string()
            } else {
                format!("{v}")
            }
        };
        write!(
            f,
            "{}{},{}{}",
            if self.lo_closed { '[' } else { '(' },
            num(self.lo),
            num(self.hi),
            if self.hi_closed { ']' } else { ')' }
        )
    }
}

impl FromStr for CurvatureInterval {
    type Err = GeometryError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || GeometryError::Interval(format!("cannot parse `{s}`"));
        let mut chars = s.chars();
        let first = chars.next().ok_or_else(bad)?;
        let last = chars.next_back().ok_or_else(bad)?;
        let lo_closed = match first {
            '[' => true,
            '(' => false,
            _ => return Err(bad()),
        };
        let hi_closed = match last {
            ']' => true,
            ')' => false,
            _ => return Err(bad()),
        };
        let body = &s[1..s.len() - 1];
        let (a, b) = body.split_once(',').ok_or_else(bad)?;
        let parse = |t: &str| -> Result<f64> {
            match t.trim() {
                "inf" | "+inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                t => t.parse::<f64>().map_err(|_| bad()),
            }
        };
        CurvatureInterval::new(parse(a)?, parse(b)?, lo_closed, hi_closed)
    }
}

impl TryFrom<String> for CurvatureInterval {
    type Error = GeometryError;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<CurvatureInterval> for String {
    fn from(i: CurvatureInterval) -> String {
        i.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn iv(s: &str) -> CurvatureInterval {
        s.parse().unwrap()
    }

    #[test]
    fn classification_examples() {
        assert_eq!(iv("(-inf,-1)").classify(1.0), IntervalClass::Disjoint);
        assert_eq!(iv("(-inf,-1]").classify(1.0), IntervalClass::Overlaps);
        assert_eq!(iv("(-2,1)").classify(1.0), IntervalClass::Overlaps);
        assert_eq!(iv("(-2,1]").classify(1.0), IntervalClass::Contains);
        assert_eq!(iv("[-0.5,0.5]").classify(1.0), IntervalClass::ContainedIn);
        assert_eq!(iv("(1,3)").classify(1.0), IntervalClass::Disjoint);
        assert_eq!(iv("(-3,-0.2)").classify(0.0), IntervalClass::Disjoint);
        assert_eq!(iv("(-3,0.2)").classify(0.0), IntervalClass::Contains);
    }

    #[test]
    fn sides() {
        assert_eq!(iv("(-2,1)").side(1.0), Some(Side::Below));
        assert_eq!(iv("(-1,4)").side(1.0), Some(Side::Above));
        assert_eq!(iv("(-4,4)").side(1.0), None);
        assert!(iv("(-inf,0)").lies_below(0.0));
        assert!(!iv("(-inf,0]").lies_below(0.0));
    }

    #[test]
    fn membership_reports_margin() {
        let i = iv("(-2,-0.5)");
        let m = i.membership(-1.0);
        assert!(m.inside && (m.margin - 0.5).abs() < 1e-15);
        assert!(!i.membership(0.0).inside);
        assert!(i.membership(-0.5 + 1e-10).inside);
        assert!(!i.membership(-0.5 + 1e-8).inside);
        assert!(!i.membership(f64::NAN).inside);
    }

    #[test]
    fn parse_errors() {
        assert!("(1,0)".parse::<CurvatureInterval>().is_err());
        assert!("[-inf,0)".parse::<CurvatureInterval>().is_err());
        assert!("1,2".parse::<CurvatureInterval>().is_err());
        assert!("(a,2)".parse::<CurvatureInterval>().is_err());
    }

    proptest! {
        #[test]
        fn display_parse_round_trip(lo in -10.0f64..10.0, w in 1e-3f64..10.0, lc: bool, hc: bool) {
            let i = CurvatureInterval::new(lo, lo + w, lc, hc).unwrap();
            let back: CurvatureInterval = i.to_string().parse().unwrap();
            prop_assert_eq!(i, back);
        }

        #[test]
        fn negation_is_involutive_and_flips_class_side(lo in -5.0f64..5.0, w in 0.1f64..5.0, k in 0.0f64..2.0) {
            let i = CurvatureInterval::open(lo, lo + w).unwrap();
            prop_assert_eq!(i.negate().negate(), i);
            prop_assert_eq!(i.negate().classify(k), i.classify(k));
            prop_assert_eq!(i.lies_below(-k), i.negate().lies_above(k));
        }
    }
}
