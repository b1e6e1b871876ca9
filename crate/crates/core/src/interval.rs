use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Half-open interval `(lo, hi]`. Either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() {
            return Err(Error::domain("interval endpoint is NaN"));
        }
        if !(lo < hi) {
            return Err(Error::domain(format!("interval requires lo < hi, got ({lo}, {hi}]")));
        }
        if lo == f64::INFINITY || hi == f64::NEG_INFINITY {
            return Err(Error::domain(format!("empty interval ({lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    /// The whole real line.
    pub const fn real_line() -> Self {
        Self {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo < x && x <= self.hi
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo < hi).then_some(Interval { lo, hi })
    }

    /// Image under `x -> scale * x + shift` with `scale > 0`.
    pub fn affine(&self, scale: f64, shift: f64) -> Interval {
        Interval {
            lo: scale * self.lo + shift,
            hi: scale * self.hi + shift,
        }
    }
}

impl std::fmt::Display for Interval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {}]", self.lo, self.hi)
    }
}

// JSON has no infinities; `null` stands for an unbounded end.
#[derive(Serialize, Deserialize)]
struct IntervalRepr {
    lo: Option<f64>,
    hi: Option<f64>,
}

impl Serialize for Interval {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        IntervalRepr {
            lo: self.lo.is_finite().then_some(self.lo),
            hi: self.hi.is_finite().then_some(self.hi),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Interval {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = IntervalRepr::deserialize(d)?;
        Interval::new(
            repr.lo.unwrap_or(f64::NEG_INFINITY),
            repr.hi.unwrap_or(f64::INFINITY),
        )
        .map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_open_membership() {
        let i = Interval::new(0.0, 0.5).unwrap();
        assert!(!i.contains(0.0));
        assert!(i.contains(0.5));
        assert!(i.contains(0.25));
    }

    #[test]
    fn rejects_empty_and_nan() {
        assert!(Interval::new(1.0, 1.0).is_err());
        assert!(Interval::new(2.0, 1.0).is_err());
        assert!(Interval::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn intersection() {
        let a = Interval::new(0.0, 2.0).unwrap();
        let b = Interval::new(1.0, f64::INFINITY).unwrap();
        assert_eq!(a.intersect(&b), Some(Interval::new(1.0, 2.0).unwrap()));
        let c = Interval::new(3.0, 4.0).unwrap();
        assert_eq!(a.intersect(&c), None);
    }

    #[test]
    fn json_null_is_unbounded() {
        let i: Interval = serde_json::from_str(r#"{"lo": 0.0, "hi": null}"#).unwrap();
        assert_eq!(i.hi(), f64::INFINITY);
        assert_eq!(serde_json::to_string(&i).unwrap(), r#"{"lo":0.0,"hi":null}"#);
        assert!(serde_json::from_str::<Interval>(r#"{"lo": 1.0, "hi": 0.0}"#).is_err());
    }
}
