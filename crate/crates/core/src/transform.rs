//! Similarity-to-utility transforms and the similarity-dependent noise model.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Noise variance as a non-increasing function of similarity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum NoiseFn {
    /// `h(s) = 1 - s`
    OneMinusS,
    /// `h(s) = c * (1 - s)`
    Scaled { c: f64 },
    /// `h(s) = c`
    Constant { c: f64 },
}

impl NoiseFn {
    pub fn eval(self, s: f64) -> f64 {
        match self {
            NoiseFn::OneMinusS => (1.0 - s).max(0.0),
            NoiseFn::Scaled { c } => c * (1.0 - s).max(0.0),
            NoiseFn::Constant { c } => c,
        }
    }
}

impl fmt::Display for NoiseFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseFn::OneMinusS => f.write_str("one-minus-s"),
            NoiseFn::Scaled { c } => write!(f, "scaled:{c}"),
            NoiseFn::Constant { c } => write!(f, "constant:{c}"),
        }
    }
}

impl FromStr for NoiseFn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let bad = || Error::Parse(format!("unknown noise function {s:?}"));
        if s == "one-minus-s" {
            return Ok(NoiseFn::OneMinusS);
        }
        let (name, arg) = s.split_once(':').ok_or_else(bad)?;
        let c: f64 = arg.parse().map_err(|_| bad())?;
        if !(c >= 0.0 && c.is_finite()) {
            return Err(bad());
        }
        match name {
            "scaled" => Ok(NoiseFn::Scaled { c }),
            "constant" => Ok(NoiseFn::Constant { c }),
            _ => Err(bad()),
        }
    }
}

pub const DEFAULT_VARIANCE_FLOOR: f64 = 1e-12;

/// Reviewer noise: `sigma^2_ij = max(h(s_ij), variance_floor)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub h: NoiseFn,
    pub variance_floor: f64,
}

impl NoiseModel {
    pub fn new(h: NoiseFn) -> Self {
        Self {
            h,
            variance_floor: DEFAULT_VARIANCE_FLOOR,
        }
    }

    pub fn variance(&self, s: f64) -> f64 {
        self.h.eval(s).max(self.variance_floor)
    }
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::new(NoiseFn::OneMinusS)
    }
}

/// Monotone map from similarity to utility, valued in `[0, +inf]`.
///
/// Utilities are plain `f64`; `+inf` is a legal value and absorbs addition.
/// NaN never arises because every transform is non-negative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Transform {
    Identity,
    /// `s -> 1 / h(s)`, `+inf` where `h(s) = 0`.
    InverseNoise { h: NoiseFn },
    /// `s -> 1 - h(s)`, clamped at zero.
    OneMinusNoise { h: NoiseFn },
    /// `s -> 1{s > zeta}`
    Threshold { zeta: f64 },
}

impl Transform {
    /// `s -> 1/(1-s)`
    pub const INVERSE_ONE_MINUS_S: Transform = Transform::InverseNoise {
        h: NoiseFn::OneMinusS,
    };

    pub fn eval(&self, s: f64) -> f64 {
        match *self {
            Transform::Identity => s,
            Transform::InverseNoise { h } => {
                let v = h.eval(s);
                if v <= 0.0 {
                    f64::INFINITY
                } else {
                    1.0 / v
                }
            }
            Transform::OneMinusNoise { h } => (1.0 - h.eval(s)).max(0.0),
            Transform::Threshold { zeta } => {
                if s > zeta {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Parses the command-line spelling: `identity`, `inverse-one-minus-s`,
    /// `one-minus-h` (with the given noise function) or `threshold:<zeta>`.
    pub fn parse_with_noise(s: &str, h: NoiseFn) -> Result<Self, Error> {
        match s {
            "identity" => Ok(Transform::Identity),
            "inverse-one-minus-s" => Ok(Transform::INVERSE_ONE_MINUS_S),
            "inverse-h" => Ok(Transform::InverseNoise { h }),
            "one-minus-h" => Ok(Transform::OneMinusNoise { h }),
            _ => {
                let zeta = s
                    .strip_prefix("threshold:")
                    .and_then(|z| z.parse::<f64>().ok())
                    .filter(|z| z.is_finite())
                    .ok_or_else(|| Error::Parse(format!("unknown transform {s:?}")))?;
                Ok(Transform::Threshold { zeta })
            }
        }
    }
}

impl FromStr for Transform {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Transform::parse_with_noise(s, NoiseFn::OneMinusS)
    }
}

impl fmt::Display for Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Transform::Identity => f.write_str("identity"),
            Transform::InverseNoise { h: NoiseFn::OneMinusS } => f.write_str("inverse-one-minus-s"),
            Transform::InverseNoise { h } => write!(f, "inverse-h({h})"),
            Transform::OneMinusNoise { h } => write!(f, "one-minus-h({h})"),
            Transform::Threshold { zeta } => write!(f, "threshold:{zeta}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn inverse_hits_infinity_at_one() {
        assert_eq!(Transform::INVERSE_ONE_MINUS_S.eval(1.0), f64::INFINITY);
        assert!((Transform::INVERSE_ONE_MINUS_S.eval(0.5) - 2.0).abs() < 1e-12);
        assert_eq!(Transform::INVERSE_ONE_MINUS_S.eval(1.0) + 3.0, f64::INFINITY);
    }

    #[test]
    fn threshold_is_strict() {
        let t = Transform::Threshold { zeta: 0.5 };
        assert_eq!(t.eval(0.5), 0.0);
        assert_eq!(t.eval(0.51), 1.0);
    }

    #[test]
    fn parse_names() {
        assert_eq!("identity".parse::<Transform>().unwrap(), Transform::Identity);
        assert_eq!(
            "threshold:0.3".parse::<Transform>().unwrap(),
            Transform::Threshold { zeta: 0.3 }
        );
        assert!("threshold:x".parse::<Transform>().is_err());
        assert_eq!("scaled:2".parse::<NoiseFn>().unwrap(), NoiseFn::Scaled { c: 2.0 });
    }

    #[test]
    fn floor_applies_when_noise_vanishes() {
        let n = NoiseModel::default();
        assert_eq!(n.variance(1.0), DEFAULT_VARIANCE_FLOOR);
        assert!((n.variance(0.25) - 0.75).abs() < 1e-15);
    }

    fn transforms() -> Vec<Transform> {
        vec![
            Transform::Identity,
            Transform::INVERSE_ONE_MINUS_S,
            Transform::InverseNoise { h: NoiseFn::Scaled { c: 3.0 } },
            Transform::OneMinusNoise { h: NoiseFn::OneMinusS },
            Transform::Threshold { zeta: 0.4 },
        ]
    }

    proptest! {
        #[test]
        fn transforms_are_monotone_and_non_negative(a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            for t in transforms() {
                prop_assert!(t.eval(lo) >= 0.0);
                prop_assert!(t.eval(lo) <= t.eval(hi));
            }
        }
    }
}
