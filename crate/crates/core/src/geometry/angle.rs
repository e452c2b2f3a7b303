use std::f64::consts::TAU;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use serde::{Deserialize, Serialize};

/// An element of the circle group ℝ/ℤ, stored in turns on `[0, 1)`.
///
/// The geometric angle of `Angle(θ)` is `2πθ`. Every constructor and every
/// group operation wraps back into `[0, 1)`; the branch cut resolves to `0`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(into = "f64", try_from = "f64")]
pub struct Angle(f64);

impl Angle {
    pub const ZERO: Angle = Angle(0.0);

    /// Wraps any finite real number of turns into `[0, 1)`.
    pub fn new(turns: f64) -> Self {
        debug_assert!(turns.is_finite(), "angle must be finite, got {turns}");
        let wrapped = turns - turns.floor();
        // tiny negative inputs round up to exactly 1.0
        if wrapped >= 1.0 {
            Angle(0.0)
        } else {
            Angle(wrapped)
        }
    }

    /// Angle of the vector `(x, y)` in turns, or `None` when the vector is
    /// shorter than `min_norm`.
    pub fn from_xy(x: f64, y: f64, min_norm: f64) -> Option<Self> {
        if x.hypot(y) <= min_norm {
            return None;
        }
        Some(Angle::new(y.atan2(x) / TAU))
    }

    #[inline]
    pub fn turns(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn radians(self) -> f64 {
        self.0 * TAU
    }

    /// Digit at `position` (1-based) of the base-`base` expansion of the
    /// angle, computed by repeated multiply-and-truncate in `f64`.
    ///
    /// Deep digits in bases other than powers of two inherit rounding from
    /// the float pipeline; callers only rely on them up to measure zero.
    pub fn digit(self, base: u32, position: u32) -> u32 {
        let b = f64::from(base);
        let mut x = self.0;
        let mut d = 0.0;
        for _ in 0..position {
            x *= b;
            d = x.floor();
            x -= d;
        }
        (d as u32).min(base - 1)
    }
}

impl Add for Angle {
    type Output = Angle;

    #[inline]
    fn add(self, rhs: Angle) -> Angle {
        let s = self.0 + rhs.0;
        if s >= 1.0 {
            // Sterbenz: exact for s in [1, 2)
            Angle::new(s - 1.0)
        } else {
            Angle(s)
        }
    }
}

impl Neg for Angle {
    type Output = Angle;

    #[inline]
    fn neg(self) -> Angle {
        if self.0 == 0.0 {
            self
        } else {
            Angle::new(1.0 - self.0)
        }
    }
}

impl Sub for Angle {
    type Output = Angle;

    #[inline]
    fn sub(self, rhs: Angle) -> Angle {
        self + (-rhs)
    }
}

impl From<Angle> for f64 {
    fn from(a: Angle) -> f64 {
        a.0
    }
}

impl TryFrom<f64> for Angle {
    type Error = String;

    fn try_from(value: f64) -> Result<Self, Self::Error> {
        if value.is_finite() {
            Ok(Angle::new(value))
        } else {
            Err(format!("angle must be finite, got {value}"))
        }
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn wraps_into_unit_interval() {
        assert_eq!(Angle::new(1.25).turns(), 0.25);
        assert_eq!(Angle::new(-0.25).turns(), 0.75);
        assert_eq!(Angle::new(1.0).turns(), 0.0);
        assert_eq!(Angle::new(-1e-20).turns(), 0.0);
    }

    #[test]
    fn from_xy_branch_cut_resolves_to_zero() {
        assert_eq!(Angle::from_xy(1.0, 0.0, 1e-12).unwrap().turns(), 0.0);
        assert_eq!(Angle::from_xy(1.0, -0.0, 1e-12).unwrap().turns(), 0.0);
        assert_eq!(Angle::from_xy(0.0, -2.0, 1e-12).unwrap().turns(), 0.75);
        assert!(Angle::from_xy(1e-13, 0.0, 1e-12).is_none());
    }

    #[test]
    fn ternary_digits_of_one_third() {
        let third = Angle::new(1.0 / 3.0);
        assert_eq!(third.digit(3, 1), 1);
        assert_eq!(third.digit(3, 2), 0);
        assert_eq!(third.digit(3, 4), 0);
        assert_eq!(Angle::new(0.75).digit(2, 1), 1);
        assert_eq!(Angle::new(0.75).digit(2, 2), 1);
        assert_eq!(Angle::new(0.75).digit(2, 3), 0);
    }

    proptest! {
        #[test]
        fn add_is_fract_of_sum(a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let s = (Angle::new(a) + Angle::new(b)).turns();
            prop_assert!((0.0..1.0).contains(&s));
            let raw = a + b;
            let expected = if raw >= 1.0 { raw - 1.0 } else { raw };
            prop_assert_eq!(s, if expected >= 1.0 { 0.0 } else { expected });
        }

        #[test]
        fn negation_is_inverse(a in 0.0f64..1.0) {
            let x = Angle::new(a);
            let z = (x + (-x)).turns();
            prop_assert!(z == 0.0 || (1.0 - z) < 1e-15);
        }
    }
}
