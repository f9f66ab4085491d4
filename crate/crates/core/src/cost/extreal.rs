use std::fmt;
use std::ops::Add;

use serde::{Serialize, Serializer};

/// Non-negative extended real. Values within 1e-9 below zero are clamped.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct ExtReal(f64);

impl ExtReal {
    pub const ZERO: ExtReal = ExtReal(0.0);
    pub const ONE: ExtReal = ExtReal(1.0);
    pub const INF: ExtReal = ExtReal(f64::INFINITY);

    /// Panics on NaN or on values below −1e-9.
    pub fn new(v: f64) -> Self {
        Self::try_new(v).unwrap_or_else(|| panic!("not a non-negative extended real: {v}"))
    }

    pub fn try_new(v: f64) -> Option<Self> {
        if v.is_nan() || v < -1e-9 {
            None
        } else {
            Some(ExtReal(v.max(0.0)))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }

    /// `r·a` with `0·∞ = 0`.
    pub fn mul(r: f64, a: ExtReal) -> ExtReal {
        if r == 0.0 {
            ExtReal::ZERO
        } else {
            ExtReal(r * a.0)
        }
    }

    /// `a +_r b = r·a + (1−r)·b`.
    pub fn convex(r: f64, a: ExtReal, b: ExtReal) -> ExtReal {
        let r = r.clamp(0.0, 1.0);
        if r == 1.0 {
            return a;
        }
        if r == 0.0 {
            return b;
        }
        Self::mul(r, a) + Self::mul(1.0 - r, b)
    }
}

impl Add for ExtReal {
    type Output = ExtReal;
    fn add(self, o: ExtReal) -> ExtReal {
        ExtReal(self.0 + o.0)
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}
