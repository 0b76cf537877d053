//! Values on the extended half-line: a finite scalar or `+∞`.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::scalar::Real;

/// A finite value or `+∞`.
///
/// Ordering places every finite value below `Infinite`. Serializes as a JSON
/// number, or as the string `"inf"` for the infinite case.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub enum Ext<T> {
    Finite(T),
    Infinite,
}

impl<T: Real> Ext<T> {
    /// Wraps a raw scalar, mapping `+∞` to [`Ext::Infinite`].
    pub fn new(v: T) -> Self {
        if v.is_infinite() && v > T::zero() {
            Ext::Infinite
        } else {
            Ext::Finite(v)
        }
    }

    pub fn zero() -> Self {
        Ext::Finite(T::zero())
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Ext::Finite(v) if v.is_finite())
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Ext::Infinite)
    }

    pub fn finite(&self) -> Option<T> {
        match *self {
            Ext::Finite(v) => Some(v),
            Ext::Infinite => None,
        }
    }

    /// The underlying scalar, `+∞` included.
    pub fn value(&self) -> T {
        match *self {
            Ext::Finite(v) => v,
            Ext::Infinite => T::infinity(),
        }
    }

    pub fn map(self, f: impl FnOnce(T) -> T) -> Self {
        match self {
            Ext::Finite(v) => Ext::new(f(v)),
            Ext::Infinite => Ext::Infinite,
        }
    }

    pub fn as_f64(&self) -> f64 {
        self.value().as_f64()
    }
}

impl<T: Real> fmt::Display for Ext<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ext::Finite(v) => write!(f, "{v}"),
            Ext::Infinite => f.write_str("inf"),
        }
    }
}

impl<T: Real> Serialize for Ext<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        serialize_real(self.value(), s)
    }
}

/// Serializes a scalar as a JSON number, with non-finite values as strings.
pub fn serialize_real<T: Real, S: Serializer>(v: T, s: S) -> Result<S::Ok, S::Error> {
    if v.is_nan() {
        s.serialize_str("nan")
    } else if v.is_infinite() {
        s.serialize_str(if v > T::zero() { "inf" } else { "-inf" })
    } else {
        s.serialize_f64(v.as_f64())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infinity_sorts_last() {
        assert!(Ext::Finite(1e300_f64) < Ext::Infinite);
        assert!(Ext::Finite(1.0_f64) < Ext::Finite(2.0));
        assert_eq!(Ext::new(f64::INFINITY), Ext::Infinite);
        assert_eq!(Ext::new(f64::NEG_INFINITY), Ext::Finite(f64::NEG_INFINITY));
    }

    #[test]
    fn map_propagates_infinity() {
        let e: Ext<f64> = Ext::Infinite;
        assert!(e.map(|v| v * 0.0).is_infinite());
        assert_eq!(Ext::Finite(4.0_f64).map(f64::sqrt), Ext::Finite(2.0));
        assert!(Ext::Finite(1e308_f64).map(|v| v * 10.0).is_infinite());
    }

    #[test]
    fn serializes_inf_as_string() {
        let json = serde_json::to_string(&vec![Ext::Finite(0.5_f64), Ext::Infinite]).unwrap();
        assert_eq!(json, r#"[0.5,"inf"]"#);
    }
}
