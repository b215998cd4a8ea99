use std::fmt;
use std::ops::Add;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A natural number or infinity. Addition saturates at `Inf`.
///
/// The derived ordering places every finite value below `Inf`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExtNat {
    Fin(u64),
    Inf,
}

impl ExtNat {
    pub const ZERO: ExtNat = ExtNat::Fin(0);

    pub fn is_finite(self) -> bool {
        matches!(self, ExtNat::Fin(_))
    }

    pub fn finite(self) -> Option<u64> {
        match self {
            ExtNat::Fin(v) => Some(v),
            ExtNat::Inf => None,
        }
    }

    /// `self - rhs` clamped at zero; `Inf - x = Inf`.
    pub fn saturating_sub(self, rhs: u64) -> ExtNat {
        match self {
            ExtNat::Fin(v) => ExtNat::Fin(v.saturating_sub(rhs)),
            ExtNat::Inf => ExtNat::Inf,
        }
    }
}

impl Default for ExtNat {
    fn default() -> Self {
        ExtNat::ZERO
    }
}

impl From<u64> for ExtNat {
    fn from(v: u64) -> Self {
        ExtNat::Fin(v)
    }
}

impl Add for ExtNat {
    type Output = ExtNat;

    fn add(self, rhs: ExtNat) -> ExtNat {
        match (self, rhs) {
            (ExtNat::Fin(a), ExtNat::Fin(b)) => a.checked_add(b).map_or(ExtNat::Inf, ExtNat::Fin),
            _ => ExtNat::Inf,
        }
    }
}

impl Add<u64> for ExtNat {
    type Output = ExtNat;

    fn add(self, rhs: u64) -> ExtNat {
        self + ExtNat::Fin(rhs)
    }
}

impl std::iter::Sum for ExtNat {
    fn sum<I: Iterator<Item = ExtNat>>(iter: I) -> ExtNat {
        iter.fold(ExtNat::ZERO, |a, b| a + b)
    }
}

impl PartialEq<u64> for ExtNat {
    fn eq(&self, other: &u64) -> bool {
        *self == ExtNat::Fin(*other)
    }
}

impl PartialOrd<u64> for ExtNat {
    fn partial_cmp(&self, other: &u64) -> Option<std::cmp::Ordering> {
        Some(self.cmp(&ExtNat::Fin(*other)))
    }
}

impl fmt::Display for ExtNat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtNat::Fin(v) => write!(f, "{v}"),
            ExtNat::Inf => f.write_str("inf"),
        }
    }
}

impl Serialize for ExtNat {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ExtNat::Fin(v) => s.serialize_u64(*v),
            ExtNat::Inf => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtNat {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct ExtVisitor;

        impl Visitor<'_> for ExtVisitor {
            type Value = ExtNat;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a non-negative integer or \"inf\"")
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<ExtNat, E> {
                Ok(ExtNat::Fin(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<ExtNat, E> {
                u64::try_from(v)
                    .map(ExtNat::Fin)
                    .map_err(|_| E::custom("negative value"))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<ExtNat, E> {
                if v == "inf" {
                    Ok(ExtNat::Inf)
                } else {
                    Err(E::invalid_value(de::Unexpected::Str(v), &self))
                }
            }
        }

        d.deserialize_any(ExtVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infinity_absorbs_addition() {
        assert_eq!(ExtNat::Inf + 3, ExtNat::Inf);
        assert_eq!(ExtNat::Fin(2) + ExtNat::Inf, ExtNat::Inf);
        assert_eq!(ExtNat::Fin(u64::MAX) + 1, ExtNat::Inf);
    }

    #[test]
    fn ordering_puts_inf_last() {
        assert!(ExtNat::Fin(u64::MAX) < ExtNat::Inf);
        assert_eq!(std::cmp::min(ExtNat::Inf, ExtNat::Fin(4)), ExtNat::Fin(4));
        assert!(ExtNat::Fin(5) >= 5);
    }

    #[test]
    fn json_round_trip() {
        let v = vec![ExtNat::Fin(7), ExtNat::Inf];
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, r#"[7,"inf"]"#);
        let back: Vec<ExtNat> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
    }
}
