//! Fixed-point CO2e mass and plain-decimal parsing.

use core::fmt;
use core::iter::Sum;
use core::ops::Add;

const MG_PER_KG: f64 = 1_000_000.0;

/// Largest mass [`Co2e::from_kg`] accepts. Below this bound the kilogram
/// float of any milligram count converts back to the same count, which is
/// what lets the JSON event log store plain numbers.
pub const MAX_KG: f64 = 1e9;

/// A non-negative CO2-equivalent mass with one-milligram resolution.
///
/// Ledger totals are sums of these, so they are associative and exact: a
/// monthly total always equals the sum of its daily parts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Co2e(u64);

impl Co2e {
    pub const ZERO: Co2e = Co2e(0);

    pub const fn from_milligrams(mg: u64) -> Self {
        Co2e(mg)
    }

    /// Rounds `kg` to the nearest milligram. Returns `None` for negative,
    /// non-finite or input above [`MAX_KG`].
    pub fn from_kg(kg: f64) -> Option<Self> {
        if !kg.is_finite() || !(0.0..=MAX_KG).contains(&kg) {
            return None;
        }
        Some(Co2e(libm::round(kg * MG_PER_KG) as u64))
    }

    pub const fn milligrams(self) -> u64 {
        self.0
    }

    pub fn kg(self) -> f64 {
        self.0 as f64 / MG_PER_KG
    }

    pub fn checked_add(self, other: Co2e) -> Option<Co2e> {
        self.0.checked_add(other.0).map(Co2e)
    }

    pub fn checked_mul(self, factor: u32) -> Option<Co2e> {
        self.0.checked_mul(u64::from(factor)).map(Co2e)
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl Add for Co2e {
    type Output = Co2e;

    fn add(self, rhs: Co2e) -> Co2e {
        Co2e(self.0 + rhs.0)
    }
}

impl Sum for Co2e {
    fn sum<I: Iterator<Item = Co2e>>(iter: I) -> Co2e {
        iter.fold(Co2e::ZERO, Add::add)
    }
}

impl<'a> Sum<&'a Co2e> for Co2e {
    fn sum<I: Iterator<Item = &'a Co2e>>(iter: I) -> Co2e {
        iter.copied().sum()
    }
}

impl fmt::Display for Co2e {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:06}", self.0 / 1_000_000, self.0 % 1_000_000)
    }
}

#[cfg(feature = "serde")]
impl serde::Serialize for Co2e {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.kg())
    }
}

#[cfg(feature = "serde")]
impl<'de> serde::Deserialize<'de> for Co2e {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let kg = f64::deserialize(deserializer)?;
        Co2e::from_kg(kg).ok_or_else(|| {
            serde::de::Error::custom("kg_co2e must be a finite, non-negative number")
        })
    }
}

/// Returns true when `text` is a plain decimal: optional leading `-`,
/// at least one digit, optionally a `.` followed by at least one digit.
/// Exponents, `+` signs, thousands separators and surrounding whitespace
/// are all rejected.
pub fn is_plain_decimal(text: &str) -> bool {
    let body = text.strip_prefix('-').unwrap_or(text);
    let (int, frac) = match body.split_once('.') {
        Some((int, frac)) => (int, Some(frac)),
        None => (body, None),
    };
    let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    digits(int) && frac.is_none_or(digits)
}

/// Parses a plain decimal (see [`is_plain_decimal`]) into the nearest `f64`.
pub fn parse_plain_decimal(text: &str) -> Option<f64> {
    if !is_plain_decimal(text) {
        return None;
    }
    text.parse().ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kg_round_trip() {
        let c = Co2e::from_kg(164.0).unwrap();
        assert_eq!(c.milligrams(), 164_000_000);
        assert_eq!(c.kg(), 164.0);
        assert_eq!(Co2e::from_kg(0.0000004), Some(Co2e::ZERO));
        assert_eq!(Co2e::from_kg(0.0000006), Some(Co2e::from_milligrams(1)));
    }

    #[test]
    fn rejects_bad_kg() {
        assert_eq!(Co2e::from_kg(-0.5), None);
        assert_eq!(Co2e::from_kg(f64::NAN), None);
        assert_eq!(Co2e::from_kg(f64::INFINITY), None);
        assert_eq!(Co2e::from_kg(1e20), None);
        assert_eq!(Co2e::from_kg(MAX_KG).map(Co2e::kg), Some(MAX_KG));
    }

    #[test]
    fn display_has_six_places() {
        assert_eq!(
            alloc::format!("{}", Co2e::from_milligrams(1_500_001)),
            "1.500001"
        );
    }

    #[test]
    fn plain_decimals() {
        for ok in ["0", "0.192", "-3", "12.50", "007"] {
            assert!(is_plain_decimal(ok), "{ok}");
        }
        for bad in ["", ".5", "5.", "1e3", "+1", "1,000", " 1", "1.2.3", "-"] {
            assert!(!is_plain_decimal(bad), "{bad}");
        }
        assert_eq!(parse_plain_decimal("0.192"), Some(0.192));
    }

    proptest::proptest! {
        #[test]
        fn kg_conversion_is_lossless(mg in 0u64..=1_000_000_000_000_000) {
            let c = Co2e::from_milligrams(mg);
            proptest::prop_assert_eq!(Co2e::from_kg(c.kg()), Some(c));
        }
    }
}
