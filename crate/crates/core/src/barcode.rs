//! EAN-13 / UPC-A barcodes, the product catalog they key, and lower-carbon
//! alternatives within a product category.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::ranking::{cheaper_alternatives, Rankable};

/// Alternatives offered per scan.
pub const DEFAULT_ALTERNATIVES: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BarcodeError {
    #[error("barcode must be 12 (UPC-A) or 13 (EAN-13) digits, got {0}")]
    BadLength(usize),
    #[error("barcode contains a non-digit character")]
    NonDigitInput,
    #[error("check digit mismatch: expected {expected}, found {found}")]
    ChecksumMismatch { expected: u8, found: u8 },
}

fn weighted_sum(digits: &[u8]) -> u32 {
    digits
        .iter()
        .enumerate()
        .map(|(i, d)| u32::from(*d) * if i % 2 == 0 { 1 } else { 3 })
        .sum()
}

fn to_digits(text: &str) -> Result<Vec<u8>, BarcodeError> {
    text.bytes()
        .map(|b| {
            if b.is_ascii_digit() {
                Ok(b - b'0')
            } else {
                Err(BarcodeError::NonDigitInput)
            }
        })
        .collect()
}

/// GS1 mod-10 check digit for the first twelve digits of an EAN-13:
/// weights 1,3,1,3,... from the left.
pub fn check_digit(first12: &str) -> Result<u8, BarcodeError> {
    let digits = to_digits(first12)?;
    if digits.len() != 12 {
        return Err(BarcodeError::BadLength(digits.len()));
    }
    Ok(((10 - weighted_sum(&digits) % 10) % 10) as u8)
}

/// True for a 13-digit string whose weighted digit sum is divisible by 10.
pub fn is_valid_ean13(code: &str) -> bool {
    match to_digits(code) {
        Ok(d) if d.len() == 13 => (weighted_sum(&d[..12]) + u32::from(d[12])).is_multiple_of(10),
        _ => false,
    }
}

/// A validated EAN-13. UPC-A codes are stored with a leading zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Barcode([u8; 13]);

impl Barcode {
    /// Trims whitespace, zero-pads 12-digit UPC-A input, and verifies the
    /// check digit. EAN-8 and other lengths are rejected.
    pub fn parse(raw: &str) -> Result<Self, BarcodeError> {
        let digits = to_digits(raw.trim())?;
        let mut code = [0u8; 13];
        match digits.len() {
            13 => code.copy_from_slice(&digits),
            12 => code[1..].copy_from_slice(&digits),
            n => return Err(BarcodeError::BadLength(n)),
        }
        let expected = ((10 - weighted_sum(&code[..12]) % 10) % 10) as u8;
        if code[12] != expected {
            return Err(BarcodeError::ChecksumMismatch {
                expected,
                found: code[12],
            });
        }
        Ok(Barcode(code))
    }

    pub fn digits(&self) -> &[u8; 13] {
        &self.0
    }
}

/// Same as [`Barcode::parse`].
pub fn parse_barcode(raw: &str) -> Result<Barcode, BarcodeError> {
    Barcode::parse(raw)
}

impl FromStr for Barcode {
    type Err = BarcodeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Barcode::parse(s)
    }
}

impl fmt::Display for Barcode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in self.0 {
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

#[cfg(feature = "serde")]
impl serde::Serialize for Barcode {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

#[cfg(feature = "serde")]
impl<'de> serde::Deserialize<'de> for Barcode {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = <alloc::borrow::Cow<'de, str>>::deserialize(deserializer)?;
        Barcode::parse(&raw).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CatalogError {
    #[error("product {0} is already in the catalog")]
    DuplicateBarcode(Barcode),
    #[error("product {0} not found")]
    ProductNotFound(Barcode),
    #[error("product {barcode}: {reason}")]
    InvalidProduct {
        barcode: Barcode,
        reason: &'static str,
    },
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Product {
    pub barcode: Barcode,
    pub name: String,
    pub category: String,
    pub footprint_kg: f64,
}

impl Product {
    /// Category is trimmed and lowercased.
    pub fn new(
        barcode: Barcode,
        name: impl Into<String>,
        category: &str,
        footprint_kg: f64,
    ) -> Result<Self, CatalogError> {
        let name = name.into();
        let invalid = |reason| CatalogError::InvalidProduct { barcode, reason };
        if name.trim().is_empty() {
            return Err(invalid("name is empty"));
        }
        let category = category.trim().to_lowercase();
        if category.is_empty() {
            return Err(invalid("category is empty"));
        }
        if !footprint_kg.is_finite() || footprint_kg < 0.0 {
            return Err(invalid("footprint must be finite and non-negative"));
        }
        Ok(Product {
            barcode,
            name: name.trim().to_string(),
            category,
            footprint_kg,
        })
    }
}

impl Rankable for Product {
    type Key = Barcode;

    fn category(&self) -> &str {
        &self.category
    }

    fn footprint_kg(&self) -> f64 {
        self.footprint_kg
    }

    fn tie_key(&self) -> &Barcode {
        &self.barcode
    }
}

/// Products keyed by barcode, with a per-category index.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Catalog {
    products: BTreeMap<Barcode, Product>,
    by_category: BTreeMap<String, Vec<Barcode>>,
}

impl Catalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_products<I: IntoIterator<Item = Product>>(
        products: I,
    ) -> Result<Self, CatalogError> {
        let mut catalog = Self::new();
        for p in products {
            catalog.insert(p)?;
        }
        Ok(catalog)
    }

    pub fn insert(&mut self, product: Product) -> Result<(), CatalogError> {
        if self.products.contains_key(&product.barcode) {
            return Err(CatalogError::DuplicateBarcode(product.barcode));
        }
        let codes = self
            .by_category
            .entry(product.category.clone())
            .or_default();
        let at = codes.partition_point(|c| *c < product.barcode);
        codes.insert(at, product.barcode);
        self.products.insert(product.barcode, product);
        Ok(())
    }

    pub fn lookup(&self, code: &Barcode) -> Result<&Product, CatalogError> {
        self.products
            .get(code)
            .ok_or(CatalogError::ProductNotFound(*code))
    }

    /// Products of one category in barcode order.
    pub fn category(&self, category: &str) -> impl Iterator<Item = &Product> {
        self.by_category
            .get(category)
            .into_iter()
            .flatten()
            .map(|c| &self.products[c])
    }

    pub fn categories(&self) -> impl Iterator<Item = &str> {
        self.by_category.keys().map(String::as_str)
    }

    /// Up to `limit` same-category products with strictly lower footprint,
    /// ascending by footprint then barcode.
    pub fn alternatives(&self, item: &Product, limit: usize) -> Vec<&Product> {
        cheaper_alternatives(self.category(&item.category), item, limit)
    }

    pub fn products(&self) -> impl Iterator<Item = &Product> {
        self.products.values()
    }

    pub fn len(&self) -> usize {
        self.products.len()
    }

    pub fn is_empty(&self) -> bool {
        self.products.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;
    use alloc::vec;
    use proptest::prelude::*;

    /// Independent mod-10 oracle: weights applied from the right-hand end
    /// of the full 13-digit code (check digit weight 1, then 3,1,3,...).
    fn oracle_valid(code: &str) -> bool {
        code.len() == 13
            && code.bytes().all(|b| b.is_ascii_digit())
            && code
                .bytes()
                .rev()
                .enumerate()
                .map(|(i, b)| u32::from(b - b'0') * if i % 2 == 0 { 1 } else { 3 })
                .sum::<u32>()
                % 10
                == 0
    }

    fn code(s: &str) -> Barcode {
        s.parse().unwrap()
    }

    #[test]
    fn known_check_digits() {
        assert_eq!(check_digit("000000000000"), Ok(0));
        assert_eq!(check_digit("400638133393"), Ok(1));
        assert_eq!(
            check_digit("40063813339x"),
            Err(BarcodeError::NonDigitInput)
        );
        assert_eq!(check_digit("4006381333"), Err(BarcodeError::BadLength(10)));
    }

    #[test]
    fn parse_examples() {
        assert_eq!(code("4006381333931").to_string(), "4006381333931");
        assert_eq!(
            Barcode::parse("4006381333932"),
            Err(BarcodeError::ChecksumMismatch {
                expected: 1,
                found: 2
            })
        );
        assert!(oracle_valid("0036000291452"));
        assert_eq!(code("  036000291452 ").to_string(), "0036000291452");
        assert_eq!(Barcode::parse("96385074"), Err(BarcodeError::BadLength(8)));
        assert_eq!(
            Barcode::parse("40063813339a1"),
            Err(BarcodeError::NonDigitInput)
        );
        assert_eq!(Barcode::parse(""), Err(BarcodeError::BadLength(0)));
    }

    #[test]
    fn validate_agrees_with_oracle_on_examples() {
        for c in ["4006381333931", "0036000291452", "0000000000000"] {
            assert!(is_valid_ean13(c));
            assert!(oracle_valid(c));
        }
        assert!(!is_valid_ean13("4006381333932"));
        assert!(!is_valid_ean13("036000291452"));
    }

    fn product(c: &str, cat: &str, kg: f64) -> Product {
        Product::new(code(c), format!("item {c}"), cat, kg).unwrap()
    }

    fn with_check(first12: &str) -> String {
        format!("{first12}{}", check_digit(first12).unwrap())
    }

    #[test]
    fn catalog_lookup() {
        let p = product("4006381333931", "Dairy ", 1.2);
        assert_eq!(p.category, "dairy");
        let cat = Catalog::from_products(vec![p.clone()]).unwrap();
        assert_eq!(cat.lookup(&p.barcode), Ok(&p));
        let absent = code("0036000291452");
        assert_eq!(
            cat.lookup(&absent),
            Err(CatalogError::ProductNotFound(absent))
        );
        let mut cat = cat;
        assert_eq!(
            cat.insert(p.clone()),
            Err(CatalogError::DuplicateBarcode(p.barcode))
        );
    }

    #[test]
    fn product_validation() {
        let b = code("4006381333931");
        assert!(Product::new(b, "x", "dairy", -1.0).is_err());
        assert!(Product::new(b, " ", "dairy", 1.0).is_err());
        assert!(Product::new(b, "x", "", 1.0).is_err());
    }

    #[test]
    fn alternatives_examples() {
        let kgs = [0.5, 1.0, 2.0, 3.0, 4.0, 5.0];
        let products: Vec<Product> = kgs
            .iter()
            .enumerate()
            .map(|(i, kg)| product(&with_check(&format!("50000000000{i}")), "snacks", *kg))
            .collect();
        let mut cat = Catalog::from_products(products.clone()).unwrap();
        cat.insert(product(&with_check("600000000000"), "drinks", 0.1))
            .unwrap();

        let got: Vec<f64> = cat
            .alternatives(&products[3], 4)
            .iter()
            .map(|p| p.footprint_kg)
            .collect();
        assert_eq!(got, [0.5, 1.0, 2.0]);
        assert!(cat.alternatives(&products[0], 4).is_empty());
        let got: Vec<f64> = cat
            .alternatives(&products[5], 4)
            .iter()
            .map(|p| p.footprint_kg)
            .collect();
        assert_eq!(got, [0.5, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn equal_footprints_tie_break_on_barcode() {
        let a = product(&with_check("700000000002"), "x", 1.0);
        let b = product(&with_check("700000000001"), "x", 1.0);
        let top = product(&with_check("700000000009"), "x", 2.0);
        let cat = Catalog::from_products(vec![a.clone(), b.clone(), top.clone()]).unwrap();
        let got: Vec<Barcode> = cat
            .alternatives(&top, 4)
            .iter()
            .map(|p| p.barcode)
            .collect();
        assert_eq!(got, [b.barcode, a.barcode]);
    }

    proptest! {
        #[test]
        fn appended_check_digit_validates(first12 in "[0-9]{12}") {
            let full = with_check(&first12);
            prop_assert!(is_valid_ean13(&full));
            prop_assert!(oracle_valid(&full));
            prop_assert!(Barcode::parse(&full).is_ok());
        }

        #[test]
        fn single_digit_errors_detected(first12 in "[0-9]{12}", pos in 0usize..13, bump in 1u8..10) {
            let full = with_check(&first12);
            let mut bytes = full.into_bytes();
            bytes[pos] = b'0' + (bytes[pos] - b'0' + bump) % 10;
            let flipped = String::from_utf8(bytes).unwrap();
            prop_assert!(!is_valid_ean13(&flipped));
            prop_assert!(Barcode::parse(&flipped).is_err());
        }

        #[test]
        fn print_parse_round_trip(first12 in "[0-9]{12}") {
            let b = code(&with_check(&first12));
            prop_assert_eq!(Barcode::parse(&b.to_string()), Ok(b));
        }
    }
}
