//! Emission factors: the kgCO2e-per-unit constants every footprint is
//! computed from.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use core::fmt;
use core::str::FromStr;

/// Activity family a factor belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Category {
    Travel,
    FoodIngredient,
    Electricity,
    Product,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::Travel,
        Category::FoodIngredient,
        Category::Electricity,
        Category::Product,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Travel => "travel",
            Category::FoodIngredient => "food_ingredient",
            Category::Electricity => "electricity",
            Category::Product => "product",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = FactorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        Category::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| FactorError::UnknownCategory(s.to_string()))
    }
}

/// Activity quantity a factor is expressed per.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Unit {
    #[cfg_attr(feature = "serde", serde(rename = "km"))]
    Km,
    #[cfg_attr(feature = "serde", serde(rename = "kg"))]
    Kg,
    #[cfg_attr(feature = "serde", serde(rename = "kWh"))]
    KWh,
    #[cfg_attr(feature = "serde", serde(rename = "item"))]
    Item,
}

impl Unit {
    pub const ALL: [Unit; 4] = [Unit::Km, Unit::Kg, Unit::KWh, Unit::Item];

    pub fn as_str(self) -> &'static str {
        match self {
            Unit::Km => "km",
            Unit::Kg => "kg",
            Unit::KWh => "kWh",
            Unit::Item => "item",
        }
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Unit {
    type Err = FactorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        Unit::ALL
            .into_iter()
            .find(|u| u.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| FactorError::UnknownUnit(s.to_string()))
    }
}

/// A normalized factor variant: non-empty, lowercase, no whitespace.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct Variant(String);

impl Variant {
    /// Trims and lowercases `raw`. Interior whitespace is an error rather
    /// than something to collapse.
    pub fn new(raw: &str) -> Result<Self, FactorError> {
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.chars().any(char::is_whitespace) {
            return Err(FactorError::InvalidVariant(raw.to_string()));
        }
        Ok(Variant(trimmed.to_lowercase()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[cfg(feature = "serde")]
impl<'de> serde::Deserialize<'de> for Variant {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        Variant::new(&raw).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FactorKey {
    pub category: Category,
    pub variant: Variant,
    pub unit: Unit,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct EmissionFactor {
    pub key: FactorKey,
    pub kg_co2e_per_unit: f64,
    pub source_note: String,
}

impl EmissionFactor {
    pub fn new(
        category: Category,
        variant: &str,
        unit: Unit,
        kg_co2e_per_unit: f64,
        source_note: impl Into<String>,
    ) -> Result<Self, FactorError> {
        let factor = EmissionFactor {
            key: FactorKey {
                category,
                variant: Variant::new(variant)?,
                unit,
            },
            kg_co2e_per_unit,
            source_note: source_note.into(),
        };
        factor.validate()?;
        Ok(factor)
    }

    pub fn validate(&self) -> Result<(), FactorError> {
        if self.kg_co2e_per_unit.is_finite() && self.kg_co2e_per_unit >= 0.0 {
            Ok(())
        } else {
            Err(FactorError::InvalidFactor {
                category: self.key.category,
                variant: self.key.variant.to_string(),
            })
        }
    }

    pub fn category(&self) -> Category {
        self.key.category
    }

    pub fn variant(&self) -> &str {
        self.key.variant.as_str()
    }

    pub fn unit(&self) -> Unit {
        self.key.unit
    }

    /// Errors unless this factor is expressed per `unit`.
    pub fn expect_unit(&self, unit: Unit) -> Result<&Self, FactorError> {
        if self.key.unit == unit {
            Ok(self)
        } else {
            Err(FactorError::UnitMismatch {
                category: self.key.category,
                variant: self.key.variant.to_string(),
                expected: unit,
                found: self.key.unit,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FactorError {
    #[error("unknown factor category {0:?}")]
    UnknownCategory(String),
    #[error("unknown factor unit {0:?}")]
    UnknownUnit(String),
    #[error("invalid variant {0:?}: must be non-empty with no whitespace")]
    InvalidVariant(String),
    #[error("factor for {category}/{variant} must be finite and non-negative")]
    InvalidFactor { category: Category, variant: String },
    #[error("duplicate factor key {category}/{variant}")]
    DuplicateKey { category: Category, variant: String },
    #[error("no emission factor for {category}/{variant}")]
    FactorNotFound { category: Category, variant: String },
    #[error("factor {category}/{variant} is per {found}, expected per {expected}")]
    UnitMismatch {
        category: Category,
        variant: String,
        expected: Unit,
        found: Unit,
    },
}

/// Versioned set of emission factors, unique on `(category, variant)`.
///
/// Every successful mutation batch bumps `version` by exactly one; a failed
/// batch leaves the registry untouched.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FactorRegistry {
    entries: BTreeMap<(Category, Variant), EmissionFactor>,
    version: u64,
}

impl FactorRegistry {
    /// An empty registry at version 0.
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a registry from one batch; the result is at version 1.
    /// Repeated keys are rejected, never shadowed.
    pub fn from_factors<I>(factors: I) -> Result<Self, FactorError>
    where
        I: IntoIterator<Item = EmissionFactor>,
    {
        let mut registry = Self::new();
        registry.insert_batch(factors)?;
        Ok(registry)
    }

    /// Inserts a batch of new keys. Any duplicate (against the registry or
    /// within the batch) fails the whole batch.
    pub fn insert_batch<I>(&mut self, factors: I) -> Result<(), FactorError>
    where
        I: IntoIterator<Item = EmissionFactor>,
    {
        let mut staged = self.entries.clone();
        for factor in factors {
            factor.validate()?;
            let key = (factor.key.category, factor.key.variant.clone());
            if staged.contains_key(&key) {
                return Err(FactorError::DuplicateKey {
                    category: key.0,
                    variant: key.1.to_string(),
                });
            }
            staged.insert(key, factor);
        }
        self.entries = staged;
        self.version += 1;
        Ok(())
    }

    /// Inserts or replaces a single factor.
    pub fn upsert(&mut self, factor: EmissionFactor) -> Result<(), FactorError> {
        factor.validate()?;
        let key = (factor.key.category, factor.key.variant.clone());
        self.entries.insert(key, factor);
        self.version += 1;
        Ok(())
    }

    /// Case-insensitive on `variant`.
    pub fn lookup(
        &self,
        category: Category,
        variant: &str,
    ) -> Result<&EmissionFactor, FactorError> {
        let not_found = || FactorError::FactorNotFound {
            category,
            variant: variant.trim().to_lowercase(),
        };
        let variant = Variant::new(variant).map_err(|_| not_found())?;
        self.entries.get(&(category, variant)).ok_or_else(not_found)
    }

    /// Entries in canonical `(category, variant)` order.
    pub fn list(&self) -> impl Iterator<Item = &EmissionFactor> {
        self.entries.values()
    }

    /// Entries of one category, ordered by variant.
    pub fn in_category(&self, category: Category) -> impl Iterator<Item = &EmissionFactor> {
        self.entries
            .iter()
            .filter(move |((c, _), _)| *c == category)
            .map(|(_, f)| f)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn version(&self) -> u64 {
        self.version
    }
}
