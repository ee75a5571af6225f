//! Electricity bills: the payable total from bill text, the tariff
//! inversion to kWh, and the grid-intensity footprint.
//!
//! Input is the text an OCR pass (or a user) produced; images are not
//! handled here.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::str::FromStr;

use rust_decimal::prelude::ToPrimitive;
use rust_decimal::{Decimal, RoundingStrategy};

use crate::factor::{Category, FactorError, FactorRegistry, Unit};

/// Places kept in the kWh quotient.
pub const KWH_DECIMALS: u32 = 3;

/// Labels that introduce the payable amount, matched case-insensitively
/// against the start of a line.
pub const TOTAL_LABELS: [&str; 6] = [
    "total",
    "total amount",
    "amount due",
    "total amount due",
    "net amount",
    "grand total",
];

/// Currency markers accepted in front of the amount. Longer spellings come
/// first so that `rs.` wins over `rs`.
const CURRENCY_MARKERS: [&str; 11] = [
    "₹", "$", "€", "£", "¥", "rs.", "rs", "inr", "usd", "eur", "gbp",
];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BillError {
    #[error("no total amount found in bill text")]
    TotalNotFound,
    #[error("no tariff for region {0:?}")]
    RegionUnknown(String),
    #[error("region must not be empty")]
    MissingRegion,
    #[error("tariff for {0:?} must be positive")]
    InvalidTariff(String),
    #[error("duplicate tariff region {0:?}")]
    DuplicateRegion(String),
    #[error("bill total must not be negative")]
    InvalidCost,
    #[error(transparent)]
    Factor(#[from] FactorError),
}

fn normalize_region(raw: &str) -> Result<String, BillError> {
    let r = raw.trim().to_lowercase();
    if r.is_empty() || r.chars().any(char::is_whitespace) {
        Err(BillError::MissingRegion)
    } else {
        Ok(r)
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BillText {
    pub lines: Vec<String>,
    pub region: String,
}

impl BillText {
    pub fn new(lines: Vec<String>, region: &str) -> Result<Self, BillError> {
        Ok(BillText {
            lines,
            region: normalize_region(region)?,
        })
    }

    /// Splits pasted text on line breaks.
    pub fn from_text(text: &str, region: &str) -> Result<Self, BillError> {
        Self::new(text.lines().map(str::to_string).collect(), region)
    }
}

/// Price per kWh by region.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TariffTable {
    rates: BTreeMap<String, Decimal>,
}

impl TariffTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, region: &str, tariff_per_kwh: Decimal) -> Result<(), BillError> {
        let region = normalize_region(region)?;
        if tariff_per_kwh <= Decimal::ZERO {
            return Err(BillError::InvalidTariff(region));
        }
        if self.rates.contains_key(&region) {
            return Err(BillError::DuplicateRegion(region));
        }
        self.rates.insert(region, tariff_per_kwh);
        Ok(())
    }

    pub fn get(&self, region: &str) -> Result<Decimal, BillError> {
        let key = region.trim().to_lowercase();
        self.rates
            .get(&key)
            .copied()
            .ok_or(BillError::RegionUnknown(key))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Decimal)> {
        self.rates.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BillReading {
    pub region: String,
    #[cfg_attr(feature = "serde", serde(with = "rust_decimal::serde::float"))]
    pub total_cost: Decimal,
    #[cfg_attr(feature = "serde", serde(with = "rust_decimal::serde::float"))]
    pub tariff_per_kwh: Decimal,
    #[cfg_attr(feature = "serde", serde(with = "rust_decimal::serde::float"))]
    pub kwh: Decimal,
    pub footprint_kg: f64,
}

/// `<label>[:] [currency]<amount>` where the amount is digits with optional
/// `,` thousands groups and an optional two-digit fraction. The whole
/// (whitespace-collapsed) line must match, so "subtotal 900.00" does not.
fn match_total_line(line: &str) -> Option<Decimal> {
    let norm = line
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase();
    TOTAL_LABELS.iter().find_map(|label| {
        let rest = norm.strip_prefix(label)?;
        if !(rest.starts_with(' ') || rest.starts_with(':')) {
            return None;
        }
        let rest = rest.trim_start();
        let rest = rest.strip_prefix(':').unwrap_or(rest).trim_start();
        let rest = CURRENCY_MARKERS
            .iter()
            .find_map(|m| rest.strip_prefix(m))
            .unwrap_or(rest)
            .trim_start();
        parse_amount(rest)
    })
}

fn parse_amount(text: &str) -> Option<Decimal> {
    let (int, frac) = match text.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (text, None),
    };
    if let Some(f) = frac {
        if f.len() != 2 || !f.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
    }
    let all_digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    let grouped = {
        let mut groups = int.split(',');
        let head = groups.next().unwrap_or("");
        int.contains(',')
            && all_digits(head)
            && head.len() <= 3
            && groups.all(|g| g.len() == 3 && all_digits(g))
    };
    if !(all_digits(int) || grouped) {
        return None;
    }
    let digits: String = int.chars().filter(|c| *c != ',').collect();
    let plain = match frac {
        Some(f) => format!("{digits}.{f}"),
        None => digits,
    };
    Decimal::from_str(&plain).ok()
}

/// The amount on the last line that matches the total grammar. Bills list
/// subtotals first, so a later match always wins.
pub fn extract_total<S: AsRef<str>>(lines: &[S]) -> Result<Decimal, BillError> {
    lines
        .iter()
        .rev()
        .find_map(|l| match_total_line(l.as_ref()))
        .ok_or(BillError::TotalNotFound)
}

/// `total_cost / tariff`, rounded half-up to [`KWH_DECIMALS`] places.
pub fn cost_to_kwh(
    total_cost: Decimal,
    region: &str,
    tariffs: &TariffTable,
) -> Result<Decimal, BillError> {
    if total_cost.is_sign_negative() && !total_cost.is_zero() {
        return Err(BillError::InvalidCost);
    }
    let tariff = tariffs.get(region)?;
    Ok(kwh_for(total_cost, tariff))
}

fn kwh_for(total_cost: Decimal, tariff: Decimal) -> Decimal {
    let mut kwh = (total_cost / tariff)
        .round_dp_with_strategy(KWH_DECIMALS, RoundingStrategy::MidpointAwayFromZero);
    kwh.rescale(KWH_DECIMALS);
    kwh
}

/// Full pipeline: total, kWh, then kWh times the `grid:<region>` factor.
pub fn bill_footprint(
    text: &BillText,
    tariffs: &TariffTable,
    registry: &FactorRegistry,
) -> Result<BillReading, BillError> {
    let total_cost = extract_total(&text.lines)?;
    reading_for_cost(total_cost, &text.region, tariffs, registry)
}

/// The pipeline from an already-known total.
pub fn reading_for_cost(
    total_cost: Decimal,
    region: &str,
    tariffs: &TariffTable,
    registry: &FactorRegistry,
) -> Result<BillReading, BillError> {
    let region = normalize_region(region)?;
    let tariff_per_kwh = tariffs.get(&region)?;
    let kwh = cost_to_kwh(total_cost, &region, tariffs)?;
    let factor = registry
        .lookup(Category::Electricity, &format!("grid:{region}"))?
        .expect_unit(Unit::KWh)?;
    let footprint_kg = kwh.to_f64().unwrap_or(f64::NAN) * factor.kg_co2e_per_unit;
    Ok(BillReading {
        region,
        total_cost,
        tariff_per_kwh,
        kwh,
        footprint_kg,
    })
}
