//! On-disk reference data: emission factors, product catalog and tariffs
//! (CSV), menus and tip rules (JSON).
//!
//! CSV files are UTF-8 with a fixed header; lines starting with `#` are
//! skipped. Decimals must be plain (`12.5`, no exponents or separators).

use std::collections::BTreeMap;
use std::str::FromStr;

use footprint_core::barcode::{Barcode, BarcodeError, Catalog, Product};
use footprint_core::bill::TariffTable;
use footprint_core::factor::{Category, EmissionFactor, FactorRegistry, Unit, Variant};
use footprint_core::ledger::TipRules;
use footprint_core::menu::{Menu, MenuError};
use footprint_core::units::{is_plain_decimal, parse_plain_decimal};
use rust_decimal::Decimal;
use serde::Deserialize;

pub const FACTORS_HEADER: [&str; 5] = [
    "category",
    "variant",
    "unit",
    "kg_co2e_per_unit",
    "source_note",
];
pub const CATALOG_HEADER: [&str; 4] = ["barcode", "name", "category", "footprint_kg"];
pub const TARIFFS_HEADER: [&str; 2] = ["region", "tariff_per_kwh"];

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("line {line}: expected header `{expected}`")]
    BadHeader { line: u64, expected: String },
    #[error("line {line}: malformed row")]
    MalformedRow { line: u64 },
    #[error("line {line}: duplicate key {key}")]
    DuplicateKey { line: u64, key: String },
    #[error("line {line}: unknown category {value:?}")]
    UnknownCategory { line: u64, value: String },
    #[error("line {line}: unknown unit {value:?}")]
    UnknownUnit { line: u64, value: String },
    #[error("line {line}: value must be finite and non-negative (positive for tariffs)")]
    InvalidFactor { line: u64 },
    #[error("line {line}: {source}")]
    InvalidBarcode { line: u64, source: BarcodeError },
    #[error("line {line}: {reason}")]
    InvalidRecord { line: u64, reason: String },
    #[error("duplicate restaurant {0:?}")]
    DuplicateRestaurant(String),
    #[error("menu {restaurant}: {source}")]
    InvalidMenu {
        restaurant: String,
        source: MenuError,
    },
    #[error("tip threshold must be within [0, 1]")]
    InvalidThreshold,
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Data rows with their 1-based line numbers, after checking the header.
/// Completely empty input is treated as a header-only file.
fn rows(text: &str, header: &[&str]) -> Result<Vec<(u64, csv::StringRecord)>, LoadError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    let mut seen_header = false;
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if !seen_header {
            let matches = record.len() == header.len()
                && record
                    .iter()
                    .zip(header)
                    .all(|(got, want)| got.trim() == *want);
            if !matches {
                return Err(LoadError::BadHeader {
                    line,
                    expected: header.join(","),
                });
            }
            seen_header = true;
            continue;
        }
        if record.len() != header.len() {
            return Err(LoadError::MalformedRow { line });
        }
        out.push((line, record));
    }
    Ok(out)
}

/// Parses an emission-factor table. The registry comes back at version 1.
pub fn load_factors(text: &str) -> Result<FactorRegistry, LoadError> {
    let mut factors = Vec::new();
    let mut seen: BTreeMap<(Category, Variant), u64> = BTreeMap::new();
    for (line, row) in rows(text, &FACTORS_HEADER)? {
        let category = Category::from_str(&row[0]).map_err(|_| LoadError::UnknownCategory {
            line,
            value: row[0].trim().to_string(),
        })?;
        let variant = Variant::new(&row[1]).map_err(|e| LoadError::InvalidRecord {
            line,
            reason: e.to_string(),
        })?;
        let unit = Unit::from_str(&row[2]).map_err(|_| LoadError::UnknownUnit {
            line,
            value: row[2].trim().to_string(),
        })?;
        let value = parse_plain_decimal(row[3].trim()).ok_or(LoadError::MalformedRow { line })?;
        let factor = EmissionFactor::new(category, variant.as_str(), unit, value, row[4].trim())
            .map_err(|_| LoadError::InvalidFactor { line })?;
        if seen.insert((category, variant.clone()), line).is_some() {
            return Err(LoadError::DuplicateKey {
                line,
                key: format!("{category}/{variant}"),
            });
        }
        factors.push(factor);
    }
    FactorRegistry::from_factors(factors).map_err(|e| LoadError::InvalidRecord {
        line: 0,
        reason: e.to_string(),
    })
}

/// Canonical CSV form of a registry, rows in (category, variant) order.
pub fn write_factors(registry: &FactorRegistry) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(FACTORS_HEADER).expect("in-memory write");
    for f in registry.list() {
        w.write_record([
            f.category().as_str(),
            f.variant(),
            f.unit().as_str(),
            &f.kg_co2e_per_unit.to_string(),
            &f.source_note,
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

pub fn load_catalog(text: &str) -> Result<Catalog, LoadError> {
    let mut catalog = Catalog::new();
    for (line, row) in rows(text, &CATALOG_HEADER)? {
        let barcode =
            Barcode::parse(&row[0]).map_err(|source| LoadError::InvalidBarcode { line, source })?;
        let footprint =
            parse_plain_decimal(row[3].trim()).ok_or(LoadError::MalformedRow { line })?;
        if !(footprint.is_finite() && footprint >= 0.0) {
            return Err(LoadError::InvalidFactor { line });
        }
        let product = Product::new(barcode, &row[1], &row[2], footprint).map_err(|e| {
            LoadError::InvalidRecord {
                line,
                reason: e.to_string(),
            }
        })?;
        catalog
            .insert(product)
            .map_err(|_| LoadError::DuplicateKey {
                line,
                key: barcode.to_string(),
            })?;
    }
    Ok(catalog)
}

pub fn write_catalog(catalog: &Catalog) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(CATALOG_HEADER).expect("in-memory write");
    for p in catalog.products() {
        w.write_record([
            p.barcode.to_string().as_str(),
            &p.name,
            &p.category,
            &p.footprint_kg.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

pub fn load_tariffs(text: &str) -> Result<TariffTable, LoadError> {
    let mut table = TariffTable::new();
    for (line, row) in rows(text, &TARIFFS_HEADER)? {
        let raw = row[1].trim();
        if !is_plain_decimal(raw) {
            return Err(LoadError::MalformedRow { line });
        }
        let tariff = Decimal::from_str(raw).map_err(|_| LoadError::MalformedRow { line })?;
        let region = row[0].trim().to_lowercase();
        if table.get(&region).is_ok() {
            return Err(LoadError::DuplicateKey { line, key: region });
        }
        table.insert(&region, tariff).map_err(|e| match e {
            footprint_core::BillError::InvalidTariff(_) => LoadError::InvalidFactor { line },
            other => LoadError::InvalidRecord {
                line,
                reason: other.to_string(),
            },
        })?;
    }
    Ok(table)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum MenuFile {
    Many(Vec<Menu>),
    One(Menu),
}

/// A menus file holds one menu object or an array of them.
pub fn load_menus(text: &str) -> Result<BTreeMap<String, Menu>, LoadError> {
    let menus = match serde_json::from_str::<MenuFile>(text)? {
        MenuFile::Many(v) => v,
        MenuFile::One(m) => vec![m],
    };
    let mut out = BTreeMap::new();
    for raw in menus {
        let restaurant = raw.restaurant_id.clone();
        let menu =
            Menu::new(&raw.restaurant_id, raw.items).map_err(|source| LoadError::InvalidMenu {
                restaurant: restaurant.clone(),
                source,
            })?;
        if out.contains_key(&menu.restaurant_id) {
            return Err(LoadError::DuplicateRestaurant(menu.restaurant_id));
        }
        out.insert(menu.restaurant_id.clone(), menu);
    }
    Ok(out)
}

pub fn load_tip_rules(text: &str) -> Result<TipRules, LoadError> {
    let rules: TipRules = serde_json::from_str(text)?;
    if !(0.0..=1.0).contains(&rules.threshold) {
        return Err(LoadError::InvalidThreshold);
    }
    Ok(rules)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const HEADER: &str = "category,variant,unit,kg_co2e_per_unit,source_note\n";

    #[test]
    fn header_only_and_empty() {
        for text in [
            "",
            HEADER,
            "# comment\ncategory,variant,unit,kg_co2e_per_unit,source_note\n",
        ] {
            let r = load_factors(text).unwrap();
            assert!(r.is_empty());
            assert_eq!(r.version(), 1);
        }
    }

    #[test]
    fn two_rows() {
        let text = format!("{HEADER}travel,Car:Petrol,km,0.192,seed\n# skip me\nfood_ingredient,beef,kg,27.0,\"Poore, Nemecek\"\n");
        let r = load_factors(&text).unwrap();
        assert_eq!(r.len(), 2);
        let beef = r.lookup(Category::FoodIngredient, "beef").unwrap();
        assert_eq!(beef.source_note, "Poore, Nemecek");
        assert_eq!(
            r.lookup(Category::Travel, "car:petrol").unwrap().variant(),
            "car:petrol"
        );
    }

    /// Oracle for duplicate detection: scan data rows in order and report
    /// the line of the first (category, lowercase variant) seen twice.
    fn first_duplicate_line(text: &str) -> Option<u64> {
        let mut seen = std::collections::HashSet::new();
        for (i, line) in text.lines().enumerate() {
            if i == 0 || line.starts_with('#') || line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if !seen.insert((cols[0].to_string(), cols[1].to_lowercase())) {
                return Some(i as u64 + 1);
            }
        }
        None
    }

    #[test]
    fn duplicate_key() {
        let text =
            format!("{HEADER}travel,car:petrol,km,0.192,seed\ntravel,car:petrol,km,0.2,seed\n");
        assert_eq!(first_duplicate_line(&text), Some(3));
        match load_factors(&text) {
            Err(LoadError::DuplicateKey { line, key }) => {
                assert_eq!(line, 3);
                assert_eq!(key, "travel/car:petrol");
            }
            other => panic!("{other:?}"),
        }
        let case =
            format!("{HEADER}travel,car:petrol,km,0.192,seed\ntravel,CAR:PETROL,km,0.2,seed\n");
        assert!(matches!(
            load_factors(&case),
            Err(LoadError::DuplicateKey { line: 3, .. })
        ));
    }

    #[test]
    fn error_taxonomy() {
        let cases = [
            ("travel,car:petrol,km,0.192\n", "malformed"),
            ("travel,car:petrol,km,1e3,x\n", "malformed"),
            ("travel,car:petrol,km,1,000,x\n", "malformed"),
            ("travel,car:petrol,km,abc,x\n", "malformed"),
            ("boat,car:petrol,km,0.1,x\n", "category"),
            ("travel,car:petrol,mile,0.1,x\n", "unit"),
            ("travel,car:petrol,km,-0.1,x\n", "invalid"),
        ];
        for (row, kind) in cases {
            let err = load_factors(&format!("{HEADER}{row}")).unwrap_err();
            let ok = match kind {
                "malformed" => matches!(err, LoadError::MalformedRow { line: 2 }),
                "category" => matches!(err, LoadError::UnknownCategory { line: 2, .. }),
                "unit" => matches!(err, LoadError::UnknownUnit { line: 2, .. }),
                _ => matches!(err, LoadError::InvalidFactor { line: 2 }),
            };
            assert!(ok, "{row}: {err:?}");
        }
        assert!(matches!(
            load_factors("a,b\n"),
            Err(LoadError::BadHeader { line: 1, .. })
        ));
    }

    #[test]
    fn catalog_round_trip() {
        let text = "barcode,name,category,footprint_kg\n4006381333931,\"Oat drink, 1L\",Dairy,0.9\n036000291452,Cola,drinks,0.35\n";
        let cat = load_catalog(text).unwrap();
        let back = load_catalog(&write_catalog(&cat)).unwrap();
        assert_eq!(back, cat);
        let code: Barcode = "0036000291452".parse().unwrap();
        assert_eq!(back.lookup(&code).unwrap().name, "Cola");
    }

    #[test]
    fn catalog_errors() {
        let h = "barcode,name,category,footprint_kg\n";
        assert!(matches!(
            load_catalog(&format!("{h}4006381333932,x,y,1\n")),
            Err(LoadError::InvalidBarcode {
                line: 2,
                source: BarcodeError::ChecksumMismatch { .. }
            })
        ));
        assert!(matches!(
            load_catalog(&format!("{h}4006381333931,x,y,1\n4006381333931,z,y,2\n")),
            Err(LoadError::DuplicateKey { line: 3, .. })
        ));
        assert!(matches!(
            load_catalog(&format!("{h}4006381333931,x,y,-1\n")),
            Err(LoadError::InvalidFactor { line: 2 })
        ));
        assert!(matches!(
            load_catalog(&format!("{h}4006381333931,x,y\n")),
            Err(LoadError::MalformedRow { line: 2 })
        ));
    }

    #[test]
    fn tariffs() {
        let t = load_tariffs("region,tariff_per_kwh\nIN-KA,7.25\nus-ca,0.32\n").unwrap();
        assert_eq!(t.get("in-ka").unwrap(), Decimal::new(725, 2));
        assert!(matches!(
            load_tariffs("region,tariff_per_kwh\na,0\n"),
            Err(LoadError::InvalidFactor { line: 2 })
        ));
        assert!(matches!(
            load_tariffs("region,tariff_per_kwh\na,1\nA,2\n"),
            Err(LoadError::DuplicateKey { line: 3, .. })
        ));
        assert!(matches!(
            load_tariffs("region,tariff_per_kwh\na,1e2\n"),
            Err(LoadError::MalformedRow { line: 2 })
        ));
    }

    #[test]
    fn menus_one_or_many() {
        let one = r#"{"restaurant_id":"r1","items":[{"id":"a","name":"A","category":"Main","ingredients":[{"ingredient":"Rice","grams":100}]}]}"#;
        let menus = load_menus(one).unwrap();
        assert_eq!(menus["r1"].items[0].category, "main");
        assert_eq!(menus["r1"].items[0].ingredients[0].ingredient, "rice");
        let many = format!("[{one},{}]", one.replace("r1", "r2"));
        assert_eq!(load_menus(&many).unwrap().len(), 2);
        let dup = format!("[{one},{one}]");
        assert!(matches!(
            load_menus(&dup),
            Err(LoadError::DuplicateRestaurant(_))
        ));
        let empty = r#"{"restaurant_id":"r1","items":[{"id":"a","name":"A","category":"m","ingredients":[]}]}"#;
        assert!(matches!(
            load_menus(empty),
            Err(LoadError::InvalidMenu { .. })
        ));
    }

    #[test]
    fn tip_rules() {
        let rules = load_tip_rules(
            r#"{"threshold":0.4,"messages":{"trip":"walk more"},"onboarding":"hi"}"#,
        )
        .unwrap();
        assert_eq!(rules.messages.len(), 1);
        assert!(matches!(
            load_tip_rules(r#"{"threshold":1.5,"messages":{},"onboarding":"hi"}"#),
            Err(LoadError::InvalidThreshold)
        ));
    }

    fn row_strategy() -> impl Strategy<Value = (usize, String, usize, u32, u32, String)> {
        (
            0usize..4,
            "[a-zA-Z][a-zA-Z0-9:_-]{0,10}",
            0usize..4,
            0u32..100_000,
            0u32..1000,
            "[a-zA-Z ,\"]{0,12}",
        )
    }

    proptest! {
        #[test]
        fn parse_print_parse_is_stable(rows in proptest::collection::vec(row_strategy(), 0..30)) {
            let cats = ["travel", "food_ingredient", "electricity", "product"];
            let units = ["km", "kg", "kWh", "item"];
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
            w.write_record(FACTORS_HEADER).unwrap();
            let mut keys = std::collections::HashSet::new();
            let mut distinct = 0;
            for (c, v, u, int, frac, note) in &rows {
                if keys.insert((*c, v.to_lowercase())) {
                    distinct += 1;
                    w.write_record([cats[*c], v, units[*u], &format!("{int}.{frac}"), note]).unwrap();
                }
            }
            let text = String::from_utf8(w.into_inner().unwrap()).unwrap();
            let first = load_factors(&text).unwrap();
            prop_assert_eq!(first.len(), distinct);
            let printed = write_factors(&first);
            let second = load_factors(&printed).unwrap();
            prop_assert_eq!(&second, &first);
            prop_assert_eq!(write_factors(&second), printed);
            for (c, v, _, _, _, _) in &rows {
                prop_assert!(first.lookup(cats[*c].parse().unwrap(), v).is_ok());
            }
        }
    }
}
