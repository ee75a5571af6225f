//! Carbon-footprint accounting primitives.
//!
//! Everything in this crate is pure computation over in-memory values and
//! builds without `std` (an allocator is required). Parsing of on-disk
//! formats, the durable event log and the HTTP surface live in the
//! `footprint-server` crate.
//!
//! All masses are kilograms of CO2-equivalent. Ledger amounts use the
//! fixed-point [`Co2e`] type so that totals are exact under any grouping.

#![no_std]

extern crate alloc;

pub mod barcode;
pub mod bill;
pub mod factor;
pub mod journal;
pub mod ledger;
pub mod menu;
pub mod ranking;
pub mod timestamp;
pub mod trip;
pub mod units;

pub use barcode::{Barcode, BarcodeError, Catalog, Product};
pub use bill::{BillError, BillReading, BillText, TariffTable};
pub use factor::{Category, EmissionFactor, FactorError, FactorKey, FactorRegistry, Unit, Variant};
pub use journal::{EntryPatch, EntryState, Journal, JournalEntry, JournalError};
pub use ledger::{
    FootprintEvent, LeaderboardEntry, Ledger, LedgerError, Period, PeriodKind, Scope, Source, Tip,
    TipCategory, TipRules, UserDirectory, UserProfile, Window,
};
pub use menu::{IngredientQuantity, Menu, MenuError, MenuItem, ScoredMenuItem};
pub use timestamp::Timestamp;
pub use trip::{
    AlternativeSuggestion, DistanceProvider, GeoPoint, GreatCircle, TripError, TripRecord,
    TripRequest,
};
pub use units::Co2e;
