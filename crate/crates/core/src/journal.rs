//! Per-user grocery journal. Entries start pending; purchasing one commits
//! its footprint to the ledger exactly once and freezes it.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::barcode::{Barcode, Catalog};
use crate::ledger::{FootprintEvent, Ledger, LedgerError, Source};
use crate::timestamp::Timestamp;
use crate::units::Co2e;

/// Prefix of the ledger `detail` annotation that ties a purchase event to
/// its journal entry.
pub const PURCHASE_DETAIL_PREFIX: &str = "journal:";

/// The entry id named by a purchase event's detail, if any.
pub fn purchased_entry_id(detail: &str) -> Option<&str> {
    detail.strip_prefix(PURCHASE_DETAIL_PREFIX)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum EntryState {
    Pending,
    Purchased,
}

#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct JournalEntry {
    pub entry_id: String,
    pub user_id: String,
    pub label: String,
    pub barcode: Option<Barcode>,
    pub quantity: u32,
    pub footprint_kg_each: Co2e,
    pub state: EntryState,
    pub created_at: Timestamp,
    pub updated_at: Timestamp,
}

impl JournalEntry {
    pub fn total(&self) -> Option<Co2e> {
        self.footprint_kg_each.checked_mul(self.quantity)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EntryPatch {
    pub label: Option<String>,
    pub quantity: Option<u32>,
    pub barcode: Option<Barcode>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum JournalError {
    #[error("journal entry {0:?} not found")]
    EntryNotFound(String),
    #[error("journal entry {0:?} is already purchased")]
    EntryImmutable(String),
    #[error("quantity must be at least 1")]
    InvalidQuantity,
    #[error("label must not be empty")]
    InvalidLabel,
    #[error("product {0} not found")]
    ProductNotFound(Barcode),
    #[error("entry needs a barcode or a per-item footprint")]
    MissingFootprint,
    #[error("entry footprint is out of range")]
    FootprintOverflow,
    #[error("journal entry {0:?} belongs to another user")]
    NotOwner(String),
    #[error("journal entry id {0:?} already used")]
    DuplicateEntryId(String),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
}

/// Every user's entries, keyed by entry id.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Journal {
    entries: BTreeMap<String, JournalEntry>,
}

fn resolve_footprint(
    barcode: Option<&Barcode>,
    manual: Option<Co2e>,
    catalog: &Catalog,
) -> Result<Co2e, JournalError> {
    match (barcode, manual) {
        (Some(code), _) => {
            let product = catalog
                .lookup(code)
                .map_err(|_| JournalError::ProductNotFound(*code))?;
            Co2e::from_kg(product.footprint_kg).ok_or(JournalError::FootprintOverflow)
        }
        (None, Some(each)) => Ok(each),
        (None, None) => Err(JournalError::MissingFootprint),
    }
}

fn clean_label(label: &str) -> Result<String, JournalError> {
    let label = label.trim();
    if label.is_empty() {
        Err(JournalError::InvalidLabel)
    } else {
        Ok(label.to_string())
    }
}

impl Journal {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a pending entry. With a barcode the per-item footprint comes
    /// from the catalog and `manual_each` is ignored; without one,
    /// `manual_each` is required. Nothing is committed to the ledger.
    #[allow(clippy::too_many_arguments)]
    pub fn create(
        &mut self,
        entry_id: &str,
        user_id: &str,
        label: &str,
        barcode: Option<Barcode>,
        quantity: u32,
        manual_each: Option<Co2e>,
        catalog: &Catalog,
        now: Timestamp,
    ) -> Result<&JournalEntry, JournalError> {
        if quantity == 0 {
            return Err(JournalError::InvalidQuantity);
        }
        if self.entries.contains_key(entry_id) {
            return Err(JournalError::DuplicateEntryId(entry_id.to_string()));
        }
        let label = clean_label(label)?;
        let footprint_kg_each = resolve_footprint(barcode.as_ref(), manual_each, catalog)?;
        footprint_kg_each
            .checked_mul(quantity)
            .ok_or(JournalError::FootprintOverflow)?;
        let entry = JournalEntry {
            entry_id: entry_id.to_string(),
            user_id: user_id.to_string(),
            label,
            barcode,
            quantity,
            footprint_kg_each,
            state: EntryState::Pending,
            created_at: now,
            updated_at: now,
        };
        Ok(self.entries.entry(entry_id.to_string()).or_insert(entry))
    }

    /// Restores an entry exactly as recorded, e.g. during log replay.
    pub fn restore(&mut self, entry: JournalEntry) {
        self.entries.insert(entry.entry_id.clone(), entry);
    }

    pub fn get(&self, entry_id: &str, actor: &str) -> Result<&JournalEntry, JournalError> {
        let entry = self
            .entries
            .get(entry_id)
            .ok_or_else(|| JournalError::EntryNotFound(entry_id.to_string()))?;
        if entry.user_id != actor {
            return Err(JournalError::NotOwner(entry_id.to_string()));
        }
        Ok(entry)
    }

    fn get_mut(&mut self, entry_id: &str, actor: &str) -> Result<&mut JournalEntry, JournalError> {
        self.get(entry_id, actor)?;
        Ok(self.entries.get_mut(entry_id).expect("checked above"))
    }

    /// A user's entries ordered by creation time, then id.
    pub fn list(&self, user_id: &str) -> Vec<&JournalEntry> {
        let mut out: Vec<&JournalEntry> = self
            .entries
            .values()
            .filter(|e| e.user_id == user_id)
            .collect();
        out.sort_by(|a, b| {
            a.created_at
                .cmp(&b.created_at)
                .then_with(|| a.entry_id.cmp(&b.entry_id))
        });
        out
    }

    pub fn entries(&self) -> impl Iterator<Item = &JournalEntry> {
        self.entries.values()
    }

    /// Applies `patch` to a pending entry. A changed barcode re-resolves the
    /// per-item footprint from the catalog.
    pub fn update(
        &mut self,
        entry_id: &str,
        actor: &str,
        patch: EntryPatch,
        catalog: &Catalog,
        now: Timestamp,
    ) -> Result<&JournalEntry, JournalError> {
        let entry = self.get(entry_id, actor)?;
        if entry.state == EntryState::Purchased {
            return Err(JournalError::EntryImmutable(entry_id.to_string()));
        }
        let mut next = entry.clone();
        if let Some(label) = patch.label {
            next.label = clean_label(&label)?;
        }
        if let Some(quantity) = patch.quantity {
            if quantity == 0 {
                return Err(JournalError::InvalidQuantity);
            }
            next.quantity = quantity;
        }
        if let Some(code) = patch.barcode {
            if next.barcode != Some(code) {
                next.footprint_kg_each = resolve_footprint(Some(&code), None, catalog)?;
                next.barcode = Some(code);
            }
        }
        next.total().ok_or(JournalError::FootprintOverflow)?;
        next.updated_at = now.max(next.updated_at);
        let slot = self.get_mut(entry_id, actor)?;
        *slot = next;
        Ok(slot)
    }

    /// Removes an entry in either state. Ledger events already committed by
    /// a purchase stay.
    pub fn delete(&mut self, entry_id: &str, actor: &str) -> Result<JournalEntry, JournalError> {
        self.get(entry_id, actor)?;
        Ok(self.entries.remove(entry_id).expect("checked above"))
    }

    /// The ledger event purchasing this entry would append. Does not mutate.
    pub fn purchase_event(
        &self,
        entry_id: &str,
        actor: &str,
        event_id: &str,
        at: Timestamp,
    ) -> Result<FootprintEvent, JournalError> {
        let entry = self.get(entry_id, actor)?;
        if entry.state == EntryState::Purchased {
            return Err(JournalError::EntryImmutable(entry_id.to_string()));
        }
        Ok(FootprintEvent {
            event_id: event_id.to_string(),
            user_id: entry.user_id.clone(),
            source: Source::Purchase,
            kg_co2e: entry.total().ok_or(JournalError::FootprintOverflow)?,
            occurred_at: at,
            detail: format!("{PURCHASE_DETAIL_PREFIX}{entry_id}"),
        })
    }

    /// Flips a pending entry to purchased. Used after the purchase event is
    /// durable, and when replaying purchase events.
    pub fn mark_purchased(
        &mut self,
        entry_id: &str,
        at: Timestamp,
    ) -> Result<&JournalEntry, JournalError> {
        let entry = self
            .entries
            .get_mut(entry_id)
            .ok_or_else(|| JournalError::EntryNotFound(entry_id.to_string()))?;
        if entry.state == EntryState::Purchased {
            return Err(JournalError::EntryImmutable(entry_id.to_string()));
        }
        entry.state = EntryState::Purchased;
        entry.updated_at = at.max(entry.updated_at);
        Ok(entry)
    }

    /// Purchase against an in-memory ledger: append the event, then freeze
    /// the entry. A second purchase fails before touching the ledger.
    pub fn purchase(
        &mut self,
        entry_id: &str,
        actor: &str,
        event_id: &str,
        at: Timestamp,
        ledger: &mut Ledger,
    ) -> Result<FootprintEvent, JournalError> {
        let event = self.purchase_event(entry_id, actor, event_id, at)?;
        ledger.append(event.clone())?;
        self.mark_purchased(entry_id, at)?;
        Ok(event)
    }
}
