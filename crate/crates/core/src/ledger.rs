//! Append-only footprint ledger with period totals, leaderboards, area
//! averages and rule-based tips.
//!
//! Amounts are [`Co2e`] milligram counts, so every total is an exact
//! integer sum and does not depend on summation order or grouping.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use time::{Date, Duration, Month};

use crate::timestamp::Timestamp;
use crate::units::Co2e;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Source {
    Trip,
    Meal,
    Electricity,
    Purchase,
}

impl Source {
    pub const ALL: [Source; 4] = [
        Source::Trip,
        Source::Meal,
        Source::Electricity,
        Source::Purchase,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Source::Trip => "trip",
            Source::Meal => "meal",
            Source::Electricity => "electricity",
            Source::Purchase => "purchase",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Source {
    type Err = LedgerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Source::ALL
            .into_iter()
            .find(|src| src.as_str() == s)
            .ok_or(LedgerError::InvalidEvent("unknown source"))
    }
}

/// One footprint-bearing action. Immutable once appended.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FootprintEvent {
    pub event_id: String,
    pub user_id: String,
    pub source: Source,
    pub kg_co2e: Co2e,
    pub occurred_at: Timestamp,
    #[cfg_attr(feature = "serde", serde(default))]
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LedgerError {
    #[error("event id {0:?} already recorded")]
    DuplicateEventId(String),
    #[error("invalid event: {0}")]
    InvalidEvent(&'static str),
    #[error("no users in region {0:?}")]
    EmptyRegion(String),
    #[error("user {0:?} already exists")]
    DuplicateUser(String),
    #[error("invalid profile: {0}")]
    InvalidProfile(&'static str),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum PeriodKind {
    Weekly,
    Monthly,
}

impl FromStr for PeriodKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "weekly" => Ok(PeriodKind::Weekly),
            "monthly" => Ok(PeriodKind::Monthly),
            _ => Err(()),
        }
    }
}

impl PeriodKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PeriodKind::Weekly => "weekly",
            PeriodKind::Monthly => "monthly",
        }
    }
}

/// A leaderboard period: the ISO week (Monday 00:00 UTC onwards) or the
/// UTC calendar month containing `anchor`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Period {
    pub kind: PeriodKind,
    pub anchor: Date,
}

impl Period {
    pub fn weekly(anchor: Date) -> Self {
        Period {
            kind: PeriodKind::Weekly,
            anchor,
        }
    }

    pub fn monthly(anchor: Date) -> Self {
        Period {
            kind: PeriodKind::Monthly,
            anchor,
        }
    }

    pub fn containing(kind: PeriodKind, at: Timestamp) -> Self {
        Period {
            kind,
            anchor: at.date(),
        }
    }

    pub fn start_date(&self) -> Date {
        match self.kind {
            PeriodKind::Weekly => {
                let back = self.anchor.weekday().number_days_from_monday();
                self.anchor - Duration::days(i64::from(back))
            }
            PeriodKind::Monthly => self.anchor.replace_day(1).expect("day 1 exists"),
        }
    }

    pub fn end_date(&self) -> Date {
        let start = self.start_date();
        match self.kind {
            PeriodKind::Weekly => start + Duration::days(7),
            PeriodKind::Monthly => {
                let (year, month) = match start.month() {
                    Month::December => (start.year() + 1, Month::January),
                    m => (start.year(), m.next()),
                };
                Date::from_calendar_date(year, month, 1).expect("first of month exists")
            }
        }
    }

    pub fn window(&self) -> Window {
        Window {
            start: Timestamp::start_of(self.start_date()),
            end: Timestamp::start_of(self.end_date()),
        }
    }

    /// The period immediately after this one.
    pub fn next(&self) -> Period {
        Period {
            kind: self.kind,
            anchor: self.end_date(),
        }
    }
}

/// Half-open time range `[start, end)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Window {
    pub start: Timestamp,
    pub end: Timestamp,
}

impl Window {
    pub fn new(start: Timestamp, end: Timestamp) -> Self {
        Window { start, end }
    }

    pub fn contains(&self, at: Timestamp) -> bool {
        self.start <= at && at < self.end
    }
}

impl From<Period> for Window {
    fn from(p: Period) -> Self {
        p.window()
    }
}

impl From<&Period> for Window {
    fn from(p: &Period) -> Self {
        p.window()
    }
}

/// A user's total for a window. `event_count == 0` marks an empty total.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct UserTotal {
    pub total: Co2e,
    pub event_count: usize,
}

impl UserTotal {
    pub fn is_empty(&self) -> bool {
        self.event_count == 0
    }
}

/// Per-source subtotals for one user and window.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SourceTotals([Co2e; 4]);

impl SourceTotals {
    pub fn get(&self, source: Source) -> Co2e {
        self.0[source.index()]
    }

    pub fn total(&self) -> Co2e {
        self.0.iter().sum()
    }

    /// Fraction of the total per source, in [`Source::ALL`] order. All zero
    /// when the total is zero.
    pub fn shares(&self) -> [(Source, f64); 4] {
        let total = self.total().milligrams();
        Source::ALL.map(|s| {
            let share = if total == 0 {
                0.0
            } else {
                self.get(s).milligrams() as f64 / total as f64
            };
            (s, share)
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct UserProfile {
    pub user_id: String,
    pub display_name: String,
    pub region: String,
}

impl UserProfile {
    pub fn new(user_id: &str, display_name: &str, region: &str) -> Result<Self, LedgerError> {
        let user_id = user_id.trim();
        if user_id.is_empty() || user_id.chars().any(char::is_whitespace) {
            return Err(LedgerError::InvalidProfile(
                "user_id must be a non-empty token",
            ));
        }
        let region = region.trim().to_lowercase();
        if region.is_empty() {
            return Err(LedgerError::InvalidProfile("region must not be empty"));
        }
        Ok(UserProfile {
            user_id: user_id.to_string(),
            display_name: display_name.trim().to_string(),
            region,
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct UserDirectory {
    profiles: BTreeMap<String, UserProfile>,
}

impl UserDirectory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, profile: UserProfile) -> Result<(), LedgerError> {
        if self.profiles.contains_key(&profile.user_id) {
            return Err(LedgerError::DuplicateUser(profile.user_id));
        }
        self.profiles.insert(profile.user_id.clone(), profile);
        Ok(())
    }

    pub fn get(&self, user_id: &str) -> Option<&UserProfile> {
        self.profiles.get(user_id)
    }

    pub fn contains(&self, user_id: &str) -> bool {
        self.profiles.contains_key(user_id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &UserProfile> {
        self.profiles.values()
    }

    pub fn in_region<'a>(&'a self, region: &str) -> impl Iterator<Item = &'a UserProfile> + 'a {
        let region = region.trim().to_lowercase();
        self.profiles.values().filter(move |p| p.region == region)
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }
}

/// Who a leaderboard ranks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Scope {
    All,
    Friends(BTreeSet<String>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LeaderboardEntry {
    pub user_id: String,
    pub total_kg: Co2e,
    pub rank: u32,
}

/// Sorts ascending by total (ties displayed by user id) and assigns
/// competition ranks: equal totals share a rank and the next rank is
/// skipped, e.g. 1, 1, 3.
pub fn competition_rank(mut totals: Vec<(String, Co2e)>) -> Vec<LeaderboardEntry> {
    totals.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    let mut entries: Vec<LeaderboardEntry> = Vec::with_capacity(totals.len());
    for (i, (user_id, total_kg)) in totals.into_iter().enumerate() {
        let rank = match entries.last() {
            Some(prev) if prev.total_kg == total_kg => prev.rank,
            _ => i as u32 + 1,
        };
        entries.push(LeaderboardEntry {
            user_id,
            total_kg,
            rank,
        });
    }
    entries
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum TipCategory {
    Trip,
    Meal,
    Electricity,
    Purchase,
    Onboarding,
}

impl From<Source> for TipCategory {
    fn from(s: Source) -> Self {
        match s {
            Source::Trip => TipCategory::Trip,
            Source::Meal => TipCategory::Meal,
            Source::Electricity => TipCategory::Electricity,
            Source::Purchase => TipCategory::Purchase,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Tip {
    pub category: TipCategory,
    pub message: String,
    pub share: f64,
}

/// The tip rule table: a message per source, emitted when that source's
/// share of the period total is above `threshold`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TipRules {
    pub threshold: f64,
    pub messages: BTreeMap<Source, String>,
    pub onboarding: String,
}

impl Default for TipRules {
    fn default() -> Self {
        let messages = [
            (Source::Trip, "Most of your footprint is travel. Try walking, cycling, car pooling or public transport for short trips."),
            (Source::Meal, "Meals dominate your footprint. Swap one red-meat dish a week for a plant-based option."),
            (Source::Electricity, "Electricity is your largest source. Check standby loads and switch to efficient appliances."),
            (Source::Purchase, "Shopping drives your footprint. Scan products and pick the lower-carbon alternative."),
        ]
        .into_iter()
        .map(|(s, m)| (s, m.to_string()))
        .collect();
        TipRules {
            threshold: 0.4,
            messages,
            onboarding:
                "Log a trip, a meal, a bill or a purchase to start tracking your footprint."
                    .to_string(),
        }
    }
}

/// The event store. Appends are the only mutation.
#[derive(Clone, Debug, Default)]
pub struct Ledger {
    events: Vec<FootprintEvent>,
    ids: BTreeSet<String>,
    by_user: BTreeMap<String, Vec<usize>>,
}

impl Ledger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn append(&mut self, event: FootprintEvent) -> Result<(), LedgerError> {
        self.check(&event)?;
        self.ids.insert(event.event_id.clone());
        self.by_user
            .entry(event.user_id.clone())
            .or_default()
            .push(self.events.len());
        self.events.push(event);
        Ok(())
    }

    /// The checks [`append`](Self::append) performs, without appending.
    pub fn check(&self, event: &FootprintEvent) -> Result<(), LedgerError> {
        if event.event_id.is_empty() {
            return Err(LedgerError::InvalidEvent("event_id is empty"));
        }
        if event.user_id.is_empty() {
            return Err(LedgerError::InvalidEvent("user_id is empty"));
        }
        if self.ids.contains(&event.event_id) {
            return Err(LedgerError::DuplicateEventId(event.event_id.clone()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Events in append order.
    pub fn events(&self) -> &[FootprintEvent] {
        &self.events
    }

    pub fn contains(&self, event_id: &str) -> bool {
        self.ids.contains(event_id)
    }

    pub fn user_events<'a>(
        &'a self,
        user_id: &str,
    ) -> impl Iterator<Item = &'a FootprintEvent> + 'a {
        self.by_user
            .get(user_id)
            .into_iter()
            .flatten()
            .map(move |i| &self.events[*i])
    }

    fn in_window<'a>(
        &'a self,
        user_id: &str,
        window: Window,
    ) -> impl Iterator<Item = &'a FootprintEvent> + 'a {
        self.user_events(user_id)
            .filter(move |e| window.contains(e.occurred_at))
    }

    pub fn user_total(&self, user_id: &str, window: impl Into<Window>) -> UserTotal {
        self.in_window(user_id, window.into())
            .fold(UserTotal::default(), |acc, e| UserTotal {
                total: acc.total + e.kg_co2e,
                event_count: acc.event_count + 1,
            })
    }

    pub fn source_totals(&self, user_id: &str, window: impl Into<Window>) -> SourceTotals {
        let mut totals = SourceTotals::default();
        for e in self.in_window(user_id, window.into()) {
            let slot = &mut totals.0[e.source.index()];
            *slot = *slot + e.kg_co2e;
        }
        totals
    }

    /// Every profiled user in scope, zero totals included, ascending.
    pub fn leaderboard(
        &self,
        directory: &UserDirectory,
        window: impl Into<Window>,
        scope: &Scope,
    ) -> Vec<LeaderboardEntry> {
        let window = window.into();
        let totals = directory
            .iter()
            .filter(|p| match scope {
                Scope::All => true,
                Scope::Friends(ids) => ids.contains(&p.user_id),
            })
            .map(|p| (p.user_id.clone(), self.user_total(&p.user_id, window).total))
            .collect();
        competition_rank(totals)
    }

    /// Mean period total, in kg, over every profile in `region`.
    pub fn area_average(
        &self,
        directory: &UserDirectory,
        region: &str,
        window: impl Into<Window>,
    ) -> Result<f64, LedgerError> {
        let window = window.into();
        let (sum, count) = directory
            .in_region(region)
            .fold((0u128, 0u64), |(s, n), p| {
                let mg = self.user_total(&p.user_id, window).total.milligrams();
                (s + u128::from(mg), n + 1)
            });
        if count == 0 {
            return Err(LedgerError::EmptyRegion(region.trim().to_lowercase()));
        }
        Ok(sum as f64 / count as f64 / 1_000_000.0)
    }

    /// One tip per source whose share exceeds the rule threshold, largest
    /// share first; the onboarding tip when the user has nothing logged.
    pub fn personalized_tips(
        &self,
        user_id: &str,
        window: impl Into<Window>,
        rules: &TipRules,
    ) -> Vec<Tip> {
        let totals = self.source_totals(user_id, window);
        if totals.total().is_zero() {
            return alloc::vec![Tip {
                category: TipCategory::Onboarding,
                message: rules.onboarding.clone(),
                share: 0.0,
            }];
        }
        let mut tips: Vec<Tip> = totals
            .shares()
            .into_iter()
            .filter(|(_, share)| *share > rules.threshold)
            .filter_map(|(source, share)| {
                rules.messages.get(&source).map(|m| Tip {
                    category: source.into(),
                    message: m.clone(),
                    share,
                })
            })
            .collect();
        tips.sort_by(|a, b| {
            b.share
                .total_cmp(&a.share)
                .then(a.category.cmp(&b.category))
        });
        tips
    }
}
