//! Service state and operations. Handlers in [`crate::api`] are thin
//! wrappers around the methods here.
//!
//! Reference data (factors, catalog, tariffs, menus, tip rules) is loaded
//! from files and swapped whole on reload. User data lives in three
//! append-only logs under the data directory and is rebuilt from them at
//! startup. A committing call returns only after its record is on disk.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock, RwLockReadGuard, RwLockWriteGuard};

use serde::{Deserialize, Serialize};
use time::macros::format_description;
use time::{Date, OffsetDateTime};

use footprint_core::barcode::Product;
use footprint_core::bill::reading_for_cost;
use footprint_core::journal::purchased_entry_id;
use footprint_core::menu::recommend_menu;
use footprint_core::trip::{compute_trip, suggest_alternatives};
use footprint_core::{
    AlternativeSuggestion, Barcode, BillReading, BillText, Catalog, Category, Co2e, EmissionFactor,
    EntryPatch, FactorRegistry, FootprintEvent, GeoPoint, Journal, JournalEntry, Ledger, Menu,
    Period, PeriodKind, Scope, ScoredMenuItem, Source, TariffTable, Timestamp, Tip, TipRules,
    TripRecord, TripRequest, UserDirectory, UserProfile,
};

use crate::auth::{AuthError, AuthStore, SaltedHash, TokenRecord};
use crate::error::ApiError;
use crate::formats::{self, LoadError};
use crate::jsonl::{JsonLog, LogError};

pub const EVENTS_FILE: &str = "events.jsonl";
pub const JOURNAL_FILE: &str = "journal.jsonl";
pub const USERS_FILE: &str = "users.jsonl";
pub const DEFAULT_SUGGESTIONS: usize = 4;

#[derive(Debug, thiserror::Error)]
pub enum StartupError {
    #[error("{path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Load { path: PathBuf, source: LoadError },
    #[error(transparent)]
    Log(#[from] LogError),
    #[error("replaying {file}: {reason}")]
    Replay { file: &'static str, reason: String },
}

/// Where the reference files live. Without a tip file the built-in rules apply.
#[derive(Clone, Debug)]
pub struct ReferencePaths {
    pub factors: PathBuf,
    pub catalog: PathBuf,
    pub tariffs: PathBuf,
    pub menus: PathBuf,
    pub tips: Option<PathBuf>,
}

#[derive(Clone, Debug)]
pub struct Reference {
    pub registry: FactorRegistry,
    pub catalog: Catalog,
    pub tariffs: TariffTable,
    pub menus: BTreeMap<String, Menu>,
    pub tips: TipRules,
}

fn read(path: &Path) -> Result<String, StartupError> {
    std::fs::read_to_string(path).map_err(|source| StartupError::Read {
        path: path.to_path_buf(),
        source,
    })
}

fn load<T>(
    path: &Path,
    parse: impl FnOnce(&str) -> Result<T, LoadError>,
) -> Result<T, StartupError> {
    parse(&read(path)?).map_err(|source| StartupError::Load {
        path: path.to_path_buf(),
        source,
    })
}

impl Reference {
    pub fn load(paths: &ReferencePaths) -> Result<Self, StartupError> {
        Ok(Reference {
            registry: load(&paths.factors, formats::load_factors)?,
            catalog: load(&paths.catalog, formats::load_catalog)?,
            tariffs: load(&paths.tariffs, formats::load_tariffs)?,
            menus: load(&paths.menus, formats::load_menus)?,
            tips: match &paths.tips {
                Some(p) => load(p, formats::load_tip_rules)?,
                None => TipRules::default(),
            },
        })
    }
}

/// A line of `users.jsonl`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum UserRecord {
    Signup {
        profile: UserProfile,
        password: SaltedHash,
    },
    Token(TokenRecord),
}

/// A line of `journal.jsonl`. Purchases are not recorded here; they are
/// the purchase events in `events.jsonl`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum JournalRecord {
    Put { entry: JournalEntry },
    Delete { entry_id: String, user_id: String },
}

struct Store {
    ledger: Ledger,
    directory: UserDirectory,
    journal: Journal,
    auth: AuthStore,
    events: JsonLog<FootprintEvent>,
    journal_log: JsonLog<JournalRecord>,
    users_log: JsonLog<UserRecord>,
}

impl Store {
    fn open(data_dir: &Path) -> Result<Self, StartupError> {
        std::fs::create_dir_all(data_dir).map_err(|source| StartupError::Read {
            path: data_dir.to_path_buf(),
            source,
        })?;
        let users = JsonLog::<UserRecord>::open(data_dir.join(USERS_FILE))?;
        let journal = JsonLog::<JournalRecord>::open(data_dir.join(JOURNAL_FILE))?;
        let events = JsonLog::<FootprintEvent>::open(data_dir.join(EVENTS_FILE))?;

        let mut directory = UserDirectory::new();
        let mut auth = AuthStore::new();
        for record in users.records {
            match record {
                UserRecord::Signup { profile, password } => {
                    auth.restore_user(&profile.user_id, password);
                    directory
                        .insert(profile)
                        .map_err(|e| StartupError::Replay {
                            file: USERS_FILE,
                            reason: e.to_string(),
                        })?;
                }
                UserRecord::Token(t) => auth.restore_token(t),
            }
        }

        let mut entries = Journal::new();
        for record in journal.records {
            match record {
                JournalRecord::Put { entry } => entries.restore(entry),
                JournalRecord::Delete { entry_id, user_id } => {
                    // Deleting an id that is already gone is harmless.
                    let _ = entries.delete(&entry_id, &user_id);
                }
            }
        }

        let mut ledger = Ledger::new();
        for event in events.records {
            if let Some(id) = purchased_entry_id(&event.detail) {
                // The entry may have been deleted after purchase.
                let _ = entries.mark_purchased(id, event.occurred_at);
            }
            ledger.append(event).map_err(|e| StartupError::Replay {
                file: EVENTS_FILE,
                reason: e.to_string(),
            })?;
        }

        Ok(Store {
            ledger,
            directory,
            journal: entries,
            auth,
            events: events.log,
            journal_log: journal.log,
            users_log: users.log,
        })
    }

    /// Persists then applies one ledger event.
    fn commit(&mut self, event: FootprintEvent) -> Result<FootprintEvent, ApiError> {
        self.ledger.check(&event)?;
        self.events.append(&event)?;
        self.ledger
            .append(event.clone())
            .expect("checked before persisting");
        Ok(event)
    }
}

pub type Clock = Arc<dyn Fn() -> Timestamp + Send + Sync>;

pub fn system_clock() -> Clock {
    Arc::new(|| Timestamp::from_datetime(OffsetDateTime::now_utc()))
}

pub struct Service {
    paths: ReferencePaths,
    reference: RwLock<Arc<Reference>>,
    store: RwLock<Store>,
    clock: Clock,
}

// ---- request and response bodies ----

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignupBody {
    pub user_id: String,
    #[serde(default)]
    pub display_name: Option<String>,
    pub region: String,
    pub password: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoginBody {
    pub user_id: String,
    pub password: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TokenResponse {
    pub user_id: String,
    pub token: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TripBody {
    /// Optional; must name the caller when present.
    #[serde(default)]
    pub user_id: Option<String>,
    #[serde(default)]
    pub trace: Option<Vec<GeoPoint>>,
    #[serde(default)]
    pub declared_distance_km: Option<f64>,
    pub mode: String,
    pub fuel: String,
    #[serde(default, alias = "timestamp")]
    pub occurred_at: Option<Timestamp>,
}

#[derive(Debug, Serialize)]
pub struct CommittedTrip {
    pub trip: TripRecord,
    pub alternatives: Vec<AlternativeSuggestion>,
    pub event: FootprintEvent,
}

#[derive(Debug, Deserialize)]
pub struct AlternativesQuery {
    pub distance_km: f64,
    pub mode: String,
    pub fuel: String,
}

#[derive(Debug, Serialize)]
pub struct AlternativesResponse {
    pub mode: String,
    pub fuel: String,
    pub distance_km: f64,
    pub footprint_kg: f64,
    pub alternatives: Vec<AlternativeSuggestion>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanBody {
    pub raw_barcode: String,
}

#[derive(Debug, Serialize)]
pub struct ScanResponse {
    pub product: Product,
    pub alternatives: Vec<Product>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanCommitBody {
    pub barcode: String,
    #[serde(default)]
    pub quantity: Option<u32>,
    #[serde(default)]
    pub occurred_at: Option<Timestamp>,
}

#[derive(Debug, Serialize)]
pub struct CommittedPurchase {
    pub product: Product,
    pub quantity: u32,
    pub event: FootprintEvent,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BillBody {
    pub text: String,
    /// Defaults to the caller's profile region.
    #[serde(default)]
    pub region: Option<String>,
    #[serde(default)]
    pub occurred_at: Option<Timestamp>,
}

#[derive(Debug, Serialize)]
pub struct CommittedBill {
    pub reading: BillReading,
    pub event: FootprintEvent,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MealBody {
    pub restaurant_id: String,
    pub item_id: String,
    #[serde(default)]
    pub occurred_at: Option<Timestamp>,
}

#[derive(Debug, Serialize)]
pub struct CommittedMeal {
    pub restaurant_id: String,
    pub item: ScoredMenuItem,
    pub event: FootprintEvent,
}

#[derive(Debug, Serialize)]
pub struct MenuResponse {
    pub restaurant_id: String,
    pub items: Vec<ScoredMenuItem>,
}

#[derive(Debug, Deserialize)]
pub struct RecommendQuery {
    pub item: String,
    #[serde(default)]
    pub limit: Option<usize>,
}

#[derive(Debug, Serialize)]
pub struct RecommendResponse {
    pub restaurant_id: String,
    pub chosen: ScoredMenuItem,
    pub alternatives: Vec<ScoredMenuItem>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JournalCreateBody {
    pub label: String,
    #[serde(default)]
    pub barcode: Option<String>,
    #[serde(default)]
    pub quantity: Option<u32>,
    #[serde(default)]
    pub footprint_kg_each: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JournalPatchBody {
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default)]
    pub quantity: Option<u32>,
    #[serde(default)]
    pub barcode: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PurchaseBody {
    #[serde(default)]
    pub occurred_at: Option<Timestamp>,
}

#[derive(Debug, Serialize)]
pub struct JournalList {
    pub entries: Vec<JournalEntry>,
}

#[derive(Debug, Serialize)]
pub struct Deleted {
    pub deleted: String,
}

#[derive(Debug, Serialize)]
pub struct CommittedEntry {
    pub entry: JournalEntry,
    pub event: FootprintEvent,
}

#[derive(Debug, Default, Deserialize)]
pub struct PeriodQuery {
    #[serde(default)]
    pub kind: Option<String>,
    #[serde(default)]
    pub anchor: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
pub struct LeaderboardQuery {
    #[serde(default)]
    pub kind: Option<String>,
    #[serde(default)]
    pub anchor: Option<String>,
    #[serde(default)]
    pub scope: Option<String>,
    /// Comma-separated user ids for the friends scope.
    #[serde(default)]
    pub friends: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct RankedUser {
    pub rank: u32,
    pub user_id: String,
    pub display_name: String,
    pub total_kg: Co2e,
}

#[derive(Debug, Serialize)]
pub struct LeaderboardResponse {
    pub kind: PeriodKind,
    pub start: String,
    pub end: String,
    pub scope: &'static str,
    pub entries: Vec<RankedUser>,
}

#[derive(Debug, Serialize)]
pub struct SourceShare {
    pub source: Source,
    pub kg: Co2e,
    pub share: f64,
}

#[derive(Debug, Serialize)]
pub struct SummaryResponse {
    pub user_id: String,
    pub region: String,
    pub kind: PeriodKind,
    pub start: String,
    pub end: String,
    pub total_kg: Co2e,
    pub event_count: usize,
    pub sources: Vec<SourceShare>,
    pub area_average_kg: f64,
    pub tips: Vec<Tip>,
}

#[derive(Debug, Deserialize)]
pub struct FactorQuery {
    #[serde(default)]
    pub category: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct FactorList {
    pub version: u64,
    pub factors: Vec<EmissionFactor>,
}

// ---- operations ----

fn kg(value: f64) -> Result<Co2e, ApiError> {
    Co2e::from_kg(value)
        .ok_or_else(|| ApiError::bad_request("footprint_out_of_range", "footprint is out of range"))
}

fn parse_code(raw: &str) -> Result<Barcode, ApiError> {
    Ok(Barcode::parse(raw)?)
}

fn period(kind: Option<&str>, anchor: Option<&str>, today: Date) -> Result<Period, ApiError> {
    let kind: PeriodKind = match kind {
        None => PeriodKind::Weekly,
        Some(k) => k.parse().map_err(|_| {
            ApiError::bad_request("invalid_period", "kind must be weekly or monthly")
        })?,
    };
    let anchor = match anchor {
        None => today,
        Some(a) => Date::parse(a, format_description!("[year]-[month]-[day]")).map_err(|_| {
            ApiError::bad_request("invalid_period", "anchor must be a YYYY-MM-DD date")
        })?,
    };
    Ok(Period { kind, anchor })
}

impl Service {
    pub fn open(
        paths: ReferencePaths,
        data_dir: &Path,
        clock: Clock,
    ) -> Result<Self, StartupError> {
        let reference = Reference::load(&paths)?;
        let store = Store::open(data_dir)?;
        tracing::info!(
            factors = reference.registry.len(),
            products = reference.catalog.len(),
            menus = reference.menus.len(),
            users = store.directory.len(),
            events = store.ledger.len(),
            "service ready"
        );
        Ok(Service {
            paths,
            reference: RwLock::new(Arc::new(reference)),
            store: RwLock::new(store),
            clock,
        })
    }

    /// Re-reads every reference file and swaps them in together. On any
    /// error the previous data stays in force.
    pub fn reload(&self) -> Result<(), StartupError> {
        let next = Arc::new(Reference::load(&self.paths)?);
        *self.reference.write().unwrap_or_else(|p| p.into_inner()) = next;
        Ok(())
    }

    pub fn reference(&self) -> Arc<Reference> {
        self.reference
            .read()
            .unwrap_or_else(|p| p.into_inner())
            .clone()
    }

    fn read(&self) -> RwLockReadGuard<'_, Store> {
        self.store.read().unwrap_or_else(|p| p.into_inner())
    }

    fn write(&self) -> RwLockWriteGuard<'_, Store> {
        self.store.write().unwrap_or_else(|p| p.into_inner())
    }

    fn now(&self) -> Timestamp {
        (self.clock)()
    }

    fn new_event(
        &self,
        user: &str,
        source: Source,
        kg_co2e: Co2e,
        at: Option<Timestamp>,
        detail: String,
    ) -> FootprintEvent {
        FootprintEvent {
            event_id: uuid::Uuid::new_v4().to_string(),
            user_id: user.to_string(),
            source,
            kg_co2e,
            occurred_at: at.unwrap_or_else(|| self.now()),
            detail,
        }
    }

    pub fn signup(&self, body: SignupBody) -> Result<TokenResponse, ApiError> {
        let display = body.display_name.as_deref().unwrap_or(&body.user_id);
        let profile = UserProfile::new(&body.user_id, display, &body.region)?;
        let now = self.now();
        let mut store = self.write();
        if store.directory.contains(&profile.user_id) {
            return Err(AuthError::UserExists(profile.user_id).into());
        }
        let password = store
            .auth
            .hash_new_password(&profile.user_id, &body.password)?;
        let issued = store.auth.issue(&profile.user_id, now);
        store.users_log.append(&UserRecord::Signup {
            profile: profile.clone(),
            password: password.clone(),
        })?;
        store.auth.restore_user(&profile.user_id, password);
        store.directory.insert(profile.clone())?;
        store
            .users_log
            .append(&UserRecord::Token(issued.record.clone()))?;
        store.auth.restore_token(issued.record);
        Ok(TokenResponse {
            user_id: profile.user_id,
            token: issued.token,
        })
    }

    pub fn login(&self, body: LoginBody) -> Result<TokenResponse, ApiError> {
        let now = self.now();
        let user_id = body.user_id.trim().to_string();
        let issued = {
            let store = self.read();
            store.auth.check_password(&user_id, &body.password)?;
            store.auth.issue(&user_id, now)
        };
        let mut store = self.write();
        store
            .users_log
            .append(&UserRecord::Token(issued.record.clone()))?;
        store.auth.restore_token(issued.record);
        Ok(TokenResponse {
            user_id,
            token: issued.token,
        })
    }

    /// The user id behind an `Authorization` header value.
    pub fn authenticate(&self, header: Option<&str>) -> Result<String, ApiError> {
        let token = header
            .and_then(|h| h.strip_prefix("Bearer "))
            .ok_or_else(ApiError::unauthorized)?;
        let store = self.read();
        Ok(store.auth.verify(token.trim())?.to_string())
    }

    pub fn me(&self, user: &str) -> Result<UserProfile, ApiError> {
        self.read()
            .directory
            .get(user)
            .cloned()
            .ok_or_else(ApiError::unauthorized)
    }

    pub fn factors(&self, query: FactorQuery) -> Result<FactorList, ApiError> {
        let reference = self.reference();
        let factors = match query.category {
            Some(c) => {
                let c: Category = c.parse()?;
                reference.registry.in_category(c).cloned().collect()
            }
            None => reference.registry.list().cloned().collect(),
        };
        Ok(FactorList {
            version: reference.registry.version(),
            factors,
        })
    }

    pub fn create_trip(&self, user: &str, body: TripBody) -> Result<CommittedTrip, ApiError> {
        if body.user_id.as_deref().is_some_and(|u| u.trim() != user) {
            return Err(ApiError::forbidden(
                "trips can only be logged for the caller",
            ));
        }
        let reference = self.reference();
        let at = body.occurred_at.unwrap_or_else(|| self.now());
        let request = TripRequest {
            user_id: user.to_string(),
            trace: body.trace,
            declared_distance_km: body.declared_distance_km,
            mode: body.mode,
            fuel: body.fuel,
            timestamp: at,
        };
        let trip = compute_trip(&request, &reference.registry)?;
        let alternatives = suggest_alternatives(&trip, &reference.registry);
        let detail = format!("{}:{} {} km", trip.mode, trip.fuel, trip.distance_km);
        let event = self.new_event(user, Source::Trip, kg(trip.footprint_kg)?, Some(at), detail);
        let event = self.write().commit(event)?;
        Ok(CommittedTrip {
            trip,
            alternatives,
            event,
        })
    }

    pub fn trip_alternatives(
        &self,
        user: &str,
        query: AlternativesQuery,
    ) -> Result<AlternativesResponse, ApiError> {
        let reference = self.reference();
        let request = TripRequest::declared(
            user,
            query.distance_km,
            &query.mode,
            &query.fuel,
            self.now(),
        );
        let trip = compute_trip(&request, &reference.registry)?;
        let alternatives = suggest_alternatives(&trip, &reference.registry);
        Ok(AlternativesResponse {
            mode: trip.mode,
            fuel: trip.fuel,
            distance_km: trip.distance_km,
            footprint_kg: trip.footprint_kg,
            alternatives,
        })
    }

    pub fn scan(&self, body: ScanBody) -> Result<ScanResponse, ApiError> {
        let code = parse_code(&body.raw_barcode)?;
        let reference = self.reference();
        let product = reference.catalog.lookup(&code)?;
        let alternatives = reference
            .catalog
            .alternatives(product, DEFAULT_SUGGESTIONS)
            .into_iter()
            .cloned()
            .collect();
        Ok(ScanResponse {
            product: product.clone(),
            alternatives,
        })
    }

    pub fn scan_commit(
        &self,
        user: &str,
        body: ScanCommitBody,
    ) -> Result<CommittedPurchase, ApiError> {
        let code = parse_code(&body.barcode)?;
        let quantity = body.quantity.unwrap_or(1);
        if quantity == 0 {
            return Err(ApiError::bad_request(
                "invalid_quantity",
                "quantity must be at least 1",
            ));
        }
        let product = self.reference().catalog.lookup(&code)?.clone();
        let total = kg(product.footprint_kg)?
            .checked_mul(quantity)
            .ok_or_else(|| {
                ApiError::bad_request("footprint_out_of_range", "footprint is out of range")
            })?;
        let detail = format!("{} x{quantity}", product.barcode);
        let event = self.new_event(user, Source::Purchase, total, body.occurred_at, detail);
        let event = self.write().commit(event)?;
        Ok(CommittedPurchase {
            product,
            quantity,
            event,
        })
    }

    pub fn bill(&self, user: &str, body: BillBody) -> Result<CommittedBill, ApiError> {
        let region = match body.region {
            Some(r) => r,
            None => self.me(user)?.region,
        };
        let text = BillText::from_text(&body.text, &region)?;
        let total = footprint_core::bill::extract_total(&text.lines)?;
        let reference = self.reference();
        let reading =
            reading_for_cost(total, &text.region, &reference.tariffs, &reference.registry)?;
        let detail = format!("{} {} kWh", reading.region, reading.kwh);
        let event = self.new_event(
            user,
            Source::Electricity,
            kg(reading.footprint_kg)?,
            body.occurred_at,
            detail,
        );
        let event = self.write().commit(event)?;
        Ok(CommittedBill { reading, event })
    }

    fn menu<'a>(reference: &'a Reference, restaurant_id: &str) -> Result<&'a Menu, ApiError> {
        reference.menus.get(restaurant_id.trim()).ok_or_else(|| {
            ApiError::not_found(
                "restaurant_not_found",
                format!("restaurant {restaurant_id:?} not found"),
            )
        })
    }

    pub fn menu_items(&self, restaurant_id: &str) -> Result<MenuResponse, ApiError> {
        let reference = self.reference();
        let menu = Self::menu(&reference, restaurant_id)?;
        Ok(MenuResponse {
            restaurant_id: menu.restaurant_id.clone(),
            items: menu.scored(&reference.registry)?,
        })
    }

    pub fn recommend(
        &self,
        restaurant_id: &str,
        query: RecommendQuery,
    ) -> Result<RecommendResponse, ApiError> {
        let reference = self.reference();
        let menu = Self::menu(&reference, restaurant_id)?;
        let limit = query.limit.unwrap_or(DEFAULT_SUGGESTIONS);
        let alternatives = recommend_menu(menu, &query.item, &reference.registry, limit)?;
        let chosen = menu.item(&query.item)?.scored(&reference.registry)?;
        Ok(RecommendResponse {
            restaurant_id: menu.restaurant_id.clone(),
            chosen,
            alternatives,
        })
    }

    pub fn meal(&self, user: &str, body: MealBody) -> Result<CommittedMeal, ApiError> {
        let reference = self.reference();
        let menu = Self::menu(&reference, &body.restaurant_id)?;
        let item = menu.item(&body.item_id)?.scored(&reference.registry)?;
        let detail = format!("{}/{}", menu.restaurant_id, item.id);
        let event = self.new_event(
            user,
            Source::Meal,
            kg(item.footprint_kg)?,
            body.occurred_at,
            detail,
        );
        let event = self.write().commit(event)?;
        Ok(CommittedMeal {
            restaurant_id: menu.restaurant_id.clone(),
            item,
            event,
        })
    }

    pub fn journal_list(&self, user: &str, owner: Option<&str>) -> Result<JournalList, ApiError> {
        if let Some(owner) = owner {
            if owner != user {
                return Err(ApiError::forbidden("journals are private to their owner"));
            }
        }
        let store = self.read();
        Ok(JournalList {
            entries: store.journal.list(user).into_iter().cloned().collect(),
        })
    }

    pub fn journal_get(&self, user: &str, entry_id: &str) -> Result<JournalEntry, ApiError> {
        Ok(self.read().journal.get(entry_id, user)?.clone())
    }

    pub fn journal_create(
        &self,
        user: &str,
        body: JournalCreateBody,
    ) -> Result<JournalEntry, ApiError> {
        let code = body.barcode.as_deref().map(parse_code).transpose()?;
        let manual = body.footprint_kg_each.map(kg).transpose()?;
        let reference = self.reference();
        let now = self.now();
        let id = uuid::Uuid::new_v4().to_string();
        let mut store = self.write();
        let entry = store
            .journal
            .create(
                &id,
                user,
                &body.label,
                code,
                body.quantity.unwrap_or(1),
                manual,
                &reference.catalog,
                now,
            )?
            .clone();
        if let Err(e) = store.journal_log.append(&JournalRecord::Put {
            entry: entry.clone(),
        }) {
            let _ = store.journal.delete(&id, user);
            return Err(e.into());
        }
        Ok(entry)
    }

    pub fn journal_update(
        &self,
        user: &str,
        entry_id: &str,
        body: JournalPatchBody,
    ) -> Result<JournalEntry, ApiError> {
        let patch = EntryPatch {
            label: body.label,
            quantity: body.quantity,
            barcode: body.barcode.as_deref().map(parse_code).transpose()?,
        };
        let reference = self.reference();
        let now = self.now();
        let mut store = self.write();
        let previous = store.journal.get(entry_id, user)?.clone();
        let entry = store
            .journal
            .update(entry_id, user, patch, &reference.catalog, now)?
            .clone();
        if let Err(e) = store.journal_log.append(&JournalRecord::Put {
            entry: entry.clone(),
        }) {
            store.journal.restore(previous);
            return Err(e.into());
        }
        Ok(entry)
    }

    pub fn journal_delete(&self, user: &str, entry_id: &str) -> Result<Deleted, ApiError> {
        let mut store = self.write();
        store.journal.get(entry_id, user)?;
        store.journal_log.append(&JournalRecord::Delete {
            entry_id: entry_id.to_string(),
            user_id: user.to_string(),
        })?;
        store.journal.delete(entry_id, user)?;
        Ok(Deleted {
            deleted: entry_id.to_string(),
        })
    }

    /// Commits the entry's footprint to the ledger exactly once. The ledger
    /// event is the only record written; the entry's purchased state is
    /// derived from it on replay.
    pub fn journal_purchase(
        &self,
        user: &str,
        entry_id: &str,
        body: PurchaseBody,
    ) -> Result<CommittedEntry, ApiError> {
        let at = body.occurred_at.unwrap_or_else(|| self.now());
        let event_id = uuid::Uuid::new_v4().to_string();
        let mut store = self.write();
        let event = store
            .journal
            .purchase_event(entry_id, user, &event_id, at)?;
        let event = store.commit(event)?;
        let entry = store.journal.mark_purchased(entry_id, at)?.clone();
        Ok(CommittedEntry { entry, event })
    }

    pub fn leaderboard(
        &self,
        user: &str,
        query: LeaderboardQuery,
    ) -> Result<LeaderboardResponse, ApiError> {
        let period = period(
            query.kind.as_deref(),
            query.anchor.as_deref(),
            self.now().date(),
        )?;
        let (scope, scope_name) = match query.scope.as_deref().unwrap_or("all") {
            "all" => (Scope::All, "all"),
            "friends" => {
                let mut ids: BTreeSet<String> = query
                    .friends
                    .as_deref()
                    .unwrap_or("")
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(str::to_string)
                    .collect();
                ids.insert(user.to_string());
                (Scope::Friends(ids), "friends")
            }
            _ => {
                return Err(ApiError::bad_request(
                    "invalid_scope",
                    "scope must be all or friends",
                ))
            }
        };
        let store = self.read();
        let entries = store
            .ledger
            .leaderboard(&store.directory, period, &scope)
            .into_iter()
            .map(|e| RankedUser {
                rank: e.rank,
                display_name: store
                    .directory
                    .get(&e.user_id)
                    .map(|p| p.display_name.clone())
                    .unwrap_or_default(),
                user_id: e.user_id,
                total_kg: e.total_kg,
            })
            .collect();
        Ok(LeaderboardResponse {
            kind: period.kind,
            start: period.start_date().to_string(),
            end: period.end_date().to_string(),
            scope: scope_name,
            entries,
        })
    }

    pub fn summary(&self, user: &str, query: PeriodQuery) -> Result<SummaryResponse, ApiError> {
        let period = period(
            query.kind.as_deref(),
            query.anchor.as_deref(),
            self.now().date(),
        )?;
        let tips_rules = self.reference().tips.clone();
        let store = self.read();
        let profile = store
            .directory
            .get(user)
            .ok_or_else(ApiError::unauthorized)?;
        let totals = store.ledger.source_totals(user, period);
        let sources = totals
            .shares()
            .into_iter()
            .map(|(source, share)| SourceShare {
                source,
                kg: totals.get(source),
                share,
            })
            .collect();
        Ok(SummaryResponse {
            user_id: user.to_string(),
            region: profile.region.clone(),
            kind: period.kind,
            start: period.start_date().to_string(),
            end: period.end_date().to_string(),
            total_kg: totals.total(),
            event_count: store.ledger.user_total(user, period).event_count,
            sources,
            area_average_kg: store.ledger.area_average(
                &store.directory,
                &profile.region,
                period,
            )?,
            tips: store.ledger.personalized_tips(user, period, &tips_rules),
        })
    }

    /// Record counts of the three logs, for diagnostics and tests.
    pub fn log_lengths(&self) -> (usize, usize, usize) {
        let store = self.read();
        (
            store.events.len(),
            store.journal_log.len(),
            store.users_log.len(),
        )
    }
}
