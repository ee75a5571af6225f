//! HTTP routes. Every path except signup, login and the health probe needs
//! `Authorization: Bearer <token>`.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{FromRequest, FromRequestParts, Path, Query, Request, State};
use axum::http::header::AUTHORIZATION;
use axum::http::request::Parts;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::ApiError;
use crate::service::*;

pub type Shared = Arc<Service>;

/// A JSON body whose rejections use the service error shape.
pub struct Body<T>(pub T);

impl<S, T> FromRequest<S> for Body<T>
where
    T: DeserializeOwned,
    S: Send + Sync,
{
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, ApiError> {
        match Json::<T>::from_request(req, state).await {
            Ok(Json(v)) => Ok(Body(v)),
            Err(e) => Err(ApiError::bad_request("invalid_body", e.body_text())),
        }
    }
}

/// A JSON body that may be absent; an empty body reads as `T::default()`.
pub struct OptionalBody<T>(pub T);

impl<S, T> FromRequest<S> for OptionalBody<T>
where
    T: DeserializeOwned + Default,
    S: Send + Sync,
{
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, ApiError> {
        let bytes = Bytes::from_request(req, state)
            .await
            .map_err(|e| ApiError::bad_request("invalid_body", e.body_text()))?;
        if bytes.iter().all(u8::is_ascii_whitespace) {
            return Ok(OptionalBody(T::default()));
        }
        serde_json::from_slice(&bytes)
            .map(OptionalBody)
            .map_err(|e| ApiError::bad_request("invalid_body", e.to_string()))
    }
}

/// Query parameters whose rejections use the service error shape.
pub struct Params<T>(pub T);

impl<S, T> FromRequestParts<S> for Params<T>
where
    T: DeserializeOwned,
    S: Send + Sync,
{
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &S) -> Result<Self, ApiError> {
        match Query::<T>::from_request_parts(parts, state).await {
            Ok(Query(v)) => Ok(Params(v)),
            Err(e) => Err(ApiError::bad_request("invalid_query", e.body_text())),
        }
    }
}

/// The authenticated user id.
pub struct Caller(pub String);

impl FromRequestParts<Shared> for Caller {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, service: &Shared) -> Result<Self, ApiError> {
        let header = parts
            .headers
            .get(AUTHORIZATION)
            .and_then(|v| v.to_str().ok());
        service.authenticate(header).map(Caller)
    }
}

/// Runs a service call on the blocking pool; commits wait on fsync.
async fn run<T, F>(service: &Shared, f: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce(&Service) -> Result<T, ApiError> + Send + 'static,
{
    let service = service.clone();
    tokio::task::spawn_blocking(move || f(&service))
        .await
        .map_err(|_| ApiError::internal("request worker failed"))?
}

fn created<T: Serialize>(value: T) -> Response {
    (StatusCode::CREATED, Json(value)).into_response()
}

type Reply<T> = Result<Json<T>, ApiError>;

async fn signup(
    State(s): State<Shared>,
    Body(body): Body<SignupBody>,
) -> Result<Response, ApiError> {
    run(&s, move |s| s.signup(body)).await.map(created)
}

async fn login(State(s): State<Shared>, Body(body): Body<LoginBody>) -> Reply<TokenResponse> {
    run(&s, move |s| s.login(body)).await.map(Json)
}

async fn me(State(s): State<Shared>, Caller(user): Caller) -> Reply<footprint_core::UserProfile> {
    s.me(&user).map(Json)
}

async fn factors(
    State(s): State<Shared>,
    _: Caller,
    Params(q): Params<FactorQuery>,
) -> Reply<FactorList> {
    s.factors(q).map(Json)
}

async fn create_trip(
    State(s): State<Shared>,
    Caller(user): Caller,
    Body(body): Body<TripBody>,
) -> Result<Response, ApiError> {
    run(&s, move |s| s.create_trip(&user, body))
        .await
        .map(created)
}

async fn trip_alternatives(
    State(s): State<Shared>,
    Caller(user): Caller,
    Params(q): Params<AlternativesQuery>,
) -> Reply<AlternativesResponse> {
    s.trip_alternatives(&user, q).map(Json)
}

async fn scan(
    State(s): State<Shared>,
    _: Caller,
    Body(body): Body<ScanBody>,
) -> Reply<ScanResponse> {
    s.scan(body).map(Json)
}

async fn scan_commit(
    State(s): State<Shared>,
    Caller(user): Caller,
    Body(body): Body<ScanCommitBody>,
) -> Result<Response, ApiError> {
    run(&s, move |s| s.scan_commit(&user, body))
        .await
        .map(created)
}

async fn bill(
    State(s): State<Shared>,
    Caller(user): Caller,
    Body(body): Body<BillBody>,
) -> Result<Response, ApiError> {
    run(&s, move |s| s.bill(&user, body)).await.map(created)
}

async fn meal(
    State(s): State<Shared>,
    Caller(user): Caller,
    Body(body): Body<MealBody>,
) -> Result<Response, ApiError> {
    run(&s, move |s| s.meal(&user, body)).await.map(created)
}

async fn menu(
    State(s): State<Shared>,
    _: Caller,
    Path(restaurant): Path<String>,
) -> Reply<MenuResponse> {
    s.menu_items(&restaurant).map(Json)
}

async fn recommend(
    State(s): State<Shared>,
    _: Caller,
    Path(restaurant): Path<String>,
    Params(q): Params<RecommendQuery>,
) -> Reply<RecommendResponse> {
    s.recommend(&restaurant, q).map(Json)
}

#[derive(Deserialize)]
struct OwnerQuery {
    #[serde(default)]
    user: Option<String>,
}

async fn journal_list(
    State(s): State<Shared>,
    Caller(user): Caller,
    Params(q): Params<OwnerQuery>,
) -> Reply<JournalList> {
    s.journal_list(&user, q.user.as_deref()).map(Json)
}

async fn journal_create(
    State(s): State<Shared>,
    Caller(user): Caller,
    Body(body): Body<JournalCreateBody>,
) -> Result<Response, ApiError> {
    run(&s, move |s| s.journal_create(&user, body))
        .await
        .map(created)
}

async fn journal_get(
    State(s): State<Shared>,
    Caller(user): Caller,
    Path(id): Path<String>,
) -> Reply<footprint_core::JournalEntry> {
    s.journal_get(&user, &id).map(Json)
}

async fn journal_update(
    State(s): State<Shared>,
    Caller(user): Caller,
    Path(id): Path<String>,
    Body(body): Body<JournalPatchBody>,
) -> Reply<footprint_core::JournalEntry> {
    run(&s, move |s| s.journal_update(&user, &id, body))
        .await
        .map(Json)
}

async fn journal_delete(
    State(s): State<Shared>,
    Caller(user): Caller,
    Path(id): Path<String>,
) -> Reply<Deleted> {
    run(&s, move |s| s.journal_delete(&user, &id))
        .await
        .map(Json)
}

async fn journal_purchase(
    State(s): State<Shared>,
    Caller(user): Caller,
    Path(id): Path<String>,
    OptionalBody(body): OptionalBody<PurchaseBody>,
) -> Result<Response, ApiError> {
    run(&s, move |s| s.journal_purchase(&user, &id, body))
        .await
        .map(created)
}

async fn leaderboard(
    State(s): State<Shared>,
    Caller(user): Caller,
    Params(q): Params<LeaderboardQuery>,
) -> Reply<LeaderboardResponse> {
    s.leaderboard(&user, q).map(Json)
}

async fn summary(
    State(s): State<Shared>,
    Caller(user): Caller,
    Params(q): Params<PeriodQuery>,
) -> Reply<SummaryResponse> {
    s.summary(&user, q).map(Json)
}

async fn health() -> &'static str {
    "ok"
}

async fn not_found() -> ApiError {
    ApiError::not_found("not_found", "no such route")
}

async fn method_not_allowed() -> ApiError {
    ApiError::new(
        StatusCode::METHOD_NOT_ALLOWED,
        "method_not_allowed",
        "method not allowed on this route",
    )
}

pub fn router(service: Shared) -> Router {
    Router::new()
        .route("/healthz", get(health))
        .route("/v1/users", post(signup))
        .route("/v1/login", post(login))
        .route("/v1/me", get(me))
        .route("/v1/factors", get(factors))
        .route("/v1/trips", post(create_trip))
        .route("/v1/trips/alternatives", get(trip_alternatives))
        .route("/v1/scan", post(scan))
        .route("/v1/scan/commit", post(scan_commit))
        .route("/v1/bills", post(bill))
        .route("/v1/meals", post(meal))
        .route("/v1/menus/{restaurant_id}", get(menu))
        .route("/v1/menus/{restaurant_id}/recommend", get(recommend))
        .route("/v1/journal", get(journal_list).post(journal_create))
        .route(
            "/v1/journal/{entry_id}",
            get(journal_get)
                .patch(journal_update)
                .delete(journal_delete),
        )
        .route("/v1/journal/{entry_id}/purchase", post(journal_purchase))
        .route("/v1/leaderboard", get(leaderboard))
        .route("/v1/summary", get(summary))
        .fallback(not_found)
        .method_not_allowed_fallback(method_not_allowed)
        .with_state(service)
}
