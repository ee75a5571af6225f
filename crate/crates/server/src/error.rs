//! The one error shape every endpoint returns: `{code, message, detail}`.

use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;
use serde_json::Value;

use footprint_core::barcode::CatalogError;
use footprint_core::{
    BarcodeError, BillError, FactorError, JournalError, LedgerError, MenuError, TripError,
};

use crate::auth::AuthError;
use crate::jsonl::LogError;

#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub detail: Value,
}

#[derive(Serialize)]
struct Body<'a> {
    code: &'a str,
    message: &'a str,
    detail: &'a Value,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
            detail: Value::Null,
        }
    }

    pub fn with_detail(mut self, detail: Value) -> Self {
        self.detail = detail;
        self
    }

    pub fn bad_request(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message)
    }

    pub fn unauthorized() -> Self {
        Self::new(
            StatusCode::UNAUTHORIZED,
            "unauthorized",
            "a valid bearer token is required",
        )
    }

    pub fn forbidden(message: impl Into<String>) -> Self {
        Self::new(StatusCode::FORBIDDEN, "forbidden", message)
    }

    pub fn not_found(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, code, message)
    }

    pub fn unprocessable(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, code, message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = Body {
            code: self.code,
            message: &self.message,
            detail: &self.detail,
        };
        (self.status, Json(body)).into_response()
    }
}

impl From<FactorError> for ApiError {
    fn from(e: FactorError) -> Self {
        let msg = e.to_string();
        match e {
            FactorError::FactorNotFound { .. } => ApiError::unprocessable("factor_not_found", msg),
            FactorError::UnitMismatch { .. } => {
                ApiError::unprocessable("factor_unit_mismatch", msg)
            }
            _ => ApiError::bad_request("invalid_factor", msg),
        }
    }
}

impl From<TripError> for ApiError {
    fn from(e: TripError) -> Self {
        let msg = e.to_string();
        match e {
            TripError::Factor(f) => f.into(),
            TripError::InvalidPoint { .. } => ApiError::bad_request("invalid_point", msg),
            TripError::TraceTooShort => ApiError::bad_request("trace_too_short", msg),
            TripError::AmbiguousDistance => ApiError::bad_request("ambiguous_distance", msg),
            TripError::InvalidDistance => ApiError::bad_request("invalid_distance", msg),
            TripError::InvalidField { .. } => ApiError::bad_request("invalid_field", msg),
            TripError::RouteUnavailable => {
                ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "route_unavailable", msg)
            }
        }
    }
}

impl From<BarcodeError> for ApiError {
    fn from(e: BarcodeError) -> Self {
        let code = match e {
            BarcodeError::BadLength(_) => "bad_length",
            BarcodeError::NonDigitInput => "non_digit_input",
            BarcodeError::ChecksumMismatch { .. } => "checksum_mismatch",
        };
        ApiError::bad_request(code, e.to_string())
    }
}

impl From<CatalogError> for ApiError {
    fn from(e: CatalogError) -> Self {
        let msg = e.to_string();
        match e {
            CatalogError::ProductNotFound(_) => ApiError::not_found("product_not_found", msg),
            _ => ApiError::bad_request("invalid_product", msg),
        }
    }
}

impl From<BillError> for ApiError {
    fn from(e: BillError) -> Self {
        let msg = e.to_string();
        match e {
            BillError::TotalNotFound => ApiError::unprocessable("total_not_found", msg),
            BillError::RegionUnknown(_) => ApiError::unprocessable("region_unknown", msg),
            BillError::Factor(f) => f.into(),
            BillError::MissingRegion => ApiError::bad_request("missing_region", msg),
            _ => ApiError::bad_request("invalid_bill", msg),
        }
    }
}

impl From<MenuError> for ApiError {
    fn from(e: MenuError) -> Self {
        let msg = e.to_string();
        match e {
            MenuError::ItemNotFound(_) => ApiError::unprocessable("item_not_found", msg),
            MenuError::Factor(f) => f.into(),
            _ => ApiError::bad_request("invalid_menu", msg),
        }
    }
}

impl From<LedgerError> for ApiError {
    fn from(e: LedgerError) -> Self {
        let msg = e.to_string();
        match e {
            LedgerError::DuplicateUser(_) => {
                ApiError::new(StatusCode::CONFLICT, "user_exists", msg)
            }
            LedgerError::DuplicateEventId(_) => {
                ApiError::new(StatusCode::CONFLICT, "duplicate_event", msg)
            }
            LedgerError::EmptyRegion(_) => ApiError::unprocessable("empty_region", msg),
            _ => ApiError::bad_request("invalid_input", msg),
        }
    }
}

impl From<JournalError> for ApiError {
    fn from(e: JournalError) -> Self {
        let msg = e.to_string();
        match e {
            JournalError::EntryNotFound(_) => ApiError::not_found("entry_not_found", msg),
            JournalError::EntryImmutable(_) => {
                ApiError::new(StatusCode::CONFLICT, "entry_immutable", msg)
            }
            JournalError::NotOwner(_) => ApiError::forbidden(msg),
            JournalError::ProductNotFound(_) => ApiError::not_found("product_not_found", msg),
            JournalError::DuplicateEntryId(_) => {
                ApiError::new(StatusCode::CONFLICT, "duplicate_entry", msg)
            }
            JournalError::Ledger(l) => l.into(),
            _ => ApiError::bad_request("invalid_entry", msg),
        }
    }
}

impl From<AuthError> for ApiError {
    fn from(e: AuthError) -> Self {
        match e {
            AuthError::MalformedToken | AuthError::InvalidCredentials => ApiError::unauthorized(),
            AuthError::WeakPassword => ApiError::bad_request("weak_password", e.to_string()),
            AuthError::UserExists(_) => {
                ApiError::new(StatusCode::CONFLICT, "user_exists", e.to_string())
            }
        }
    }
}

impl From<LogError> for ApiError {
    fn from(e: LogError) -> Self {
        tracing::error!(error = %e, "log write failed");
        ApiError::internal("could not persist the change")
    }
}
