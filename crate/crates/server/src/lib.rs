//! The footprint service: reference-data file formats, durable JSON-lines
//! logs, token auth and the JSON-over-HTTP API.

pub mod api;
pub mod auth;
pub mod config;
pub mod error;
pub mod formats;
pub mod jsonl;
pub mod service;

pub use api::router;
pub use config::Config;
pub use error::ApiError;
pub use service::{Reference, ReferencePaths, Service, StartupError};
