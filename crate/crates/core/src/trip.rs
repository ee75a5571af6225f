//! Ride distance from GPS traces, trip footprints and lower-carbon
//! transport suggestions.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::factor::{Category, FactorError, FactorRegistry, Unit};
use crate::timestamp::Timestamp;

/// Mean Earth radius of the spherical model.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "RawPoint"))]
pub struct GeoPoint {
    lat: f64,
    lon: f64,
}

#[cfg(feature = "serde")]
#[derive(serde::Deserialize)]
struct RawPoint {
    lat: f64,
    lon: f64,
}

#[cfg(feature = "serde")]
impl TryFrom<RawPoint> for GeoPoint {
    type Error = TripError;

    fn try_from(raw: RawPoint) -> Result<Self, Self::Error> {
        GeoPoint::new(raw.lat, raw.lon)
    }
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self, TripError> {
        let lat_ok = lat.is_finite() && (-90.0..=90.0).contains(&lat);
        let lon_ok = lon.is_finite() && (-180.0..=180.0).contains(&lon);
        if lat_ok && lon_ok {
            Ok(GeoPoint { lat, lon })
        } else {
            Err(TripError::InvalidPoint { lat, lon })
        }
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TripError {
    #[error("coordinate ({lat}, {lon}) is out of range")]
    InvalidPoint { lat: f64, lon: f64 },
    #[error("a trace needs at least two points")]
    TraceTooShort,
    #[error("exactly one of trace or declared_distance_km must be given")]
    AmbiguousDistance,
    #[error("declared distance must be finite and non-negative")]
    InvalidDistance,
    #[error("{field} must be a non-empty token without whitespace or ':'")]
    InvalidField { field: &'static str },
    #[error("no route between the given points")]
    RouteUnavailable,
    #[error(transparent)]
    Factor(#[from] FactorError),
}

/// Great-circle distance on a sphere of radius [`EARTH_RADIUS_KM`].
///
/// Exactly symmetric in its arguments: only absolute coordinate differences
/// and a commutative product of cosines enter the formula.
pub fn haversine_km(a: GeoPoint, b: GeoPoint) -> f64 {
    let (lat_a, lat_b) = (a.lat.to_radians(), b.lat.to_radians());
    let d_lat = (b.lat - a.lat).abs().to_radians();
    let d_lon = (b.lon - a.lon).abs().to_radians();
    let s_lat = libm::sin(d_lat / 2.0);
    let s_lon = libm::sin(d_lon / 2.0);
    let h = s_lat * s_lat + libm::cos(lat_a) * libm::cos(lat_b) * s_lon * s_lon;
    let h = h.clamp(0.0, 1.0);
    2.0 * EARTH_RADIUS_KM * libm::atan2(libm::sqrt(h), libm::sqrt(1.0 - h))
}

/// Sum of great-circle legs between consecutive points. GPS jitter is not
/// filtered.
pub fn trace_distance_km(trace: &[GeoPoint]) -> Result<f64, TripError> {
    if trace.len() < 2 {
        return Err(TripError::TraceTooShort);
    }
    Ok(trace.windows(2).map(|w| haversine_km(w[0], w[1])).sum())
}

/// Source of ride distances for traced trips.
pub trait DistanceProvider {
    fn route_km(&self, trace: &[GeoPoint]) -> Result<f64, TripError>;
}

/// Built-in provider: the trace itself, leg by leg, on the sphere.
#[derive(Clone, Copy, Debug, Default)]
pub struct GreatCircle;

impl DistanceProvider for GreatCircle {
    fn route_km(&self, trace: &[GeoPoint]) -> Result<f64, TripError> {
        trace_distance_km(trace)
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TripRequest {
    pub user_id: String,
    #[cfg_attr(
        feature = "serde",
        serde(default, skip_serializing_if = "Option::is_none")
    )]
    pub trace: Option<Vec<GeoPoint>>,
    #[cfg_attr(
        feature = "serde",
        serde(default, skip_serializing_if = "Option::is_none")
    )]
    pub declared_distance_km: Option<f64>,
    pub mode: String,
    pub fuel: String,
    pub timestamp: Timestamp,
}

impl TripRequest {
    pub fn declared(
        user_id: impl Into<String>,
        distance_km: f64,
        mode: &str,
        fuel: &str,
        timestamp: Timestamp,
    ) -> Self {
        TripRequest {
            user_id: user_id.into(),
            trace: None,
            declared_distance_km: Some(distance_km),
            mode: mode.to_string(),
            fuel: fuel.to_string(),
            timestamp,
        }
    }

    pub fn traced(
        user_id: impl Into<String>,
        trace: Vec<GeoPoint>,
        mode: &str,
        fuel: &str,
        timestamp: Timestamp,
    ) -> Self {
        TripRequest {
            user_id: user_id.into(),
            trace: Some(trace),
            declared_distance_km: None,
            mode: mode.to_string(),
            fuel: fuel.to_string(),
            timestamp,
        }
    }

    /// The registry variant this trip is priced under: `mode:fuel`, lowercased.
    pub fn variant(&self) -> Result<String, TripError> {
        let mode = normalize_token(&self.mode, "mode")?;
        let fuel = normalize_token(&self.fuel, "fuel")?;
        Ok(format!("{mode}:{fuel}"))
    }

    fn distance_km(&self, provider: &dyn DistanceProvider) -> Result<f64, TripError> {
        match (&self.trace, self.declared_distance_km) {
            (Some(trace), None) => {
                if trace.len() < 2 {
                    return Err(TripError::TraceTooShort);
                }
                let km = provider.route_km(trace)?;
                if km.is_finite() && km >= 0.0 {
                    Ok(km)
                } else {
                    Err(TripError::InvalidDistance)
                }
            }
            (None, Some(km)) if km.is_finite() && km >= 0.0 => Ok(km),
            (None, Some(_)) => Err(TripError::InvalidDistance),
            _ => Err(TripError::AmbiguousDistance),
        }
    }
}

fn normalize_token(raw: &str, field: &'static str) -> Result<String, TripError> {
    let t = raw.trim();
    if t.is_empty() || t.contains(':') || t.chars().any(char::is_whitespace) {
        return Err(TripError::InvalidField { field });
    }
    Ok(t.to_lowercase())
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TripRecord {
    pub user_id: String,
    #[cfg_attr(
        feature = "serde",
        serde(default, skip_serializing_if = "Option::is_none")
    )]
    pub trace: Option<Vec<GeoPoint>>,
    #[cfg_attr(
        feature = "serde",
        serde(default, skip_serializing_if = "Option::is_none")
    )]
    pub declared_distance_km: Option<f64>,
    pub mode: String,
    pub fuel: String,
    pub timestamp: Timestamp,
    pub distance_km: f64,
    pub footprint_kg: f64,
}

/// Prices a trip with the registry value in force now. The distance comes
/// from `provider` for traced trips and is taken as given otherwise.
pub fn compute_trip_with(
    request: &TripRequest,
    registry: &FactorRegistry,
    provider: &dyn DistanceProvider,
) -> Result<TripRecord, TripError> {
    let variant = request.variant()?;
    let factor = registry
        .lookup(Category::Travel, &variant)?
        .expect_unit(Unit::Km)?;
    let distance_km = request.distance_km(provider)?;
    let (mode, fuel) = variant.split_once(':').expect("variant is mode:fuel");
    Ok(TripRecord {
        user_id: request.user_id.clone(),
        trace: request.trace.clone(),
        declared_distance_km: request.declared_distance_km,
        mode: mode.to_string(),
        fuel: fuel.to_string(),
        timestamp: request.timestamp,
        distance_km,
        footprint_kg: distance_km * factor.kg_co2e_per_unit,
    })
}

/// [`compute_trip_with`] using the [`GreatCircle`] provider.
pub fn compute_trip(
    request: &TripRequest,
    registry: &FactorRegistry,
) -> Result<TripRecord, TripError> {
    compute_trip_with(request, registry, &GreatCircle)
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AlternativeSuggestion {
    pub mode: String,
    pub fuel: String,
    pub footprint_kg: f64,
    pub savings_kg: f64,
}

/// Every travel variant that would have emitted strictly less over the same
/// distance, cheapest first, ties ordered by `mode:fuel`. Feasibility (no
/// walking suggestion for a 300 km trip) is left to the caller.
pub fn suggest_alternatives(
    record: &TripRecord,
    registry: &FactorRegistry,
) -> Vec<AlternativeSuggestion> {
    let mut ranked: Vec<(&str, AlternativeSuggestion)> = registry
        .in_category(Category::Travel)
        .filter(|f| f.unit() == Unit::Km)
        .filter_map(|f| {
            let footprint_kg = record.distance_km * f.kg_co2e_per_unit;
            if footprint_kg >= record.footprint_kg {
                return None;
            }
            let (mode, fuel) = f.variant().split_once(':').unwrap_or((f.variant(), ""));
            Some((
                f.variant(),
                AlternativeSuggestion {
                    mode: mode.to_string(),
                    fuel: fuel.to_string(),
                    footprint_kg,
                    savings_kg: record.footprint_kg - footprint_kg,
                },
            ))
        })
        .collect();
    ranked.sort_by(|(va, a), (vb, b)| {
        a.footprint_kg
            .total_cmp(&b.footprint_kg)
            .then_with(|| va.cmp(vb))
    });
    ranked.into_iter().map(|(_, s)| s).collect()
}
