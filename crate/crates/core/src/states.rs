//! USPS state codes and the capital-city coordinate table.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::str::FromStr;

/// Two-letter USPS code, validated against [`KNOWN_CODES`].
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateCode([u8; 2]);

/// The 50 states, in alphabetical order of code.
pub const STATES_50: [&str; 50] = [
    "AK", "AL", "AR", "AZ", "CA", "CO", "CT", "DE", "FL", "GA", "HI", "IA", "ID", "IL", "IN", "KS", "KY", "LA", "MA",
    "MD", "ME", "MI", "MN", "MO", "MS", "MT", "NC", "ND", "NE", "NH", "NJ", "NM", "NV", "NY", "OH", "OK", "OR", "PA",
    "RI", "SC", "SD", "TN", "TX", "UT", "VA", "VT", "WA", "WI", "WV", "WY",
];

/// Non-state codes that still appear in provider files.
pub const OTHER_CODES: [&str; 9] = ["DC", "PR", "VI", "GU", "AS", "MP", "AA", "AE", "AP"];

/// Whitelist used when validating provider-state rows.
pub fn is_known_code(code: &str) -> bool {
    STATES_50.contains(&code) || OTHER_CODES.contains(&code)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown state code {0:?}")]
pub struct UnknownState(pub String);

impl StateCode {
    pub fn new(code: &str) -> Result<Self, UnknownState> {
        let upper = code.trim().to_ascii_uppercase();
        if upper.len() == 2 && is_known_code(&upper) {
            let b = upper.as_bytes();
            Ok(StateCode([b[0], b[1]]))
        } else {
            Err(UnknownState(code.to_string()))
        }
    }

    pub fn as_str(&self) -> &str {
        // constructed only from ASCII
        std::str::from_utf8(&self.0).unwrap()
    }

    pub fn bytes(&self) -> [u8; 2] {
        self.0
    }

    pub(crate) fn from_bytes(b: [u8; 2]) -> Result<Self, UnknownState> {
        let s = String::from_utf8_lossy(&b).into_owned();
        Self::new(&s)
    }

    /// True for the 50 states (not DC or territories).
    pub fn is_state(&self) -> bool {
        STATES_50.contains(&self.as_str())
    }

    /// All 50 states in code order.
    pub fn all_states() -> Vec<StateCode> {
        STATES_50.iter().map(|s| StateCode::new(s).unwrap()).collect()
    }
}

impl FromStr for StateCode {
    type Err = UnknownState;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StateCode::new(s)
    }
}

impl fmt::Display for StateCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Debug for StateCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_str())
    }
}

impl Serialize for StateCode {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for StateCode {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        StateCode::new(&s).map_err(serde::de::Error::custom)
    }
}

/// Version of the embedded capital coordinate table.
pub const CAPITALS_TABLE_VERSION: u32 = 1;

/// Capital city coordinates (latitude, longitude in decimal degrees, WGS84),
/// city-centre values from the USGS Geographic Names Information System.
const CAPITALS: [(&str, f64, f64); 50] = [
    ("AK", 58.3019, -134.4197),
    ("AL", 32.3777, -86.3006),
    ("AR", 34.7465, -92.2896),
    ("AZ", 33.4484, -112.0740),
    ("CA", 38.5767, -121.4934),
    ("CO", 39.7392, -104.9903),
    ("CT", 41.7658, -72.6734),
    ("DE", 39.1582, -75.5244),
    ("FL", 30.4383, -84.2807),
    ("GA", 33.7490, -84.3880),
    ("HI", 21.3069, -157.8583),
    ("IA", 41.5868, -93.6250),
    ("ID", 43.6150, -116.2023),
    ("IL", 39.7817, -89.6501),
    ("IN", 39.7684, -86.1581),
    ("KS", 39.0473, -95.6752),
    ("KY", 38.2009, -84.8733),
    ("LA", 30.4515, -91.1871),
    ("MA", 42.3601, -71.0589),
    ("MD", 38.9784, -76.4922),
    ("ME", 44.3106, -69.7795),
    ("MI", 42.7325, -84.5555),
    ("MN", 44.9537, -93.0900),
    ("MO", 38.5767, -92.1735),
    ("MS", 32.2988, -90.1848),
    ("MT", 46.5891, -112.0391),
    ("NC", 35.7796, -78.6382),
    ("ND", 46.8083, -100.7837),
    ("NE", 40.8136, -96.7026),
    ("NH", 43.2081, -71.5376),
    ("NJ", 40.2206, -74.7597),
    ("NM", 35.6870, -105.9378),
    ("NV", 39.1638, -119.7674),
    ("NY", 42.6526, -73.7562),
    ("OH", 39.9612, -82.9988),
    ("OK", 35.4676, -97.5164),
    ("OR", 44.9429, -123.0351),
    ("PA", 40.2732, -76.8867),
    ("RI", 41.8240, -71.4128),
    ("SC", 34.0007, -81.0348),
    ("SD", 44.3683, -100.3510),
    ("TN", 36.1627, -86.7816),
    ("TX", 30.2672, -97.7431),
    ("UT", 40.7608, -111.8910),
    ("VA", 37.5407, -77.4360),
    ("VT", 44.2601, -72.5754),
    ("WA", 47.0379, -122.9007),
    ("WI", 43.0731, -89.4012),
    ("WV", 38.3498, -81.6326),
    ("WY", 41.1400, -104.8202),
];

/// Mean Earth radius (IUGG), km.
pub const EARTH_RADIUS_KM: f64 = 6371.0088;

/// Capital coordinates for one of the 50 states.
pub fn capital_coordinates(state: StateCode) -> Option<(f64, f64)> {
    CAPITALS.iter().find(|(c, _, _)| *c == state.as_str()).map(|&(_, lat, lon)| (lat, lon))
}

/// Great-circle distance between two points given in degrees.
pub fn haversine_km(a: (f64, f64), b: (f64, f64)) -> f64 {
    let (lat1, lon1) = (a.0.to_radians(), a.1.to_radians());
    let (lat2, lon2) = (b.0.to_radians(), b.1.to_radians());
    let h = ((lat2 - lat1) / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * ((lon2 - lon1) / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_rejects() {
        assert_eq!(StateCode::new("nh").unwrap().as_str(), "NH");
        assert!(StateCode::new("ZZ").is_err());
        assert!(StateCode::new("NHX").is_err());
        assert!(!StateCode::new("DC").unwrap().is_state());
    }

    #[test]
    fn every_state_has_a_capital() {
        for s in StateCode::all_states() {
            assert!(capital_coordinates(s).is_some(), "{s}");
        }
        assert!(capital_coordinates(StateCode::new("PR").unwrap()).is_none());
    }
}
