//! Hourly scenario profiles: `hour,demand_pu,wind_cf,pv_cf`, 24 rows.

use std::path::Path;

use sopflex_core::study::{HourProfile, ScenarioProfiles};

use crate::error::{Error, Result};
use crate::io::read_text;

pub const COLUMNS: [&str; 4] = ["hour", "demand_pu", "wind_cf", "pv_cf"];

/// The bundled synthetic day: wind strongest overnight, PV peaking at
/// midday and demand peaking in the evening.
pub const BUNDLED_DAY: &str = include_str!("../data/day.csv");

pub fn load_profiles(path: &Path) -> Result<ScenarioProfiles> {
    parse_profiles(&read_text(path)?, path)
}

pub fn bundled_profiles() -> ScenarioProfiles {
    parse_profiles(BUNDLED_DAY, Path::new("data/day.csv")).expect("bundled profiles are valid")
}

/// Errors name the 1-based data row; the header is row 0.
pub fn parse_profiles(text: &str, path: &Path) -> Result<ScenarioProfiles> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| Error::format(path, e.to_string()))?.clone();
    for col in COLUMNS {
        if !headers.iter().any(|h| h == col) {
            return Err(Error::format(path, format!("missing column {col:?}")));
        }
    }
    let mut hours = Vec::new();
    for (i, rec) in reader.deserialize::<HourProfile>().enumerate() {
        hours.push(rec.map_err(|e| Error::format(path, format!("row {}: {e}", i + 1)))?);
    }
    ScenarioProfiles::new(hours).map_err(|source| Error::Profile {
        path: path.to_path_buf(),
        source,
    })
}
