//! File formats: aggregate tables as CSV or JSON, and constellation files.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use satlink_core::{Constellation, SpherePoint};

use crate::error::{AppError, AppResult};

/// Version of the CSV/JSON output layout, printed by `--version`.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    /// Guesses the format from a file extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()? {
            "csv" => Some(Format::Csv),
            "json" => Some(Format::Json),
            _ => None,
        }
    }
}

pub fn to_csv<T: Serialize>(rows: &[T]) -> AppResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    w.into_inner().map_err(|e| AppError::io("<csv buffer>", e.into_error()))
}

pub fn to_json<T: Serialize>(rows: &[T]) -> AppResult<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(rows)?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn render<T: Serialize>(rows: &[T], format: Format) -> AppResult<Vec<u8>> {
    match format {
        Format::Csv => to_csv(rows),
        Format::Json => to_json(rows),
    }
}

pub fn write_rows<T: Serialize>(path: &Path, rows: &[T], format: Format) -> AppResult<()> {
    let bytes = render(rows, format)?;
    let mut f = fs::File::create(path).map_err(|e| AppError::io(path, e))?;
    f.write_all(&bytes).map_err(|e| AppError::io(path, e))
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(bytes: &[u8]) -> AppResult<Vec<T>> {
    csv::Reader::from_reader(bytes).deserialize().collect::<Result<_, _>>().map_err(Into::into)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SatelliteEntry {
    pub theta_rad: f64,
    pub phi_rad: f64,
}

/// On-disk constellation: one shell, satellites by polar and azimuth angle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstellationFile {
    pub r_earth_km: f64,
    pub altitude_km: f64,
    pub satellites: Vec<SatelliteEntry>,
}

impl ConstellationFile {
    pub fn from_constellation(c: &Constellation) -> Self {
        let satellites = c.positions().map(|p| SatelliteEntry { theta_rad: p.theta(), phi_rad: p.phi() }).collect();
        Self { r_earth_km: c.r_earth_km(), altitude_km: c.altitude_km(), satellites }
    }

    pub fn to_constellation(&self) -> AppResult<Constellation> {
        let r = self.r_earth_km + self.altitude_km;
        let points = self
            .satellites
            .iter()
            .map(|s| SpherePoint::new(r, s.theta_rad, s.phi_rad))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Constellation::from_points(self.r_earth_km, self.altitude_km, &points)?)
    }

    pub fn load(path: &Path) -> AppResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: &Path) -> AppResult<()> {
        let bytes = serde_json::to_vec_pretty(self)?;
        fs::write(path, bytes).map_err(|e| AppError::io(path, e))
    }
}
