//! Run configuration: a JSON file whose fields command-line flags override.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use satlink_core::efficiency::HopAngleConvention;
use satlink_core::Preset;

use crate::error::{AppError, AppResult};
use crate::output::Format;

pub const DEFAULT_D_MAX_KM: f64 = 3000.0;
pub const DEFAULT_EPSILON: f64 = 0.01;
pub const DEFAULT_TRIALS: u64 = 10_000;

/// Every field is optional so that file and flags can be layered.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub preset: Option<Preset>,
    pub n_sat: Option<usize>,
    pub altitude_km: Option<f64>,
    pub d_max_km: Option<f64>,
    pub epsilon: Option<f64>,
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub output: Option<PathBuf>,
    pub format: Option<Format>,
    pub threads: Option<usize>,
    pub convention: Option<HopAngleConvention>,
}

/// Where the satellites come from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Population {
    pub n_sat: usize,
    pub altitude_km: f64,
    pub preset: Option<Preset>,
}

impl RunConfig {
    pub fn load(path: &Path) -> AppResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| AppError::Config(format!("{}: {e}", path.display())))
    }

    /// Fields set in `over` replace those in `self`. A preset and explicit
    /// population parameters displace each other.
    pub fn overlay(mut self, over: RunConfig) -> Self {
        if over.preset.is_some() {
            self.n_sat = None;
            self.altitude_km = None;
        }
        if over.n_sat.is_some() || over.altitude_km.is_some() {
            self.preset = None;
        }
        macro_rules! take {
            ($($f:ident),*) => { $( if over.$f.is_some() { self.$f = over.$f; } )* };
        }
        take!(preset, n_sat, altitude_km, d_max_km, epsilon, seed, trials, output, format, threads, convention);
        self
    }

    pub fn population(&self) -> AppResult<Population> {
        match (self.preset, self.n_sat, self.altitude_km) {
            (Some(p), None, None) => Ok(Population { n_sat: p.n_sat(), altitude_km: p.altitude_km(), preset: Some(p) }),
            (None, Some(n), Some(a)) => {
                if n == 0 || !(a > 0.0) {
                    return Err(AppError::Config("n_sat and altitude must be positive".into()));
                }
                Ok(Population { n_sat: n, altitude_km: a, preset: None })
            }
            (Some(_), _, _) => Err(AppError::Config("give either a preset or n_sat/altitude, not both".into())),
            _ => Err(AppError::Config("need a preset or both n_sat and altitude".into())),
        }
    }

    pub fn d_max_km(&self) -> AppResult<f64> {
        positive(self.d_max_km.unwrap_or(DEFAULT_D_MAX_KM), "d_max")
    }

    pub fn epsilon(&self) -> AppResult<f64> {
        let e = self.epsilon.unwrap_or(DEFAULT_EPSILON);
        if e > 0.0 && e < 1.0 {
            Ok(e)
        } else {
            Err(AppError::Config(format!("epsilon {e} must lie in (0, 1)")))
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn trials(&self) -> AppResult<u64> {
        match self.trials.unwrap_or(DEFAULT_TRIALS) {
            0 => Err(AppError::Config("trials must be positive".into())),
            t => Ok(t),
        }
    }

    pub fn threads(&self) -> AppResult<Option<usize>> {
        match self.threads {
            Some(0) => Err(AppError::Config("threads must be positive".into())),
            t => Ok(t),
        }
    }

    /// Output format: explicit, else from the output extension, else CSV.
    pub fn format(&self) -> Format {
        self.format.or_else(|| self.output.as_deref().and_then(Format::from_path)).unwrap_or_default()
    }
}

fn positive(v: f64, name: &str) -> AppResult<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(AppError::Config(format!("{name} must be positive, got {v}")))
    }
}

/// Parses an angle in radians; accepts `pi`, `2pi`, `pi/4`, `0.5*pi` and plain numbers.
pub fn parse_angle(s: &str) -> Result<f64, String> {
    let t = s.trim().to_ascii_lowercase().replace(' ', "");
    let number = |x: &str| x.parse::<f64>().map_err(|_| format!("cannot parse angle '{s}'"));
    let value = if let Some((num, den)) = t.split_once('/') {
        parse_angle(num)? / number(den)?
    } else if let Some(k) = t.strip_suffix("pi") {
        let k = k.strip_suffix('*').unwrap_or(k);
        let k = match k {
            "" => 1.0,
            "-" => -1.0,
            k => number(k)?,
        };
        k * std::f64::consts::PI
    } else {
        number(&t)?
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(format!("angle '{s}' is not finite"))
    }
}
