//! Parallel Monte Carlo runs: interruption rates, the reference-constellation
//! table and parameter sweeps.
//!
//! Trials run on the ambient rayon pool. Results are collected in trial order
//! and reduced sequentially, so outputs are identical for any thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use satlink_core::analysis::{contact_mean, iteration_bound, min_sats_over_grid};
use satlink_core::efficiency::HopAngleConvention;
use satlink_core::experiment::{
    run_trial, summarize, wilson_interval, PreparedScenario, Scenario, Strategy, Summary, TrialRecord,
};
use satlink_core::{PhysicalConstants, Preset};

use crate::error::{AppError, AppResult};

/// Normal quantile of the 95% Wilson interval.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// Grid extent used for the sufficient-constellation-size minimum.
pub const MIN_SATS_GRID_K: usize = 20;

/// Runs `trials` trials of every strategy. Records are grouped by trial,
/// strategies in the order given.
pub fn run_trials(
    prep: &PreparedScenario,
    strategies: &[Strategy],
    trials: u64,
    base_seed: u64,
) -> AppResult<Vec<TrialRecord>> {
    let per_trial: Vec<Vec<TrialRecord>> =
        (0..trials).into_par_iter().map(|i| run_trial(prep, strategies, base_seed, i)).collect::<Result<_, _>>()?;
    Ok(per_trial.into_iter().flatten().collect())
}

/// Summary of one strategy's records.
pub fn summarize_strategy(records: &[TrialRecord], strategy: Strategy) -> Summary {
    summarize(records.iter().filter(|r| r.strategy == strategy))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Type2Estimate {
    /// Reported probability: 1 when planning is already type-I interrupted.
    pub probability: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub type1: bool,
    /// Rate observed when the plan is routed regardless of the type-I flag.
    pub simulated_rate: f64,
    pub simulated: Summary,
}

/// Fraction of equal-interval routes that end type-II interrupted, each on a
/// fresh constellation, with a 95% Wilson interval.
pub fn estimate_type2_probability(scenario: &Scenario, trials: u64, base_seed: u64) -> AppResult<Type2Estimate> {
    if trials < 100 {
        return Err(AppError::Config("at least 100 trials are needed for a type-II estimate".into()));
    }
    let prep = scenario.prepare()?;
    let records = run_trials(&prep, &[Strategy::EqualInterval], trials, base_seed)?;
    Ok(type2_from(&prep, summarize(&records)))
}

fn type2_from(prep: &PreparedScenario, s: Summary) -> Type2Estimate {
    let (lo, hi) = wilson_interval(s.interrupted, s.trials, Z_95);
    let type1 = prep.plan.type1_interrupted;
    Type2Estimate {
        probability: if type1 { 1.0 } else { s.type2_rate() },
        ci_low: if type1 { 1.0 } else { lo },
        ci_high: if type1 { 1.0 } else { hi },
        type1,
        simulated_rate: s.type2_rate(),
        simulated: s,
    }
}

/// One column half (preset x epsilon) of the reliability table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub preset: Preset,
    pub epsilon: f64,
    pub n_sat: usize,
    pub altitude_km: f64,
    pub contact_angle_mean: f64,
    pub n_min: usize,
    pub n_hat: usize,
    pub iterations: usize,
    pub iteration_bound: f64,
    pub reliable_angle: f64,
    pub half_theta_max: f64,
    pub min_satellites: u64,
    pub type1: bool,
    pub type2_probability: f64,
    pub type2_ci_low: f64,
    pub type2_ci_high: f64,
    pub type2_simulated: f64,
    /// Mean over completed trials.
    pub efficiency: f64,
    pub completed_trials: u64,
    pub repaired_trials: u64,
    pub trials: u64,
    pub seed: u64,
}

/// Closed-form and simulated rows for every preset and epsilon.
///
/// Each cell uses its own seed stream derived from `base_seed`.
pub fn run_table1(epsilons: &[f64], trials: u64, base_seed: u64) -> AppResult<Vec<Table1Row>> {
    let mut rows = Vec::new();
    for (p, preset) in Preset::ALL.into_iter().enumerate() {
        for (e, &epsilon) in epsilons.iter().enumerate() {
            let seed = cell_seed(base_seed, (p * epsilons.len() + e) as u64);
            rows.push(table1_row(preset, epsilon, trials, seed)?);
        }
    }
    Ok(rows)
}

/// Seed of one experiment cell.
pub fn cell_seed(base_seed: u64, cell: u64) -> u64 {
    satlink_core::constellation::splitmix64(base_seed.wrapping_add(cell.wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

pub fn table1_row(preset: Preset, epsilon: f64, trials: u64, seed: u64) -> AppResult<Table1Row> {
    let scenario = Scenario::for_preset(preset, epsilon);
    let prep = scenario.prepare()?;
    let (min_satellites, _) = min_sats_over_grid(scenario.theta_02n, prep.theta_max, epsilon, MIN_SATS_GRID_K)?;
    let type2 = if trials > 0 {
        let records = run_trials(&prep, &[Strategy::EqualInterval], trials, seed)?;
        Some(type2_from(&prep, summarize(&records)))
    } else {
        None
    };
    let sim = type2.map(|t| t.simulated).unwrap_or_default();
    Ok(Table1Row {
        preset,
        epsilon,
        n_sat: scenario.n_sat,
        altitude_km: scenario.altitude_km,
        contact_angle_mean: contact_mean(scenario.n_sat)?.wallis,
        n_min: prep.n_min,
        n_hat: prep.plan.n_hat,
        iterations: prep.plan.iterations_used,
        iteration_bound: iteration_bound(epsilon, prep.theta_max, scenario.n_sat),
        reliable_angle: prep.plan.theta_r,
        half_theta_max: 0.5 * prep.theta_max,
        min_satellites,
        type1: prep.plan.type1_interrupted,
        type2_probability: type2.map_or(f64::NAN, |t| t.probability),
        type2_ci_low: type2.map_or(f64::NAN, |t| t.ci_low),
        type2_ci_high: type2.map_or(f64::NAN, |t| t.ci_high),
        type2_simulated: type2.map_or(f64::NAN, |t| t.simulated_rate),
        efficiency: sim.mean_efficiency,
        completed_trials: sim.completed(),
        repaired_trials: sim.repaired,
        trials,
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    /// Arc length between the endpoints on the constellation sphere.
    DistanceKm,
    AltitudeKm,
    NSat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
    pub n_sat: usize,
    pub altitude_km: f64,
    pub d_max_km: f64,
    pub epsilon: f64,
    pub distance_km: f64,
    pub trials: u64,
    pub base_seed: u64,
    #[serde(default)]
    pub convention: HopAngleConvention,
    #[serde(default)]
    pub belt_halfwidth: Option<f64>,
}

impl SweepSpec {
    pub fn validate(&self) -> AppResult<()> {
        if self.trials == 0 {
            return Err(AppError::Config("trials must be at least 1".into()));
        }
        if self.values.is_empty() {
            return Err(AppError::Config("sweep needs at least one value".into()));
        }
        if self.values.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(AppError::Config("sweep values must be strictly increasing".into()));
        }
        if self.values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(AppError::Config("sweep values must be positive".into()));
        }
        Ok(())
    }

    /// Scenario at one swept value.
    pub fn scenario_at(&self, value: f64) -> AppResult<Scenario> {
        let mut n_sat = self.n_sat;
        let mut altitude_km = self.altitude_km;
        let mut distance_km = self.distance_km;
        match self.variable {
            SweepVariable::DistanceKm => distance_km = value,
            SweepVariable::AltitudeKm => altitude_km = value,
            SweepVariable::NSat => {
                if value.fract() != 0.0 {
                    return Err(AppError::Config(format!("satellite count {value} is not an integer")));
                }
                n_sat = value as usize;
            }
        }
        let constants = PhysicalConstants::default();
        let theta_02n = distance_km / (constants.r_earth_km + altitude_km);
        if !(theta_02n > 0.0 && theta_02n <= std::f64::consts::PI) {
            return Err(AppError::Config(format!("distance {distance_km} km does not fit on the sphere")));
        }
        Ok(Scenario {
            n_sat,
            altitude_km,
            d_max_km: self.d_max_km,
            epsilon: self.epsilon,
            theta_02n,
            constants,
            belt_halfwidth: self.belt_halfwidth,
        })
    }
}

/// One output row: a swept value and a strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRecord {
    pub swept_value: f64,
    pub strategy: Strategy,
    pub mean_latency_ms: f64,
    pub type2_rate: f64,
    pub eff_measured: f64,
    pub eff_contour: f64,
    pub eff_binomial: f64,
    pub trials: u64,
    pub seed: u64,
}

/// Every swept value shares `base_seed`, so neighbouring points see the same
/// random constellations.
pub fn sweep(spec: &SweepSpec, strategies: &[Strategy]) -> AppResult<Vec<AggregateRecord>> {
    spec.validate()?;
    let mut out = Vec::with_capacity(spec.values.len() * strategies.len());
    for &value in &spec.values {
        let prep = spec.scenario_at(value)?.prepare()?;
        let eff_contour = prep.efficiency_contour(spec.convention)?;
        let eff_binomial = prep.efficiency_binomial()?;
        let records = run_trials(&prep, strategies, spec.trials, spec.base_seed)?;
        for &strategy in strategies {
            let s = summarize_strategy(&records, strategy);
            out.push(AggregateRecord {
                swept_value: value,
                strategy,
                mean_latency_ms: s.mean_latency_ms,
                type2_rate: s.type2_rate(),
                eff_measured: s.mean_efficiency,
                eff_contour,
                eff_binomial,
                trials: spec.trials,
                seed: spec.base_seed,
            });
        }
    }
    Ok(out)
}

/// Runs `f` on a dedicated pool of `threads` workers (all cores when `None`).
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> AppResult<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n.max(1));
    }
    Ok(builder.build()?.install(f))
}
