// Range checks are written `!(x > 0.0)` on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::f64::consts::PI;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use satlink::config::{parse_angle, RunConfig};
use satlink::harness::{run_table1, sweep, with_threads, SweepSpec, SweepVariable, Table1Row, MIN_SATS_GRID_K};
use satlink::output::{render, write_rows, ConstellationFile, Format, SatelliteEntry, SCHEMA_VERSION};
use satlink::{AppError, AppResult};
use satlink_core::analysis::{
    contact_mean, iteration_bound, min_sats_over_grid, n_min_ideal, plan_hops, theta_max, LinkSpec,
};
use satlink_core::efficiency::HopAngleConvention;
use satlink_core::experiment::{route_strategy, trial_constellation, Scenario, Strategy};
use satlink_core::geometry::ANTIPODAL_TOLERANCE;
use satlink_core::routing::route_ideal;
use satlink_core::{Constellation, PhysicalConstants, Preset, RouteStatus, SatId, Vec3};

const EXIT_USAGE: u8 = 1;
const EXIT_TYPE1: u8 = 2;
const EXIT_TYPE2: u8 = 3;

#[derive(Parser)]
#[command(name = "satlink", about = "Minimum-latency multi-hop routing over uniformly scattered satellites")]
#[command(disable_version_flag = true)]
struct Cli {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for Monte Carlo runs.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Print the version and output schema version.
    #[arg(short = 'V', long)]
    version: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form planning quantities for one link.
    Analyze {
        #[command(flatten)]
        pop: PopulationArgs,
        /// Dome angle between the endpoints, radians (`pi` accepted).
        #[arg(long, value_parser = parse_angle, default_value = "pi")]
        dome_angle: f64,
        #[arg(long)]
        json: bool,
    },
    /// Builds one route and prints it as JSON.
    Route {
        #[command(flatten)]
        pop: PopulationArgs,
        #[arg(long, default_value = "equal-interval")]
        strategy: Strategy,
        /// Constellation file instead of a seeded sample.
        #[arg(long)]
        constellation: Option<PathBuf>,
        #[arg(long, requires = "dst")]
        src: Option<usize>,
        #[arg(long, requires = "src")]
        dst: Option<usize>,
        /// Separation of generated endpoints when `--src/--dst` are absent.
        #[arg(long, value_parser = parse_angle, default_value = "pi")]
        dome_angle: f64,
        /// Max-stepsize belt half-width, radians; defaults to the reliable angle.
        #[arg(long, value_parser = parse_angle)]
        belt: Option<f64>,
        /// Also write the sampled constellation to this file.
        #[arg(long)]
        save_constellation: Option<PathBuf>,
    },
    /// Reliability table for the reference constellations.
    Table1 {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.01])]
        epsilons: Vec<f64>,
    },
    /// Parameter sweep over distance, altitude or satellite count.
    Sweep {
        #[command(flatten)]
        pop: PopulationArgs,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum)]
        var: SweepVar,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long)]
        step: f64,
        /// Fixed endpoint distance (km along the constellation sphere) when not swept.
        #[arg(long, default_value_t = 10_000.0)]
        distance: f64,
        #[arg(long, value_delimiter = ',', default_value = "ideal,equal-interval,min-deflection,max-stepsize")]
        strategies: Vec<Strategy>,
        #[arg(long, value_enum)]
        convention: Option<ConventionArg>,
        #[arg(long, value_parser = parse_angle)]
        belt: Option<f64>,
    },
}

#[derive(Args, Default)]
struct PopulationArgs {
    #[arg(long)]
    preset: Option<Preset>,
    #[arg(long)]
    n_sat: Option<usize>,
    /// Shell altitude, km.
    #[arg(long)]
    altitude: Option<f64>,
    /// Maximum hop distance, km.
    #[arg(long)]
    d_max: Option<f64>,
    /// Tolerable interruption probability.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Default)]
struct RunArgs {
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum SweepVar {
    Distance,
    Altitude,
    NSat,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum ConventionArg {
    AsPrinted,
    FullHop,
}

enum Outcome {
    Success,
    Type1,
    Type2,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::Type1) => ExitCode::from(EXIT_TYPE1),
        Ok(Outcome::Type2) => ExitCode::from(EXIT_TYPE2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn run(cli: Cli) -> AppResult<Outcome> {
    if cli.version {
        println!("satlink {} (output schema {SCHEMA_VERSION})", env!("CARGO_PKG_VERSION"));
        return Ok(Outcome::Success);
    }
    let Some(command) = cli.command else {
        return Err(AppError::Config("no command given; see --help".into()));
    };
    let base = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let base = base.overlay(RunConfig { threads: cli.threads, ..Default::default() });
    match command {
        Command::Analyze { pop, dome_angle, json } => analyze(layer(base, &pop, None), dome_angle, json),
        Command::Route { pop, strategy, constellation, src, dst, dome_angle, belt, save_constellation } => {
            let cfg = layer(base, &pop, None);
            let endpoints = src.zip(dst).map(|(s, d)| (SatId(s), SatId(d)));
            route(&cfg, strategy, constellation, endpoints, dome_angle, belt, save_constellation)
        }
        Command::Table1 { run, seed, epsilons } => {
            let pop = PopulationArgs { seed, ..Default::default() };
            table1(layer(base, &pop, Some(&run)), &epsilons)
        }
        Command::Sweep { pop, run, var, from, to, step, distance, strategies, convention, belt } => {
            let cfg = layer(base, &pop, Some(&run));
            let convention = convention.map(|c| match c {
                ConventionArg::AsPrinted => HopAngleConvention::AsPrinted,
                ConventionArg::FullHop => HopAngleConvention::FullHop,
            });
            let cfg = cfg.overlay(RunConfig { convention, ..Default::default() });
            run_sweep(&cfg, var, (from, to, step), distance, &strategies, belt)
        }
    }
}

fn layer(base: RunConfig, pop: &PopulationArgs, run: Option<&RunArgs>) -> RunConfig {
    let flags = RunConfig {
        preset: pop.preset,
        n_sat: pop.n_sat,
        altitude_km: pop.altitude,
        d_max_km: pop.d_max,
        epsilon: pop.epsilon,
        seed: pop.seed,
        trials: run.and_then(|r| r.trials),
        output: run.and_then(|r| r.output.clone()),
        format: run.and_then(|r| r.format),
        ..Default::default()
    };
    base.overlay(flags)
}

#[derive(Serialize)]
struct AnalysisReport {
    n_sat: usize,
    altitude_km: f64,
    d_max_km: f64,
    epsilon: f64,
    dome_angle: f64,
    theta_max: f64,
    n_min: usize,
    n_hat: usize,
    reliable_angle: f64,
    type1: bool,
    iterations: usize,
    iteration_bound: f64,
    contact_angle_mean: f64,
    min_satellites: Option<u64>,
}

fn analyze(cfg: RunConfig, dome_angle: f64, json: bool) -> AppResult<Outcome> {
    let pop = cfg.population()?;
    let (d_max, epsilon) = (cfg.d_max_km()?, cfg.epsilon()?);
    let constants = PhysicalConstants::default();
    let r = constants.r_earth_km + pop.altitude_km;
    let tm = theta_max(r, constants.r_earth_km, d_max)?;
    let spec = LinkSpec::new(SatId(0), SatId(1), d_max, epsilon, constants)?;
    let plan = plan_hops(dome_angle, &spec, pop.n_sat, tm)?;
    let report = AnalysisReport {
        n_sat: pop.n_sat,
        altitude_km: pop.altitude_km,
        d_max_km: d_max,
        epsilon,
        dome_angle,
        theta_max: tm,
        n_min: n_min_ideal(dome_angle, tm)?,
        n_hat: plan.n_hat,
        reliable_angle: plan.theta_r,
        type1: plan.type1_interrupted,
        iterations: plan.iterations_used,
        iteration_bound: iteration_bound(epsilon, tm, pop.n_sat),
        contact_angle_mean: contact_mean(pop.n_sat)?.wallis,
        min_satellites: min_sats_over_grid(dome_angle, tm, epsilon, MIN_SATS_GRID_K).ok().map(|(n, _)| n),
    };
    if json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        println!("theta_max           {:.6} rad", report.theta_max);
        println!("n_min               {}", report.n_min);
        println!("n_hat               {}", report.n_hat);
        println!("reliable_angle      {:.6} rad (theta_max/2 = {:.6})", report.reliable_angle, 0.5 * tm);
        println!("type1               {}", if report.type1 { "yes" } else { "no" });
        println!("contact_angle_mean  {:.6} rad", report.contact_angle_mean);
        match report.min_satellites {
            Some(n) => println!("min_satellites      {n}"),
            None => println!("min_satellites      n/a"),
        }
        println!("iterations          {} (bound {:.3})", report.iterations, report.iteration_bound);
    }
    Ok(if plan.type1_interrupted { Outcome::Type1 } else { Outcome::Success })
}

#[derive(Serialize)]
struct RouteReport {
    strategy: Strategy,
    status: RouteStatus,
    direct: bool,
    hops: Vec<SatId>,
    hop_distances_km: Vec<f64>,
    latency_ms: f64,
    ideal_latency_ms: f64,
    /// Relay positions of the ideal route; relay targets for equal-interval.
    positions: Vec<SatelliteEntry>,
    n_hat: usize,
    type1: bool,
}

fn route(
    cfg: &RunConfig,
    strategy: Strategy,
    file: Option<PathBuf>,
    endpoints: Option<(SatId, SatId)>,
    dome_angle: f64,
    belt: Option<f64>,
    save: Option<PathBuf>,
) -> AppResult<Outcome> {
    let (d_max, epsilon) = (cfg.d_max_km()?, cfg.epsilon()?);
    let constants = PhysicalConstants::default();
    let (c, spec) = match (file, endpoints) {
        (Some(path), Some((src, dst))) => {
            let c = ConstellationFile::load(&path)?.to_constellation()?;
            (c, LinkSpec::new(src, dst, d_max, epsilon, constants)?)
        }
        (Some(_), None) => return Err(AppError::Config("a constellation file needs --src and --dst".into())),
        (None, Some((src, dst))) => {
            let pop = cfg.population()?;
            let c = Constellation::sample_bpp(pop.n_sat, constants.r_earth_km, pop.altitude_km, cfg.seed())?;
            (c, LinkSpec::new(src, dst, d_max, epsilon, constants)?)
        }
        (None, None) => {
            let pop = cfg.population()?;
            let scenario = Scenario {
                n_sat: pop.n_sat,
                altitude_km: pop.altitude_km,
                d_max_km: d_max,
                epsilon,
                theta_02n: dome_angle,
                constants,
                belt_halfwidth: belt,
            };
            trial_constellation(&scenario.prepare()?, cfg.seed())?
        }
    };
    if spec.src.0 >= c.len() || spec.dst.0 >= c.len() {
        return Err(AppError::Config(format!("endpoint ids must be below {}", c.len())));
    }
    let spec = match spec.arc_pole {
        None if c.unit(spec.src).angle_to(c.unit(spec.dst)) > PI - ANTIPODAL_TOLERANCE => {
            let pole = fallback_pole(c.unit(spec.src));
            spec.with_arc_pole(pole)
        }
        _ => spec,
    };
    if let Some(path) = save {
        ConstellationFile::from_constellation(&c).save(&path)?;
    }
    let (ps, pd) = (c.position(spec.src), c.position(spec.dst));
    let theta = ps.unit().angle_to(pd.unit());
    let scenario = Scenario {
        n_sat: c.len(),
        altitude_km: c.altitude_km(),
        d_max_km: d_max,
        epsilon,
        theta_02n: theta,
        constants: PhysicalConstants { r_earth_km: c.r_earth_km(), ..constants },
        belt_halfwidth: belt,
    };
    let prep = scenario.prepare()?;
    let ideal = route_ideal(&ps, &pd, &spec)?;
    let entry = |p: &satlink_core::SpherePoint| SatelliteEntry { theta_rad: p.theta(), phi_rad: p.phi() };
    let report = if strategy == Strategy::Ideal {
        let hop_distances_km: Vec<f64> =
            ideal.positions.windows(2).map(|w| c.radius() * (w[0].unit() - w[1].unit()).norm()).collect();
        RouteReport {
            strategy,
            status: RouteStatus::Ok,
            direct: false,
            hops: vec![spec.src, spec.dst],
            hop_distances_km,
            latency_ms: ideal.latency_ms,
            ideal_latency_ms: ideal.latency_ms,
            positions: ideal.positions.iter().map(entry).collect(),
            n_hat: ideal.n_hops,
            type1: false,
        }
    } else {
        let r = route_strategy(&prep, &c, &spec, strategy)?;
        RouteReport {
            strategy,
            status: r.status,
            direct: r.direct,
            positions: r.relay_targets.iter().map(entry).collect(),
            hops: r.hops,
            hop_distances_km: r.hop_distances_km,
            latency_ms: r.latency_ms,
            ideal_latency_ms: ideal.reference_latency(),
            n_hat: prep.plan.n_hat,
            type1: prep.plan.type1_interrupted,
        }
    };
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(if report.status == RouteStatus::Type2Interrupted { Outcome::Type2 } else { Outcome::Success })
}

/// Great-circle normal for antipodal endpoints given by ID: perpendicular to
/// `a` and to the coordinate axis least aligned with it.
fn fallback_pole(a: Vec3) -> Vec3 {
    let (x, y, z) = (a.x.abs(), a.y.abs(), a.z.abs());
    let axis = if x <= y && x <= z {
        Vec3::new(1.0, 0.0, 0.0)
    } else if y <= z {
        Vec3::new(0.0, 1.0, 0.0)
    } else {
        Vec3::new(0.0, 0.0, 1.0)
    };
    a.cross(axis).normalized().expect("axis is not parallel to a unit vector")
}

fn emit<T: Serialize>(cfg: &RunConfig, rows: &[T]) -> AppResult<()> {
    match &cfg.output {
        Some(path) => write_rows(path, rows, cfg.format()),
        None => {
            let bytes = render(rows, cfg.format())?;
            std::io::stdout().write_all(&bytes).map_err(|e| AppError::io("<stdout>", e))
        }
    }
}

fn table1(cfg: RunConfig, epsilons: &[f64]) -> AppResult<Outcome> {
    if epsilons.is_empty() || epsilons.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
        return Err(AppError::Config("epsilons must lie in (0, 1)".into()));
    }
    let trials = cfg.trials()?;
    let rows: Vec<Table1Row> = with_threads(cfg.threads()?, || run_table1(epsilons, trials, cfg.seed()))??;
    if cfg.output.is_some() {
        emit(&cfg, &rows)?;
    }
    print_table1(&rows);
    Ok(Outcome::Success)
}

fn print_table1(rows: &[Table1Row]) {
    println!(
        "{:<9} {:>5} {:>8} {:>5} {:>8} {:>9} {:>6} {:>9} {:>9}",
        "preset", "eps", "E[t0]", "hops", "t_r", "min_sats", "type1", "type2", "eff"
    );
    for r in rows {
        println!(
            "{:<9} {:>5} {:>8.4} {:>5} {:>8.4} {:>9} {:>6} {:>8.2}% {:>8.2}%",
            r.preset.name(),
            r.epsilon,
            r.contact_angle_mean,
            r.n_hat,
            r.reliable_angle,
            r.min_satellites,
            if r.type1 { "yes" } else { "no" },
            100.0 * r.type2_probability,
            100.0 * r.efficiency,
        );
    }
}

fn run_sweep(
    cfg: &RunConfig,
    var: SweepVar,
    (from, to, step): (f64, f64, f64),
    distance: f64,
    strategies: &[Strategy],
    belt: Option<f64>,
) -> AppResult<Outcome> {
    if !(step > 0.0) || !(to >= from) {
        return Err(AppError::Config("need step > 0 and to >= from".into()));
    }
    let count = ((to - from) / step + 1e-9).floor() as usize + 1;
    let values: Vec<f64> = (0..count).map(|k| from + k as f64 * step).collect();
    let (n_sat, altitude_km) = match cfg.population() {
        Ok(p) => (p.n_sat, p.altitude_km),
        Err(_) if cfg.preset.is_none() => (cfg.n_sat.unwrap_or(800), cfg.altitude_km.unwrap_or(500.0)),
        Err(e) => return Err(e),
    };
    let spec = SweepSpec {
        variable: match var {
            SweepVar::Distance => SweepVariable::DistanceKm,
            SweepVar::Altitude => SweepVariable::AltitudeKm,
            SweepVar::NSat => SweepVariable::NSat,
        },
        values,
        n_sat,
        altitude_km,
        d_max_km: cfg.d_max_km()?,
        epsilon: cfg.epsilon()?,
        distance_km: distance,
        trials: cfg.trials()?,
        base_seed: cfg.seed(),
        convention: cfg.convention.unwrap_or_default(),
        belt_halfwidth: belt,
    };
    let rows = with_threads(cfg.threads()?, || sweep(&spec, strategies))??;
    emit(cfg, &rows)?;
    if cfg.output.is_some() {
        eprintln!("wrote {} rows", rows.len());
    }
    Ok(Outcome::Success)
}
