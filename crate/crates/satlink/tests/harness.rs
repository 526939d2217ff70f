use satlink::harness::{estimate_type2_probability, sweep, SweepSpec, SweepVariable};
use satlink_core::efficiency::HopAngleConvention;
use satlink_core::experiment::{Scenario, Strategy};
use satlink_core::Preset;

fn spec(values: Vec<f64>) -> SweepSpec {
    SweepSpec {
        variable: SweepVariable::AltitudeKm,
        values,
        n_sat: 600,
        altitude_km: 550.0,
        d_max_km: 3000.0,
        epsilon: 0.05,
        distance_km: 8000.0,
        trials: 20,
        base_seed: 3,
        convention: HopAngleConvention::AsPrinted,
        belt_halfwidth: None,
    }
}

#[test]
fn type2_estimate_needs_enough_trials() {
    let s = Scenario::for_preset(Preset::Kuiper, 0.1);
    assert!(estimate_type2_probability(&s, 99, 1).is_err());
    let e = estimate_type2_probability(&s, 200, 1).unwrap();
    assert!(!e.type1);
    assert_eq!(e.probability, e.simulated_rate);
    assert!(e.ci_low <= e.probability && e.probability <= e.ci_high);
}

#[test]
fn type1_plans_report_certain_interruption() {
    let s = Scenario::for_preset(Preset::OneWeb, 0.01);
    let e = estimate_type2_probability(&s, 100, 1).unwrap();
    assert!(e.type1);
    assert_eq!((e.probability, e.ci_low, e.ci_high), (1.0, 1.0, 1.0));
    assert!(e.simulated_rate < 1.0);
}

#[test]
fn sweep_rejects_bad_specs() {
    assert!(sweep(&spec(vec![]), &Strategy::ALL).is_err());
    assert!(sweep(&spec(vec![600.0, 500.0]), &Strategy::ALL).is_err());
    assert!(sweep(&spec(vec![-1.0]), &Strategy::ALL).is_err());
    let mut s = spec(vec![100.0]);
    s.variable = SweepVariable::NSat;
    s.values = vec![100.5];
    assert!(sweep(&s, &Strategy::ALL).is_err());
    s.trials = 0;
    s.values = vec![100.0];
    assert!(sweep(&s, &Strategy::ALL).is_err());
}

#[test]
fn sweep_emits_one_row_per_value_and_strategy() {
    let rows = sweep(&spec(vec![500.0, 900.0]), &[Strategy::Ideal, Strategy::MaxStepsize]).unwrap();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0].strategy, Strategy::Ideal);
    assert_eq!(rows[3].swept_value, 900.0);
    // chords are shorter than the arc they follow
    for r in rows.iter().filter(|r| r.strategy == Strategy::Ideal) {
        assert!(r.mean_latency_ms > 0.0 && r.mean_latency_ms <= 8000.0 / 300.0);
    }
}
