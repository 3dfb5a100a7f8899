use std::collections::BTreeMap;
use std::fs;

use cbabm::calibration::ScenarioRunner;
use cbabm::config::Bounds;
use cbabm::error::Error;
use cbabm::ingest;
use cbabm::sim::{CityData, RunOptions};
use cbabm::synth::{write_synthetic_city, SynthPaths, SynthSpec};
use cbabm::workflow::{initial_params, port_city, run_calibration, SimulationRunner, PATTERNS_FILE, STEP_MOVEMENT};
use cbabm::ScenarioConfig;

fn synth() -> (tempfile::TempDir, SynthPaths) {
    let dir = tempfile::tempdir().unwrap();
    let paths = write_synthetic_city(dir.path(), &SynthSpec::default()).unwrap();
    (dir, paths)
}

fn small(paths: &SynthPaths) -> ScenarioConfig {
    let mut c = ScenarioConfig::default();
    c.files.boundary = Some(paths.boundary.clone());
    c.files.pois = Some(paths.pois.clone());
    c.n_agents = 1500;
    c.n_pois = 800;
    c.days = 10;
    c.p_initial_infected = 0.02;
    c.calibration.severity_scales = vec![1.0];
    c.calibration.seeds_per_eval = 1;
    c
}

#[test]
fn port_derives_counts_and_writes_loadable_config() {
    let (dir, paths) = synth();
    let out = dir.path().join("ported/scenario.txt");
    fs::create_dir_all(out.parent().unwrap()).unwrap();
    let report = port_city(&ScenarioConfig::default(), &paths.boundary, &paths.pois, &paths.data, &out).unwrap();

    let patterns = ingest::load_patterns(&paths.data.join(PATTERNS_FILE)).unwrap();
    let want = ingest::derive_poi_count(&patterns, 10_000, SynthSpec::default().total_pois()).unwrap();
    assert_eq!(report.config.n_pois, want);
    assert!(report.poi_params_path.exists());
    // Census shares and normalized rate multipliers land in the bands.
    let age: BTreeMap<_, _> = report.config.age.iter().map(|b| (b.label.as_str(), (b.share, b.susceptibility))).collect();
    assert_eq!(age["0-17"], (0.21, 9500.0 / 21000.0));
    assert_eq!(age["45-64"].1, 1.0);
    assert!(report.config.social_distancing > 0.0 && report.config.social_distancing < 1.0);

    let reloaded = ScenarioConfig::load(&out).unwrap();
    assert_eq!(reloaded.n_pois, want);
    let city = CityData::load(&reloaded).unwrap();
    assert!(city.poi_table.is_some());

    let first = fs::read(&out).unwrap();
    port_city(&ScenarioConfig::default(), &paths.boundary, &paths.pois, &paths.data, &out).unwrap();
    assert_eq!(fs::read(&out).unwrap(), first, "porting twice gives the same config");
}

#[test]
fn port_names_the_failing_step() {
    let (dir, paths) = synth();
    fs::remove_file(paths.data.join(PATTERNS_FILE)).unwrap();
    let out = dir.path().join("scenario.txt");
    let err = port_city(&ScenarioConfig::default(), &paths.boundary, &paths.pois, &paths.data, &out).unwrap_err();
    assert!(matches!(err, Error::Port { step, .. } if step == STEP_MOVEMENT), "{err}");
    assert!(err.to_string().contains("Update Movement Data"));
    assert_eq!(err.exit_code(), 3);
    assert!(!out.exists());
}

#[test]
fn port_without_rate_tables_is_a_usage_error() {
    let (dir, paths) = synth();
    for f in fs::read_dir(&paths.data).unwrap() {
        let p = f.unwrap().path();
        if p.file_name().unwrap().to_string_lossy().starts_with("rates_") {
            fs::remove_file(p).unwrap();
        }
    }
    let err = port_city(
        &ScenarioConfig::default(),
        &paths.boundary,
        &paths.pois,
        &paths.data,
        &dir.path().join("s.txt"),
    )
    .unwrap_err();
    assert!(err.to_string().contains("Modify Parameters"), "{err}");
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn zero_batches_returns_initial_parameters() {
    let (_dir, paths) = synth();
    let cfg = small(&paths);
    let city = CityData::load(&cfg).unwrap();
    let observed = vec![100.0; 10];
    let outcome = run_calibration(&cfg, &city, &observed, Some(0)).unwrap();
    assert_eq!(outcome.result.best, initial_params(&cfg).unwrap());
    assert_eq!(outcome.result.trace.len(), 1);
    assert_eq!(initial_params(&outcome.best_config).unwrap(), initial_params(&cfg).unwrap());
}

#[test]
fn self_generated_series_scores_zero() {
    let (_dir, paths) = synth();
    let cfg = small(&paths);
    let city = CityData::load(&cfg).unwrap();
    let runner = SimulationRunner { base: &cfg, city: &city };
    let observed = runner.run(&initial_params(&cfg).unwrap(), 1.0, 0).unwrap();
    let outcome = run_calibration(&cfg, &city, &observed, Some(3)).unwrap();
    assert_eq!(outcome.result.trace[0], 0.0);
    assert_eq!(outcome.result.best_fitness, 0.0);
}

#[test]
fn short_observed_series_is_rejected() {
    let (_dir, paths) = synth();
    let cfg = small(&paths);
    let city = CityData::load(&cfg).unwrap();
    let err = run_calibration(&cfg, &city, &[1.0; 5], Some(1)).unwrap_err();
    assert_eq!(err.exit_code(), 2, "{err}");
}

#[test]
fn calibration_moves_toward_the_generating_rate() {
    let (dir, paths) = synth();
    let mut truth = small(&paths);
    truth.set_param("alpha", 0.3);
    let city = CityData::load(&truth).unwrap();
    let observed = cbabm::sim::run_with_city(&truth, &city, &RunOptions::default())
        .unwrap()
        .cumulative_infected();

    let mut cfg = small(&paths);
    cfg.set_param("alpha", 0.1);
    cfg.calibration.bounds = BTreeMap::from([("alpha".to_string(), Bounds { lower: 0.05, upper: 1.0 })]);
    let outcome = run_calibration(&cfg, &city, &observed, Some(12)).unwrap();
    let trace = &outcome.result.trace;
    assert!(trace.windows(2).all(|w| w[1] <= w[0]), "{trace:?}");
    assert!(outcome.result.best_fitness < trace[0], "{trace:?}");
    let alpha = outcome.result.best.get("alpha").unwrap();
    assert!((alpha - 0.3).abs() < 0.2, "alpha {alpha}");

    let (best, trace_path) = outcome.write(&dir.path().join("cal")).unwrap();
    let best_cfg = ScenarioConfig::load(&best).unwrap();
    assert_eq!(best_cfg.epidemic.alpha, alpha);
    assert_eq!(fs::read_to_string(trace_path).unwrap().lines().count(), 14);
}
