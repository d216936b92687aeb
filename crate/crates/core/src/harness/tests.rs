use std::f64::consts::PI;

use super::*;
use crate::env::{RewardParams, Termination};
use crate::optimize::converged_stats_of;
use crate::policy::{Greedy, HoldAltitude};

fn small_geometry(nodes: usize) -> DayGeometry {
    DayGeometry { nodes, ..DayGeometry::default() }
}

fn synthetic(seed: u64, base_speed: f64, twist: f64, nodes: usize) -> DaySpec {
    let template = SyntheticWindSpec {
        seed: 0,
        base_speed,
        direction_twist: twist,
        time_drift: 0.0,
        noise: NoiseSpec::silent(0),
    };
    DaySpec::synthetic(seed, &template, small_geometry(nodes), NoiseSpec::silent(0))
}

fn calm_day() -> Day {
    synthetic(0, 0.0, 0.0, 21).load(0).unwrap()
}

fn short(horizon: usize) -> EnvConfig {
    EnvConfig { horizon, ..EnvConfig::default() }
}

fn small_spec(days: Vec<DaySpec>, env: EnvConfig) -> ExperimentSpec {
    ExperimentSpec {
        days,
        optimizers: vec![Method::Uniform],
        rewards: vec![RewardKind::Step],
        controller: ControllerSpec::default(),
        budget: 4,
        seeds_per_cell: 1,
        seed: 3,
        threads: 1,
        env,
        optimizer: OptimizerSettings::default(),
        sweep: SweepSpec { launches: 2, radius_km: 100.0 },
        kde: KdeSpec { resolution: 41, ..KdeSpec::default() },
    }
}

#[test]
fn fnv1a_reference_vectors() {
    assert_eq!(label_hash(&[""]), 0xcbf2_9ce4_8422_2325);
    assert_eq!(label_hash(&["a"]), 0xaf63_dc4c_8601_ec8c);
    assert_eq!(label_hash(&["foobar"]), 0x8594_4171_f739_67e8);
    assert_ne!(label_hash(&["ab", "c"]), label_hash(&["a", "bc"]));
    assert_eq!(split_seed(0, &["a"]), label_hash(&["a"]));
    assert_eq!(split_seed(5, &["a"]) ^ 5, label_hash(&["a"]));
}

fn direct_density(points: &[(f64, f64)], h: f64, gx: f64, gy: f64) -> f64 {
    let s: f64 = points.iter().map(|(x, y)| (-((gx - x).powi(2) + (gy - y).powi(2)) / (2.0 * h * h)).exp()).sum();
    s / (2.0 * PI * h * h * points.len() as f64)
}

#[test]
fn kde_peak_of_a_single_point() {
    let spec = KdeSpec { bandwidth_km: 10.0, ..KdeSpec::default() };
    let grid = kde_2d(&[(0.0, 0.0)], &spec).unwrap();
    assert!((grid.at(100, 100) - 0.0015915).abs() < 1e-6);
    assert!((grid.at(100, 100) - 1.0 / (2.0 * PI * 100.0)).abs() < 1e-15);
}

#[test]
fn kde_matches_the_direct_sum() {
    let points = [(12.0, -30.0), (100.5, 80.0), (-399.0, 390.0), (450.0, 0.0)];
    let spec = KdeSpec { extent_km: 400.0, resolution: 81, bandwidth_km: 15.0 };
    let grid = kde_2d(&points, &spec).unwrap();
    for (ix, iy) in [(41, 37), (50, 48), (0, 80), (80, 40), (1, 79), (20, 20)] {
        let d = direct_density(&points, 15.0, grid.coordinate(ix), grid.coordinate(iy));
        assert!((grid.at(ix, iy) - d).abs() <= 1e-13 * d.max(1e-300) + 1e-18, "{ix},{iy}: {} vs {d}", grid.at(ix, iy));
    }
}

#[test]
fn kde_integrates_to_one_and_is_symmetric() {
    let points = [(10.0, 20.0), (-50.0, 5.0), (100.0, -100.0)];
    let spec = KdeSpec::default();
    let grid = kde_2d(&points, &spec).unwrap();
    assert!((grid.integral() - 1.0).abs() < 0.02, "{}", grid.integral());
    assert!(grid.density.iter().all(|&d| d >= 0.0));

    let mirrored: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (-x, y)).collect();
    let m = kde_2d(&mirrored, &spec).unwrap();
    let n = spec.resolution;
    for iy in 0..n {
        for ix in 0..n {
            let a = grid.at(ix, iy);
            let b = m.at(n - 1 - ix, iy);
            assert!((a - b).abs() <= 1e-15 + 1e-12 * a, "{ix},{iy}");
        }
    }

    let reversed: Vec<(f64, f64)> = points.iter().rev().copied().collect();
    assert_eq!(kde_2d(&reversed, &spec).unwrap(), grid);
}

#[test]
fn kde_rejects_bad_input() {
    assert!(matches!(kde_2d(&[], &KdeSpec::default()), Err(HarnessError::Usage(_))));
    let zero = KdeSpec { bandwidth_km: 0.0, ..KdeSpec::default() };
    assert!(kde_2d(&[(0.0, 0.0)], &zero).is_err());
}

#[test]
fn kde_csv_layout() {
    let spec = KdeSpec { extent_km: 10.0, resolution: 3, bandwidth_km: 5.0 };
    let grid = kde_2d(&[(0.0, 0.0)], &spec).unwrap();
    let mut buf = Vec::new();
    grid.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x_km,y_km,density");
    assert_eq!(lines.len(), 10);
    assert!(lines[1].starts_with("-10,-10,"));
    assert!(lines[2].starts_with("0,-10,"));
}

#[test]
fn wind_cone_without_twist_is_parallel() {
    let day = synthetic(4, 8.0, 0.0, 5).load(0).unwrap();
    let cfg = EnvConfig::default();
    let cone = wind_cone(&day.field, 10.0, -20.0, 3.0, &cfg).unwrap();
    assert_eq!(cone.len(), 25);
    for a in &cone {
        for b in &cone {
            assert!((a.wind.u * b.wind.v - a.wind.v * b.wind.u).abs() <= 1e-9);
        }
    }
    let mut buf = Vec::new();
    write_windcone_csv(&cone, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().next().unwrap(), WINDCONE_CSV_HEADER);
    assert_eq!(text.lines().count(), 26);
}

#[test]
fn wind_cone_spanning_half_a_turn_has_opposing_levels() {
    let cfg = EnvConfig::default();
    let span = cfg.obs_pressure_hi - cfg.obs_pressure_lo;
    let day = synthetic(2, 8.0, PI / span, 5).load(0).unwrap();
    let cone = wind_cone(&day.field, 0.0, 0.0, 0.0, &cfg).unwrap();
    let unit = |c: &ConeVector| {
        let s = c.wind.speed();
        (c.wind.u / s, c.wind.v / s)
    };
    let min_dot = cone
        .iter()
        .flat_map(|a| cone.iter().map(move |b| (a, b)))
        .map(|(a, b)| {
            let (ua, va) = unit(a);
            let (ub, vb) = unit(b);
            ua * ub + va * vb
        })
        .fold(f64::INFINITY, f64::min);
    assert!(min_dot < -0.999, "{min_dot}");
}

#[test]
fn wind_cone_outside_the_grid_is_an_error() {
    let day = synthetic(0, 8.0, 0.0, 5).load(0).unwrap();
    assert!(wind_cone(&day.field, 5000.0, 0.0, 0.0, &EnvConfig::default()).is_err());
}

#[test]
fn objective_is_pure_and_accepts_the_box_corner() {
    let day = synthetic(1, 6.0, 2.0 * PI / 15_500.0, 61).load(7).unwrap();
    let cfg = short(60);
    let greedy = Greedy::default();
    let f = launch_objective(&day, RewardKind::Tanh, &greedy, &cfg);
    let c = LaunchConfig::new(-120.0, 35.0, 5.0);
    assert_eq!(f.evaluate(&c).unwrap(), f.evaluate(&c).unwrap());
    assert!(f.evaluate(&LaunchConfig::new(400.0, 400.0, 24.0)).is_ok());
    assert!(f.evaluate(&LaunchConfig::new(401.0, 0.0, 0.0)).is_err());
}

#[test]
fn never_inside_under_step_reward_is_bounded_by_the_cliff() {
    let day = calm_day();
    let cfg = short(200);
    let hold = HoldAltitude::new(14_000.0);
    let f = launch_objective(&day, RewardKind::Step, &hold, &cfg);
    let g = f.evaluate(&LaunchConfig::new(400.0, 400.0, 0.0)).unwrap();
    // Without horizontal wind the balloon stays at d = 400√2 km.
    let p = RewardParams::default();
    let d = 400.0 * 2f64.sqrt();
    let per_step = p.cliff * (-(d - p.decay_rho) / p.decay_tau).exp2();
    assert!(g <= cfg.horizon as f64 * per_step * (1.0 + 1e-9));
    assert!(g < 0.4 * cfg.horizon as f64);
}

#[test]
fn sweep_from_the_target_with_a_hovering_controller_is_always_inside() {
    let day = calm_day();
    let cfg = short(120);
    let hold = HoldAltitude::new(14_000.0);
    let spec = SweepSpec { launches: 3, radius_km: 0.0 };
    let out = reward_sweep(&day, &RewardKind::ALL, &hold, &cfg, &spec, 1).unwrap();
    assert_eq!(out.len(), 3);
    for r in &out {
        assert!(r.traces.iter().all(|t| t.termination == Termination::Horizon));
        assert_eq!((r.tw_fraction, r.reach_ratio), (1.0, 1.0));
    }
}

#[test]
fn sweep_that_never_reaches_the_region_scores_zero() {
    let day = calm_day();
    let cfg = EnvConfig {
        reward: RewardParams { region_radius: 1e-3, ..RewardParams::default() },
        ..short(30)
    };
    let hold = HoldAltitude::new(14_000.0);
    let spec = SweepSpec { launches: 8, radius_km: 300.0 };
    let out = reward_sweep(&day, &[RewardKind::Step], &hold, &cfg, &spec, 2).unwrap();
    assert_eq!((out[0].tw_fraction, out[0].reach_ratio), (0.0, 0.0));
}

#[test]
fn sweep_launches_are_polar_uniform() {
    let spec = SweepSpec { launches: 20_000, radius_km: 400.0 };
    let launches = sweep_launches(&spec, 0);
    assert!(launches.iter().all(|l| l.x_km.hypot(l.y_km) <= 400.0 + 1e-9 && l.dt_h == 0.0));
    // r ~ U(0, R): half the launches fall inside R/2 (area-uniform would give a quarter).
    let inner = launches.iter().filter(|l| l.x_km.hypot(l.y_km) < 200.0).count() as f64 / spec.launches as f64;
    assert!((inner - 0.5).abs() < 0.02, "{inner}");
    assert!(matches!(
        reward_sweep(&calm_day(), &[RewardKind::Step], &Greedy::default(), &short(5), &SweepSpec { launches: 0, radius_km: 1.0 }, 0),
        Err(HarnessError::Usage(_))
    ));
}

#[test]
fn single_cell_report_matches_its_trace() {
    let spec = small_spec(vec![synthetic(0, 6.0, 2.0 * PI / 15_500.0, 31)], short(30));
    let result = run_experiment(&spec).unwrap();
    assert_eq!(result.cells.len(), 1);
    assert_eq!(result.report.rows.len(), 1);
    let row = &result.report.rows[0];
    let stats = converged_stats_of(&result.cells[0].trace.best_so_far()).unwrap();
    assert_eq!((row.cells, row.failures), (1, 0));
    assert_eq!(row.mean_converged_max, stats.converged_max);
    assert_eq!(row.mean_converge_index, stats.converge_index as f64);
    assert!((0.0..=1.0).contains(&row.tw_fraction) && (0.0..=1.0).contains(&row.reach_ratio));
}

#[test]
fn constant_objective_has_no_spread_across_seeds() {
    let env = EnvConfig {
        reward: RewardParams { region_radius: 1e6, ..RewardParams::default() },
        ..short(20)
    };
    let mut spec = small_spec(vec![synthetic(0, 0.0, 0.0, 21)], env);
    spec.seeds_per_cell = 2;
    spec.controller = ControllerSpec::HoldAltitude { altitude: 14_000.0 };
    let result = run_experiment(&spec).unwrap();
    let stats: Vec<_> = result.cells.iter().map(|c| converged_stats(&c.trace).unwrap()).collect();
    assert_eq!(stats.len(), 2);
    assert_ne!(result.cells[0].seed, result.cells[1].seed);
    assert_eq!(stats[0], stats[1]);
    assert_eq!(stats[0].converged_max, 20.0);
    assert_eq!(stats[0].converge_index, 1);
}

#[test]
fn objective_failures_are_recorded_per_cell() {
    // A grid too short in time for the episode: late launches leave it.
    let mut day = synthetic(0, 5.0, 0.0, 21);
    if let DaySource::Synthetic { geometry, .. } = &mut day.source {
        geometry.times = 2;
    }
    let mut spec = small_spec(vec![day], short(200));
    spec.budget = 6;
    let result = run_experiment(&spec).unwrap();
    assert_eq!(result.cells.len(), 1);
    let row = &result.report.rows[0];
    assert_eq!(row.cells, 1);
    let cell = &result.cells[0];
    assert!(cell.failed());
    assert!(cell.trace.len() < 6);
    assert!(cell.trace.error.as_deref().unwrap().contains("time"), "{:?}", cell.trace.error);
    assert_eq!(row.failures, 1);
    assert!(row.mean_converged_max.is_nan());
}

#[test]
fn spec_validation() {
    let base = small_spec(vec![synthetic(0, 1.0, 0.0, 5)], short(10));
    let mut s = base.clone();
    s.days.clear();
    assert!(s.validate().is_err());
    let mut s = base.clone();
    s.optimizers = vec![Method::Bo];
    s.budget = 3;
    assert!(s.validate().is_err());
    let mut s = base.clone();
    s.seeds_per_cell = 0;
    assert!(s.validate().is_err());
    let mut s = base.clone();
    s.days.push(s.days[0].clone());
    assert!(s.validate().is_err());
    assert!(base.validate().is_ok());
}

fn dir_contents(dir: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    out.sort();
    out
}

#[test]
fn experiment_outputs_are_reproducible_and_consistent() {
    let mut spec = small_spec(
        vec![synthetic(0, 6.0, 2.0 * PI / 15_500.0, 31), synthetic(1, 6.0, 2.0 * PI / 15_500.0, 31)],
        short(25),
    );
    spec.optimizers = vec![Method::Uniform, Method::Pso];
    spec.rewards = vec![RewardKind::Step, RewardKind::Exp];
    spec.optimizer.pso.swarm_size = 3;
    spec.budget = 6;
    spec.seeds_per_cell = 2;
    let config = vec![("seed".to_string(), "3".to_string())];

    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let files = write_experiment(&run_experiment(&spec).unwrap(), &spec, a.path(), &config).unwrap();
    let mut spec_b = spec.clone();
    spec_b.threads = 2;
    write_experiment(&run_experiment(&spec_b).unwrap(), &spec_b, b.path(), &config).unwrap();
    assert_eq!(dir_contents(a.path()), dir_contents(b.path()));

    assert_eq!(files.names.len(), 1 + 16 + 2 + 2 + 1);
    let meta = std::fs::read_to_string(a.path().join("meta.txt")).unwrap();
    for name in &files.names {
        assert!(meta.lines().any(|l| l == name), "{name} missing from meta.txt");
    }
    let on_disk: Vec<String> = dir_contents(a.path()).into_iter().map(|(n, _)| n).collect();
    assert_eq!(on_disk.len(), files.names.len());

    // Report means recomputed from the trace files.
    let report = std::fs::read_to_string(a.path().join("report.csv")).unwrap();
    let mut lines = report.lines();
    assert_eq!(lines.next().unwrap(), REPORT_CSV_HEADER);
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        let mut maxes = Vec::new();
        let mut idx = Vec::new();
        for day in ["day0", "day1"] {
            for s in 0..2 {
                let text = std::fs::read_to_string(a.path().join(format!("trace_{day}_{}_{}_{s}.csv", f[0], f[1]))).unwrap();
                let best: Vec<f64> = text.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
                let last = *best.last().unwrap();
                maxes.push(last);
                idx.push((best.iter().position(|&v| (v - last).abs() <= 1e-9).unwrap() + 1) as f64);
            }
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert_eq!(f[4].parse::<f64>().unwrap(), mean(&maxes), "{line}");
        assert_eq!(f[5].parse::<f64>().unwrap(), mean(&idx), "{line}");
    }
}
