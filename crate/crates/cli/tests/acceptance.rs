//! One line per acceptance criterion. Run with `--nocapture` to see them.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::fs;
use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use support::Check;
use workcell_core::analysis::{
    binomial_band, crossover, project_shift, replay_compare, shift_takt, Strategy, TimingModel,
};
use workcell_core::geometry::{Aabb, Cuboid};
use workcell_core::safety::{
    protective_distance, read_motion_log, read_scan_log, MonitorConfig, RobotSnapshot, SafetyMonitor, SpeedMode,
    SsmParams, VoxelSet,
};
use workcell_core::scheduler::run_shift;
use workcell_core::world::{run_monitor, Scenario, World, WorldSafety};

fn repo() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn workcell(args: &[&str]) -> Result<String, String> {
    let o = Command::new(env!("CARGO_BIN_EXE_workcell"))
        .args(args)
        .current_dir(repo())
        .output()
        .map_err(|e| e.to_string())?;
    if !o.status.success() {
        return Err(format!("{args:?}: {}", String::from_utf8_lossy(&o.stderr)));
    }
    Ok(String::from_utf8_lossy(&o.stdout).into_owned())
}

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn protective_distance_defaults() -> Check {
    let p = SsmParams::default();
    let s0 = protective_distance(&p, 0.0);
    ensure((s0 - 0.486).abs() <= 1e-12, format!("S(0) = {s0}"))?;
    for v in [0.0, 0.25, 0.5, 1.0, 2.0] {
        let h = 1e-3;
        let slope = (protective_distance(&p, v + h) - protective_distance(&p, v)) / h;
        ensure((slope - p.t_r).abs() < 1e-9, format!("slope at {v}: {slope}"))?;
    }
    Ok(format!("S(0) = {s0}, slope = {}", p.t_r))
}

fn energy_table() -> Check {
    let out = workcell(&["energy", "data/arms.json"])?;
    let want = [
        ("Head", [2.68, 1.52], "Unsafe"),
        ("Hand", [0.60, 0.34], "Safe"),
        ("Lower Arm", [0.23, 0.13], "Safe"),
        ("Upper Arm", [0.20, 0.11], "Safe"),
        ("Torso", [0.18, 0.10], "Safe"),
    ];
    for (region, ratios, status) in want {
        let line = out
            .lines()
            .find(|l| l.starts_with(region))
            .ok_or(format!("no row for {region}"))?;
        let cols: Vec<&str> = line.split('|').skip(1).collect();
        ensure(cols.len() == 2, format!("{line}"))?;
        for (col, want) in cols.iter().zip(ratios) {
            let mut it = col.split_whitespace();
            let got: f64 = it.next().and_then(|v| v.parse().ok()).ok_or(format!("{line}"))?;
            ensure((got - want).abs() <= 0.005, format!("{region}: {got} vs {want}"))?;
            ensure(it.next() == Some(status), format!("{region}: expected {status}"))?;
        }
    }
    Ok("10 ratios within 0.005, Head unsafe for both arms".into())
}

fn stop_zone_granularity() -> Check {
    let monitor = SafetyMonitor::new(MonitorConfig::default()).map_err(|e| e.to_string())?;
    let mask = monitor.stop_mask();
    ensure(mask.voxel_count() == 8910, format!("{} stop voxels", mask.voxel_count()))?;
    let inside: Vec<usize> = (0..monitor.config().grid.voxel_count()).filter(|&i| mask.contains(i)).collect();
    let robot = RobotSnapshot::default();
    let mode = |n: usize| monitor.decide(&VoxelSet::from_unsorted(inside[..n].to_vec()), &robot).mode;
    ensure(mode(9) == SpeedMode::Stop, format!("9 voxels: {:?}", mode(9)))?;
    ensure(mode(8) != SpeedMode::Stop, format!("8 voxels: {:?}", mode(8)))?;
    Ok("9 of 8910 stops, 8 does not".into())
}

fn intrusion_sequence() -> Check {
    let s = Scenario::intrusion();
    let rec = run_monitor(World::new(s.clone()).map_err(|e| e.to_string())?, s.duration_s, false)
        .map_err(|e| e.to_string())?;
    let modes: Vec<SpeedMode> = rec.decisions.iter().map(|d| d.mode).collect();
    let changes: Vec<(usize, SpeedMode)> = (1..modes.len())
        .filter(|&t| modes[t] != modes[t - 1])
        .map(|t| (t, modes[t]))
        .collect();
    let seq: Vec<SpeedMode> = changes.iter().map(|c| c.1).collect();
    let want = [SpeedMode::Slowdown, SpeedMode::Stop, SpeedMode::Slowdown, SpeedMode::Normal];
    ensure(seq == want, format!("sequence {seq:?}"))?;
    for d in &rec.decisions {
        let want = match d.mode {
            SpeedMode::Normal => 1.0,
            SpeedMode::Slowdown => 0.7,
            SpeedMode::Stop => 0.0,
        };
        ensure(d.speed_ratio == want, format!("tick {}: speed {}", d.tick, d.speed_ratio))?;
    }

    // zone edges from the worker box alone, clipped to the observed grid
    let w = &s.workers[0];
    let grid = s.monitor.grid.region();
    let clip = |z: &Aabb| Aabb {
        min: z.min.sup(&grid.min),
        max: z.max.inf(&grid.max),
    };
    let edges = |zone: &Aabb| -> Result<(usize, usize), String> {
        let hit: Vec<usize> = (0..modes.len())
            .filter(|&t| {
                w.center_at(t as f64 * s.dt_s - w.first_visit_s)
                    .is_some_and(|c| Cuboid::axis_aligned(c, w.half_extents).aabb().intersects(zone))
            })
            .collect();
        Ok((*hit.first().ok_or("zone never entered")?, hit.last().unwrap() + 1))
    };
    let (slow_in, slow_out) = edges(&clip(&s.monitor.slowdown_zone.region))?;
    let (stop_in, stop_out) = edges(&clip(&s.monitor.stop_zone.region))?;
    let mut worst = 0;
    for ((tick, mode), edge) in changes.iter().zip([slow_in, stop_in, stop_out, slow_out]) {
        let d = tick.abs_diff(edge);
        ensure(d <= 1, format!("{mode:?} at tick {tick}, zone edge at {edge}"))?;
        worst = worst.max(d);
    }
    let ticks: Vec<usize> = changes.iter().map(|c| c.0).collect();
    Ok(format!("transitions at ticks {ticks:?}, max offset {worst} tick"))
}

fn throughput_projection() -> Check {
    let human = project_shift(&TimingModel::human(), 28_800).map_err(|e| e.to_string())?;
    let robot = project_shift(&TimingModel::robot_alone(), 28_800).map_err(|e| e.to_string())?;
    let (h, r) = (human[28_800], robot[28_800]);
    ensure(h == 170 && r == 181, format!("human {h}, robot {r}"))?;
    let t = crossover(&robot, &human).ok_or("no crossover")?;
    ensure((3300..=3720).contains(&t), format!("crossover at {t} s"))?;
    Ok(format!("human {h}, robot {r}, crossover {t} s"))
}

fn factory_statistics() -> Check {
    const P: f64 = 1.0 - 2.0 / 324.0;
    let base = Scenario::factory();
    ensure(base.duration_s == 18_600.0, "factory shift length")?;
    let (mut ops, mut defects) = (0u64, 0u64);
    let (mut cycles_range, mut takt_range, mut pass_range) = ((usize::MAX, 0), (f64::MAX, 0.0f64), (1.0f64, 0.0f64));
    for seed in 0..20 {
        let mut s = base.clone();
        s.seed = seed;
        let task = s.task.clone();
        let duration = s.duration_s;
        let mut source = WorldSafety::new(World::new(s).map_err(|e| e.to_string())?, false).map_err(|e| e.to_string())?;
        let shift = run_shift(&task, &mut source, duration, seed).map_err(|e| e.to_string())?;
        let n = shift.cycles.len();
        let takt = shift_takt(duration, n).map_err(|e| e.to_string())?;
        let pass = shift.pass_rate().ok_or("no operations")?;
        let band = binomial_band(P, shift.operations() as u64, 1.96);
        ensure((105..=111).contains(&n), format!("seed {seed}: {n} cycles"))?;
        ensure((165.0..=180.0).contains(&takt), format!("seed {seed}: takt {takt:.1}"))?;
        ensure(band.0 <= pass && pass <= band.1, format!("seed {seed}: pass {pass:.4} outside {band:?}"))?;
        ops += shift.operations() as u64;
        defects += shift.defects() as u64;
        cycles_range = (cycles_range.0.min(n), cycles_range.1.max(n));
        takt_range = (takt_range.0.min(takt), takt_range.1.max(takt));
        pass_range = (pass_range.0.min(pass), pass_range.1.max(pass));
    }
    let pooled = 1.0 - defects as f64 / ops as f64;
    let band = binomial_band(P, ops, 1.96);
    ensure(band.0 <= pooled && pooled <= band.1, format!("pooled pass {pooled:.4} outside {band:?}"))?;
    Ok(format!(
        "cycles {}-{}, takt {:.1}-{:.1} s, pass {:.4}-{:.4}, pooled {pooled:.4} in [{:.4}, {:.4}]",
        cycles_range.0, cycles_range.1, takt_range.0, takt_range.1, pass_range.0, pass_range.1, band.0, band.1
    ))
}

fn productivity_ordering() -> Check {
    let dir = repo().join("data/replay_demo");
    let scans = read_scan_log(&dir.join("scans.jsonl")).map_err(|e| e.to_string())?;
    let motion = read_motion_log(&dir.join("motion.jsonl")).map_err(|e| e.to_string())?;
    let r = replay_compare(&scans, &motion, &Scenario::replay_demo().monitor, &Strategy::ALL)
        .map_err(|e| e.to_string())?;
    let pct = |n: &str| r.row(n).map(|row| row.increase_pct).ok_or(format!("no {n} row"));
    let (m, d, z, n) = (pct("fixed_margin")?, pct("dynamic_spheres")?, pct("fixed_zones")?, pct("none")?);
    ensure(m >= d && d >= z && z >= n, format!("{m:.2} / {d:.2} / {z:.2} / {n:.2}"))?;
    Ok(format!("fixed_margin {m:.2}% >= dynamic_spheres {d:.2}% >= fixed_zones {z:.2}% >= none {n:.2}%"))
}

fn oracle_suites() -> Check {
    let v = support::voxelize_suite(support::CASES)?;
    let s = support::segment_suite(support::CASES)?;
    let r = support::ray_suite(support::CASES)?;
    Ok(format!("{v}; {s}; {r}"))
}

fn controller_contracts() -> Check {
    let mut out = vec![support::exact_servo()?];
    for eps in [0.001, 0.003, 0.005] {
        out.push(support::noisy_servo(eps, 100)?);
    }
    for p in [0.1, 0.3, 0.5] {
        out.push(support::geometric_retries(p, 2000)?);
    }
    out.push(support::retraction_range(10_000)?);
    Ok(out.join("; "))
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let runs = [("intrusion", "12"), ("factory", "900")];
    let mut compared = 0;
    for (name, duration) in runs {
        let scenario = format!("scenarios/{name}.json");
        let outs: Vec<PathBuf> = (0..2).map(|k| dir.path().join(format!("{name}-{k}"))).collect();
        for o in &outs {
            workcell(&["simulate", &scenario, "--duration", duration, "--record-scans", "--out", o.to_str().unwrap()])?;
        }
        for f in ["events.csv", "decisions.csv", "scans.jsonl"] {
            let a = fs::read(outs[0].join(f)).map_err(|e| e.to_string())?;
            let b = fs::read(outs[1].join(f)).map_err(|e| e.to_string())?;
            ensure(!a.is_empty() && a == b, format!("{name}/{f} differs"))?;
            compared += a.len();
        }
    }
    Ok(format!("{compared} bytes identical across runs"))
}

#[test]
fn acceptance() {
    type Criterion = (u32, &'static str, u64, fn() -> Check);
    let criteria: [Criterion; 10] = [
        (1, "protective distance", 1, protective_distance_defaults),
        (2, "energy ratios", 1, energy_table),
        (3, "stop zone granularity", 1, stop_zone_granularity),
        (4, "speed modulation", 10, intrusion_sequence),
        (5, "throughput projection", 1, throughput_projection),
        (6, "shift statistics", 120, factory_statistics),
        (7, "productivity ordering", 30, productivity_ordering),
        (8, "oracle suites", 60, oracle_suites),
        (9, "controller contracts", 30, controller_contracts),
        (10, "determinism", 60, determinism),
    ];
    let mut failed = vec![];
    for (id, name, limit, check) in criteria {
        let start = Instant::now();
        let result = check();
        let took = start.elapsed();
        let result = match result {
            Ok(_) if took > Duration::from_secs(limit) => Err(format!("took {took:.1?}, limit {limit} s")),
            r => r,
        };
        let (tag, detail) = match &result {
            Ok(d) => ("PASS", d.clone()),
            Err(e) => ("FAIL", e.clone()),
        };
        println!("criterion {id:>2} {tag} {name} [{:.2} s / {limit} s]: {detail}", took.as_secs_f64());
        if result.is_err() {
            failed.push(id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
