//! Oracle suites and controller contract checks shared by the core
//! integration tests and the acceptance target. Each check returns a short
//! summary on success and the first discrepancy on failure.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{Matrix3, UnitQuaternion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use workcell_core::controllers::{
    insert_with_retry, servo_run, ControllerStatus, InsertConfig, LoadCellModel, PolicyEmulator, ServoConfig,
    ServoErrorModel, SimulatedServoOracle,
};
use workcell_core::geometry::{ray_cuboid_intersect, Cuboid, Pose, Ray, Vec3};
use workcell_core::safety::{segment, voxelize, GridSpec, VoxelLabel, VoxelSet};

pub type Check = Result<String, String>;

pub const CASES: u64 = 1000;
const MARCH_STEP_M: f64 = 2e-5;
pub const RAY_TOL_M: f64 = 2e-4;

fn random_pose(rng: &mut ChaCha8Rng, lo: [f64; 3], hi: [f64; 3]) -> Pose {
    let axis = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    let angle = rng.random_range(-3.1..3.1);
    let rotation = if axis.norm() > 1e-6 {
        UnitQuaternion::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle)
    } else {
        UnitQuaternion::identity()
    };
    let t = Vec3::new(
        rng.random_range(lo[0]..hi[0]),
        rng.random_range(lo[1]..hi[1]),
        rng.random_range(lo[2]..hi[2]),
    );
    Pose::new(rotation, t)
}

fn random_cuboid(rng: &mut ChaCha8Rng) -> Cuboid {
    let pose = random_pose(rng, [-0.6, -1.4, 0.1], [0.4, 1.0, 1.7]);
    let h = Vec3::new(rng.random_range(0.02..0.3), rng.random_range(0.02..0.3), rng.random_range(0.02..0.3));
    Cuboid::new(pose, h)
}

/// Point-in-box via an explicit rotation matrix.
fn inside(p: &Vec3, c: &Cuboid) -> bool {
    let r: Matrix3<f64> = c.pose.rotation.to_rotation_matrix().into_inner();
    let local = r.transpose() * (p - c.pose.translation);
    (0..3).all(|i| local[i].abs() <= c.half_extents[i])
}

pub fn voxelize_suite(cases: u64) -> Check {
    let g = GridSpec::default();
    let dims = g.dims();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut points = 0;
    for case in 0..cases {
        let n = rng.random_range(0..400);
        let cloud: Vec<Vec3> = (0..n)
            .map(|_| {
                Vec3::new(
                    rng.random_range(-0.8..0.6),
                    rng.random_range(-1.6..1.2),
                    rng.random_range(-0.1..2.0),
                )
            })
            .collect();
        points += n;
        let mut want = BTreeSet::new();
        for p in &cloud {
            let mut ijk = [0i64; 3];
            let mut ok = true;
            for a in 0..3 {
                let f = ((p[a] - g.min_corner[a]) / g.voxel_size).floor() as i64;
                ok &= f >= 0 && f < dims[a] as i64;
                ijk[a] = f;
            }
            if ok {
                want.insert(((ijk[0] as usize * dims[1]) + ijk[1] as usize) * dims[2] + ijk[2] as usize);
            }
        }
        let want: Vec<usize> = want.into_iter().collect();
        if voxelize(&cloud, &g).as_slice() != want.as_slice() {
            return Err(format!("cloud {case} differs"));
        }
    }
    Ok(format!("{cases} clouds, {points} points"))
}

pub fn segment_suite(cases: u64) -> Check {
    let g = GridSpec::default();
    let [nx, ny, nz] = g.dims();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut labelled = 0;
    for case in 0..cases {
        let robot: Vec<Cuboid> = (0..rng.random_range(0..5)).map(|_| random_cuboid(&mut rng)).collect();
        let tool = rng.random_bool(0.7).then(|| random_cuboid(&mut rng));
        let occupied: VoxelSet = (0..rng.random_range(0..600))
            .map(|_| rng.random_range(0..g.voxel_count()))
            .collect();
        let got = segment(&occupied, &g, &robot, tool.as_ref());

        let occ: BTreeSet<usize> = occupied.iter().collect();
        let mut want = BTreeMap::new();
        for i in 0..nx {
            for j in 0..ny {
                for k in 0..nz {
                    let idx = (i * ny + j) * nz + k;
                    if !occ.contains(&idx) {
                        continue;
                    }
                    let c = Vec3::new(
                        g.min_corner.x + (i as f64 + 0.5) * g.voxel_size,
                        g.min_corner.y + (j as f64 + 0.5) * g.voxel_size,
                        g.min_corner.z + (k as f64 + 0.5) * g.voxel_size,
                    );
                    let label = if tool.as_ref().is_some_and(|t| inside(&c, t)) {
                        VoxelLabel::Tool
                    } else if robot.iter().any(|r| inside(&c, r)) {
                        VoxelLabel::Robot
                    } else {
                        VoxelLabel::Obstacle
                    };
                    want.insert(idx, label);
                }
            }
        }
        for (idx, label) in got.labels().iter().enumerate() {
            let expect = want.get(&idx).copied().unwrap_or(VoxelLabel::Empty);
            if *label != expect {
                return Err(format!("scene {case}, voxel {idx}: {label:?} vs {expect:?}"));
            }
        }
        labelled += occ.len();
    }
    Ok(format!("{cases} scenes, {labelled} occupied voxels"))
}

/// First parameter along the ray at which the point is inside the box,
/// found by fixed-step marching.
fn march(origin: &Vec3, dir: &Vec3, c: &Cuboid, max_t: f64) -> Option<f64> {
    let steps = (max_t / MARCH_STEP_M).ceil() as usize;
    (0..=steps)
        .map(|s| s as f64 * MARCH_STEP_M)
        .find(|t| inside(&(origin + dir * *t), c))
}

pub fn ray_suite(cases: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut hits = 0;
    let mut worst: f64 = 0.0;
    for case in 0..cases {
        let c = random_cuboid(&mut rng);
        let origin = Vec3::new(rng.random_range(-1.5..1.5), rng.random_range(-2.0..2.0), rng.random_range(0.0..2.0));
        // half the rays aim into the box, the rest anywhere
        let dir = if case % 2 == 0 {
            let aim = c.pose.transform_point(&Vec3::new(
                rng.random_range(-0.8..0.8) * c.half_extents.x,
                rng.random_range(-0.8..0.8) * c.half_extents.y,
                rng.random_range(-0.8..0.8) * c.half_extents.z,
            ));
            aim - origin
        } else {
            Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        };
        let Some(ray) = Ray::new(origin, dir) else { continue };
        let max_t = (c.pose.translation - origin).norm() + c.half_extents.norm() + 1e-3;
        let fast = ray_cuboid_intersect(&ray, &c);
        let slow = march(&ray.origin(), &ray.direction(), &c, max_t);
        match (fast, slow) {
            (Some(a), Some(b)) => {
                hits += 1;
                worst = worst.max((a - b).abs());
                if (a - b).abs() > RAY_TOL_M {
                    return Err(format!("ray {case}: {a} vs {b}"));
                }
            }
            (None, None) => {}
            other => return Err(format!("ray {case}: {other:?}")),
        }
    }
    Ok(format!("{cases} rays, {hits} hits, max deviation {worst:.1e} m"))
}

pub fn servo_start_and_target() -> (Pose, Pose) {
    let target = Pose::from_axis_angle(&Vec3::z(), 0.3).with_translation(Vec3::new(0.2, -0.3, 1.0));
    let offset = Pose::from_axis_angle(&Vec3::new(1.0, 1.0, 0.0), 0.17).with_translation(Vec3::new(0.03, -0.02, 0.01));
    (target.compose(&offset), target)
}

pub fn exact_servo() -> Check {
    let (start, target) = servo_start_and_target();
    let mut oracle = SimulatedServoOracle::new(target, ServoErrorModel::exact(), 0);
    let (out, end) = servo_run(start, &mut oracle, &ServoConfig::default());
    if out.status != ControllerStatus::Succeeded || out.iterations != 2 || end.max_abs_diff(&target) > 1e-9 {
        return Err(format!("{:?} after {} iterations", out.status, out.iterations));
    }
    Ok("2 iterations".into())
}

pub fn noisy_servo(eps: f64, seeds: u64) -> Check {
    let (start, target) = servo_start_and_target();
    let model = ServoErrorModel {
        translation_noise_m: eps,
        rotation_noise_deg: 0.2,
        ..ServoErrorModel::default()
    };
    let mut worst: f64 = 0.0;
    for seed in 0..seeds {
        let mut oracle = SimulatedServoOracle::new(target, model, seed);
        let (out, end) = servo_run(start, &mut oracle, &ServoConfig::default());
        let err = (end.translation - target.translation).norm();
        worst = worst.max(err);
        if out.status != ControllerStatus::Succeeded || err > eps + 0.005 {
            return Err(format!("eps {eps}, seed {seed}: {:?}, error {err}", out.status));
        }
    }
    Ok(format!("eps {eps}: worst {:.2} mm", worst * 1e3))
}

/// Retry counts and retraction draws of `runs` insertions at jam
/// probability `p`, without a retry cap.
pub fn retry_runs(p: f64, runs: u64) -> Vec<(u32, Vec<f64>)> {
    let emu = PolicyEmulator::default();
    let start = emu.target + Vec3::new(0.0, 0.0, 0.03);
    let cfg = InsertConfig {
        max_retries: None,
        timeout_s: 1e9,
        ..InsertConfig::default()
    };
    (0..runs)
        .map(|seed| {
            let load = LoadCellModel::new(p, seed);
            let out = insert_with_retry(start, &emu, Some(&load), &cfg);
            (out.diagnostics.retries, out.diagnostics.retractions_m)
        })
        .collect()
}

pub fn geometric_retries(p: f64, runs: u64) -> Check {
    let counts = retry_runs(p, runs);
    let mean = counts.iter().map(|(k, _)| *k as f64).sum::<f64>() / runs as f64;
    // failures before the first success
    let mu = p / (1.0 - p);
    let tol = 3.0 * (p / (1.0 - p).powi(2) / runs as f64).sqrt();
    let msg = format!("p {p}: mean {mean:.4}, expected {mu:.4} ± {tol:.4}");
    if (mean - mu).abs() <= tol {
        Ok(msg)
    } else {
        Err(msg)
    }
}

pub fn retraction_range(min_draws: usize) -> Check {
    // p = 0.9 jams about nine times per insertion
    let draws: Vec<f64> = retry_runs(0.9, 1200).into_iter().flat_map(|(_, r)| r).collect();
    if draws.len() < min_draws {
        return Err(format!("only {} draws", draws.len()));
    }
    match draws.iter().find(|d| !(0.0025..=0.004).contains(*d)) {
        Some(d) => Err(format!("retraction {d} m")),
        None => Ok(format!("{} draws in [2.5, 4.0] mm", draws.len())),
    }
}
