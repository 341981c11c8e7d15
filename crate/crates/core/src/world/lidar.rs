//! Simulated 3D LiDAR: nearest-hit ray casting against cuboids with
//! per-scan range noise, a per-run mount drift and a per-run update delay.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{slab_intersect, Cuboid, Pose, Vec3};

/// Azimuth/elevation grid of beams in the mount frame, degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayPattern {
    pub azimuth_deg: (f64, f64),
    pub azimuth_step_deg: f64,
    pub elevation_deg: (f64, f64),
    pub elevation_step_deg: f64,
}

impl Default for RayPattern {
    fn default() -> Self {
        Self {
            azimuth_deg: (-180.0, 180.0),
            azimuth_step_deg: 0.5,
            elevation_deg: (-15.0, 15.0),
            elevation_step_deg: 0.5,
        }
    }
}

impl RayPattern {
    fn full_circle(&self) -> bool {
        self.azimuth_deg.1 - self.azimuth_deg.0 >= 360.0 - 1e-9
    }

    pub fn azimuth_count(&self) -> usize {
        let span = self.azimuth_deg.1 - self.azimuth_deg.0;
        if self.full_circle() {
            (360.0 / self.azimuth_step_deg).round() as usize
        } else {
            (span / self.azimuth_step_deg + 1e-9).floor() as usize + 1
        }
    }

    pub fn elevation_count(&self) -> usize {
        let span = self.elevation_deg.1 - self.elevation_deg.0;
        (span / self.elevation_step_deg + 1e-9).floor() as usize + 1
    }

    pub fn ray_count(&self) -> usize {
        self.azimuth_count() * self.elevation_count()
    }

    fn validate(&self) -> Result<()> {
        if !(self.azimuth_step_deg > 0.0 && self.elevation_step_deg > 0.0) {
            return Err(Error::config("lidar.pattern", "steps must be > 0"));
        }
        let (a0, a1) = self.azimuth_deg;
        let (e0, e1) = self.elevation_deg;
        if !(a1 >= a0 && a1 - a0 <= 360.0 + 1e-9) {
            return Err(Error::config("lidar.pattern.azimuth_deg", "need lo <= hi within one turn"));
        }
        if !(e1 >= e0 && e0 >= -90.0 && e1 <= 90.0) {
            return Err(Error::config("lidar.pattern.elevation_deg", "need -90 <= lo <= hi <= 90"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LidarModel {
    pub mount: Pose,
    #[serde(default)]
    pub pattern: RayPattern,
    /// Range-noise standard deviation, drawn per scan, m.
    pub noise_std_range_m: (f64, f64),
    /// Mount offset per axis, drawn once per run, m.
    pub drift_range_m: (f64, f64),
    /// Update delay, drawn once per run and floored to whole ticks, s.
    pub delay_range_s: (f64, f64),
}

impl LidarModel {
    pub fn new(mount: Pose, pattern: RayPattern) -> Self {
        Self {
            mount,
            pattern,
            noise_std_range_m: (0.0, 0.005),
            drift_range_m: (-0.01, 0.01),
            delay_range_s: (0.0, 0.075),
        }
    }

    /// No noise, drift or delay.
    pub fn ideal(mount: Pose, pattern: RayPattern) -> Self {
        Self {
            noise_std_range_m: (0.0, 0.0),
            drift_range_m: (0.0, 0.0),
            delay_range_s: (0.0, 0.0),
            ..Self::new(mount, pattern)
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.pattern.validate()?;
        let ranges = [
            ("lidar.noise_std_range_m", self.noise_std_range_m, 0.0),
            ("lidar.delay_range_s", self.delay_range_s, 0.0),
            ("lidar.drift_range_m", self.drift_range_m, f64::NEG_INFINITY),
        ];
        for (field, (lo, hi), floor) in ranges {
            if !(lo >= floor && hi >= lo && hi.is_finite()) {
                return Err(Error::config(field, format!("need {floor} <= lo <= hi")));
            }
        }
        Ok(())
    }

    /// Per-run perturbations.
    pub fn draw_run(&self, seed: u64, dt: f64) -> LidarRun {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut u = |(lo, hi): (f64, f64)| if hi > lo { rng.random_range(lo..=hi) } else { lo };
        let drift = Vec3::new(u(self.drift_range_m), u(self.drift_range_m), u(self.drift_range_m));
        let delay_s = u(self.delay_range_s);
        LidarRun {
            drift,
            delay_s,
            delay_ticks: (delay_s / dt + 1e-9).floor() as usize,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LidarRun {
    pub drift: Vec3,
    pub delay_s: f64,
    pub delay_ticks: usize,
}

/// Beam directions precomputed in the world frame.
#[derive(Debug, Clone)]
pub struct Lidar {
    model: LidarModel,
    run: LidarRun,
    origin: Vec3,
    n_az: usize,
    n_el: usize,
    az0: f64,
    el0: f64,
    az_step: f64,
    el_step: f64,
    full_circle: bool,
    dirs: Vec<Vec3>,
}

impl Lidar {
    pub fn new(model: LidarModel, run: LidarRun) -> Self {
        let p = &model.pattern;
        let (n_az, n_el) = (p.azimuth_count(), p.elevation_count());
        let az0 = p.azimuth_deg.0.to_radians();
        let el0 = p.elevation_deg.0.to_radians();
        let az_step = p.azimuth_step_deg.to_radians();
        let el_step = p.elevation_step_deg.to_radians();
        let mut dirs = Vec::with_capacity(n_az * n_el);
        for i in 0..n_el {
            let el = el0 + i as f64 * el_step;
            for j in 0..n_az {
                let az = az0 + j as f64 * az_step;
                let local = Vec3::new(el.cos() * az.cos(), el.cos() * az.sin(), el.sin());
                dirs.push((model.mount.rotation * local).normalize());
            }
        }
        Self {
            origin: model.mount.translation + run.drift,
            full_circle: p.full_circle(),
            model,
            run,
            n_az,
            n_el,
            az0,
            el0,
            az_step,
            el_step,
            dirs,
        }
    }

    pub fn run(&self) -> &LidarRun {
        &self.run
    }

    pub fn ray_count(&self) -> usize {
        self.dirs.len()
    }

    /// True mount position (nominal plus drift).
    pub fn origin(&self) -> Vec3 {
        self.origin
    }

    pub fn direction(&self, ray: usize) -> Vec3 {
        self.dirs[ray]
    }

    /// Beam index ranges that can reach the cuboid: (elevation rows,
    /// azimuth columns); `None` columns means every column.
    ///
    /// Azimuth bounds come from the corners, which is exact because the
    /// box's footprint in the sensor's xy-plane is a convex polygon.
    /// Elevation bounds pair the extreme heights with the nearest and
    /// farthest horizontal distances, which is conservative.
    fn window(&self, c: &Cuboid) -> Option<((usize, usize), Option<(i64, i64)>)> {
        let inv = self.model.mount.rotation.inverse();
        let corners = c.corners().map(|p| inv * (p - self.origin));
        let mut lo = corners[0];
        let mut hi = corners[0];
        let mut rho_max: f64 = 0.0;
        for p in &corners {
            lo = lo.inf(p);
            hi = hi.sup(p);
            rho_max = rho_max.max(p.x.hypot(p.y));
        }
        // distance from 0 to the interval [l, h]
        let gap = |l: f64, h: f64| {
            if l > 0.0 {
                l
            } else if h < 0.0 {
                -h
            } else {
                0.0
            }
        };
        let rho_min = gap(lo.x, hi.x).hypot(gap(lo.y, hi.y));
        let pad = 1e-9;
        let el_hi = if hi.z >= 0.0 { hi.z.atan2(rho_min) } else { hi.z.atan2(rho_max) } + pad;
        let el_lo = if lo.z <= 0.0 { lo.z.atan2(rho_min) } else { lo.z.atan2(rho_max) } - pad;
        let first = ((el_lo - self.el0) / self.el_step).ceil();
        let last = ((el_hi - self.el0) / self.el_step).floor();
        let max_row = (self.n_el - 1) as f64;
        if last < 0.0 || first > max_row || first > last {
            return None;
        }
        let rows = (first.max(0.0) as usize, last.min(max_row) as usize);
        if rho_min <= 0.0 {
            return Some((rows, None));
        }

        let mid = ((lo.y + hi.y) / 2.0).atan2((lo.x + hi.x) / 2.0);
        let (mut d_lo, mut d_hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for p in &corners {
            let d = (p.y.atan2(p.x) - mid + PI).rem_euclid(2.0 * PI) - PI;
            d_lo = d_lo.min(d);
            d_hi = d_hi.max(d);
        }
        let mut lo = ((mid + d_lo - pad - self.az0) / self.az_step).ceil() as i64;
        let mut hi = ((mid + d_hi + pad - self.az0) / self.az_step).floor() as i64;
        if self.full_circle {
            if hi - lo + 1 >= self.n_az as i64 {
                return Some((rows, None));
            }
            return Some((rows, Some((lo, hi))));
        }
        // a partial fan: try the window at its principal angle and one turn
        // either side, keep whichever overlaps the pattern
        let turn = (2.0 * PI / self.az_step).round() as i64;
        for shift in [0, turn, -turn] {
            let (l, h) = (lo + shift, hi + shift);
            if h >= 0 && l < self.n_az as i64 {
                lo = l.max(0);
                hi = h.min(self.n_az as i64 - 1);
                return Some((rows, Some((lo, hi))));
            }
        }
        None
    }

    /// Nearest-hit range per beam over `cuboids` (zero noise). Beams that
    /// hit nothing are `INFINITY`.
    pub fn cast(&self, cuboids: &[Cuboid]) -> Vec<f64> {
        let mut best = vec![f64::INFINITY; self.dirs.len()];
        for c in cuboids {
            let Some((rows, cols)) = self.window(c) else { continue };
            let inv = c.pose.rotation.inverse();
            let o = inv * (self.origin - c.pose.translation);
            let h = c.half_extents;
            let mut test = |idx: usize| {
                let d = inv * self.dirs[idx];
                if let Some(t) = slab_intersect(&o, &d, &h) {
                    if t < best[idx] {
                        best[idx] = t;
                    }
                }
            };
            for row in rows.0..=rows.1 {
                let base = row * self.n_az;
                match cols {
                    None => (0..self.n_az).for_each(|j| test(base + j)),
                    Some((lo, hi)) => {
                        for j in lo..=hi {
                            let j = j.rem_euclid(self.n_az as i64) as usize;
                            test(base + j);
                        }
                    }
                }
            }
        }
        best
    }

    /// Point cloud in the nominal sensor frame's world coordinates: true hit
    /// along each beam, range noise with standard deviation drawn for this
    /// scan, then shifted by the (unknown to the consumer) mount drift.
    pub fn scan<R: Rng>(&self, cuboids: &[Cuboid], rng: &mut R) -> Vec<Vec3> {
        let (lo, hi) = self.model.noise_std_range_m;
        let sigma = if hi > lo { rng.random_range(lo..=hi) } else { lo };
        let noise = (sigma > 0.0).then(|| Normal::new(0.0, sigma).expect("finite sigma"));
        let ranges = self.cast(cuboids);
        let mut out = Vec::new();
        for (idx, t) in ranges.iter().enumerate() {
            if !t.is_finite() {
                continue;
            }
            let r = t + noise.as_ref().map_or(0.0, |n| n.sample(rng));
            out.push(self.origin + self.dirs[idx] * r - self.run.drift);
        }
        out
    }
}
