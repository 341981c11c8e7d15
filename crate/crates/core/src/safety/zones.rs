use serde::{Deserialize, Serialize};

use super::grid::{GridSpec, VoxelSet};
use crate::error::{Error, Result};
use crate::geometry::Aabb;

/// Occupancy ratio that must be exceeded (strictly) before a zone reacts.
pub const DEFAULT_THRESHOLD: f64 = 0.001;

/// Speed factor applied while in the slowdown zone.
pub const SLOWDOWN_RATIO: f64 = 0.7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZoneKind {
    Stop,
    Slowdown,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZoneSpec {
    pub region: Aabb,
    pub kind: ZoneKind,
}

/// Distance the slowdown zone reaches past each side of the table footprint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SideMargins {
    pub x_neg: f64,
    pub x_pos: f64,
    pub y_neg: f64,
    pub y_pos: f64,
}

impl SideMargins {
    pub fn uniform(m: f64) -> Self {
        Self {
            x_neg: m,
            x_pos: m,
            y_neg: m,
            y_pos: m,
        }
    }
}

impl ZoneSpec {
    /// Fixed stop zone over the active workspace.
    pub fn default_stop() -> Self {
        Self {
            region: Aabb::new([-0.55, -1.0, 0.4], [0.35, 0.65, 1.15]),
            kind: ZoneKind::Stop,
        }
    }

    /// Slowdown zone 0.45 m past the table footprint on every side, over
    /// the full height of the default grid.
    pub fn default_slowdown() -> Self {
        let stop = Self::default_stop().region;
        Self::slowdown_around(&stop, SideMargins::uniform(0.45), (0.1, 1.75))
    }

    pub fn slowdown_around(footprint: &Aabb, m: SideMargins, z: (f64, f64)) -> Self {
        Self {
            region: Aabb::new(
                [footprint.min.x - m.x_neg, footprint.min.y - m.y_neg, z.0],
                [footprint.max.x + m.x_pos, footprint.max.y + m.y_pos, z.1],
            ),
            kind: ZoneKind::Slowdown,
        }
    }

    fn name(&self) -> &'static str {
        match self.kind {
            ZoneKind::Stop => "stop",
            ZoneKind::Slowdown => "slowdown",
        }
    }
}

/// Per-voxel membership of one zone, by voxel center.
#[derive(Debug, Clone)]
pub struct ZoneMask {
    inside: Vec<bool>,
    count: usize,
}

impl ZoneMask {
    pub fn new(spec: &GridSpec, zone: &ZoneSpec) -> Result<Self> {
        let mut inside = vec![false; spec.voxel_count()];
        let mut count = 0;
        if let Some(b) = spec.index_bounds(&zone.region) {
            for i in b[0].0..=b[0].1 {
                for j in b[1].0..=b[1].1 {
                    for k in b[2].0..=b[2].1 {
                        let idx = spec.linear([i, j, k]);
                        // the index bounds are computed in floating point;
                        // confirm against the center itself
                        if zone.region.contains(&spec.center(idx)) {
                            inside[idx] = true;
                            count += 1;
                        }
                    }
                }
            }
        }
        if count == 0 {
            return Err(Error::ZoneOutsideGrid {
                zone: zone.name().to_string(),
            });
        }
        Ok(Self { inside, count })
    }

    pub fn voxel_count(&self) -> usize {
        self.count
    }

    pub fn contains(&self, index: usize) -> bool {
        self.inside.get(index).copied().unwrap_or(false)
    }

    pub fn ratio(&self, predicted: &VoxelSet) -> f64 {
        let hits = predicted.iter().filter(|&i| self.contains(i)).count();
        hits as f64 / self.count as f64
    }
}

/// Fraction of the zone's voxels (by center) that are predicted occupied.
pub fn occupancy_ratio(predicted: &VoxelSet, spec: &GridSpec, zone: &ZoneSpec) -> Result<f64> {
    Ok(ZoneMask::new(spec, zone)?.ratio(predicted))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpeedMode {
    Stop,
    Slowdown,
    Normal,
}

impl SpeedMode {
    pub fn speed_ratio(self) -> f64 {
        match self {
            SpeedMode::Normal => 1.0,
            SpeedMode::Slowdown => SLOWDOWN_RATIO,
            SpeedMode::Stop => 0.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SpeedMode::Normal => "normal",
            SpeedMode::Slowdown => "slowdown",
            SpeedMode::Stop => "stop",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "normal" => Some(SpeedMode::Normal),
            "slowdown" => Some(SpeedMode::Slowdown),
            "stop" => Some(SpeedMode::Stop),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SafetyDecision {
    pub stop_ratio: f64,
    pub slowdown_ratio: f64,
    pub mode: SpeedMode,
}

impl SafetyDecision {
    pub fn normal() -> Self {
        Self {
            stop_ratio: 0.0,
            slowdown_ratio: 0.0,
            mode: SpeedMode::Normal,
        }
    }

    pub fn speed_ratio(&self) -> f64 {
        self.mode.speed_ratio()
    }
}

pub fn decide_mode(stop_ratio: f64, slowdown_ratio: f64, threshold: f64) -> SpeedMode {
    if stop_ratio > threshold {
        SpeedMode::Stop
    } else if slowdown_ratio > threshold {
        SpeedMode::Slowdown
    } else {
        SpeedMode::Normal
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn default_stop_zone_voxel_count() {
        let m = ZoneMask::new(&GridSpec::default(), &ZoneSpec::default_stop()).unwrap();
        assert_eq!(m.voxel_count(), 18 * 33 * 15);
        assert_eq!(m.voxel_count(), 8_910);
    }

    #[test]
    fn default_slowdown_covers_stop_footprint() {
        let stop = ZoneSpec::default_stop().region;
        let slow = ZoneSpec::default_slowdown().region;
        assert!(slow.contains_box(&stop));
        assert!(slow.min.y < stop.min.y && slow.max.y > stop.max.y);
    }

    #[test]
    fn ratio_examples() {
        let g = GridSpec::default();
        let zone = ZoneSpec::default_stop();
        let mask = ZoneMask::new(&g, &zone).unwrap();
        assert_eq!(occupancy_ratio(&VoxelSet::new(), &g, &zone).unwrap(), 0.0);
        let zone_voxels: Vec<usize> = (0..g.voxel_count()).filter(|&i| mask.contains(i)).collect();
        let nine = VoxelSet::from_unsorted(zone_voxels[..9].to_vec());
        let eight = VoxelSet::from_unsorted(zone_voxels[..8].to_vec());
        let r9 = mask.ratio(&nine);
        let r8 = mask.ratio(&eight);
        assert!((r9 - 9.0 / 8910.0).abs() < 1e-15);
        assert_eq!(decide_mode(r9, 0.0, DEFAULT_THRESHOLD), SpeedMode::Stop);
        assert_eq!(decide_mode(r8, 0.0, DEFAULT_THRESHOLD), SpeedMode::Normal);
        let all = VoxelSet::from_unsorted(zone_voxels);
        assert_eq!(mask.ratio(&all), 1.0);
    }

    #[test]
    fn disjoint_zone_is_an_error() {
        let zone = ZoneSpec {
            region: Aabb::new([5.0, 5.0, 5.0], [6.0, 6.0, 6.0]),
            kind: ZoneKind::Stop,
        };
        let err = occupancy_ratio(&VoxelSet::new(), &GridSpec::default(), &zone).unwrap_err();
        assert!(matches!(err, Error::ZoneOutsideGrid { .. }));
    }

    #[test]
    fn decide_examples() {
        assert_eq!(decide_mode(0.0, 0.0, DEFAULT_THRESHOLD).speed_ratio(), 1.0);
        assert_eq!(decide_mode(0.0, 0.002, DEFAULT_THRESHOLD).speed_ratio(), 0.7);
        assert_eq!(decide_mode(0.002, 0.002, DEFAULT_THRESHOLD).speed_ratio(), 0.0);
        // "exceeds" is strict
        assert_eq!(decide_mode(0.001, 0.001, 0.001), SpeedMode::Normal);
    }

    proptest! {
        #[test]
        fn decide_is_monotone(s in 0.0..1.0f64, w in 0.0..1.0f64, ds in 0.0..1.0f64, dw in 0.0..1.0f64) {
            let base = decide_mode(s, w, DEFAULT_THRESHOLD).speed_ratio();
            let more = decide_mode((s + ds).min(1.0), (w + dw).min(1.0), DEFAULT_THRESHOLD).speed_ratio();
            prop_assert!(more <= base);
        }

        #[test]
        fn ratio_is_monotone(seed in any::<u64>(), extra in prop::collection::vec(0usize..27_918, 0..200)) {
            let g = GridSpec::default();
            let mask = ZoneMask::new(&g, &ZoneSpec::default_stop()).unwrap();
            let base: VoxelSet = (0..100).map(|k| ((seed as usize).wrapping_mul(31).wrapping_add(k * 277)) % 27_918).collect();
            let grown = base.union(&VoxelSet::from_unsorted(extra));
            prop_assert!(mask.ratio(&grown) >= mask.ratio(&base));
        }
    }
}
