use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Aabb, Cuboid, Vec3};

/// Axis-aligned voxel grid over the monitored region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub min_corner: Vec3,
    pub max_corner: Vec3,
    pub voxel_size: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            min_corner: Vec3::new(-0.55, -1.35, 0.1),
            max_corner: Vec3::new(0.35, 1.0, 1.75),
            voxel_size: 0.05,
        }
    }
}

impl GridSpec {
    pub fn new(min_corner: [f64; 3], max_corner: [f64; 3], voxel_size: f64) -> Result<Self> {
        let spec = Self {
            min_corner: Vec3::from(min_corner),
            max_corner: Vec3::from(max_corner),
            voxel_size,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.voxel_size > 0.0 && self.voxel_size.is_finite()) {
            return Err(Error::config("grid.voxel_size", "must be > 0"));
        }
        if !self.region().is_valid() {
            return Err(Error::config(
                "grid",
                "max_corner must exceed min_corner on every axis",
            ));
        }
        Ok(())
    }

    pub fn region(&self) -> Aabb {
        Aabb {
            min: self.min_corner,
            max: self.max_corner,
        }
    }

    /// Voxels per axis; a trailing partial voxel counts as a full one.
    pub fn dims(&self) -> [usize; 3] {
        let mut d = [0usize; 3];
        for (i, n) in d.iter_mut().enumerate() {
            let span = (self.max_corner[i] - self.min_corner[i]) / self.voxel_size;
            *n = (span - 1e-9).ceil().max(0.0) as usize;
        }
        d
    }

    pub fn voxel_count(&self) -> usize {
        self.dims().iter().product()
    }

    pub fn linear(&self, ijk: [usize; 3]) -> usize {
        let [_, ny, nz] = self.dims();
        (ijk[0] * ny + ijk[1]) * nz + ijk[2]
    }

    pub fn coords(&self, index: usize) -> [usize; 3] {
        let [_, ny, nz] = self.dims();
        [index / (ny * nz), (index / nz) % ny, index % nz]
    }

    pub fn center(&self, index: usize) -> Vec3 {
        self.center_in(index, self.dims())
    }

    fn center_in(&self, index: usize, [_, ny, nz]: [usize; 3]) -> Vec3 {
        let c = [index / (ny * nz), (index / nz) % ny, index % nz];
        Vec3::new(
            self.min_corner.x + (c[0] as f64 + 0.5) * self.voxel_size,
            self.min_corner.y + (c[1] as f64 + 0.5) * self.voxel_size,
            self.min_corner.z + (c[2] as f64 + 0.5) * self.voxel_size,
        )
    }

    /// `floor((p - min_corner) / voxel_size)` per axis, or `None` outside.
    pub fn index_of(&self, p: &Vec3) -> Option<usize> {
        self.index_in(p, self.dims())
    }

    fn index_in(&self, p: &Vec3, dims: [usize; 3]) -> Option<usize> {
        let mut ijk = [0usize; 3];
        for i in 0..3 {
            let f = ((p[i] - self.min_corner[i]) / self.voxel_size).floor();
            if !(f >= 0.0 && f < dims[i] as f64) {
                return None;
            }
            ijk[i] = f as usize;
        }
        Some((ijk[0] * dims[1] + ijk[1]) * dims[2] + ijk[2])
    }

    /// Index range per axis of voxels whose centers may lie in `b`.
    pub(crate) fn index_bounds(&self, b: &Aabb) -> Option<[(usize, usize); 3]> {
        let dims = self.dims();
        let mut out = [(0usize, 0usize); 3];
        for i in 0..3 {
            // center_k = min + (k + 0.5) vs
            let lo = ((b.min[i] - self.min_corner[i]) / self.voxel_size - 0.5).ceil();
            let hi = ((b.max[i] - self.min_corner[i]) / self.voxel_size - 0.5).floor();
            let lo = lo.max(0.0);
            let hi = hi.min(dims[i] as f64 - 1.0);
            if hi < lo {
                return None;
            }
            out[i] = (lo as usize, hi as usize);
        }
        Some(out)
    }
}

/// Sorted, duplicate-free set of linear voxel indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoxelSet(Vec<usize>);

impl VoxelSet {
    pub fn new() -> Self {
        Self(Vec::new())
    }

    pub fn from_unsorted(mut v: Vec<usize>) -> Self {
        v.sort_unstable();
        v.dedup();
        Self(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.0.binary_search(&index).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn union(&self, other: &VoxelSet) -> VoxelSet {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Self::from_unsorted(v)
    }
}

impl FromIterator<usize> for VoxelSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        Self::from_unsorted(iter.into_iter().collect())
    }
}

/// Points outside the grid are dropped; repeated voxels collapse.
pub fn voxelize(points: &[Vec3], spec: &GridSpec) -> VoxelSet {
    let dims = spec.dims();
    points.iter().filter_map(|p| spec.index_in(p, dims)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum VoxelLabel {
    Empty = 0,
    Obstacle = 1,
    Robot = 2,
    Tool = 3,
}

impl VoxelLabel {
    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(Self::Empty),
            1 => Some(Self::Obstacle),
            2 => Some(Self::Robot),
            3 => Some(Self::Tool),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledVoxelGrid {
    spec: GridSpec,
    labels: Vec<VoxelLabel>,
}

impl LabeledVoxelGrid {
    pub fn empty(spec: GridSpec) -> Self {
        Self {
            labels: vec![VoxelLabel::Empty; spec.voxel_count()],
            spec,
        }
    }

    pub fn from_labels(spec: GridSpec, labels: Vec<VoxelLabel>) -> Result<Self> {
        if labels.len() != spec.voxel_count() {
            return Err(Error::config(
                "labels",
                format!(
                    "expected {} labels, got {}",
                    spec.voxel_count(),
                    labels.len()
                ),
            ));
        }
        Ok(Self { spec, labels })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn labels(&self) -> &[VoxelLabel] {
        &self.labels
    }

    pub fn label(&self, index: usize) -> VoxelLabel {
        self.labels[index]
    }

    pub fn set(&mut self, index: usize, label: VoxelLabel) {
        self.labels[index] = label;
    }

    pub fn indices_with(&self, label: VoxelLabel) -> VoxelSet {
        VoxelSet(
            self.labels
                .iter()
                .enumerate()
                .filter(|(_, l)| **l == label)
                .map(|(i, _)| i)
                .collect(),
        )
    }

    pub fn count(&self, label: VoxelLabel) -> usize {
        self.labels.iter().filter(|l| **l == label).count()
    }
}

/// Labels occupied voxels by where their centers fall: tool first, then any
/// robot cuboid, otherwise obstacle.
pub fn segment(
    occupied: &VoxelSet,
    spec: &GridSpec,
    robot: &[Cuboid],
    tool: Option<&Cuboid>,
) -> LabeledVoxelGrid {
    let mut grid = LabeledVoxelGrid::empty(*spec);
    let dims = spec.dims();
    // cheap reject first; the margin keeps rounding from ever rejecting a hit
    let boxes: Vec<Aabb> = robot.iter().map(|r| r.aabb().expanded(1e-9)).collect();
    for idx in occupied.iter() {
        let c = spec.center_in(idx, dims);
        let label = if tool.is_some_and(|t| t.contains(&c)) {
            VoxelLabel::Tool
        } else if robot.iter().zip(&boxes).any(|(r, b)| b.contains(&c) && r.contains(&c)) {
            VoxelLabel::Robot
        } else {
            VoxelLabel::Obstacle
        };
        grid.set(idx, label);
    }
    grid
}
