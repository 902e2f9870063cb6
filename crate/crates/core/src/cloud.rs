//! Voxelized point clouds and the 2x downsampling that drives the codec.

use crate::error::{Error, Result};

/// A single voxel coordinate. `[u32; 3]` orders lexicographically, which is
/// exactly the canonical order the codec relies on.
pub type Voxel = [u32; 3];

/// Deduplicated voxel coordinates in strictly increasing lexicographic order.
///
/// `bit_depth` is the nominal grid exponent: coordinates of a freshly
/// voxelized cloud live in `[0, 2^bit_depth - 1]^3`. Downsampling rounds half
/// up, so a downsampled cloud may contain the coordinate `2^(bit_depth - 1)`
/// exactly; the octree coder sizes its grid from the actual maximum
/// coordinate, not from `bit_depth`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoxelCloud {
    points: Vec<Voxel>,
    bit_depth: u8,
}

impl VoxelCloud {
    /// Builds a cloud from arbitrary voxels: sorts, deduplicates.
    pub fn new(mut points: Vec<Voxel>, bit_depth: u8) -> Self {
        points.sort_unstable();
        points.dedup();
        VoxelCloud { points, bit_depth }
    }

    /// Wraps voxels that are already sorted, deduplicated and in canonical
    /// order. Checked in debug builds only.
    pub fn from_sorted(points: Vec<Voxel>, bit_depth: u8) -> Self {
        debug_assert!(points.windows(2).all(|w| w[0] < w[1]));
        VoxelCloud { points, bit_depth }
    }

    pub fn points(&self) -> &[Voxel] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn bit_depth(&self) -> u8 {
        self.bit_depth
    }

    pub fn with_bit_depth(mut self, bit_depth: u8) -> Self {
        self.bit_depth = bit_depth;
        self
    }

    pub fn contains(&self, v: &Voxel) -> bool {
        self.points.binary_search(v).is_ok()
    }

    /// Largest coordinate value over all axes, or 0 for an empty cloud.
    pub fn max_coord(&self) -> u32 {
        self.points
            .iter()
            .map(|p| p[0].max(p[1]).max(p[2]))
            .max()
            .unwrap_or(0)
    }
}

/// Maps one coordinate through the 2x downsampling: round-half-up of `v / 2`.
///
/// Half-up is forced by the child definition `2x_d - delta` with
/// `delta in {0, 1}`: the parent of both `2x_d - 1` and `2x_d` must be `x_d`.
#[inline]
pub fn downsample_coord(v: u32) -> u32 {
    (v + 1) / 2
}

/// Halves the resolution of a cloud: every coordinate is mapped through
/// round-half-up division by two and duplicates are removed.
pub fn downsample(cloud: &VoxelCloud) -> Result<VoxelCloud> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let points = cloud
        .points()
        .iter()
        .map(|p| {
            [
                downsample_coord(p[0]),
                downsample_coord(p[1]),
                downsample_coord(p[2]),
            ]
        })
        .collect();
    let bit_depth = cloud.bit_depth().saturating_sub(1).max(1);
    Ok(VoxelCloud::new(points, bit_depth))
}

/// Multiplies every coordinate by `2^s`. The no-side-information baseline:
/// each parent keeps only its `k = 0` child.
pub fn direct_upscale(cloud: &VoxelCloud, s: u8) -> VoxelCloud {
    let points = cloud
        .points()
        .iter()
        .map(|p| [p[0] << s, p[1] << s, p[2] << s])
        .collect();
    VoxelCloud::from_sorted(points, cloud.bit_depth() + s)
}
