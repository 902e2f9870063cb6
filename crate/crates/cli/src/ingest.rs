//! Turning PLY vertex data into voxel clouds.
//!
//! [`voxelize`] is the normalization rule for raw scans: translate the
//! minimum corner to the origin and scale the largest bounding-box edge onto
//! `[0, 2^B - 1]`, rounding half-up. Integer-typed vertices that already fit
//! the grid pass through unscaled.
//!
//! [`load_voxels`] is the command-surface rule. Decoded PLYs carry float32
//! vertices with integral values, and renormalizing those would stretch an
//! already-voxelized cloud and corrupt evaluation, so any input whose
//! coordinates are integral and inside the grid is taken as-is; everything
//! else falls back to [`voxelize`].

use std::path::Path;

use lsrn_core::cloud::{Voxel, VoxelCloud};
use thiserror::Error;

use crate::ply::{self, PlyDocument, PlyError};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error(transparent)]
    Ply(#[from] PlyError),
    #[error("`{0}` contains no vertices")]
    EmptyCloud(String),
    #[error("cloud has zero extent on every axis; nothing to scale")]
    DegenerateBounds,
    #[error("bit depth {0} is out of range (must be in [1, 30])")]
    BadBitDepth(u8),
    #[error(
        "coordinates are not on an integer grid; pass --bit-depth to choose a voxelization target"
    )]
    NeedsBitDepth,
}

type Result<T> = std::result::Result<T, IngestError>;

/// Largest grid bit depth the container format can address.
pub const MAX_BIT_DEPTH: u8 = 30;

fn check_bit_depth(bit_depth: u8) -> Result<()> {
    if (1..=MAX_BIT_DEPTH).contains(&bit_depth) {
        Ok(())
    } else {
        Err(IngestError::BadBitDepth(bit_depth))
    }
}

fn grid_max(bit_depth: u8) -> f64 {
    ((1u64 << bit_depth) - 1) as f64
}

fn is_integral(v: f64) -> bool {
    v.fract() == 0.0
}

fn in_grid(points: &[[f64; 3]], bit_depth: u8) -> bool {
    let max = grid_max(bit_depth);
    points
        .iter()
        .flatten()
        .all(|&c| is_integral(c) && c >= 0.0 && c <= max)
}

fn round_half_up(v: f64) -> u32 {
    (v + 0.5).floor() as u32
}

fn collect_cloud(points: impl Iterator<Item = Voxel>, bit_depth: u8) -> VoxelCloud {
    VoxelCloud::new(points.collect(), bit_depth)
}

/// Maps PLY vertices onto the `[0, 2^B - 1]` voxel grid.
///
/// Integer-typed vertices already inside the grid are kept unscaled (only
/// deduplicated); all other inputs are translated so the minimum corner sits
/// at the origin and scaled uniformly so the largest bounding-box edge spans
/// the grid, with coordinates rounded half-up.
pub fn voxelize(doc: &PlyDocument, bit_depth: u8) -> Result<VoxelCloud> {
    check_bit_depth(bit_depth)?;
    if doc.points.is_empty() {
        return Err(IngestError::EmptyCloud("input".into()));
    }
    if doc.integer_typed && in_grid(&doc.points, bit_depth) {
        return Ok(collect_cloud(
            doc.points.iter().map(|p| p.map(|c| c as u32)),
            bit_depth,
        ));
    }
    normalize(&doc.points, bit_depth)
}

fn normalize(points: &[[f64; 3]], bit_depth: u8) -> Result<VoxelCloud> {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in points {
        for axis in 0..3 {
            lo[axis] = lo[axis].min(p[axis]);
            hi[axis] = hi[axis].max(p[axis]);
        }
    }
    let extent = (0..3).map(|a| hi[a] - lo[a]).fold(0.0f64, f64::max);
    if extent <= 0.0 {
        return Err(IngestError::DegenerateBounds);
    }
    let scale = grid_max(bit_depth) / extent;
    Ok(collect_cloud(
        points
            .iter()
            .map(|p| [0, 1, 2].map(|a| round_half_up((p[a] - lo[a]) * scale))),
        bit_depth,
    ))
}

/// Reads a PLY file and returns its voxel cloud plus the grid bit depth.
///
/// Coordinates that are already integral and inside the grid are used
/// directly, whatever their declared PLY type; otherwise the cloud is
/// normalized with [`voxelize`]. When `bit_depth` is `None` it is inferred
/// as the smallest grid covering the coordinates, which requires the input
/// to be integral.
pub fn load_voxels(path: &Path, bit_depth: Option<u8>) -> Result<(VoxelCloud, u8)> {
    let doc = ply::read_ply(path)?;
    if doc.points.is_empty() {
        return Err(IngestError::EmptyCloud(path.display().to_string()));
    }
    let integral = doc
        .points
        .iter()
        .flatten()
        .all(|&c| is_integral(c) && c >= 0.0 && c <= grid_max(MAX_BIT_DEPTH));
    let bit_depth = match bit_depth {
        Some(b) => {
            check_bit_depth(b)?;
            b
        }
        None if integral => {
            let max = doc
                .points
                .iter()
                .flatten()
                .fold(0.0f64, |acc, &c| acc.max(c)) as u64;
            (64 - max.leading_zeros() as u8).max(1)
        }
        None => return Err(IngestError::NeedsBitDepth),
    };
    let cloud = if integral && in_grid(&doc.points, bit_depth) {
        collect_cloud(doc.points.iter().map(|p| p.map(|c| c as u32)), bit_depth)
    } else {
        normalize(&doc.points, bit_depth)?
    };
    Ok((cloud, bit_depth))
}
