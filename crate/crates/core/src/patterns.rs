//! Interpolation patterns: which of the eight candidate children of each
//! downsampled point exist in the higher-resolution cloud.

use crate::cloud::{downsample, VoxelCloud, Voxel};
use crate::error::{Error, Result};

/// Child index `k = 4*dx + 2*dy + dz` with `dx, dy, dz in {0, 1}`.
/// The candidate child coordinate of parent `p` is `2p - (dx, dy, dz)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChildOffset {
    pub k: u8,
}

impl ChildOffset {
    pub fn deltas(self) -> (u32, u32, u32) {
        (
            (self.k >> 2) as u32 & 1,
            (self.k >> 1) as u32 & 1,
            self.k as u32 & 1,
        )
    }

    /// Child coordinate of `parent`, or `None` when a zero parent coordinate
    /// would put the child at -1, off the grid.
    pub fn child_of(self, parent: &Voxel) -> Option<Voxel> {
        let (dx, dy, dz) = self.deltas();
        Some([
            (2 * parent[0]).checked_sub(dx)?,
            (2 * parent[1]).checked_sub(dy)?,
            (2 * parent[2]).checked_sub(dz)?,
        ])
    }
}

/// Per-parent 8-bit child-occupancy masks, aligned index-for-index with the
/// canonical order of the low-resolution cloud. Bit `k` of mask `j` says that
/// child `k` of parent `j` exists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InterpolationPatterns {
    masks: Vec<u8>,
}

impl InterpolationPatterns {
    pub fn new(masks: Vec<u8>) -> Self {
        InterpolationPatterns { masks }
    }

    pub fn masks(&self) -> &[u8] {
        &self.masks
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    /// Total number of set bits, i.e. the size of the cloud the patterns
    /// reconstruct.
    pub fn popcount(&self) -> usize {
        self.masks.iter().map(|m| m.count_ones() as usize).sum()
    }
}

/// Reads off the pattern of every point of `low` against `high`.
///
/// `low` must be exactly `downsample(high)`; this is checked, because a
/// misaligned pair would silently produce garbage masks.
pub fn extract_patterns(high: &VoxelCloud, low: &VoxelCloud) -> Result<InterpolationPatterns> {
    let derived = downsample(high)?;
    if derived.points() != low.points() {
        return Err(Error::InconsistentPair);
    }
    let masks = low
        .points()
        .iter()
        .map(|parent| {
            let mut mask = 0u8;
            for k in 0..8 {
                if let Some(child) = (ChildOffset { k }).child_of(parent) {
                    if high.contains(&child) {
                        mask |= 1 << k;
                    }
                }
            }
            mask
        })
        .collect();
    Ok(InterpolationPatterns::new(masks))
}

/// Expands `low` back to the higher resolution by materializing every child
/// named by the masks. Children that would fall off the non-negative grid are
/// dropped. Exact inverse of [`extract_patterns`] for a consistent pair.
pub fn apply_patterns(low: &VoxelCloud, patterns: &InterpolationPatterns) -> Result<VoxelCloud> {
    if patterns.len() != low.len() {
        return Err(Error::LengthMismatch {
            expected: low.len(),
            got: patterns.len(),
        });
    }
    if patterns.masks().iter().any(|&m| m == 0) {
        return Err(Error::InvalidPattern);
    }
    let mut points = Vec::with_capacity(patterns.popcount());
    for (parent, &mask) in low.points().iter().zip(patterns.masks()) {
        for k in 0..8 {
            if mask & (1 << k) != 0 {
                if let Some(child) = (ChildOffset { k }).child_of(parent) {
                    points.push(child);
                }
            }
        }
    }
    Ok(VoxelCloud::new(points, low.bit_depth() + 1))
}
