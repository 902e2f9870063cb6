//! Neighbor-occupancy features: the network input for each downsampled point.

use crate::cloud::VoxelCloud;
use crate::error::{Error, Result};

/// Number of neighbors for radius `d`: `(2d+1)^3 - 1` (26 for d=1, 124 for d=2).
pub fn neighbor_count(d: u8) -> usize {
    let side = 2 * d as usize + 1;
    side * side * side - 1
}

/// Canonical neighbor offsets for radius `d`: all `(dx, dy, dz)` in
/// `[-d, d]^3` except the origin, in ascending lexicographic order. Encoder,
/// decoder and lookup table all index columns by this order.
pub fn neighbor_offsets(d: u8) -> Vec<[i32; 3]> {
    let d = d as i32;
    let mut offsets = Vec::with_capacity(neighbor_count(d as u8));
    for dx in -d..=d {
        for dy in -d..=d {
            for dz in -d..=d {
                if (dx, dy, dz) != (0, 0, 0) {
                    offsets.push([dx, dy, dz]);
                }
            }
        }
    }
    offsets
}

/// Per-parent binary neighbor-occupancy rows, one row per point of the
/// low-resolution cloud in canonical order. Stored flat, entries 0/1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureMatrix {
    data: Vec<u8>,
    width: usize,
}

impl FeatureMatrix {
    pub fn from_rows(rows: Vec<Vec<u8>>, width: usize) -> Self {
        let mut data = Vec::with_capacity(rows.len() * width);
        for row in rows {
            assert_eq!(row.len(), width);
            data.extend_from_slice(&row);
        }
        FeatureMatrix { data, width }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn rows(&self) -> usize {
        if self.width == 0 { 0 } else { self.data.len() / self.width }
    }

    pub fn row(&self, j: usize) -> &[u8] {
        &self.data[j * self.width..(j + 1) * self.width]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[u8]> {
        self.data.chunks_exact(self.width)
    }

    /// Packs a row into an integer key, bit `c` = column `c`. Fits u128 for
    /// both supported radii (26 and 124 columns).
    pub fn packed_key(&self, j: usize) -> u128 {
        pack_row(self.row(j))
    }
}

pub fn pack_row(row: &[u8]) -> u128 {
    debug_assert!(row.len() <= 128);
    let mut key = 0u128;
    for (c, &v) in row.iter().enumerate() {
        if v != 0 {
            key |= 1 << c;
        }
    }
    key
}

/// Extracts the occupancy of every neighbor of every point of `low`.
/// Neighbors that fall outside the grid are simply absent (0).
pub fn occupancy_features(low: &VoxelCloud, d: u8) -> Result<FeatureMatrix> {
    if low.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let offsets = neighbor_offsets(d);
    let width = offsets.len();
    let mut data = Vec::with_capacity(low.len() * width);
    for p in low.points() {
        for off in &offsets {
            let neighbor = checked_offset(p, off);
            let occupied = match neighbor {
                Some(n) => low.contains(&n),
                None => false,
            };
            data.push(occupied as u8);
        }
    }
    Ok(FeatureMatrix { data, width })
}

fn checked_offset(p: &[u32; 3], off: &[i32; 3]) -> Option<[u32; 3]> {
    Some([
        p[0].checked_add_signed(off[0])?,
        p[1].checked_add_signed(off[1])?,
        p[2].checked_add_signed(off[2])?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;
    use std::collections::BTreeSet;

    #[test]
    fn offset_order_is_lexicographic() {
        let offs = neighbor_offsets(1);
        assert_eq!(offs.len(), 26);
        assert_eq!(offs[0], [-1, -1, -1]);
        assert_eq!(offs[1], [-1, -1, 0]);
        assert_eq!(offs[25], [1, 1, 1]);
        let mut sorted = offs.clone();
        sorted.sort_unstable();
        assert_eq!(offs, sorted);
        assert_eq!(neighbor_offsets(2).len(), 124);
    }

    #[test]
    fn isolated_point_has_zero_row() {
        let low = VoxelCloud::new(vec![[5, 5, 5]], 4);
        let f = occupancy_features(&low, 1).unwrap();
        assert_eq!(f.rows(), 1);
        assert_eq!(f.row(0), vec![0u8; 26].as_slice());
    }

    #[test]
    fn full_block_center_has_ones_row() {
        let mut pts = Vec::new();
        for x in 4..7 {
            for y in 4..7 {
                for z in 4..7 {
                    pts.push([x, y, z]);
                }
            }
        }
        let low = VoxelCloud::new(pts, 4);
        let f = occupancy_features(&low, 1).unwrap();
        let center = low.points().iter().position(|p| *p == [5, 5, 5]).unwrap();
        assert_eq!(f.row(center), vec![1u8; 26].as_slice());
    }

    #[test]
    fn matches_bruteforce_membership_d2() {
        let mut rng = Rng::new(23);
        let pts: Vec<[u32; 3]> = (0..300)
            .map(|_| {
                [
                    rng.next_bounded(16) as u32,
                    rng.next_bounded(16) as u32,
                    rng.next_bounded(16) as u32,
                ]
            })
            .collect();
        let low = VoxelCloud::new(pts, 4);
        let set: BTreeSet<[i64; 3]> = low
            .points()
            .iter()
            .map(|p| [p[0] as i64, p[1] as i64, p[2] as i64])
            .collect();
        let f = occupancy_features(&low, 2).unwrap();
        let offs = neighbor_offsets(2);
        for (j, p) in low.points().iter().enumerate() {
            for (c, off) in offs.iter().enumerate() {
                let n = [
                    p[0] as i64 + off[0] as i64,
                    p[1] as i64 + off[1] as i64,
                    p[2] as i64 + off[2] as i64,
                ];
                assert_eq!(f.row(j)[c] == 1, set.contains(&n), "row {j} col {c}");
            }
        }
    }

    #[test]
    fn permutation_stable() {
        let mut rng = Rng::new(9);
        let mut pts: Vec<[u32; 3]> = (0..200)
            .map(|_| {
                [
                    rng.next_bounded(32) as u32,
                    rng.next_bounded(32) as u32,
                    rng.next_bounded(32) as u32,
                ]
            })
            .collect();
        let a = occupancy_features(&VoxelCloud::new(pts.clone(), 5), 1).unwrap();
        rng.shuffle(&mut pts);
        let b = occupancy_features(&VoxelCloud::new(pts, 5), 1).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn pack_row_bit_order() {
        let mut row = vec![0u8; 26];
        row[0] = 1;
        row[25] = 1;
        assert_eq!(pack_row(&row), (1 << 0) | (1 << 25));
    }
}
