//! Deterministic synthetic clouds for tests, benchmarks and demos.

use crate::cloud::VoxelCloud;
use crate::rng::Rng;

/// Voxelized sphere shell centered in a `2^bit_depth` grid: all voxels whose
/// center lies within `thickness / 2` of the sphere of the given radius.
pub fn sphere(bit_depth: u8, radius: f64, thickness: f64) -> VoxelCloud {
    let c = (1u32 << (bit_depth - 1)) as f64;
    let h = thickness / 2.0;
    let reach = (radius + h).ceil() as i64 + 1;
    let mut points = Vec::new();
    for xm in -reach..=reach {
        for ym in -reach..=reach {
            let d2 = (xm * xm + ym * ym) as f64;
            let hi = (radius + h) * (radius + h) - d2;
            let lo = (radius - h) * (radius - h) - d2;
            for zm in band(lo, hi) {
                push_voxel(&mut points, bit_depth, c, xm, ym, zm);
            }
        }
    }
    VoxelCloud::new(points, bit_depth)
}

/// Voxelized torus shell (axis along z) centered in the grid. `major` is the
/// ring radius, `minor` the tube radius.
pub fn torus(bit_depth: u8, major: f64, minor: f64, thickness: f64) -> VoxelCloud {
    let c = (1u32 << (bit_depth - 1)) as f64;
    let h = thickness / 2.0;
    let reach = (major + minor + h).ceil() as i64 + 1;
    let mut points = Vec::new();
    for xm in -reach..=reach {
        for ym in -reach..=reach {
            let rho = ((xm * xm + ym * ym) as f64).sqrt();
            let q = rho - major;
            let hi = (minor + h) * (minor + h) - q * q;
            let lo = (minor - h) * (minor - h) - q * q;
            for zm in band(lo, hi) {
                push_voxel(&mut points, bit_depth, c, xm, ym, zm);
            }
        }
    }
    VoxelCloud::new(points, bit_depth)
}

/// Voxelized axis-aligned cube surface centered in the grid: the six faces
/// of a cube with the given half side length. Sharp edges and flat faces
/// complement the smooth sphere and torus fixtures.
pub fn cube_shell(bit_depth: u8, half_side: u32) -> VoxelCloud {
    let c = 1i64 << (bit_depth - 1);
    let r = half_side as i64;
    let mut points = Vec::new();
    for a in -r..=r {
        for b in -r..=r {
            for (x, y, z) in [
                (-r, a, b),
                (r, a, b),
                (a, -r, b),
                (a, r, b),
                (a, b, -r),
                (a, b, r),
            ] {
                push_voxel(&mut points, bit_depth, c as f64, x, y, z);
            }
        }
    }
    VoxelCloud::new(points, bit_depth)
}

/// `n` voxels drawn uniformly from the grid (deduplicated, so the result may
/// hold fewer than `n` points).
pub fn random_cloud(bit_depth: u8, n: usize, seed: u64) -> VoxelCloud {
    let side = 1u64 << bit_depth;
    let mut rng = Rng::new(seed);
    let points = (0..n)
        .map(|_| {
            [
                rng.next_bounded(side) as u32,
                rng.next_bounded(side) as u32,
                rng.next_bounded(side) as u32,
            ]
        })
        .collect();
    VoxelCloud::new(points, bit_depth)
}

/// Integer offsets `z` with `z^2` in `[lo, hi]`.
fn band(lo: f64, hi: f64) -> Vec<i64> {
    if hi < 0.0 {
        return Vec::new();
    }
    let zmax = hi.sqrt().floor() as i64;
    if lo <= 0.0 {
        (-zmax..=zmax).collect()
    } else {
        let zmin = lo.sqrt().ceil() as i64;
        (-zmax..=-zmin).chain(zmin..=zmax).collect()
    }
}

fn push_voxel(points: &mut Vec<[u32; 3]>, bit_depth: u8, center: f64, x: i64, y: i64, z: i64) {
    let max = (1u32 << bit_depth) - 1;
    let cx = center as i64 + x;
    let cy = center as i64 + y;
    let cz = center as i64 + z;
    if cx >= 0 && cy >= 0 && cz >= 0 {
        let (cx, cy, cz) = (cx as u32, cy as u32, cz as u32);
        if cx <= max && cy <= max && cz <= max {
            points.push([cx, cy, cz]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_is_a_shell() {
        let s = sphere(6, 20.0, 1.0);
        assert!(s.len() > 3000, "len = {}", s.len());
        let c = 32.0;
        for p in s.points() {
            let d = ((p[0] as f64 - c).powi(2)
                + (p[1] as f64 - c).powi(2)
                + (p[2] as f64 - c).powi(2))
            .sqrt();
            assert!((d - 20.0).abs() <= 0.5 + 1e-9);
        }
    }

    #[test]
    fn torus_is_a_shell() {
        let t = torus(7, 40.0, 15.0, 1.0);
        assert!(t.len() > 10_000, "len = {}", t.len());
        let c = 64.0;
        for p in t.points() {
            let rho = ((p[0] as f64 - c).powi(2) + (p[1] as f64 - c).powi(2)).sqrt();
            let q = ((rho - 40.0).powi(2) + (p[2] as f64 - c).powi(2)).sqrt();
            assert!((q - 15.0).abs() <= 0.5 + 1e-9);
        }
    }

    #[test]
    fn cube_shell_is_hollow() {
        let cube = cube_shell(6, 10);
        // Surface of a 21^3 cube: 6 faces minus shared edges/corners.
        assert_eq!(cube.len(), 21 * 21 * 21 - 19 * 19 * 19);
        let on_face = |v: u32| v == 22 || v == 42;
        for p in cube.points() {
            assert!(on_face(p[0]) || on_face(p[1]) || on_face(p[2]));
        }
    }

    #[test]
    fn random_cloud_is_deterministic_and_in_range() {
        let a = random_cloud(5, 500, 42);
        let b = random_cloud(5, 500, 42);
        assert_eq!(a, b);
        assert!(a.max_coord() < 32);
        assert!(a.len() > 400);
    }
}
