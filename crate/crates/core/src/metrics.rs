//! Objective quality and rate metrics: point-to-point (D1) geometry PSNR,
//! bits per input point, and Bjøntegaard rate deltas between RD curves.

use std::collections::HashMap;

use crate::cloud::{Voxel, VoxelCloud};
use crate::error::{Error, Result};

/// PSNR reported when the clouds are identical (zero error).
pub const PSNR_LOSSLESS: f64 = 999.0;

/// Symmetric point-to-point geometry PSNR over a `bit_depth`-bit grid.
///
/// Each direction averages the squared euclidean distance from every point
/// to its exact nearest neighbor in the other cloud; the worse (larger) mean
/// is converted with `10 log10(3 peak^2 / mse)`, `peak = 2^bit_depth - 1`.
/// Identical clouds return [`PSNR_LOSSLESS`].
pub fn d1_psnr(a: &VoxelCloud, b: &VoxelCloud, bit_depth: u8) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let mse_ab = directional_mse(a, b);
    let mse_ba = directional_mse(b, a);
    let mse = mse_ab.max(mse_ba);
    if mse == 0.0 {
        return Ok(PSNR_LOSSLESS);
    }
    let peak = ((1u64 << bit_depth) - 1) as f64;
    Ok(10.0 * (3.0 * peak * peak / mse).log10())
}

/// Exact squared distance from every point of `from` to its nearest
/// neighbor in `to`, in `from`'s point order.
pub fn nearest_sq_dists(from: &VoxelCloud, to: &VoxelCloud) -> Result<Vec<u64>> {
    if from.is_empty() || to.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let grid = NnGrid::build(to);
    Ok(from.points().iter().map(|p| grid.nearest_sq(p)).collect())
}

/// Mean squared nearest-neighbor distance from every point of `from` to `to`.
fn directional_mse(from: &VoxelCloud, to: &VoxelCloud) -> f64 {
    let grid = NnGrid::build(to);
    let sum: f64 = from
        .points()
        .iter()
        .map(|p| grid.nearest_sq(p) as f64)
        .sum();
    sum / from.len() as f64
}

/// Uniform hash grid for exact nearest-neighbor queries.
///
/// Cells are `2^shift` wide. A query expands Chebyshev rings of cells around
/// the probe: once the best squared distance is at most `(r * cell + 1)^2`,
/// no cell in ring `r + 1` or beyond can hold anything closer, because a
/// point whose cell is `k >= 1` cells away along an axis is at least
/// `(k - 1) * cell + 1` away in that coordinate.
struct NnGrid {
    cells: HashMap<[u32; 3], Vec<Voxel>>,
    shift: u32,
    max_cell: [u32; 3],
}

impl NnGrid {
    fn build(cloud: &VoxelCloud) -> Self {
        let shift = pick_cell_shift(cloud);
        let mut cells: HashMap<[u32; 3], Vec<Voxel>> = HashMap::new();
        let mut max_cell = [0u32; 3];
        for &p in cloud.points() {
            let c = [p[0] >> shift, p[1] >> shift, p[2] >> shift];
            for axis in 0..3 {
                max_cell[axis] = max_cell[axis].max(c[axis]);
            }
            cells.entry(c).or_default().push(p);
        }
        NnGrid {
            cells,
            shift,
            max_cell,
        }
    }

    fn nearest_sq(&self, p: &Voxel) -> u64 {
        let cell = [
            p[0] >> self.shift,
            p[1] >> self.shift,
            p[2] >> self.shift,
        ];
        let cell_size = 1u64 << self.shift;
        let mut best = u64::MAX;
        let max_ring = (0..3)
            .map(|a| {
                let c = cell[a] as i64;
                c.max(self.max_cell[a] as i64 - c)
            })
            .max()
            .unwrap() as i64;
        for ring in 0..=max_ring {
            // Rings 0..ring are already scanned; anything in ring `ring` or
            // beyond is at least `(ring - 1) * cell + 1` away per axis.
            if ring > 0 && best <= ring_lower_bound(ring - 1, cell_size) {
                break;
            }
            self.scan_ring(p, cell, ring, &mut best);
        }
        best
    }

    fn scan_ring(&self, p: &Voxel, cell: [u32; 3], ring: i64, best: &mut u64) {
        for dx in -ring..=ring {
            for dy in -ring..=ring {
                for dz in -ring..=ring {
                    if dx.abs().max(dy.abs()).max(dz.abs()) != ring {
                        continue;
                    }
                    let cx = cell[0] as i64 + dx;
                    let cy = cell[1] as i64 + dy;
                    let cz = cell[2] as i64 + dz;
                    if cx < 0 || cy < 0 || cz < 0 {
                        continue;
                    }
                    let key = [cx as u32, cy as u32, cz as u32];
                    if let Some(points) = self.cells.get(&key) {
                        for q in points {
                            *best = (*best).min(dist_sq(p, q));
                        }
                    }
                }
            }
        }
    }
}

/// Squared distance that any point in a cell of Chebyshev ring `> scanned`
/// must at least have from the probe: one axis is at least `scanned` whole
/// cells away, which is `scanned * cell_size + 1` in coordinates or more.
fn ring_lower_bound(scanned: i64, cell_size: u64) -> u64 {
    let d = scanned as u64 * cell_size + 1;
    d * d
}

fn dist_sq(a: &Voxel, b: &Voxel) -> u64 {
    (0..3)
        .map(|i| {
            let d = a[i] as i64 - b[i] as i64;
            (d * d) as u64
        })
        .sum()
}

/// Cell width targeting a few points per occupied cell: the largest shift
/// whose cell grid still has at least as many cells as points.
fn pick_cell_shift(cloud: &VoxelCloud) -> u32 {
    let extent = cloud.max_coord() as u64 + 1;
    let n = cloud.len() as u64;
    let mut shift = 0u32;
    while shift < 16 {
        let side = (extent >> (shift + 1)).max(1);
        if side.saturating_mul(side).saturating_mul(side) < n {
            break;
        }
        shift += 1;
    }
    shift
}

/// Compressed size expressed in bits per point of the original cloud.
pub fn bits_per_point(stream_bytes: usize, original_points: usize) -> Result<f64> {
    if original_points == 0 {
        return Err(Error::DivisionByZero);
    }
    Ok(8.0 * stream_bytes as f64 / original_points as f64)
}

/// One operating point of a rate-distortion curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RdPoint {
    pub bpp: f64,
    pub psnr: f64,
}

/// Average rate difference of `test` against `anchor` in percent, negative
/// meaning `test` needs fewer bits for the same quality.
///
/// Both curves are fitted with a least-squares cubic of log-rate against
/// PSNR (PSNR values are centered per curve before fitting, for
/// conditioning); the fitted difference is averaged over the overlapping
/// PSNR interval and mapped back with `(e^avg - 1) * 100`. Lossless
/// sentinel points are excluded from the fit.
pub fn bd_rate(anchor: &[RdPoint], test: &[RdPoint]) -> Result<f64> {
    let anchor_fit = LogRateFit::new(anchor)?;
    let test_fit = LogRateFit::new(test)?;
    let lo = anchor_fit.min_psnr.max(test_fit.min_psnr);
    let hi = anchor_fit.max_psnr.min(test_fit.max_psnr);
    if lo >= hi {
        return Err(Error::NoOverlap);
    }
    let avg = (test_fit.integrate(lo, hi) - anchor_fit.integrate(lo, hi)) / (hi - lo);
    Ok((avg.exp() - 1.0) * 100.0)
}

/// Cubic least-squares fit of `ln(bpp)` as a function of PSNR.
struct LogRateFit {
    coeffs: [f64; 4],
    center: f64,
    min_psnr: f64,
    max_psnr: f64,
}

impl LogRateFit {
    fn new(points: &[RdPoint]) -> Result<Self> {
        let usable: Vec<RdPoint> = points
            .iter()
            .copied()
            .filter(|p| p.psnr < PSNR_LOSSLESS && p.bpp > 0.0)
            .collect();
        if usable.len() < 4 {
            return Err(Error::InsufficientPoints);
        }
        let center = usable.iter().map(|p| p.psnr).sum::<f64>() / usable.len() as f64;
        // Normal equations for the cubic: A^T A c = A^T y.
        let mut ata = [[0.0f64; 4]; 4];
        let mut aty = [0.0f64; 4];
        for p in &usable {
            let x = p.psnr - center;
            let y = p.bpp.ln();
            let powers = [1.0, x, x * x, x * x * x];
            for i in 0..4 {
                aty[i] += powers[i] * y;
                for j in 0..4 {
                    ata[i][j] += powers[i] * powers[j];
                }
            }
        }
        let coeffs = solve4(ata, aty).ok_or(Error::InsufficientPoints)?;
        let (mut min_psnr, mut max_psnr) = (f64::INFINITY, f64::NEG_INFINITY);
        for p in &usable {
            min_psnr = min_psnr.min(p.psnr);
            max_psnr = max_psnr.max(p.psnr);
        }
        Ok(LogRateFit {
            coeffs,
            center,
            min_psnr,
            max_psnr,
        })
    }

    /// Definite integral of the fitted polynomial over `[lo, hi]`.
    fn integrate(&self, lo: f64, hi: f64) -> f64 {
        let a = lo - self.center;
        let b = hi - self.center;
        let anti = |u: f64| {
            self.coeffs[0] * u
                + self.coeffs[1] * u * u / 2.0
                + self.coeffs[2] * u * u * u / 3.0
                + self.coeffs[3] * u * u * u * u / 4.0
        };
        anti(b) - anti(a)
    }
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn solve4(mut a: [[f64; 4]; 4], mut y: [f64; 4]) -> Option<[f64; 4]> {
    for col in 0..4 {
        let pivot = (col..4).max_by(|&i, &j| {
            a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap()
        })?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        y.swap(col, pivot);
        for row in col + 1..4 {
            let f = a[row][col] / a[col][col];
            for k in col..4 {
                a[row][k] -= f * a[col][k];
            }
            y[row] -= f * y[col];
        }
    }
    let mut x = [0.0f64; 4];
    for row in (0..4).rev() {
        let mut v = y[row];
        for k in row + 1..4 {
            v -= a[row][k] * x[k];
        }
        x[row] = v / a[row][row];
    }
    Some(x)
}

/// One row of a rate-distortion CSV: `label,K,bpp,d1_psnr`.
#[derive(Debug, Clone, PartialEq)]
pub struct RdRow {
    pub label: String,
    pub k: u8,
    pub bpp: f64,
    pub psnr: f64,
}

pub fn rd_rows_to_csv(rows: &[RdRow]) -> String {
    let mut out = String::from("label,K,bpp,d1_psnr\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{}\n", r.label, r.k, r.bpp, r.psnr));
    }
    out
}

pub fn rd_rows_from_csv(text: &str) -> Result<Vec<RdRow>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or(Error::BadCsv("empty file"))?;
    if header.trim() != "label,K,bpp,d1_psnr" {
        return Err(Error::BadCsv("unexpected header row"));
    }
    let mut rows = Vec::new();
    for line in lines {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(Error::BadCsv("row does not have 4 fields"));
        }
        let k = fields[1].parse().map_err(|_| Error::BadCsv("bad K field"))?;
        let bpp: f64 = fields[2].parse().map_err(|_| Error::BadCsv("bad bpp field"))?;
        let psnr: f64 = fields[3]
            .parse()
            .map_err(|_| Error::BadCsv("bad d1_psnr field"))?;
        rows.push(RdRow {
            label: fields[0].to_string(),
            k,
            bpp,
            psnr,
        });
    }
    Ok(rows)
}

/// Turns CSV rows into an RD curve, dropping the labels.
pub fn rd_rows_to_points(rows: &[RdRow]) -> Vec<RdPoint> {
    rows.iter()
        .map(|r| RdPoint {
            bpp: r.bpp,
            psnr: r.psnr,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;

    /// Quadratic-time reference: scan every pair.
    fn brute_mse(from: &VoxelCloud, to: &VoxelCloud) -> f64 {
        let sum: f64 = from
            .points()
            .iter()
            .map(|p| {
                to.points()
                    .iter()
                    .map(|q| dist_sq(p, q))
                    .min()
                    .unwrap() as f64
            })
            .sum();
        sum / from.len() as f64
    }

    fn brute_psnr(a: &VoxelCloud, b: &VoxelCloud, bit_depth: u8) -> f64 {
        let mse = brute_mse(a, b).max(brute_mse(b, a));
        if mse == 0.0 {
            return PSNR_LOSSLESS;
        }
        let peak = ((1u64 << bit_depth) - 1) as f64;
        10.0 * (3.0 * peak * peak / mse).log10()
    }

    #[test]
    fn identical_clouds_hit_sentinel() {
        let c = synth::sphere(6, 20.0, 1.0);
        assert_eq!(d1_psnr(&c, &c, 6).unwrap(), PSNR_LOSSLESS);
    }

    #[test]
    fn empty_cloud_errors() {
        let c = synth::sphere(6, 20.0, 1.0);
        let e = VoxelCloud::new(vec![], 6);
        assert!(d1_psnr(&c, &e, 6).is_err());
        assert!(d1_psnr(&e, &c, 6).is_err());
    }

    #[test]
    fn grid_matches_brute_force_on_random_clouds() {
        for seed in 0..8u64 {
            let a = synth::random_cloud(6, 200 + seed as usize * 40, seed);
            let b = synth::random_cloud(6, 150, seed + 100);
            let fast = d1_psnr(&a, &b, 6).unwrap();
            let slow = brute_psnr(&a, &b, 6);
            assert!(
                (fast - slow).abs() < 1e-9,
                "seed {seed}: {fast} vs {slow}"
            );
        }
    }

    #[test]
    fn grid_matches_brute_force_on_surfaces() {
        let a = synth::sphere(6, 22.0, 1.0);
        let b = synth::sphere(6, 19.0, 1.0);
        let fast = d1_psnr(&a, &b, 6).unwrap();
        let slow = brute_psnr(&a, &b, 6);
        assert!((fast - slow).abs() < 1e-9, "{fast} vs {slow}");
    }

    #[test]
    fn single_axis_offset_has_closed_form() {
        // Two parallel planes one step apart: every nearest distance is 1.
        let a: Vec<Voxel> = (0..16)
            .flat_map(|x| (0..16).map(move |y| [x, y, 4]))
            .collect();
        let b: Vec<Voxel> = (0..16)
            .flat_map(|x| (0..16).map(move |y| [x, y, 5]))
            .collect();
        let a = VoxelCloud::new(a, 5);
        let b = VoxelCloud::new(b, 5);
        let peak = 31.0f64;
        let expected = 10.0 * (3.0 * peak * peak / 1.0).log10();
        assert!((d1_psnr(&a, &b, 5).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn asymmetric_direction_dominates() {
        // b has an outlier far from a: the b->a direction is worse and
        // must drive the (max) result.
        let a = VoxelCloud::new(vec![[0, 0, 0], [1, 0, 0]], 6);
        let b = VoxelCloud::new(vec![[0, 0, 0], [1, 0, 0], [40, 0, 0]], 6);
        let mse_ab = brute_mse(&a, &b);
        let mse_ba = brute_mse(&b, &a);
        assert!(mse_ba > mse_ab);
        let peak = 63.0f64;
        let expected = 10.0 * (3.0 * peak * peak / mse_ba).log10();
        assert!((d1_psnr(&a, &b, 6).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn bits_per_point_basics() {
        assert_eq!(bits_per_point(100, 100).unwrap(), 8.0);
        assert_eq!(bits_per_point(25, 200).unwrap(), 1.0);
        assert!(matches!(bits_per_point(10, 0), Err(Error::DivisionByZero)));
    }

    fn curve(rates: &[f64], psnrs: &[f64]) -> Vec<RdPoint> {
        rates
            .iter()
            .zip(psnrs)
            .map(|(&bpp, &psnr)| RdPoint { bpp, psnr })
            .collect()
    }

    #[test]
    fn bd_rate_identical_curves_is_zero() {
        let a = curve(&[0.5, 1.0, 2.0, 4.0], &[60.0, 64.0, 68.0, 72.0]);
        assert!(bd_rate(&a, &a).unwrap().abs() < 1e-9);
    }

    #[test]
    fn bd_rate_scaled_curves() {
        let psnrs = [60.0, 64.0, 68.0, 72.0];
        let a = curve(&[0.5, 1.0, 2.0, 4.0], &psnrs);
        let half = curve(&[0.25, 0.5, 1.0, 2.0], &psnrs);
        let up = curve(&[0.625, 1.25, 2.5, 5.0], &psnrs);
        assert!((bd_rate(&a, &half).unwrap() + 50.0).abs() < 1e-9);
        assert!((bd_rate(&a, &up).unwrap() - 25.0).abs() < 1e-9);
    }

    #[test]
    fn bd_rate_error_cases() {
        let a = curve(&[0.5, 1.0, 2.0, 4.0], &[60.0, 64.0, 68.0, 72.0]);
        let short = curve(&[0.5, 1.0, 2.0], &[60.0, 64.0, 68.0]);
        assert!(matches!(bd_rate(&a, &short), Err(Error::InsufficientPoints)));
        let disjoint = curve(&[0.5, 1.0, 2.0, 4.0], &[30.0, 34.0, 38.0, 42.0]);
        assert!(matches!(bd_rate(&a, &disjoint), Err(Error::NoOverlap)));
        // Sentinel points are excluded, leaving too few.
        let with_sentinel = curve(
            &[0.5, 1.0, 2.0, 4.0],
            &[60.0, 64.0, 68.0, PSNR_LOSSLESS],
        );
        assert!(matches!(
            bd_rate(&a, &with_sentinel),
            Err(Error::InsufficientPoints)
        ));
    }

    #[test]
    fn bd_rate_on_noisy_realistic_curves() {
        // A test curve consistently ~20% cheaper at equal quality.
        let anchor = curve(&[0.8, 1.4, 2.6, 5.1], &[58.0, 62.5, 66.0, 70.5]);
        let test = curve(&[0.64, 1.12, 2.08, 4.08], &[58.0, 62.5, 66.0, 70.5]);
        let bd = bd_rate(&anchor, &test).unwrap();
        assert!((bd + 20.0).abs() < 0.5, "bd {bd}");
    }

    #[test]
    fn csv_round_trips() {
        let rows = vec![
            RdRow {
                label: "sphere".into(),
                k: 1,
                bpp: 1.25,
                psnr: 67.5,
            },
            RdRow {
                label: "torus".into(),
                k: 2,
                bpp: 0.5,
                psnr: 61.0,
            },
        ];
        let text = rd_rows_to_csv(&rows);
        assert!(text.starts_with("label,K,bpp,d1_psnr\n"));
        assert_eq!(rd_rows_from_csv(&text).unwrap(), rows);
    }

    #[test]
    fn csv_rejects_malformed_input() {
        assert!(rd_rows_from_csv("").is_err());
        assert!(rd_rows_from_csv("a,b,c\n").is_err());
        assert!(rd_rows_from_csv("label,K,bpp,d1_psnr\nx,1,2\n").is_err());
        assert!(rd_rows_from_csv("label,K,bpp,d1_psnr\nx,one,2,3\n").is_err());
    }
}
