//! Lossless octree geometry codec for the base cloud.
//!
//! The octree is walked breadth-first. Each level visits the occupied nodes
//! in canonical (lexicographic) coordinate order and codes one 8-bit child
//! occupancy mask per node; child bit `b = 4 bx + 2 by + bz` takes the next
//! coordinate bit of each axis, most significant first. Mask bits go through
//! the adaptive range coder with 64 contexts: bit position (0-7) crossed
//! with the number of already-coded set bits in the same mask (0-7).
//!
//! Payload layout: one depth byte, then the range-coded mask bits, then the
//! coder's 4-byte flush.

use crate::cloud::{Voxel, VoxelCloud};
use crate::error::{Error, Result};
use crate::range_coder::{BitModel, RangeDecoder, RangeEncoder};

/// Octrees deeper than this would need coordinate bits beyond u32.
const MAX_DEPTH: u8 = 31;

/// Per-level node cap; a corrupt stream claiming more nodes than any real
/// cloud is rejected before it can exhaust memory.
const MAX_LEVEL_NODES: usize = 1 << 26;

const CONTEXTS: usize = 64;

fn depth_for(cloud: &VoxelCloud) -> Result<u8> {
    let max = cloud.max_coord();
    let depth = (32 - max.leading_zeros()) as u8;
    if depth > MAX_DEPTH {
        return Err(Error::DepthOverflow { coord: max, depth });
    }
    Ok(depth.max(1))
}

#[inline]
fn context(bit: usize, partial_mask: u8) -> usize {
    bit * 8 + partial_mask.count_ones() as usize
}

/// Losslessly encodes the voxel coordinates of `cloud`.
pub fn encode_base(cloud: &VoxelCloud) -> Result<Vec<u8>> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let depth = depth_for(cloud)?;
    let mut models: Vec<BitModel> = (0..CONTEXTS).map(|_| BitModel::new()).collect();
    let mut enc = RangeEncoder::new();

    // Points of one node, grouped; groups follow canonical node order.
    let mut groups: Vec<Vec<Voxel>> = vec![cloud.points().to_vec()];
    for level in 0..depth {
        let shift = depth - level - 1;
        let mut next: Vec<([u32; 3], Vec<Voxel>)> = Vec::new();
        for group in &groups {
            let mut mask = 0u8;
            let mut buckets: [Vec<Voxel>; 8] = Default::default();
            for &p in group {
                let b = (((p[0] >> shift) & 1) * 4
                    + ((p[1] >> shift) & 1) * 2
                    + ((p[2] >> shift) & 1)) as usize;
                mask |= 1 << b;
                buckets[b].push(p);
            }
            for b in 0..8 {
                let bit = (mask >> b) & 1 == 1;
                let ctx = context(b, mask & ((1 << b) - 1));
                enc.encode_bit(&mut models[ctx], bit);
            }
            if shift > 0 {
                for bucket in buckets {
                    if let Some(&p) = bucket.first() {
                        let node = [p[0] >> shift, p[1] >> shift, p[2] >> shift];
                        next.push((node, bucket));
                    }
                }
            }
        }
        // Children of lexicographically ordered parents interleave, so the
        // next level must be re-sorted to stay canonical.
        next.sort_by_key(|(node, _)| *node);
        groups = next.into_iter().map(|(_, bucket)| bucket).collect();
    }

    let mut payload = vec![depth];
    payload.extend(enc.finish());
    Ok(payload)
}

/// Decodes an [`encode_base`] payload. The returned cloud's bit depth is the
/// octree depth; callers with narrower semantics re-tag it.
pub fn decode_base(payload: &[u8]) -> Result<VoxelCloud> {
    let (&depth, coded) = payload
        .split_first()
        .ok_or(Error::CorruptStream("missing octree depth"))?;
    if depth == 0 || depth > MAX_DEPTH {
        return Err(Error::CorruptStream("octree depth out of range"));
    }
    let mut models: Vec<BitModel> = (0..CONTEXTS).map(|_| BitModel::new()).collect();
    let mut dec = RangeDecoder::new(coded);

    let mut nodes: Vec<Voxel> = vec![[0, 0, 0]];
    for _ in 0..depth {
        let mut next: Vec<Voxel> = Vec::new();
        for &node in &nodes {
            // A well-formed stream is consumed exactly; reading past the end
            // means the stream was truncated or forged. Checking per node also
            // bounds the work a hostile stream can cause: masks decoded before
            // the first overrun are limited by the real bytes present.
            if dec.overran() {
                return Err(Error::CorruptStream("stream ends before octree"));
            }
            let mut mask = 0u8;
            for b in 0..8 {
                let ctx = context(b, mask);
                if dec.decode_bit(&mut models[ctx]) {
                    mask |= 1 << b;
                }
            }
            if mask == 0 {
                return Err(Error::CorruptStream("empty child mask"));
            }
            for b in 0..8u32 {
                if (mask >> b) & 1 == 1 {
                    next.push([
                        (node[0] << 1) | (b >> 2),
                        (node[1] << 1) | ((b >> 1) & 1),
                        (node[2] << 1) | (b & 1),
                    ]);
                }
            }
        }
        if next.len() > MAX_LEVEL_NODES {
            return Err(Error::CorruptStream("node count exceeds level cap"));
        }
        next.sort_unstable();
        nodes = next;
    }

    Ok(VoxelCloud::from_sorted(nodes, depth))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;
    use crate::synth;

    fn round_trip(cloud: &VoxelCloud) -> Vec<u8> {
        let payload = encode_base(cloud).unwrap();
        let decoded = decode_base(&payload).unwrap();
        assert_eq!(decoded.points(), cloud.points());
        payload
    }

    #[test]
    fn single_point_clouds() {
        round_trip(&VoxelCloud::new(vec![[0, 0, 0]], 1));
        round_trip(&VoxelCloud::new(vec![[5, 3, 7]], 3));
        round_trip(&VoxelCloud::new(vec![[1023, 0, 512]], 10));
    }

    #[test]
    fn dense_block_round_trips_small() {
        let mut pts = Vec::new();
        for x in 0..8 {
            for y in 0..8 {
                for z in 0..8 {
                    pts.push([x, y, z]);
                }
            }
        }
        let payload = round_trip(&VoxelCloud::new(pts, 3));
        // A full cube is almost free: every mask is 0xFF.
        assert!(payload.len() < 40, "payload {} bytes", payload.len());
    }

    #[test]
    fn random_clouds_round_trip() {
        for seed in 0..30u64 {
            let n = 1 + (seed as usize * 97) % 2000;
            let cloud = synth::random_cloud(8, n, seed);
            round_trip(&cloud);
        }
    }

    #[test]
    fn structured_clouds_round_trip_and_compress() {
        let sphere = synth::sphere(8, 100.0, 1.0);
        let payload = round_trip(&sphere);
        let raw_bytes = sphere.len() * 12;
        assert!(
            payload.len() * 4 < raw_bytes,
            "octree {} vs raw {}",
            payload.len(),
            raw_bytes
        );
        round_trip(&synth::torus(8, 80.0, 40.0, 1.0));
    }

    #[test]
    fn empty_cloud_rejected() {
        let cloud = VoxelCloud::new(vec![], 4);
        assert!(matches!(encode_base(&cloud), Err(Error::EmptyCloud)));
    }

    #[test]
    fn decode_rejects_bad_depth() {
        assert!(decode_base(&[]).is_err());
        assert!(decode_base(&[0, 1, 2, 3, 4]).is_err());
        assert!(decode_base(&[32, 0, 0, 0, 0]).is_err());
    }

    #[test]
    fn truncated_stream_errors_not_panics() {
        let cloud = synth::sphere(7, 50.0, 1.0);
        let payload = encode_base(&cloud).unwrap();
        // Hard truncations must error via the overrun check.
        for cut in [1usize, 2, 5, payload.len() / 2] {
            assert!(decode_base(&payload[..cut]).is_err(), "cut {cut}");
        }
        // Dropping only the tail of the flush may still decode (the final
        // bytes can be immaterial); it must simply never panic.
        let _ = decode_base(&payload[..payload.len() - 1]);
    }

    #[test]
    fn fuzz_garbage_never_panics() {
        let mut rng = Rng::new(0xF00D);
        for _ in 0..2000 {
            let n = (rng.next_u64() % 64) as usize;
            let junk: Vec<u8> = (0..n).map(|_| (rng.next_u64() & 0xFF) as u8).collect();
            let _ = decode_base(&junk);
        }
    }

    #[test]
    fn payload_is_deterministic() {
        let cloud = synth::torus(8, 70.0, 30.0, 1.0);
        assert_eq!(encode_base(&cloud).unwrap(), encode_base(&cloud).unwrap());
    }
}
