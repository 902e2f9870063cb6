//! Randomized invariants over the geometry transforms and the bitstream.

use proptest::prelude::*;

use lsrn_core::cloud::{downsample, VoxelCloud};
use lsrn_core::octree::{decode_base, encode_base};
use lsrn_core::patterns::{apply_patterns, extract_patterns};
use lsrn_core::pipeline::{decode, encode, EncodeSettings};

fn cloud_strategy(max_bit_depth: u8, max_points: usize) -> impl Strategy<Value = VoxelCloud> {
    (2u8..=max_bit_depth, prop::collection::vec(any::<[u32; 3]>(), 1..max_points)).prop_map(
        |(bit_depth, raw)| {
            let mask = (1u32 << bit_depth) - 1;
            let points = raw
                .into_iter()
                .map(|p| [p[0] & mask, p[1] & mask, p[2] & mask])
                .collect();
            VoxelCloud::new(points, bit_depth)
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Splitting a cloud into its downsampled half and the per-parent child
    /// masks loses nothing.
    #[test]
    fn patterns_invert_downsampling(cloud in cloud_strategy(7, 400)) {
        let low = downsample(&cloud).unwrap();
        let patterns = extract_patterns(&cloud, &low).unwrap();
        let rebuilt = apply_patterns(&low, &patterns).unwrap();
        prop_assert_eq!(rebuilt.points(), cloud.points());
    }

    /// The octree base codec is lossless.
    #[test]
    fn octree_round_trips(cloud in cloud_strategy(8, 500)) {
        let payload = encode_base(&cloud).unwrap();
        let decoded = decode_base(&payload).unwrap();
        prop_assert_eq!(decoded.points(), cloud.points());
    }

    /// Arbitrary bytes fed to the full decoder: an error or a cloud,
    /// never a panic.
    #[test]
    fn decoder_survives_garbage(bytes in prop::collection::vec(any::<u8>(), 0..256)) {
        let _ = decode(&bytes);
        let _ = decode_base(&bytes);
    }

    /// Single-byte corruption of a real stream never panics the decoder.
    #[test]
    fn decoder_survives_bit_flips(seed in any::<u64>(), pos_frac in 0.0f64..1.0, flip in 1u8..=255) {
        let cloud = lsrn_core::synth::random_cloud(5, 120, seed);
        let mut settings = EncodeSettings::new(1, 1);
        settings.train.epochs = 1;
        let mut stream = encode(&cloud, &settings).unwrap();
        let pos = ((stream.len() - 1) as f64 * pos_frac) as usize;
        stream[pos] ^= flip;
        let _ = decode(&stream);
    }

    /// Oracle-pattern streams are lossless for one downsampling level.
    #[test]
    fn oracle_streams_are_lossless(cloud in cloud_strategy(6, 300)) {
        let mut settings = EncodeSettings::new(1, 1);
        settings.oracle_patterns = true;
        let stream = encode(&cloud, &settings).unwrap();
        let decoded = decode(&stream).unwrap();
        prop_assert_eq!(decoded.points(), cloud.points());
    }
}
