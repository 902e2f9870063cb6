//! End-to-end codec: encoding downsamples the cloud K times, overfits the
//! super-resolution network to the last downsampling step, and packs the
//! losslessly coded base cloud plus the quantized parameters into one
//! stream. Decoding runs the network for up to two upsampling passes and
//! finishes any remaining levels with plain coordinate doubling.

use crate::cloud::{direct_upscale, downsample, VoxelCloud};
use crate::container::{self, Header, FLAG_EXTERNAL_BASE, FLAG_ORACLE_PATTERNS};
use crate::error::{Error, Result};
use crate::features::{neighbor_count, occupancy_features};
use crate::lut::per_bit_accuracy;
use crate::metrics::{bits_per_point, d1_psnr};
use crate::octree::{decode_base, encode_base};
use crate::patterns::{apply_patterns, extract_patterns, InterpolationPatterns};
use crate::srnet::{predict_masks, train_full, MlpParams, TrainConfig};

/// Everything the encoder needs besides the cloud itself.
#[derive(Debug, Clone)]
pub struct EncodeSettings {
    /// Downsampling exponent: the base cloud is `K` halvings below the input.
    pub k: u8,
    /// Neighborhood radius of the occupancy features (1 or 2).
    pub d: u8,
    /// Overrides the default hidden width when set.
    pub hidden_override: Option<u16>,
    pub train: TrainConfig,
    /// Store the true interpolation patterns of the last step instead of
    /// training a network. Diagnostic mode: lossless only for `K = 1`.
    pub oracle_patterns: bool,
}

impl EncodeSettings {
    pub fn new(k: u8, d: u8) -> Self {
        EncodeSettings {
            k,
            d,
            hidden_override: None,
            train: TrainConfig::default(),
            oracle_patterns: false,
        }
    }

    /// Hidden width actually used: the override if given, otherwise wide
    /// features get 32 and narrow features shrink with K (`64 >> K`,
    /// never below 4).
    pub fn hidden(&self) -> u16 {
        self.hidden_override.unwrap_or(match self.d {
            2 => 32,
            _ => ((64u16 >> self.k.min(6)).max(4)).min(32),
        })
    }
}

/// Encoder output with the numbers a rate-distortion sweep needs. The
/// distortion is measured by actually decoding the produced stream, so it
/// reflects the quantized parameters the decoder will use.
#[derive(Debug, Clone)]
pub struct EncodeStats {
    pub stream: Vec<u8>,
    pub original_points: usize,
    pub base_points: usize,
    pub bpp: f64,
    pub psnr: f64,
    /// Mean training loss per epoch; empty in oracle-pattern mode.
    pub epoch_loss: Vec<f32>,
    /// Fraction of child bits the trained network reproduces on its own
    /// training set (after quantization); 1.0 in oracle-pattern mode.
    pub train_accuracy: f64,
}

fn validate_settings(cloud: &VoxelCloud, settings: &EncodeSettings) -> Result<()> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if settings.k == 0 || settings.k >= cloud.bit_depth() {
        return Err(Error::InvalidK {
            k: settings.k,
            bit_depth: cloud.bit_depth(),
        });
    }
    if settings.d != 1 && settings.d != 2 {
        return Err(Error::InvalidRadius(settings.d));
    }
    let hidden = settings.hidden();
    if hidden == 0 || hidden > 64 {
        return Err(Error::InvalidHidden(hidden));
    }
    Ok(())
}

pub fn encode(cloud: &VoxelCloud, settings: &EncodeSettings) -> Result<Vec<u8>> {
    Ok(encode_with_stats(cloud, settings)?.stream)
}

pub fn encode_with_stats(cloud: &VoxelCloud, settings: &EncodeSettings) -> Result<EncodeStats> {
    validate_settings(cloud, settings)?;

    // Penultimate level: K - 1 halvings down, then one more for the base.
    let mut above_base = cloud.clone();
    for _ in 1..settings.k {
        above_base = downsample(&above_base)?;
    }
    let base = downsample(&above_base)?;
    let patterns = extract_patterns(&above_base, &base)?;

    let base_payload = encode_base(&base)?;
    let octree_depth = base_payload[0];

    let (flags, hidden_field, param_payload, epoch_loss, train_accuracy);
    if settings.oracle_patterns {
        flags = FLAG_ORACLE_PATTERNS;
        hidden_field = 0u16;
        param_payload = patterns.masks().to_vec();
        epoch_loss = Vec::new();
        train_accuracy = 1.0;
    } else {
        let features = occupancy_features(&base, settings.d)?;
        let hidden = settings.hidden();
        let run = train_full(&features, &patterns, hidden as usize, &settings.train)?;
        let folded = fold_omega0(run.params, settings.train.omega0);
        flags = 0;
        hidden_field = hidden;
        param_payload = container::quantize_params(&folded)?;
        epoch_loss = run.epoch_loss;
        // Measure with the dequantized parameters the decoder will see.
        let decoded_params =
            container::dequantize_params(neighbor_count(settings.d), hidden as usize, &param_payload)?;
        let predicted = predict_masks(&decoded_params, &features, 1.0)?;
        train_accuracy = per_bit_accuracy(&predicted, &patterns)?;
    }

    let header = Header {
        flags,
        k: settings.k,
        d: settings.d,
        hidden: hidden_field,
        bit_depth: cloud.bit_depth(),
        octree_depth,
        base_len: base_payload.len() as u32,
        param_len: param_payload.len() as u32,
    };
    let stream = container::write_stream(&header, &base_payload, &param_payload)?;

    let reconstructed = decode(&stream)?;
    let psnr = d1_psnr(cloud, &reconstructed, cloud.bit_depth())?;
    let bpp = bits_per_point(stream.len(), cloud.len())?;

    Ok(EncodeStats {
        stream,
        original_points: cloud.len(),
        base_points: base.len(),
        bpp,
        psnr,
        epoch_loss,
        train_accuracy,
    })
}

/// The sine frequency satisfies `sin(w0 (W1 x + b1)) = sin((w0 W1) x + w0 b1)`,
/// so it is folded into the first layer before quantization and the decoder
/// always evaluates with frequency 1.
fn fold_omega0(mut params: MlpParams, omega0: f32) -> MlpParams {
    if omega0 != 1.0 {
        params.w1.iter_mut().for_each(|w| *w *= omega0);
        params.b1.iter_mut().for_each(|b| *b *= omega0);
    }
    params
}

fn read_and_check(stream: &[u8]) -> Result<(Header, VoxelCloud, &[u8])> {
    let (header, base_payload, param_payload) = container::read_stream(stream)?;
    if header.flags & FLAG_EXTERNAL_BASE != 0 {
        return Err(Error::ExternalBase);
    }
    if header.k == 0 || header.k >= header.bit_depth {
        return Err(Error::InvalidK {
            k: header.k,
            bit_depth: header.bit_depth,
        });
    }
    let base_depth = header.bit_depth - header.k;
    // Round-half-up halving can push a coordinate to 2^(B-K), one past the
    // nominal grid maximum, so the octree may be one level deeper.
    if header.octree_depth > base_depth + 1 {
        return Err(Error::CorruptStream("octree deeper than the base grid"));
    }
    if base_payload.first() != Some(&header.octree_depth) {
        return Err(Error::CorruptStream("octree depth disagrees with header"));
    }
    let base = decode_base(base_payload)?.with_bit_depth(base_depth);
    Ok((header, base, param_payload))
}

/// Full decode: base cloud, then network-guided upsampling.
///
/// The network predicts the child pattern of every base point; for `K >= 2`
/// the same parameters run a second pass on the once-upsampled cloud, and
/// any remaining levels are plain doublings. Oracle-pattern streams apply
/// their stored masks for the first pass instead.
pub fn decode(stream: &[u8]) -> Result<VoxelCloud> {
    let (header, base, param_payload) = read_and_check(stream)?;

    let (refined, guided_passes) = if header.flags & FLAG_ORACLE_PATTERNS != 0 {
        if param_payload.len() != base.len() {
            return Err(Error::LengthMismatch {
                expected: base.len(),
                got: param_payload.len(),
            });
        }
        let patterns = InterpolationPatterns::new(param_payload.to_vec());
        (apply_patterns(&base, &patterns)?, 1u8)
    } else {
        let in_dim = neighbor_count(header.d);
        let params = container::dequantize_params(in_dim, header.hidden as usize, param_payload)?;
        let mut up = sr_pass(&base, &params, header.d)?;
        if header.k >= 2 {
            up = sr_pass(&up, &params, header.d)?;
        }
        (up, 2u8)
    };

    // Levels not covered by a guided pass are plain doublings.
    let remaining = header.k.saturating_sub(guided_passes);
    Ok(direct_upscale(&refined, remaining).with_bit_depth(header.bit_depth))
}

fn sr_pass(cloud: &VoxelCloud, params: &MlpParams, d: u8) -> Result<VoxelCloud> {
    let features = occupancy_features(cloud, d)?;
    let masks = predict_masks(params, &features, 1.0)?;
    apply_patterns(cloud, &masks)
}

/// Decodes only the base cloud and scales it back up with plain doublings —
/// the reference the network passes are judged against.
pub fn baseline_decode(stream: &[u8]) -> Result<VoxelCloud> {
    let (header, base, _) = read_and_check(stream)?;
    Ok(direct_upscale(&base, header.k).with_bit_depth(header.bit_depth))
}

/// Size of the base payload inside a stream, in bytes (header excluded).
pub fn base_payload_len(stream: &[u8]) -> Result<usize> {
    let (header, _, _) = container::read_stream(stream)?;
    Ok(header.base_len as usize)
}
