//! Bitstream container: a fixed 24-byte header followed by the octree base
//! payload and the parameter payload, plus the binary16 parameter codec.
//!
//! Header layout (all multi-byte fields little-endian):
//!
//! | offset | size | field                                   |
//! |--------|------|-----------------------------------------|
//! | 0      | 4    | magic `LSRN`                            |
//! | 4      | 1    | version (1)                             |
//! | 5      | 1    | flags                                   |
//! | 6      | 1    | downsampling exponent K                 |
//! | 7      | 1    | neighborhood radius D                   |
//! | 8      | 2    | hidden width H                          |
//! | 10     | 1    | original bit depth                      |
//! | 11     | 1    | octree depth of the base payload        |
//! | 12     | 4    | base payload length                     |
//! | 16     | 4    | parameter payload length                |
//! | 20     | 4    | reserved, zero on write                 |
//!
//! Flags: bit 0 marks an externally coded base payload (this decoder refuses
//! it), bit 1 marks a parameter payload holding raw interpolation masks
//! (one byte per base point) instead of network weights.

use half::f16;

use crate::error::{Error, Result};
use crate::features::neighbor_count;
use crate::srnet::MlpParams;

pub const MAGIC: [u8; 4] = *b"LSRN";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 24;

/// The base payload was produced by an external geometry codec.
pub const FLAG_EXTERNAL_BASE: u8 = 0b0000_0001;
/// The parameter payload carries stored interpolation masks, not weights.
pub const FLAG_ORACLE_PATTERNS: u8 = 0b0000_0010;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Header {
    pub flags: u8,
    pub k: u8,
    pub d: u8,
    pub hidden: u16,
    pub bit_depth: u8,
    pub octree_depth: u8,
    pub base_len: u32,
    pub param_len: u32,
}

impl Header {
    pub fn to_bytes(&self) -> [u8; HEADER_LEN] {
        let mut out = [0u8; HEADER_LEN];
        out[0..4].copy_from_slice(&MAGIC);
        out[4] = VERSION;
        out[5] = self.flags;
        out[6] = self.k;
        out[7] = self.d;
        out[8..10].copy_from_slice(&self.hidden.to_le_bytes());
        out[10] = self.bit_depth;
        out[11] = self.octree_depth;
        out[12..16].copy_from_slice(&self.base_len.to_le_bytes());
        out[16..20].copy_from_slice(&self.param_len.to_le_bytes());
        out
    }

    pub fn parse(bytes: &[u8]) -> Result<Header> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::TruncatedStream);
        }
        if bytes[0..4] != MAGIC {
            return Err(Error::BadMagic);
        }
        if bytes[4] != VERSION {
            return Err(Error::BadVersion(bytes[4]));
        }
        Ok(Header {
            flags: bytes[5],
            k: bytes[6],
            d: bytes[7],
            hidden: u16::from_le_bytes([bytes[8], bytes[9]]),
            bit_depth: bytes[10],
            octree_depth: bytes[11],
            base_len: u32::from_le_bytes([bytes[12], bytes[13], bytes[14], bytes[15]]),
            param_len: u32::from_le_bytes([bytes[16], bytes[17], bytes[18], bytes[19]]),
        })
    }
}

/// Assembles a complete stream. The header's payload lengths must match the
/// slices passed in.
pub fn write_stream(header: &Header, base: &[u8], params: &[u8]) -> Result<Vec<u8>> {
    if header.base_len as usize != base.len() {
        return Err(Error::LengthMismatch {
            expected: header.base_len as usize,
            got: base.len(),
        });
    }
    if header.param_len as usize != params.len() {
        return Err(Error::LengthMismatch {
            expected: header.param_len as usize,
            got: params.len(),
        });
    }
    let mut out = Vec::with_capacity(HEADER_LEN + base.len() + params.len());
    out.extend_from_slice(&header.to_bytes());
    out.extend_from_slice(base);
    out.extend_from_slice(params);
    Ok(out)
}

/// Splits a stream into header and payload slices, checking magic, version
/// and lengths. For plain network streams (no flags) the parameter payload
/// length must equal two bytes per network parameter.
pub fn read_stream(bytes: &[u8]) -> Result<(Header, &[u8], &[u8])> {
    let header = Header::parse(bytes)?;
    let base_len = header.base_len as usize;
    let param_len = header.param_len as usize;
    let expected = HEADER_LEN + base_len + param_len;
    if bytes.len() < expected {
        return Err(Error::TruncatedStream);
    }
    if bytes.len() > expected {
        return Err(Error::LengthMismatch {
            expected,
            got: bytes.len(),
        });
    }
    if header.flags & (FLAG_EXTERNAL_BASE | FLAG_ORACLE_PATTERNS) == 0 {
        if header.d != 1 && header.d != 2 {
            return Err(Error::InvalidRadius(header.d));
        }
        if header.hidden == 0 || header.hidden > 64 {
            return Err(Error::InvalidHidden(header.hidden));
        }
        let count = param_count(header.d, header.hidden as usize);
        if param_len != 2 * count {
            return Err(Error::LengthMismatch {
                expected: 2 * count,
                got: param_len,
            });
        }
    }
    let base = &bytes[HEADER_LEN..HEADER_LEN + base_len];
    let params = &bytes[HEADER_LEN + base_len..expected];
    Ok((header, base, params))
}

fn param_count(d: u8, hidden: usize) -> usize {
    let in_dim = neighbor_count(d);
    in_dim * hidden + hidden + 8 * hidden + 8
}

/// Serializes parameters as binary16, little-endian, in flat order
/// (`w1, b1, w2, b2`). Values are clamped into the representable range
/// first; a non-finite parameter is an error, not a silent infinity.
pub fn quantize_params(params: &MlpParams) -> Result<Vec<u8>> {
    let flat = params.to_flat();
    let mut out = Vec::with_capacity(2 * flat.len());
    for v in flat {
        if !v.is_finite() {
            return Err(Error::NonFiniteParam);
        }
        let clamped = v.clamp(-f16::MAX.to_f32(), f16::MAX.to_f32());
        out.extend_from_slice(&f16::from_f32(clamped).to_le_bytes());
    }
    Ok(out)
}

/// Reads a [`quantize_params`] payload back into `f32` parameters.
pub fn dequantize_params(in_dim: usize, hidden: usize, bytes: &[u8]) -> Result<MlpParams> {
    let count = in_dim * hidden + hidden + 8 * hidden + 8;
    if bytes.len() != 2 * count {
        return Err(Error::LengthMismatch {
            expected: 2 * count,
            got: bytes.len(),
        });
    }
    let mut flat = Vec::with_capacity(count);
    for pair in bytes.chunks_exact(2) {
        let v = f16::from_le_bytes([pair[0], pair[1]]).to_f32();
        if !v.is_finite() {
            return Err(Error::NonFiniteParam);
        }
        flat.push(v);
    }
    MlpParams::from_flat(in_dim, hidden, &flat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::srnet::init_params;

    fn sample_header() -> Header {
        Header {
            flags: 0,
            k: 2,
            d: 1,
            hidden: 16,
            bit_depth: 10,
            octree_depth: 8,
            base_len: 3,
            param_len: 2 * param_count(1, 16) as u32,
        }
    }

    #[test]
    fn header_layout_is_pinned() {
        let h = Header {
            flags: 0b10,
            k: 3,
            d: 2,
            hidden: 0x0120,
            bit_depth: 11,
            octree_depth: 9,
            base_len: 0x0401,
            param_len: 0x00030201,
        };
        let bytes = h.to_bytes();
        let expected: [u8; HEADER_LEN] = [
            b'L', b'S', b'R', b'N', // magic
            1,    // version
            0b10, // flags
            3,    // K
            2,    // D
            0x20, 0x01, // hidden, little-endian
            11,   // bit depth
            9,    // octree depth
            0x01, 0x04, 0, 0, // base length
            0x01, 0x02, 0x03, 0, // parameter length
            0, 0, 0, 0, // reserved
        ];
        assert_eq!(bytes, expected);
        assert_eq!(Header::parse(&bytes).unwrap(), h);
    }

    #[test]
    fn stream_round_trips() {
        let header = sample_header();
        let base = [9u8, 8, 7];
        let params = vec![0u8; header.param_len as usize];
        let stream = write_stream(&header, &base, &params).unwrap();
        assert_eq!(stream.len(), HEADER_LEN + 3 + params.len());
        let (h2, b2, p2) = read_stream(&stream).unwrap();
        assert_eq!(h2, header);
        assert_eq!(b2, &base);
        assert_eq!(p2, &params[..]);
    }

    #[test]
    fn read_rejects_malformed_streams() {
        let header = sample_header();
        let params = vec![0u8; header.param_len as usize];
        let stream = write_stream(&header, &[9, 8, 7], &params).unwrap();

        assert!(matches!(read_stream(&stream[..10]), Err(Error::TruncatedStream)));
        assert!(matches!(
            read_stream(&stream[..stream.len() - 1]),
            Err(Error::TruncatedStream)
        ));

        let mut long = stream.clone();
        long.push(0);
        assert!(matches!(read_stream(&long), Err(Error::LengthMismatch { .. })));

        let mut bad_magic = stream.clone();
        bad_magic[0] = b'X';
        assert!(matches!(read_stream(&bad_magic), Err(Error::BadMagic)));

        let mut bad_version = stream.clone();
        bad_version[4] = 2;
        assert!(matches!(read_stream(&bad_version), Err(Error::BadVersion(2))));

        let mut bad_d = stream.clone();
        bad_d[7] = 3;
        assert!(matches!(read_stream(&bad_d), Err(Error::InvalidRadius(3))));

        let mut bad_hidden = stream.clone();
        bad_hidden[8] = 65;
        bad_hidden[9] = 0;
        assert!(matches!(read_stream(&bad_hidden), Err(Error::InvalidHidden(65))));

        // Parameter length inconsistent with D and H.
        let mut bad_params = Header::parse(&stream).unwrap();
        bad_params.param_len -= 2;
        let shorter = write_stream(&bad_params, &[9, 8, 7], &params[..params.len() - 2]).unwrap();
        assert!(matches!(read_stream(&shorter), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn flagged_streams_skip_param_length_rule() {
        // Oracle-pattern payloads are one byte per base point; external-base
        // streams may carry anything, including nothing.
        let header = Header {
            flags: FLAG_ORACLE_PATTERNS,
            hidden: 0,
            param_len: 5,
            base_len: 0,
            ..sample_header()
        };
        let stream = write_stream(&header, &[], &[1, 2, 3, 4, 5]).unwrap();
        assert!(read_stream(&stream).is_ok());

        let header = Header {
            flags: FLAG_EXTERNAL_BASE,
            param_len: 0,
            base_len: 2,
            ..sample_header()
        };
        let stream = write_stream(&header, &[1, 2], &[]).unwrap();
        assert!(read_stream(&stream).is_ok());
    }

    #[test]
    fn params_round_trip_through_binary16() {
        let params = init_params(3, 26, 16);
        let bytes = quantize_params(&params).unwrap();
        assert_eq!(bytes.len(), 2 * params.param_count());
        let back = dequantize_params(26, 16, &bytes).unwrap();
        // binary16 has 11 significand bits: relative error below 2^-11.
        for (a, b) in params.to_flat().iter().zip(back.to_flat()) {
            assert!((a - b).abs() <= a.abs() * 4.9e-4 + 6.0e-8, "{a} vs {b}");
        }
        // Quantizing the dequantized values is exact (idempotent).
        assert_eq!(quantize_params(&back).unwrap(), bytes);
    }

    #[test]
    fn quantize_handles_extremes() {
        let mut params = MlpParams::zeros(2, 1);
        params.w1 = vec![70000.0, -70000.0];
        params.b1 = vec![0.0];
        params.w2 = vec![1e-10; 8];
        params.b2 = vec![0.0; 8];
        let bytes = quantize_params(&params).unwrap();
        let back = dequantize_params(2, 1, &bytes).unwrap();
        assert_eq!(back.w1, vec![65504.0, -65504.0]);
        // Subnormal underflow to zero is fine.
        assert!(back.w2.iter().all(|v| v.abs() < 1e-7));

        params.b1 = vec![f32::NAN];
        assert!(matches!(quantize_params(&params), Err(Error::NonFiniteParam)));
    }

    #[test]
    fn dequantize_rejects_bad_payloads() {
        assert!(matches!(
            dequantize_params(26, 16, &[0u8; 10]),
            Err(Error::LengthMismatch { .. })
        ));
        // An all-ones pattern is a binary16 NaN.
        let count = 26 * 1 + 1 + 8 * 1 + 8;
        let bytes = vec![0xFFu8; 2 * count];
        assert!(matches!(
            dequantize_params(26, 1, &bytes),
            Err(Error::NonFiniteParam)
        ));
    }
}
