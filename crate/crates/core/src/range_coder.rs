//! Carry-less binary range coder with adaptive bit models.
//!
//! The coder keeps a 32-bit interval `[low, low + range)`. Encoding a bit
//! splits the interval in proportion to the model's probability estimate and
//! keeps one side; when the top byte of the interval is settled (or the
//! interval underflows 2^16 and must be clamped to the next 64 KiB boundary,
//! which is what makes the scheme carry-free) a byte is emitted and the
//! window shifts left by 8. The decoder mirrors the arithmetic exactly, so
//! no probability state ever needs to be transmitted.
//!
//! Frequencies are 12-bit at most (`BitModel` rescales at 1024 total), so
//! after renormalization `range >= 2^16` always splits into two non-empty
//! halves — neither branch can produce a zero-width interval.

const TOP: u32 = 1 << 24;
const BOT: u32 = 1 << 16;

/// Adaptive binary probability model: two counts, estimate `c1 / (c0 + c1)`.
///
/// Counts start at (1, 1). After each update, if the total exceeds 1024 both
/// counts are halved (floor, minimum 1), giving recent bits more weight.
#[derive(Debug, Clone)]
pub struct BitModel {
    zeros: u32,
    ones: u32,
}

impl Default for BitModel {
    fn default() -> Self {
        BitModel { zeros: 1, ones: 1 }
    }
}

impl BitModel {
    pub fn new() -> Self {
        Self::default()
    }

    fn total(&self) -> u32 {
        self.zeros + self.ones
    }

    fn update(&mut self, bit: bool) {
        if bit {
            self.ones += 1;
        } else {
            self.zeros += 1;
        }
        if self.total() > 1024 {
            self.zeros = (self.zeros / 2).max(1);
            self.ones = (self.ones / 2).max(1);
        }
    }
}

#[derive(Debug)]
pub struct RangeEncoder {
    low: u32,
    range: u32,
    out: Vec<u8>,
}

impl Default for RangeEncoder {
    fn default() -> Self {
        Self::new()
    }
}

impl RangeEncoder {
    pub fn new() -> Self {
        RangeEncoder {
            low: 0,
            range: u32::MAX,
            out: Vec::new(),
        }
    }

    pub fn encode_bit(&mut self, model: &mut BitModel, bit: bool) {
        let bound = (self.range / model.total()) * model.ones;
        if bit {
            self.range = bound;
        } else {
            self.low = self.low.wrapping_add(bound);
            self.range -= bound;
        }
        self.normalize();
        model.update(bit);
    }

    fn normalize(&mut self) {
        loop {
            if (self.low ^ self.low.wrapping_add(self.range)) >= TOP {
                if self.range >= BOT {
                    break;
                }
                // Interval straddles a top-byte boundary but is tiny: clamp
                // it to end at the next 64 KiB boundary. The clamped width is
                // `-low mod 2^16`, nonzero here because a 16-bit-aligned low
                // with range < 2^16 cannot straddle a 2^24 boundary.
                self.range = self.low.wrapping_neg() & (BOT - 1);
            }
            self.out.push((self.low >> 24) as u8);
            self.low <<= 8;
            self.range <<= 8;
        }
    }

    /// Emits the final 4 bytes that pin the interval and returns the stream.
    pub fn finish(mut self) -> Vec<u8> {
        for _ in 0..4 {
            self.out.push((self.low >> 24) as u8);
            self.low <<= 8;
        }
        self.out
    }
}

#[derive(Debug)]
pub struct RangeDecoder<'a> {
    low: u32,
    range: u32,
    code: u32,
    input: &'a [u8],
    pos: usize,
}

impl<'a> RangeDecoder<'a> {
    pub fn new(input: &'a [u8]) -> Self {
        let mut d = RangeDecoder {
            low: 0,
            range: u32::MAX,
            code: 0,
            input,
            pos: 0,
        };
        for _ in 0..4 {
            d.code = (d.code << 8) | d.next_byte();
        }
        d
    }

    fn next_byte(&mut self) -> u32 {
        // Reading past the end pads with zeros; corrupt streams surface as
        // semantic errors in the layer above, never as a panic here.
        let b = self.input.get(self.pos).copied().unwrap_or(0);
        self.pos += 1;
        b as u32
    }

    pub fn decode_bit(&mut self, model: &mut BitModel) -> bool {
        let bound = (self.range / model.total()) * model.ones;
        let bit = self.code.wrapping_sub(self.low) < bound;
        if bit {
            self.range = bound;
        } else {
            self.low = self.low.wrapping_add(bound);
            self.range -= bound;
        }
        self.normalize();
        model.update(bit);
        bit
    }

    fn normalize(&mut self) {
        loop {
            if (self.low ^ self.low.wrapping_add(self.range)) >= TOP {
                if self.range >= BOT {
                    break;
                }
                self.range = self.low.wrapping_neg() & (BOT - 1);
            }
            self.code = (self.code << 8) | self.next_byte();
            self.low <<= 8;
            self.range <<= 8;
        }
    }

    /// Bytes consumed so far, including the 4-byte priming read.
    pub fn consumed(&self) -> usize {
        self.pos.min(self.input.len())
    }

    /// True once the decoder has had to fabricate padding past the input.
    /// A stream produced by [`RangeEncoder`] is consumed exactly, so an
    /// overrun means the stream is truncated or forged.
    pub fn overran(&self) -> bool {
        self.pos > self.input.len()
    }
}
