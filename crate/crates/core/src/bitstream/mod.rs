//! Bit-granular reader and writer, plus the primitive field encodings the
//! bytecode is built from.
//!
//! Bits are packed MSB-first: the first bit written lands in bit 7 of byte 0.
//! Multi-bit fields are also written most significant bit first, so a hex
//! dump of a payload reads left to right in the same order as the fields.

mod f16;

pub use self::f16::F16;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BitError {
    #[error("value {value} does not fit in {count} bits")]
    ValueOutOfRange { value: u64, count: u32 },
    #[error("bit count {0} is outside 1..=64")]
    BadCount(u32),
    #[error("integer operand {0} is outside the 32-bit range")]
    IntOutOfRange(i64),
    #[error(
        "bit stream exhausted: needed {needed} bits at offset {offset}, {available} available"
    )]
    Truncated {
        offset: usize,
        needed: usize,
        available: usize,
    },
    #[error("extensible integer overflows 64 bits")]
    Overflow,
}

/// Append-only bit sequence.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BitWriter {
    bytes: Vec<u8>,
    len: usize,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of bits written so far.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn write_bit(&mut self, bit: bool) {
        let shift = 7 - (self.len % 8);
        if shift == 7 {
            self.bytes.push(0);
        }
        if bit {
            *self.bytes.last_mut().expect("byte pushed above") |= 1 << shift;
        }
        self.len += 1;
    }

    /// Appends the low `count` bits of `value`, most significant first.
    pub fn write_bits(&mut self, value: u64, count: u32) -> Result<(), BitError> {
        if count == 0 || count > 64 {
            return Err(BitError::BadCount(count));
        }
        if count < 64 && value >> count != 0 {
            return Err(BitError::ValueOutOfRange { value, count });
        }
        for i in (0..count).rev() {
            self.write_bit((value >> i) & 1 == 1);
        }
        Ok(())
    }

    /// Copies every bit of `other` onto the end of this stream.
    pub fn append(&mut self, other: &BitWriter) {
        for bit in other.bits() {
            self.write_bit(bit);
        }
    }

    pub fn bits(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.bytes[i / 8] >> (7 - i % 8) & 1 == 1)
    }

    /// Bits rendered as a string of '0' and '1'.
    pub fn to_bit_string(&self) -> String {
        self.bits().map(|b| if b { '1' } else { '0' }).collect()
    }

    /// Bytes written so far. A partial last byte has its unused low bits zero.
    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }
}

/// Consume-only cursor over a byte slice.
#[derive(Debug, Clone)]
pub struct BitReader<'a> {
    bytes: &'a [u8],
    len: usize,
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        Self::with_len(bytes, bytes.len() * 8)
    }

    /// Reader limited to the first `len` bits of `bytes`.
    pub fn with_len(bytes: &'a [u8], len: usize) -> Self {
        assert!(len <= bytes.len() * 8, "bit length exceeds buffer");
        BitReader { bytes, len, pos: 0 }
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.len - self.pos
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    fn ensure(&self, needed: usize) -> Result<(), BitError> {
        if self.remaining() < needed {
            return Err(BitError::Truncated {
                offset: self.pos,
                needed,
                available: self.remaining(),
            });
        }
        Ok(())
    }

    pub fn read_bit(&mut self) -> Result<bool, BitError> {
        self.ensure(1)?;
        let bit = self.bytes[self.pos / 8] >> (7 - self.pos % 8) & 1 == 1;
        self.pos += 1;
        Ok(bit)
    }

    pub fn read_bits(&mut self, count: u32) -> Result<u64, BitError> {
        if count == 0 || count > 64 {
            return Err(BitError::BadCount(count));
        }
        self.ensure(count as usize)?;
        let mut value = 0u64;
        for _ in 0..count {
            value = (value << 1) | u64::from(self.read_bit()?);
        }
        Ok(value)
    }
}

/// Chunk width for the dialect header.
pub const DIALECT_WIDTH: u32 = 3;
/// Chunk width for string dimensions, references and relative jumps.
pub const FIELD_WIDTH: u32 = 4;

/// Number of bits `encode_ext_uint` emits for `value` at `width`.
pub fn ext_uint_len(value: u64, width: u32) -> usize {
    let saturated = (1u64 << width) - 1;
    width as usize * (value / saturated + 1) as usize
}

/// Writes `value` as a chain of `width`-bit chunks. Every all-ones chunk adds
/// `2^width - 1` and announces another chunk; the first chunk that is not all
/// ones ends the chain. The decoded value is the sum of the chunks.
pub fn encode_ext_uint(out: &mut BitWriter, value: u64, width: u32) {
    assert!((1..=16).contains(&width), "chunk width out of range");
    let saturated = (1u64 << width) - 1;
    let mut rest = value;
    while rest >= saturated {
        out.write_bits(saturated, width)
            .expect("chunk fits its width");
        rest -= saturated;
    }
    out.write_bits(rest, width).expect("chunk fits its width");
}

pub fn decode_ext_uint(reader: &mut BitReader<'_>, width: u32) -> Result<u64, BitError> {
    assert!((1..=16).contains(&width), "chunk width out of range");
    let saturated = (1u64 << width) - 1;
    let mut total = 0u64;
    loop {
        let chunk = reader.read_bits(width)?;
        total = total.checked_add(chunk).ok_or(BitError::Overflow)?;
        if chunk != saturated {
            return Ok(total);
        }
    }
}

/// Whether `value` uses the short (16-bit) integer operand form.
pub fn fits_short_int(value: i32) -> bool {
    i16::try_from(value).is_ok()
}

/// Bits taken by an integer operand including its width selector.
pub fn int_operand_len(value: i32) -> usize {
    if fits_short_int(value) {
        17
    } else {
        33
    }
}

/// One selector bit (0 = 16 bits, 1 = 32 bits) followed by the value in two's
/// complement, always in the narrowest width that holds it.
pub fn encode_int_operand(out: &mut BitWriter, value: i64) -> Result<(), BitError> {
    let value = i32::try_from(value).map_err(|_| BitError::IntOutOfRange(value))?;
    if fits_short_int(value) {
        out.write_bit(false);
        out.write_bits(u64::from(value as i16 as u16), 16)
    } else {
        out.write_bit(true);
        out.write_bits(u64::from(value as u32), 32)
    }
}

pub fn decode_int_operand(reader: &mut BitReader<'_>) -> Result<i32, BitError> {
    if reader.read_bit()? {
        Ok(reader.read_bits(32)? as u32 as i32)
    } else {
        Ok(i32::from(reader.read_bits(16)? as u16 as i16))
    }
}

pub fn encode_half_float(out: &mut BitWriter, value: F16) {
    out.write_bits(u64::from(value.to_bits()), 16)
        .expect("16-bit pattern");
}

pub fn decode_half_float(reader: &mut BitReader<'_>) -> Result<F16, BitError> {
    Ok(F16::from_bits(reader.read_bits(16)? as u16))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits_of(f: impl FnOnce(&mut BitWriter)) -> String {
        let mut w = BitWriter::new();
        f(&mut w);
        w.to_bit_string()
    }

    #[test]
    fn write_bits_examples() {
        assert_eq!(bits_of(|w| w.write_bits(5, 3).unwrap()), "101");
        assert_eq!(bits_of(|w| w.write_bits(0, 1).unwrap()), "0");
        assert_eq!(
            bits_of(|w| {
                w.write_bits(5, 3).unwrap();
                w.write_bits(0, 4).unwrap();
            }),
            "1010000"
        );
    }

    #[test]
    fn write_bits_rejects_out_of_range() {
        let mut w = BitWriter::new();
        assert_eq!(
            w.write_bits(8, 3),
            Err(BitError::ValueOutOfRange { value: 8, count: 3 })
        );
        assert_eq!(w.write_bits(0, 0), Err(BitError::BadCount(0)));
        assert!(w.is_empty());
    }

    #[test]
    fn packing_is_msb_first() {
        let mut w = BitWriter::new();
        w.write_bits(0b101, 3).unwrap();
        w.write_bits(0b11110, 5).unwrap();
        w.write_bit(true);
        assert_eq!(w.as_bytes(), &[0b1011_1110, 0b1000_0000]);
        assert_eq!(w.len(), 9);
    }

    #[test]
    fn ext_uint_examples() {
        assert_eq!(bits_of(|w| encode_ext_uint(w, 5, 4)), "0101");
        assert_eq!(bits_of(|w| encode_ext_uint(w, 15, 4)), "11110000");
        assert_eq!(bits_of(|w| encode_ext_uint(w, 20, 4)), "11110101");
        assert_eq!(bits_of(|w| encode_ext_uint(w, 7, 3)), "111000");
    }

    #[test]
    fn ext_uint_decode_examples() {
        let mut r = BitReader::with_len(&[0x00], 4);
        assert_eq!(decode_ext_uint(&mut r, 4).unwrap(), 0);
        let mut r = BitReader::new(&[0b1111_0101]);
        assert_eq!(decode_ext_uint(&mut r, 4).unwrap(), 20);
        assert_eq!(r.remaining(), 0);
        let mut r = BitReader::with_len(&[0b1110_0000], 4);
        assert_eq!(decode_ext_uint(&mut r, 4).unwrap(), 14);
    }

    #[test]
    fn ext_uint_truncated_mid_chain() {
        let mut r = BitReader::with_len(&[0b1111_0100], 6);
        assert!(matches!(
            decode_ext_uint(&mut r, 4),
            Err(BitError::Truncated { offset: 4, .. })
        ));
    }

    #[test]
    fn int_operand_examples() {
        assert_eq!(
            bits_of(|w| encode_int_operand(w, 100).unwrap()),
            "00000000001100100"
        );
        assert_eq!(
            bits_of(|w| encode_int_operand(w, -1).unwrap()),
            "01111111111111111"
        );
        assert_eq!(
            bits_of(|w| encode_int_operand(w, 70000).unwrap()),
            "100000000000000010001000101110000"
        );
        assert_eq!(
            bits_of(|w| encode_int_operand(w, -32768).unwrap()).len(),
            17
        );
        assert_eq!(bits_of(|w| encode_int_operand(w, 32768).unwrap()).len(), 33);
    }

    #[test]
    fn int_operand_range() {
        let mut w = BitWriter::new();
        assert_eq!(
            encode_int_operand(&mut w, 1 << 31),
            Err(BitError::IntOutOfRange(1 << 31))
        );
        assert!(encode_int_operand(&mut w, -(1 << 31)).is_ok());
    }
}
