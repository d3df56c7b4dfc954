use std::cmp::Ordering;
use std::fmt;

/// IEEE 754 binary16 value stored as its bit pattern.
///
/// Equality is bitwise, so `+0` and `-0` differ and a NaN equals itself.
/// Use [`F16::partial_cmp_value`] for numeric comparison.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct F16(u16);

const SIGN_MASK: u16 = 0x8000;
const EXP_MASK: u16 = 0x7C00;
const MANT_MASK: u16 = 0x03FF;

impl F16 {
    /// Pattern every NaN input encodes to.
    pub const NAN: F16 = F16(0x7E00);
    pub const INFINITY: F16 = F16(0x7C00);
    pub const NEG_INFINITY: F16 = F16(0xFC00);
    pub const MAX: F16 = F16(0x7BFF);
    pub const ZERO: F16 = F16(0);

    pub const fn from_bits(bits: u16) -> Self {
        F16(bits)
    }

    pub const fn to_bits(self) -> u16 {
        self.0
    }

    pub fn is_nan(self) -> bool {
        self.0 & EXP_MASK == EXP_MASK && self.0 & MANT_MASK != 0
    }

    pub fn from_f32(value: f32) -> Self {
        Self::from_f64(f64::from(value))
    }

    /// Rounds to nearest, ties to even. Magnitudes past the largest finite
    /// half round to infinity; NaN becomes [`F16::NAN`].
    pub fn from_f64(value: f64) -> Self {
        let bits = value.to_bits();
        let sign = ((bits >> 48) as u16) & SIGN_MASK;
        let exp = ((bits >> 52) & 0x7FF) as i32;
        let mant = bits & ((1u64 << 52) - 1);

        if exp == 0x7FF {
            return if mant == 0 {
                F16(sign | EXP_MASK)
            } else {
                F16::NAN
            };
        }
        if exp == 0 {
            // f64 subnormals are far below the smallest half subnormal.
            return F16(sign);
        }

        let unbiased = exp - 1023;
        if unbiased > 15 {
            return F16(sign | EXP_MASK);
        }

        let significand = mant | (1u64 << 52);
        let magnitude = if unbiased >= -14 {
            // Normal range: keep 10 of the 52 fraction bits. A carry out of the
            // fraction bumps the exponent, and past exponent 30 lands on inf.
            let biased = (unbiased + 15) as u64;
            round_shift(mant, 42) + (biased << 10)
        } else {
            // Subnormal range: count units of 2^-24.
            let shift = (28 - unbiased) as u32;
            if shift >= 64 {
                0
            } else {
                round_shift(significand, shift)
            }
        };
        F16(sign | magnitude as u16)
    }

    pub fn to_f32(self) -> f32 {
        self.to_f64() as f32
    }

    pub fn to_f64(self) -> f64 {
        let negative = self.0 & SIGN_MASK != 0;
        let exp = i32::from((self.0 & EXP_MASK) >> 10);
        let mant = f64::from(self.0 & MANT_MASK);
        let magnitude = match exp {
            0 => mant * 2f64.powi(-24),
            31 if mant == 0.0 => f64::INFINITY,
            31 => f64::NAN,
            _ => (1.0 + mant / 1024.0) * 2f64.powi(exp - 15),
        };
        if negative {
            -magnitude
        } else {
            magnitude
        }
    }

    /// Numeric ordering; `None` when either side is NaN.
    pub fn partial_cmp_value(self, other: F16) -> Option<Ordering> {
        self.to_f64().partial_cmp(&other.to_f64())
    }
}

/// `value >> shift` rounded to nearest, ties to even.
fn round_shift(value: u64, shift: u32) -> u64 {
    let kept = value >> shift;
    let rest = value & ((1u64 << shift) - 1);
    let half = 1u64 << (shift - 1);
    if rest > half || (rest == half && kept & 1 == 1) {
        kept + 1
    } else {
        kept
    }
}

impl fmt::Debug for F16 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F16({:?} = {:#06x})", self.to_f32(), self.0)
    }
}

/// Formats so that the text always reads back as a float: a decimal point or
/// exponent is always present, and non-finite values print as `inf`, `-inf`,
/// `nan`.
impl fmt::Display for F16 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = self.to_f32();
        if v.is_nan() {
            f.write_str("nan")
        } else if v.is_infinite() {
            f.write_str(if v > 0.0 { "inf" } else { "-inf" })
        } else {
            write!(f, "{v:?}")
        }
    }
}

impl From<F16> for f32 {
    fn from(value: F16) -> Self {
        value.to_f32()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(F16::from_f32(0.0).to_bits(), 0x0000);
        assert_eq!(F16::from_f32(3.5).to_bits(), 0x4300);
        assert_eq!(F16::from_f32(1.0).to_bits(), 0x3C00);
        assert_eq!(F16::from_f32(-2.0).to_bits(), 0xC000);
        assert_eq!(F16::from_f32(65504.0).to_bits(), 0x7BFF);
        assert_eq!(F16::from_f32(-0.0).to_bits(), 0x8000);
    }

    #[test]
    fn saturation_and_nan() {
        assert_eq!(F16::from_f32(65519.0), F16::MAX);
        assert_eq!(F16::from_f32(65520.0), F16::INFINITY);
        assert_eq!(F16::from_f32(1e9), F16::INFINITY);
        assert_eq!(F16::from_f32(-1e9), F16::NEG_INFINITY);
        assert_eq!(F16::from_f32(f32::NAN), F16::NAN);
        assert!(F16::from_bits(0xFC01).is_nan());
        assert!(F16::from_bits(0xFC01).to_f32().is_nan());
    }

    #[test]
    fn ties_to_even() {
        // 1 + 2^-11 sits halfway between 1.0 and the next half; even wins.
        assert_eq!(F16::from_f64(1.0 + 2f64.powi(-11)).to_bits(), 0x3C00);
        // 1 + 3 * 2^-11 is halfway between odd 0x3C01 and even 0x3C02.
        assert_eq!(F16::from_f64(1.0 + 3.0 * 2f64.powi(-11)).to_bits(), 0x3C02);
        // Smallest subnormal is 2^-24; half of it rounds to zero, a bit more rounds up.
        assert_eq!(F16::from_f64(2f64.powi(-25)).to_bits(), 0);
        assert_eq!(F16::from_f64(2f64.powi(-25) * 1.0001).to_bits(), 1);
        // Largest subnormal rounding up into the smallest normal.
        assert_eq!(
            F16::from_f64(2f64.powi(-14) * (1.0 - 2f64.powi(-12))).to_bits(),
            0x0400
        );
    }

    #[test]
    fn display_reads_back_as_float() {
        assert_eq!(F16::from_f32(3.5).to_string(), "3.5");
        assert_eq!(F16::from_f32(1.0).to_string(), "1.0");
        assert_eq!(F16::INFINITY.to_string(), "inf");
        let tiny = F16::from_bits(1).to_string();
        assert!(tiny.contains('e') || tiny.contains('.'), "{tiny}");
    }
}
