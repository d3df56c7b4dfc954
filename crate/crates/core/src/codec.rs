//! Program <-> bytecode payload.
//!
//! ## Layout
//!
//! ```text
//! payload     := dialect:ext3 instruction* padding
//! input       := 000 constant          inputs  := 001 constant
//! print       := 010 constant          printex := 011 constant
//! goto        := 100 jump:ext4
//! if          := 101 constant jump:ext4
//! ifc         := 110 rel_op:3 operand jump:ext4
//! constant    := 0 string | 1 reference:ext4
//! string      := stype:1(=0) length:ext4 char:7*
//! operand     := 0 int | 1 half:16
//! int         := 0 i16 | 1 i32
//! padding     := prefix of 1000000 up to the next byte boundary
//! ```
//!
//! `extN` is the chained N-bit unsigned integer of [`crate::bitstream`].
//! `jump` counts instructions skipped after the next one, so 0 continues at
//! the following instruction.
//!
//! Padding either is too short to hold an instruction, or reads as a `goto`
//! to the instruction after it. Both decode to nothing.

use serde::Serialize;
use thiserror::Error;

use crate::bitstream::{
    decode_ext_uint, decode_half_float, decode_int_operand, encode_ext_uint, encode_half_float,
    encode_int_operand, ext_uint_len, int_operand_len, BitError, BitReader, BitWriter,
    DIALECT_WIDTH, FIELD_WIDTH,
};
use crate::ir::{Constant, InvalidProgram, Opcode, Operand, Program, Quadruple, RelOp};
use crate::qrio::{self, EcLevel};

/// Dialect selected by the payload's leading bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct DialectId(pub u64);

impl DialectId {
    /// Decision-tree dialect, the only one this crate executes.
    pub const DECISION_TREE: DialectId = DialectId(0);
}

/// Raw bytecode bytes as stored in a QR symbol or a `.qrb` file.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Payload(pub Vec<u8>);

impl Payload {
    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.0
    }
}

impl From<Vec<u8>> for Payload {
    fn from(bytes: Vec<u8>) -> Self {
        Payload(bytes)
    }
}

/// Bits appended to reach a byte boundary are taken from the front of this.
pub const PADDING_PATTERN: u8 = 0b100_0000;

/// Upper bound on any single encoded field. Nothing longer fits a QR symbol,
/// and the bound keeps huge reference numbers from exhausting memory.
pub const MAX_FIELD_BITS: usize = qrio::MAX_PAYLOAD_BYTES * 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("unsupported dialect {0}")]
    UnsupportedDialect(u64),
    #[error(transparent)]
    InvalidProgram(#[from] InvalidProgram),
    #[error("instruction ({index}): {message}")]
    Encoding { index: usize, message: String },
    #[error("empty payload")]
    Empty,
    #[error("reserved opcode 111 at bit {offset}")]
    ReservedOpcode { offset: usize },
    #[error("reserved string type at bit {offset}")]
    ReservedStringType { offset: usize },
    #[error("invalid relational operator code {code:03b} at bit {offset}")]
    BadRelOp { code: u8, offset: usize },
    #[error("malformed payload at bit {offset}: {message}")]
    Malformed { offset: usize, message: String },
}

impl CodecError {
    fn malformed(offset: usize, err: impl std::fmt::Display) -> Self {
        CodecError::Malformed {
            offset,
            message: err.to_string(),
        }
    }
}

fn field_guard(index: usize, value: u64) -> Result<(), CodecError> {
    if ext_uint_len(value, FIELD_WIDTH) > MAX_FIELD_BITS {
        return Err(CodecError::Encoding {
            index,
            message: format!("value {value} is too large to encode"),
        });
    }
    Ok(())
}

fn write_constant(
    out: &mut BitWriter,
    index: usize,
    constant: &Constant,
) -> Result<(), CodecError> {
    match constant {
        Constant::Text(text) => {
            out.write_bit(false);
            out.write_bit(false); // stype: 7-bit string
            field_guard(index, text.len() as u64)?;
            encode_ext_uint(out, text.len() as u64, FIELD_WIDTH);
            for c in text.chars() {
                if !c.is_ascii() {
                    return Err(CodecError::Encoding {
                        index,
                        message: format!("character {c:?} is not 7-bit"),
                    });
                }
                out.write_bits(c as u64, 7).expect("ascii fits 7 bits");
            }
        }
        Constant::Reference(n) => {
            out.write_bit(true);
            field_guard(index, u64::from(*n))?;
            encode_ext_uint(out, u64::from(*n), FIELD_WIDTH);
        }
    }
    Ok(())
}

/// Encodes a single instruction located at `index` (1-based).
pub fn encode_instruction(
    out: &mut BitWriter,
    index: usize,
    quad: &Quadruple,
) -> Result<(), CodecError> {
    let missing = |what: &str| CodecError::Encoding {
        index,
        message: format!("missing {what}"),
    };
    out.write_bits(u64::from(quad.opcode.code()), 3)
        .expect("opcode fits 3 bits");
    match quad.opcode {
        Opcode::Input | Opcode::Inputs | Opcode::Print | Opcode::PrintEx | Opcode::If => {
            let constant = quad.constant.as_ref().ok_or_else(|| missing("constant"))?;
            write_constant(out, index, constant)?;
        }
        Opcode::Ifc => {
            let rel_op = quad.rel_op.ok_or_else(|| missing("relational operator"))?;
            out.write_bits(u64::from(rel_op.code()), 3)
                .expect("rel_op fits 3 bits");
            match quad.operand.ok_or_else(|| missing("operand"))? {
                Operand::Int(v) => {
                    out.write_bit(false);
                    encode_int_operand(out, i64::from(v)).expect("i32 always in range");
                }
                Operand::Float(v) => {
                    out.write_bit(true);
                    encode_half_float(out, v);
                }
            }
        }
        Opcode::Goto => {}
    }
    if quad.opcode.takes_target() {
        let target = quad.target.ok_or_else(|| missing("target"))?;
        let skip = target.checked_sub(index + 1).ok_or(CodecError::Encoding {
            index,
            message: format!("backward jump to ({target})"),
        })? as u64;
        field_guard(index, skip)?;
        encode_ext_uint(out, skip, FIELD_WIDTH);
    }
    Ok(())
}

/// Header and instructions without padding.
pub fn encode_bits(program: &Program, dialect: DialectId) -> Result<BitWriter, CodecError> {
    if dialect != DialectId::DECISION_TREE {
        return Err(CodecError::UnsupportedDialect(dialect.0));
    }
    program.check()?;
    let mut out = BitWriter::new();
    encode_ext_uint(&mut out, dialect.0, DIALECT_WIDTH);
    for (index, quad) in program.iter() {
        encode_instruction(&mut out, index, quad)?;
    }
    Ok(out)
}

/// Appends the leading bits of `1000000` until `bits` is byte-aligned.
pub fn pad(bits: &mut BitWriter) {
    let missing = (8 - bits.len() % 8) % 8;
    if missing > 0 {
        bits.write_bits(u64::from(PADDING_PATTERN >> (7 - missing)), missing as u32)
            .expect("padding fits");
    }
}

pub fn encode_program(program: &Program, dialect: DialectId) -> Result<Payload, CodecError> {
    let mut bits = encode_bits(program, dialect)?;
    pad(&mut bits);
    Ok(Payload(bits.into_bytes()))
}

fn read_constant(r: &mut BitReader<'_>) -> Result<Constant, DecodeStop> {
    if r.read_bit()? {
        let n = decode_ext_uint(r, FIELD_WIDTH)?;
        let n = u32::try_from(n).map_err(|_| {
            DecodeStop::Fatal(CodecError::malformed(
                r.position(),
                "reference exceeds 32 bits",
            ))
        })?;
        return Ok(Constant::Reference(n));
    }
    let stype_at = r.position();
    if r.read_bit()? {
        return Err(DecodeStop::Fatal(CodecError::ReservedStringType {
            offset: stype_at,
        }));
    }
    let len = decode_ext_uint(r, FIELD_WIDTH)?;
    let body_at = r.position();
    let body_bits = len.checked_mul(7).filter(|&b| b <= r.remaining() as u64);
    if body_bits.is_none() {
        return Err(DecodeStop::Fatal(CodecError::malformed(
            body_at,
            format!("string of {len} characters runs past the end"),
        )));
    }
    let text = (0..len)
        .map(|_| r.read_bits(7).map(|c| char::from(c as u8)))
        .collect::<Result<String, _>>()?;
    Ok(Constant::Text(text))
}

/// Why decoding of one instruction stopped early.
enum DecodeStop {
    /// The stream ended inside the instruction.
    Truncated(BitError),
    Fatal(CodecError),
}

impl From<BitError> for DecodeStop {
    fn from(e: BitError) -> Self {
        match e {
            BitError::Truncated { .. } => DecodeStop::Truncated(e),
            other => DecodeStop::Fatal(CodecError::malformed(0, other)),
        }
    }
}

fn read_target(r: &mut BitReader<'_>, index: usize) -> Result<usize, DecodeStop> {
    let skip = decode_ext_uint(r, FIELD_WIDTH)?;
    usize::try_from(skip)
        .ok()
        .and_then(|s| s.checked_add(index + 1))
        .ok_or_else(|| DecodeStop::Fatal(CodecError::malformed(r.position(), "jump too large")))
}

fn read_instruction(r: &mut BitReader<'_>, index: usize) -> Result<Quadruple, DecodeStop> {
    let at = r.position();
    let code = r.read_bits(3)? as u8;
    let opcode = Opcode::from_code(code)
        .ok_or(DecodeStop::Fatal(CodecError::ReservedOpcode { offset: at }))?;
    Ok(match opcode {
        Opcode::Input => Quadruple::input(read_constant(r)?),
        Opcode::Inputs => Quadruple::inputs(read_constant(r)?),
        Opcode::Print => Quadruple::print(read_constant(r)?),
        Opcode::PrintEx => Quadruple::printex(read_constant(r)?),
        Opcode::Goto => Quadruple::goto(read_target(r, index)?),
        Opcode::If => {
            let constant = read_constant(r)?;
            Quadruple::if_match(constant, read_target(r, index)?)
        }
        Opcode::Ifc => {
            let rel_at = r.position();
            let code = r.read_bits(3)? as u8;
            let rel_op = RelOp::from_code(code).ok_or(DecodeStop::Fatal(CodecError::BadRelOp {
                code,
                offset: rel_at,
            }))?;
            let operand = if r.read_bit()? {
                Operand::Float(decode_half_float(r)?)
            } else {
                Operand::Int(decode_int_operand(r)?)
            };
            Quadruple::ifc(rel_op, operand, read_target(r, index)?)
        }
    })
}

/// Bits at the end of a stream that may be padding.
const PADDING_WINDOW: usize = 7;

/// Reads the dialect header and, for the decision-tree dialect, every
/// instruction. Trailing bits that cannot form an instruction, and a final
/// `goto` to the next instruction lying wholly inside the last 7 bits, are
/// taken as padding and dropped.
pub fn decode_payload(payload: &Payload) -> Result<(DialectId, Program), CodecError> {
    if payload.is_empty() {
        return Err(CodecError::Empty);
    }
    let mut r = BitReader::new(payload.as_bytes());
    let dialect =
        decode_ext_uint(&mut r, DIALECT_WIDTH).map_err(|e| CodecError::malformed(0, e))?;
    if dialect != DialectId::DECISION_TREE.0 {
        return Err(CodecError::UnsupportedDialect(dialect));
    }

    let total = r.len();
    let mut program = Program::default();
    while r.remaining() > 0 {
        let start = r.position();
        let index = program.len() + 1;
        match read_instruction(&mut r, index) {
            Ok(quad) => {
                let is_padding = quad.opcode == Opcode::Goto
                    && quad.target == Some(index + 1)
                    && r.remaining() == 0
                    && total - start <= PADDING_WINDOW;
                if !is_padding {
                    program.push(quad);
                }
            }
            Err(DecodeStop::Truncated(_)) if total - start <= PADDING_WINDOW => break,
            Err(DecodeStop::Truncated(e)) => return Err(CodecError::malformed(start, e)),
            Err(DecodeStop::Fatal(e)) => return Err(e),
        }
    }

    program.check().map_err(|e| CodecError::Malformed {
        offset: total,
        message: e.to_string(),
    })?;
    Ok((DialectId(dialect), program))
}

/// Bits needed for one instruction.
pub fn instruction_bits(quad: &Quadruple) -> usize {
    let constant_bits = |c: &Constant| match c {
        Constant::Text(t) => 2 + ext_uint_len(t.len() as u64, FIELD_WIDTH) + 7 * t.len(),
        Constant::Reference(n) => 1 + ext_uint_len(u64::from(*n), FIELD_WIDTH),
    };
    let mut bits = 3;
    if let Some(c) = &quad.constant {
        bits += constant_bits(c);
    }
    if quad.rel_op.is_some() {
        bits += 3;
    }
    match quad.operand {
        Some(Operand::Int(v)) => bits += 1 + int_operand_len(v),
        Some(Operand::Float(_)) => bits += 1 + 16,
        None => {}
    }
    bits
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CapacityRow {
    pub version: u8,
    pub ec_level: EcLevel,
    pub capacity_bytes: usize,
    /// Capacity minus payload size; negative when the payload does not fit.
    pub remaining_bytes: i64,
}

impl CapacityRow {
    pub fn fits(&self) -> bool {
        self.remaining_bytes >= 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SizeReport {
    pub header_bits: usize,
    /// Bits per instruction, in program order.
    pub instruction_bits: Vec<usize>,
    /// Header plus instructions, before padding.
    pub total_bits: usize,
    pub padding_bits: usize,
    pub padded_bytes: usize,
    pub capacity: Vec<CapacityRow>,
}

impl SizeReport {
    /// Smallest version that holds the payload at `ec`.
    pub fn smallest_version(&self, ec: EcLevel) -> Option<u8> {
        self.capacity
            .iter()
            .filter(|row| row.ec_level == ec && row.fits())
            .map(|row| row.version)
            .min()
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "instructions: {}\nbits: {} header + {} code = {}\npadding: {} bits\npayload: {} bytes\n",
            self.instruction_bits.len(),
            self.header_bits,
            self.total_bits - self.header_bits,
            self.total_bits,
            self.padding_bits,
            self.padded_bytes,
        );
        for ec in EcLevel::ALL {
            match self.smallest_version(ec) {
                Some(v) => {
                    let row = self
                        .capacity
                        .iter()
                        .find(|r| r.version == v && r.ec_level == ec)
                        .expect("row exists");
                    out.push_str(&format!(
                        "QR {ec}: version {v} ({} of {} bytes free)\n",
                        row.remaining_bytes, row.capacity_bytes
                    ));
                }
                None => out.push_str(&format!("QR {ec}: does not fit any version\n")),
            }
        }
        out
    }
}

/// Size of `program` once encoded, plus its fit against every QR version and
/// error-correction level.
pub fn measure(program: &Program) -> SizeReport {
    let header_bits = ext_uint_len(DialectId::DECISION_TREE.0, DIALECT_WIDTH);
    let instruction_bits: Vec<usize> = program
        .iter()
        .map(|(index, quad)| {
            let jump = quad.target.map_or(0, |t| {
                ext_uint_len(t.saturating_sub(index + 1) as u64, FIELD_WIDTH)
            });
            instruction_bits(quad) + jump
        })
        .collect();
    let total_bits = header_bits + instruction_bits.iter().sum::<usize>();
    let padded_bytes = total_bits.div_ceil(8);
    let capacity = qrio::capacity_table()
        .map(|(version, ec_level, capacity_bytes)| CapacityRow {
            version,
            ec_level,
            capacity_bytes,
            remaining_bytes: capacity_bytes as i64 - padded_bytes as i64,
        })
        .collect();
    SizeReport {
        header_bits,
        instruction_bits,
        total_bits,
        padding_bits: padded_bytes * 8 - total_bits,
        padded_bytes,
        capacity,
    }
}
