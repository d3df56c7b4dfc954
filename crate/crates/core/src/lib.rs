//! Toolchain for compact decision-tree programs carried in QR codes.
//!
//! Source text is compiled by [`frontend`] to the three-address form in
//! [`ir`], packed into a bit-level payload by [`codec`] (built on
//! [`bitstream`]), carried in a QR symbol by [`qrio`], and executed
//! interactively by [`vm`].

pub mod bitstream;
pub mod codec;
pub mod frontend;
pub mod fuzz;
pub mod ir;
pub mod qrio;
pub mod samples;
pub mod vm;

pub use codec::{decode_payload, encode_program, CodecError, DialectId, Payload};
pub use frontend::{compile_source, CompileError};
pub use ir::{Program, Quadruple};
pub use vm::{ReferenceTable, Session, SessionEvent, SessionState};
