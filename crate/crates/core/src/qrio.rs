//! QR symbols carrying a payload in byte mode.
//!
//! Symbol construction and recognition are delegated to the `qrcode` and
//! `rqrr` crates. This module owns the capacity policy (which version and
//! error-correction level a payload needs) and guarantees the bytes read
//! back are exactly the bytes written.

use std::fmt;
use std::io::Cursor;
use std::str::FromStr;

use image::{GrayImage, ImageFormat, Luma};
use qrcode::bits::Bits;
use qrcode::QrCode;
use serde::Serialize;
use thiserror::Error;

use crate::codec::Payload;

/// Largest byte-mode payload any symbol holds (version 40, level L).
pub const MAX_PAYLOAD_BYTES: usize = 2953;

/// Pixels per module in rendered images.
pub const MODULE_PIXELS: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum EcLevel {
    L,
    M,
    Q,
    H,
}

impl EcLevel {
    pub const ALL: [EcLevel; 4] = [EcLevel::L, EcLevel::M, EcLevel::Q, EcLevel::H];

    fn column(self) -> usize {
        self as usize
    }

    fn to_qrcode(self) -> qrcode::EcLevel {
        match self {
            EcLevel::L => qrcode::EcLevel::L,
            EcLevel::M => qrcode::EcLevel::M,
            EcLevel::Q => qrcode::EcLevel::Q,
            EcLevel::H => qrcode::EcLevel::H,
        }
    }
}

impl fmt::Display for EcLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for EcLevel {
    type Err = QrError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "L" => Ok(EcLevel::L),
            "M" => Ok(EcLevel::M),
            "Q" => Ok(EcLevel::Q),
            "H" => Ok(EcLevel::H),
            _ => Err(QrError::BadConfig(format!(
                "unknown error-correction level `{s}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VersionChoice {
    /// Smallest version that fits.
    #[default]
    Auto,
    Fixed(u8),
}

impl FromStr for VersionChoice {
    type Err = QrError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(VersionChoice::Auto);
        }
        match s.parse::<u8>() {
            Ok(v @ 1..=40) => Ok(VersionChoice::Fixed(v)),
            _ => Err(QrError::BadConfig(format!(
                "version must be 1..=40 or auto, got `{s}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QrConfig {
    pub version: VersionChoice,
    pub ec_level: EcLevel,
}

impl Default for QrConfig {
    fn default() -> Self {
        QrConfig {
            version: VersionChoice::Auto,
            ec_level: EcLevel::L,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QrError {
    #[error(
        "payload of {len} bytes exceeds the {limit}-byte capacity of version {version}-{ec_level}"
    )]
    Capacity {
        len: usize,
        limit: usize,
        version: u8,
        ec_level: EcLevel,
    },
    #[error("{0}")]
    BadConfig(String),
    #[error("no QR symbol found in image")]
    NotFound,
    #[error("QR symbol could not be decoded: {0}")]
    Unreadable(String),
    #[error("image error: {0}")]
    Image(String),
    #[error("QR encoder error: {0}")]
    Encoder(String),
}

/// Byte-mode capacity per version (row) and level L, M, Q, H (column).
const BYTE_CAPACITY: [[u16; 4]; 40] = [
    [17, 14, 11, 7],          // 1
    [32, 26, 20, 14],         // 2
    [53, 42, 32, 24],         // 3
    [78, 62, 46, 34],         // 4
    [106, 84, 60, 44],        // 5
    [134, 106, 74, 58],       // 6
    [154, 122, 86, 64],       // 7
    [192, 152, 108, 84],      // 8
    [230, 180, 130, 98],      // 9
    [271, 213, 151, 119],     // 10
    [321, 251, 177, 137],     // 11
    [367, 287, 203, 155],     // 12
    [425, 331, 241, 177],     // 13
    [458, 362, 258, 194],     // 14
    [520, 412, 292, 220],     // 15
    [586, 450, 322, 250],     // 16
    [644, 504, 364, 280],     // 17
    [718, 560, 394, 310],     // 18
    [792, 624, 442, 338],     // 19
    [858, 666, 482, 382],     // 20
    [929, 711, 509, 403],     // 21
    [1003, 779, 565, 439],    // 22
    [1091, 857, 611, 461],    // 23
    [1171, 911, 661, 511],    // 24
    [1273, 997, 715, 535],    // 25
    [1367, 1059, 751, 593],   // 26
    [1465, 1125, 805, 625],   // 27
    [1528, 1190, 868, 658],   // 28
    [1628, 1264, 908, 698],   // 29
    [1732, 1370, 982, 742],   // 30
    [1840, 1452, 1030, 790],  // 31
    [1952, 1538, 1112, 842],  // 32
    [2068, 1628, 1168, 898],  // 33
    [2188, 1722, 1228, 958],  // 34
    [2303, 1809, 1283, 983],  // 35
    [2431, 1911, 1351, 1051], // 36
    [2563, 1989, 1423, 1093], // 37
    [2699, 2099, 1499, 1139], // 38
    [2809, 2213, 1579, 1219], // 39
    [2953, 2331, 1663, 1273], // 40
];

/// Bytes a byte-mode symbol of `version` at `ec_level` holds.
pub fn capacity(version: u8, ec_level: EcLevel) -> Option<usize> {
    let row = BYTE_CAPACITY.get(usize::from(version).checked_sub(1)?)?;
    Some(usize::from(row[ec_level.column()]))
}

/// Every `(version, level, capacity)` entry, versions ascending.
pub fn capacity_table() -> impl Iterator<Item = (u8, EcLevel, usize)> {
    (1..=40u8).flat_map(|v| {
        EcLevel::ALL
            .into_iter()
            .map(move |ec| (v, ec, capacity(v, ec).unwrap()))
    })
}

/// Smallest version whose capacity at `ec_level` is at least `len` bytes.
pub fn smallest_version(len: usize, ec_level: EcLevel) -> Option<u8> {
    (1..=40u8).find(|&v| capacity(v, ec_level).is_some_and(|c| c >= len))
}

/// Version to use for `len` bytes under `config`, or the capacity error.
pub fn select_version(len: usize, config: &QrConfig) -> Result<u8, QrError> {
    let ec_level = config.ec_level;
    match config.version {
        VersionChoice::Auto => smallest_version(len, ec_level).ok_or(QrError::Capacity {
            len,
            limit: capacity(40, ec_level).unwrap(),
            version: 40,
            ec_level,
        }),
        VersionChoice::Fixed(version) => {
            let limit = capacity(version, ec_level)
                .ok_or_else(|| QrError::BadConfig(format!("version {version} is not 1..=40")))?;
            if len > limit {
                return Err(QrError::Capacity {
                    len,
                    limit,
                    version,
                    ec_level,
                });
            }
            Ok(version)
        }
    }
}

/// Builds the byte-mode symbol for `payload`.
pub fn payload_to_code(payload: &Payload, config: &QrConfig) -> Result<QrCode, QrError> {
    let version = select_version(payload.len(), config)?;
    let ec = config.ec_level.to_qrcode();
    let mut bits = Bits::new(qrcode::Version::Normal(i16::from(version)));
    let enc = |e: qrcode::types::QrError| QrError::Encoder(e.to_string());
    bits.push_byte_data(payload.as_bytes()).map_err(enc)?;
    bits.push_terminator(ec).map_err(enc)?;
    QrCode::with_bits(bits, ec).map_err(enc)
}

/// Renders `payload` as a grayscale QR image with a 4-module quiet zone.
pub fn payload_to_qr(payload: &Payload, config: &QrConfig) -> Result<GrayImage, QrError> {
    let code = payload_to_code(payload, config)?;
    Ok(code
        .render::<Luma<u8>>()
        .quiet_zone(true)
        .module_dimensions(MODULE_PIXELS, MODULE_PIXELS)
        .build())
}

/// Reads the byte content of the first decodable symbol in `image`.
pub fn qr_to_payload(image: &GrayImage) -> Result<Payload, QrError> {
    let mut prepared = rqrr::PreparedImage::prepare(image.clone());
    let grids = prepared.detect_grids();
    if grids.is_empty() {
        return Err(QrError::NotFound);
    }
    let mut last_err = None;
    for grid in grids {
        let mut bytes = Vec::new();
        match grid.decode_to(&mut bytes) {
            Ok(_) => return Ok(Payload(bytes)),
            Err(e) => last_err = Some(e.to_string()),
        }
    }
    Err(QrError::Unreadable(last_err.unwrap_or_default()))
}

pub fn encode_png(image: &GrayImage) -> Result<Vec<u8>, QrError> {
    let mut out = Cursor::new(Vec::new());
    image
        .write_to(&mut out, ImageFormat::Png)
        .map_err(|e| QrError::Image(e.to_string()))?;
    Ok(out.into_inner())
}

pub fn decode_png(bytes: &[u8]) -> Result<GrayImage, QrError> {
    image::load_from_memory_with_format(bytes, ImageFormat::Png)
        .map(|img| img.to_luma8())
        .map_err(|e| QrError::Image(e.to_string()))
}

/// Payload as PNG bytes.
pub fn payload_to_png(payload: &Payload, config: &QrConfig) -> Result<Vec<u8>, QrError> {
    encode_png(&payload_to_qr(payload, config)?)
}

/// Payload from PNG bytes.
pub fn png_to_payload(bytes: &[u8]) -> Result<Payload, QrError> {
    qr_to_payload(&decode_png(bytes)?)
}
