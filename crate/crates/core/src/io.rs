//! On-disk binary layouts.
//!
//! **Bit-plane buffer** (`BPL1`): a 16-byte header — 4-byte magic `BPL1`,
//! little-endian `u64` element count, one signedness byte (0 unsigned,
//! 1 signed), three zero pad bytes — followed by the plane words as
//! little-endian `u32`, interleaved per 32-element block in significance
//! order 2^0..2^3.
//!
//! **Matrix/vector container** (`GMV1`): a 24-byte header — 4-byte magic
//! `GMV1`, one payload-type byte, three zero pad bytes, little-endian
//! `u64` rows then cols — followed by row-major data. INT8 stores one byte
//! per element; INT4 packs two elements per byte, low nibble first, as
//! two's-complement nibbles; INT32 (results) stores little-endian words.

use crate::bsdp::BitPlaneVector;
use crate::isa::Signedness;
use crate::{Error, Result};

pub const BITPLANE_MAGIC: [u8; 4] = *b"BPL1";
pub const MATRIX_MAGIC: [u8; 4] = *b"GMV1";

/// Serializes a bit-plane vector into the `BPL1` layout.
pub fn encode_bitplane_buffer(v: &BitPlaneVector) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + v.len() / 2);
    out.extend_from_slice(&BITPLANE_MAGIC);
    out.extend_from_slice(&(v.len() as u64).to_le_bytes());
    out.push(match v.signedness() {
        Signedness::Unsigned => 0,
        Signedness::Signed => 1,
    });
    out.extend_from_slice(&[0u8; 3]);
    for block in 0..v.blocks() {
        for plane in 0..4 {
            out.extend_from_slice(&v.plane(plane)[block].to_le_bytes());
        }
    }
    out
}

/// Parses a `BPL1` buffer.
pub fn decode_bitplane_buffer(bytes: &[u8]) -> Result<BitPlaneVector> {
    if bytes.len() < 16 || bytes[..4] != BITPLANE_MAGIC {
        return Err(Error::BadFormat("missing BPL1 header".into()));
    }
    let count = u64::from_le_bytes(bytes[4..12].try_into().unwrap()) as usize;
    let signedness = match bytes[12] {
        0 => Signedness::Unsigned,
        1 => Signedness::Signed,
        other => {
            return Err(Error::BadFormat(format!("bad signedness byte {other}")));
        }
    };
    if count == 0 || !count.is_multiple_of(32) {
        return Err(Error::BadVectorLength(count));
    }
    let blocks = count / 32;
    if bytes.len() != 16 + blocks * 16 {
        return Err(Error::BadFormat(format!(
            "expected {} payload bytes, found {}",
            blocks * 16,
            bytes.len() - 16
        )));
    }
    let mut planes = [
        Vec::with_capacity(blocks),
        Vec::with_capacity(blocks),
        Vec::with_capacity(blocks),
        Vec::with_capacity(blocks),
    ];
    for block in 0..blocks {
        for (plane, dst) in planes.iter_mut().enumerate() {
            let at = 16 + block * 16 + plane * 4;
            dst.push(u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()));
        }
    }
    BitPlaneVector::from_planes(planes, signedness)
}

/// Payload element type of a `GMV1` container.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PayloadType {
    Int8,
    Int4Packed,
    Int32,
}

impl PayloadType {
    fn code(self) -> u8 {
        match self {
            PayloadType::Int8 => 0,
            PayloadType::Int4Packed => 1,
            PayloadType::Int32 => 2,
        }
    }
}

/// A decoded `GMV1` container.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MatrixPayload {
    Int8 {
        rows: usize,
        cols: usize,
        data: Vec<i8>,
    },
    /// Unpacked nibble values, one `i8` in -8..=7 per element.
    Int4 {
        rows: usize,
        cols: usize,
        values: Vec<i8>,
    },
    Int32 {
        values: Vec<i32>,
    },
}

fn header(payload: PayloadType, rows: usize, cols: usize) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&MATRIX_MAGIC);
    out.push(payload.code());
    out.extend_from_slice(&[0u8; 3]);
    out.extend_from_slice(&(rows as u64).to_le_bytes());
    out.extend_from_slice(&(cols as u64).to_le_bytes());
    out
}

pub fn encode_int8_matrix(rows: usize, cols: usize, data: &[i8]) -> Result<Vec<u8>> {
    if data.len() != rows * cols {
        return Err(Error::ShapeMismatch(format!(
            "{} elements for {rows}x{cols}",
            data.len()
        )));
    }
    let mut out = header(PayloadType::Int8, rows, cols);
    out.extend(data.iter().map(|&v| v as u8));
    Ok(out)
}

pub fn encode_int4_matrix(rows: usize, cols: usize, values: &[i8]) -> Result<Vec<u8>> {
    if values.len() != rows * cols {
        return Err(Error::ShapeMismatch(format!(
            "{} elements for {rows}x{cols}",
            values.len()
        )));
    }
    if !values.len().is_multiple_of(2) {
        return Err(Error::ShapeMismatch(
            "INT4 element count must be even".into(),
        ));
    }
    for &v in values {
        if !(-8..=7).contains(&v) {
            return Err(Error::NibbleOutOfRange(v as i32, "signed"));
        }
    }
    let mut out = header(PayloadType::Int4Packed, rows, cols);
    out.extend(
        values
            .chunks(2)
            .map(|pair| (pair[0] as u8 & 0xF) | ((pair[1] as u8 & 0xF) << 4)),
    );
    Ok(out)
}

pub fn encode_int32_vector(values: &[i32]) -> Vec<u8> {
    let mut out = header(PayloadType::Int32, values.len(), 1);
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_matrix(bytes: &[u8]) -> Result<MatrixPayload> {
    if bytes.len() < 24 || bytes[..4] != MATRIX_MAGIC {
        return Err(Error::BadFormat("missing GMV1 header".into()));
    }
    let rows = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let cols = u64::from_le_bytes(bytes[16..24].try_into().unwrap()) as usize;
    let body = &bytes[24..];
    let expect_len = |n: usize| -> Result<()> {
        if body.len() == n {
            Ok(())
        } else {
            Err(Error::BadFormat(format!(
                "expected {n} payload bytes, found {}",
                body.len()
            )))
        }
    };
    match bytes[4] {
        0 => {
            expect_len(rows * cols)?;
            Ok(MatrixPayload::Int8 {
                rows,
                cols,
                data: body.iter().map(|&b| b as i8).collect(),
            })
        }
        1 => {
            expect_len(rows * cols / 2)?;
            let mut values = Vec::with_capacity(rows * cols);
            for &b in body {
                // Sign-extend each two's-complement nibble.
                values.push(((b & 0xF) as i8) << 4 >> 4);
                values.push((b as i8) >> 4);
            }
            Ok(MatrixPayload::Int4 { rows, cols, values })
        }
        2 => {
            expect_len(rows * 4)?;
            Ok(MatrixPayload::Int32 {
                values: body
                    .chunks_exact(4)
                    .map(|c| i32::from_le_bytes(c.try_into().unwrap()))
                    .collect(),
            })
        }
        other => Err(Error::BadFormat(format!("unknown payload type {other}"))),
    }
}
