//! `.ten` tensor files.
//!
//! Layout: magic `TEN1`, one dtype byte (`0x01` f32, `0x02` f64), one ndim byte
//! (always 4), `ndim` little-endian u32 dims, then the row-major data in
//! little-endian order.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::Tensor4;

pub const MAGIC: &[u8; 4] = b"TEN1";
const HEADER_LEN: usize = 6 + 4 * 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dtype {
    F32 = 0x01,
    F64 = 0x02,
}

impl Dtype {
    fn width(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::F64 => 8,
        }
    }
}

pub fn encode(tensor: &Tensor4, dtype: Dtype) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + tensor.len() * dtype.width());
    out.extend_from_slice(MAGIC);
    out.push(dtype as u8);
    out.push(4);
    for d in tensor.dims() {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    match dtype {
        Dtype::F32 => tensor
            .data()
            .iter()
            .for_each(|&v| out.extend_from_slice(&(v as f32).to_le_bytes())),
        Dtype::F64 => tensor
            .data()
            .iter()
            .for_each(|&v| out.extend_from_slice(&v.to_le_bytes())),
    }
    out
}

/// Decodes a `.ten` payload; `origin` only labels errors.
pub fn decode(bytes: &[u8], origin: &Path) -> Result<Tensor4> {
    if bytes.len() < 6 || &bytes[..4] != MAGIC {
        return Err(Error::format(origin, "bad magic, expected TEN1"));
    }
    let dtype = match bytes[4] {
        0x01 => Dtype::F32,
        0x02 => Dtype::F64,
        other => return Err(Error::format(origin, format!("unknown dtype tag {other:#04x}"))),
    };
    if bytes[5] != 4 {
        return Err(Error::format(origin, format!("ndim must be 4, got {}", bytes[5])));
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::format(origin, "truncated header"));
    }
    let mut dims = [0usize; 4];
    for (i, d) in dims.iter_mut().enumerate() {
        let o = 6 + 4 * i;
        *d = u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes")) as usize;
    }
    let count: usize = dims.iter().product();
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != count * dtype.width() {
        return Err(Error::format(
            origin,
            format!(
                "expected {} data bytes for dims {dims:?}, found {}",
                count * dtype.width(),
                payload.len()
            ),
        ));
    }
    let data = match dtype {
        Dtype::F32 => payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
            .collect(),
        Dtype::F64 => payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect(),
    };
    Tensor4::from_vec(dims, data)
}

/// Writes a 64-bit `.ten` file.
pub fn write_ten(path: &Path, tensor: &Tensor4) -> Result<()> {
    fs::write(path, encode(tensor, Dtype::F64)).map_err(|e| Error::io(path, e))
}

pub fn read_ten(path: &Path) -> Result<Tensor4> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes, path)
}
