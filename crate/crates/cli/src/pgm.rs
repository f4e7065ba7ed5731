//! 8-bit binary greyscale images (P5).

use std::fs;
use std::path::Path;

use laconv_core::{Error, Result};

/// Maps `values` (row-major, `h`×`w`) linearly onto 0..=255 by min and max.
/// A flat map is written as all zeros.
pub fn normalise(values: &[f64]) -> Vec<u8> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    if !(span > 0.0) {
        return vec![0; values.len()];
    }
    values.iter().map(|v| ((v - lo) / span * 255.0).round() as u8).collect()
}

pub fn write_pgm(path: &Path, h: usize, w: usize, pixels: &[u8]) -> Result<()> {
    if pixels.len() != h * w {
        return Err(Error::Shape(format!("{} pixels for a {h}×{w} image", pixels.len())));
    }
    let mut bytes = format!("P5\n{w} {h}\n255\n").into_bytes();
    bytes.extend_from_slice(pixels);
    fs::write(path, bytes).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Reads a P5 file with maxval 255; returns (h, w, pixels).
pub fn read_pgm(path: &Path) -> Result<(usize, usize, Vec<u8>)> {
    let bytes = fs::read(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let bad = |msg: &str| Error::Format {
        path: path.to_path_buf(),
        msg: msg.to_string(),
    };
    // header: magic, width, height, maxval, each followed by whitespace
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    pos += 1;
    if fields[0] != "P5" || fields[3] != "255" {
        return Err(bad("not an 8-bit P5 image"));
    }
    let w: usize = fields[1].parse().map_err(|_| bad("bad width"))?;
    let h: usize = fields[2].parse().map_err(|_| bad("bad height"))?;
    let pixels = bytes.get(pos..).unwrap_or_default();
    if pixels.len() != h * w {
        return Err(bad("pixel count does not match header"));
    }
    Ok((h, w, pixels.to_vec()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.pgm");
        let px: Vec<u8> = (0..12).map(|i| (i * 20) as u8).collect();
        write_pgm(&p, 3, 4, &px).unwrap();
        assert_eq!(read_pgm(&p).unwrap(), (3, 4, px));
        assert!(write_pgm(&p, 2, 2, &[0; 3]).is_err());
        fs::write(&p, b"P2\n1 1\n255\n\x00").unwrap();
        assert!(matches!(read_pgm(&p), Err(Error::Format { .. })));
    }

    #[test]
    fn normalisation() {
        assert_eq!(normalise(&[2.0, 3.0, 4.0]), vec![0, 128, 255]);
        assert_eq!(normalise(&[0.5; 4]), vec![0; 4]);
    }
}
