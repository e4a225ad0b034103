//! Portable graymap (PGM) reading and writing.
//!
//! Reads binary `P5` (8- or 16-bit) and plain `P2` files, including `#`
//! comments in the header. Writes binary `P5` with maxval 255.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graymap {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    /// Row-major samples in `0..=maxval`.
    pub data: Vec<u16>,
}

impl Graymap {
    pub fn new(width: usize, height: usize, maxval: u16, data: Vec<u16>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!("empty image {width}x{height}")));
        }
        if maxval == 0 {
            return Err(Error::InvalidImage("maxval must be positive".into()));
        }
        if data.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "{} samples for a {width}x{height} image",
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|&&v| v > maxval) {
            return Err(Error::InvalidImage(format!(
                "sample {v} exceeds maxval {maxval}"
            )));
        }
        Ok(Self {
            width,
            height,
            maxval,
            data,
        })
    }
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderCursor<'a> {
    fn skip_whitespace_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn next_number(&mut self, what: &str) -> Result<u32> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::InvalidImage(format!("missing {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::InvalidImage(format!("bad {what}")))
    }
}

/// Parses a `P5` or `P2` graymap.
pub fn read_pgm(bytes: &[u8]) -> Result<Graymap> {
    let binary = match bytes.get(..2) {
        Some(b"P5") => true,
        Some(b"P2") => false,
        _ => {
            return Err(Error::InvalidImage(
                "not a PGM file (expected P5 or P2)".into(),
            ))
        }
    };
    let mut cursor = HeaderCursor { bytes, pos: 2 };
    let width = cursor.next_number("width")? as usize;
    let height = cursor.next_number("height")? as usize;
    let maxval = cursor.next_number("maxval")?;
    if maxval == 0 || maxval > u32::from(u16::MAX) {
        return Err(Error::InvalidImage(format!("maxval {maxval} out of range")));
    }
    let maxval = maxval as u16;
    let count = width
        .checked_mul(height)
        .ok_or_else(|| Error::InvalidImage("image dimensions overflow".into()))?;

    let data = if binary {
        // Exactly one whitespace byte separates the header from the raster.
        match bytes.get(cursor.pos) {
            Some(b) if b.is_ascii_whitespace() => cursor.pos += 1,
            _ => return Err(Error::InvalidImage("missing raster separator".into())),
        }
        let raster = &bytes[cursor.pos..];
        let wide = maxval > 255;
        let needed = if wide { count * 2 } else { count };
        if raster.len() < needed {
            return Err(Error::InvalidImage(format!(
                "raster truncated: {} of {needed} bytes",
                raster.len()
            )));
        }
        if wide {
            raster[..needed]
                .chunks_exact(2)
                .map(|c| u16::from_be_bytes([c[0], c[1]]))
                .collect()
        } else {
            raster[..needed].iter().map(|&b| u16::from(b)).collect()
        }
    } else {
        (0..count)
            .map(|_| {
                let v = cursor.next_number("sample")?;
                u16::try_from(v).map_err(|_| Error::InvalidImage(format!("sample {v} too large")))
            })
            .collect::<Result<Vec<_>>>()?
    };
    Graymap::new(width, height, maxval, data)
}

/// Encodes an 8-bit binary `P5` graymap. Samples are rescaled to 255 when
/// the source maxval differs.
pub fn write_pgm(image: &Graymap) -> Vec<u8> {
    let header = format!("P5\n{} {}\n255\n", image.width, image.height);
    let mut out = Vec::with_capacity(header.len() + image.data.len());
    out.extend_from_slice(header.as_bytes());
    let max = u32::from(image.maxval);
    out.extend(image.data.iter().map(|&v| {
        if max == 255 {
            v as u8
        } else {
            ((u32::from(v) * 255 + max / 2) / max) as u8
        }
    }));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_header_with_comments() {
        let mut bytes = b"P5\n# created by hand\n3 2 # trailing\n255\n".to_vec();
        bytes.extend_from_slice(&[0, 10, 20, 30, 40, 255]);
        let img = read_pgm(&bytes).unwrap();
        assert_eq!((img.width, img.height, img.maxval), (3, 2, 255));
        assert_eq!(img.data, vec![0, 10, 20, 30, 40, 255]);
    }

    #[test]
    fn parses_plain_and_sixteen_bit() {
        let img = read_pgm(b"P2 2 2 15\n0 3\n7 15\n").unwrap();
        assert_eq!(img.data, vec![0, 3, 7, 15]);
        let mut bytes = b"P5 2 1 1000\n".to_vec();
        bytes.extend_from_slice(&[0x03, 0xE8, 0x00, 0x01]);
        let img = read_pgm(&bytes).unwrap();
        assert_eq!(img.data, vec![1000, 1]);
        assert_eq!(&write_pgm(&img)[11..], &[255, 0]);
    }

    #[test]
    fn rejects_malformed() {
        assert!(read_pgm(b"P6 1 1 255\n\0\0\0").is_err());
        assert!(read_pgm(b"P5 2 2 255\n\0\0").is_err());
        assert!(read_pgm(b"P5 2 x 255\n").is_err());
        assert!(read_pgm(b"P2 1 1 10\n11\n").is_err());
        assert!(read_pgm(b"P5 0 1 255\n").is_err());
    }

    proptest! {
        #[test]
        fn write_then_read_is_identity(
            (width, height, data) in (1usize..20, 1usize..20)
                .prop_flat_map(|(w, h)| (Just(w), Just(h), proptest::collection::vec(0u16..=255, w * h)))
        ) {
            let img = Graymap::new(width, height, 255, data).unwrap();
            prop_assert_eq!(read_pgm(&write_pgm(&img)).unwrap(), img);
        }
    }
}
