//! Netpbm graymap reader/writer (P2 ASCII and P5 binary). 16-bit P5 samples are
//! big-endian.

use super::{Heightmap, TerrainError};

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn token(&mut self, what: &str) -> Result<&str, TerrainError> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len()
            && !self.bytes[self.pos].is_ascii_whitespace()
            && self.bytes[self.pos] != b'#'
        {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(TerrainError::Truncated(format!("missing {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .map_err(|_| TerrainError::Header(format!("non-ASCII {what}")))
    }

    fn number(&mut self, what: &str) -> Result<u32, TerrainError> {
        let tok = self.token(what)?;
        tok.parse()
            .map_err(|_| TerrainError::Header(format!("bad {what} `{tok}`")))
    }
}

/// Parses a P2 or P5 graymap. `resolution` is meters per pixel.
pub fn load_heightmap(bytes: &[u8], resolution: f64) -> Result<Heightmap, TerrainError> {
    let mut cur = Cursor { bytes, pos: 0 };
    let magic = cur.token("magic")?.to_string();
    if magic != "P2" && magic != "P5" {
        return Err(TerrainError::BadMagic(magic));
    }
    let width = cur.number("width")? as usize;
    let height = cur.number("height")? as usize;
    if width == 0 || height == 0 {
        return Err(TerrainError::Header("zero-sized image".into()));
    }
    let maxval = cur.number("maxval")?;
    if maxval != 255 && maxval != 65535 {
        return Err(TerrainError::MaxVal(maxval));
    }
    let count = width * height;
    let mut samples = Vec::with_capacity(count);
    if magic == "P2" {
        for i in 0..count {
            let v = cur
                .number("sample")
                .map_err(|_| TerrainError::Truncated(format!("expected {count} samples, got {i}")))?;
            if v > maxval {
                return Err(TerrainError::SampleRange { value: v, maxval });
            }
            samples.push(v as u16);
        }
    } else {
        // Exactly one whitespace byte separates the header from the raster.
        if cur.pos >= bytes.len() || !bytes[cur.pos].is_ascii_whitespace() {
            return Err(TerrainError::Truncated("missing raster".into()));
        }
        let body = &bytes[cur.pos + 1..];
        let width_bytes = if maxval == 255 { 1 } else { 2 };
        if body.len() < count * width_bytes {
            return Err(TerrainError::Truncated(format!(
                "raster has {} bytes, expected {}",
                body.len(),
                count * width_bytes
            )));
        }
        for i in 0..count {
            let v = if width_bytes == 1 {
                u32::from(body[i])
            } else {
                u32::from(u16::from_be_bytes([body[2 * i], body[2 * i + 1]]))
            };
            if v > maxval {
                return Err(TerrainError::SampleRange { value: v, maxval });
            }
            samples.push(v as u16);
        }
    }
    Ok(Heightmap {
        width,
        height,
        samples,
        maxval: maxval as u16,
        resolution,
    })
}

/// ASCII encoding, one image row per line.
pub fn encode_p2(h: &Heightmap) -> Vec<u8> {
    let mut out = format!("P2\n{} {}\n{}\n", h.width, h.height, h.maxval);
    for row in h.samples.chunks(h.width) {
        let line: Vec<String> = row.iter().map(u16::to_string).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out.into_bytes()
}

pub fn encode_p5(h: &Heightmap) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n{}\n", h.width, h.height, h.maxval).into_bytes();
    for &s in &h.samples {
        if h.maxval == 255 {
            out.push(s as u8);
        } else {
            out.extend_from_slice(&s.to_be_bytes());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_ascii_map() {
        let h = load_heightmap(b"P2\n2 2\n255\n0 255 255 0\n", 1.0).unwrap();
        assert_eq!((h.width, h.height, h.maxval), (2, 2, 255));
        assert_eq!(h.samples, vec![0, 255, 255, 0]);
    }

    #[test]
    fn comments_are_skipped() {
        let h = load_heightmap(b"P2 # kind\n# size next\n2 1 # w h\n255\n7 # a\n 9\n", 0.5).unwrap();
        assert_eq!(h.samples, vec![7, 9]);
        assert_eq!(h.resolution, 0.5);
    }

    #[test]
    fn binary_twin_matches_ascii() {
        for maxval in [255u16, 65535] {
            let h = Heightmap {
                width: 3,
                height: 2,
                samples: vec![0, 1, maxval / 3, maxval / 2, maxval - 1, maxval],
                maxval,
                resolution: 0.25,
            };
            let a = load_heightmap(&encode_p2(&h), 0.25).unwrap();
            let b = load_heightmap(&encode_p5(&h), 0.25).unwrap();
            assert_eq!(a, h);
            assert_eq!(b, h);
        }
    }

    #[test]
    fn sixteen_bit_is_big_endian() {
        let mut bytes = b"P5\n1 1\n65535\n".to_vec();
        bytes.extend_from_slice(&[0x01, 0x02]);
        assert_eq!(load_heightmap(&bytes, 1.0).unwrap().samples, vec![0x0102]);
    }

    #[test]
    fn errors() {
        assert_eq!(
            load_heightmap(b"P3\n1 1\n255\n0\n", 1.0),
            Err(TerrainError::BadMagic("P3".into()))
        );
        assert_eq!(
            load_heightmap(b"P2\n1 1\n100\n0\n", 1.0),
            Err(TerrainError::MaxVal(100))
        );
        assert!(matches!(
            load_heightmap(b"P2\n2 2\n255\n0 1 2\n", 1.0),
            Err(TerrainError::Truncated(_))
        ));
        assert!(matches!(
            load_heightmap(b"P5\n2 2\n255\n\x00\x01", 1.0),
            Err(TerrainError::Truncated(_))
        ));
        assert!(matches!(
            load_heightmap(b"P2\n1 1\n255\n300\n", 1.0),
            Err(TerrainError::SampleRange { .. })
        ));
    }
}
