//! Binary PGM (P5) and PPM (P6) codecs.

use deepdenoise_core::pipeline::to_grayscale;
use deepdenoise_core::ImageBuffer;

/// Decoding failure at a byte offset into the input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PnmError {
    pub offset: usize,
    pub message: String,
}

impl PnmError {
    fn new(offset: usize, message: impl Into<String>) -> Self {
        Self {
            offset,
            message: message.into(),
        }
    }
}

struct Header {
    channels: usize,
    width: usize,
    height: usize,
    maxval: u32,
    data_start: usize,
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.bytes.get(self.pos).is_some_and(|&c| c != b'\n') {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u32, PnmError> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(PnmError::new(start, format!("expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .filter(|&n| n > 0)
            .ok_or_else(|| PnmError::new(start, format!("invalid {what}")))
    }
}

fn parse_header(bytes: &[u8]) -> Result<Header, PnmError> {
    let channels = match bytes.get(..2) {
        Some(b"P5") => 1,
        Some(b"P6") => 3,
        Some(m) => {
            return Err(PnmError::new(
                0,
                format!("unsupported magic {:?}", String::from_utf8_lossy(m)),
            ))
        }
        None => return Err(PnmError::new(bytes.len(), "file too short for a magic number")),
    };
    let mut cur = Cursor { bytes, pos: 2 };
    let width = cur.number("width")? as usize;
    let height = cur.number("height")? as usize;
    let maxval = cur.number("maxval")?;
    if maxval > 65535 {
        return Err(PnmError::new(cur.pos, format!("maxval {maxval} exceeds 65535")));
    }
    match bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => {}
        _ => return Err(PnmError::new(cur.pos, "expected a single whitespace byte after maxval")),
    }
    Ok(Header {
        channels,
        width,
        height,
        maxval,
        data_start: cur.pos + 1,
    })
}

/// Decodes P5 or P6 bytes; colour images are averaged to grayscale.
pub fn decode(bytes: &[u8]) -> Result<ImageBuffer, PnmError> {
    let h = parse_header(bytes)?;
    let sample_bytes = if h.maxval > 255 { 2 } else { 1 };
    let needed = h.width * h.height * h.channels * sample_bytes;
    let payload = &bytes[h.data_start..];
    if payload.len() < needed {
        return Err(PnmError::new(
            bytes.len(),
            format!("truncated pixel data: expected {needed} bytes, found {}", payload.len()),
        ));
    }
    let scale = h.maxval as f64;
    let samples: Vec<f64> = payload[..needed]
        .chunks_exact(sample_bytes)
        .enumerate()
        .map(|(k, s)| {
            let v = if sample_bytes == 2 {
                u16::from_be_bytes([s[0], s[1]]) as u32
            } else {
                s[0] as u32
            };
            if v > h.maxval {
                Err(PnmError::new(h.data_start + k * sample_bytes, format!("sample {v} exceeds maxval")))
            } else {
                Ok(v as f64 / scale)
            }
        })
        .collect::<Result<_, _>>()?;
    let plane = |c: usize| {
        let px = samples.iter().skip(c).step_by(h.channels).copied().collect();
        ImageBuffer::new(h.width, h.height, px).map_err(|e| PnmError::new(0, e.to_string()))
    };
    if h.channels == 1 {
        plane(0)
    } else {
        to_grayscale(&plane(0)?, &plane(1)?, &plane(2)?).map_err(|e| PnmError::new(0, e.to_string()))
    }
}

/// Encodes as 8-bit P5 with a minimal header, quantizing `round(clamp(x)·255)`.
pub fn encode_pgm(img: &ImageBuffer) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(img.pixels().iter().map(|&x| quantize(x)));
    out
}

pub fn quantize(x: f64) -> u8 {
    (x.clamp(0.0, 1.0) * 255.0).round() as u8
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scales_payload_bytes() {
        let img = decode(b"P5\n2 2\n255\n\x00\xff\x80\x40").unwrap();
        assert_eq!(img.pixels(), &[0.0, 1.0, 128.0 / 255.0, 64.0 / 255.0]);
    }

    #[test]
    fn comments_and_colour() {
        let img = decode(b"P6 # rgb\n1 1 # size\n255\n\x1e\x3c\x5a").unwrap();
        assert!((img.get(0, 0) - 60.0 / 255.0).abs() < 1e-15);
    }

    #[test]
    fn sixteen_bit_samples() {
        let img = decode(b"P5 1 1 65535\n\xff\xff").unwrap();
        assert_eq!(img.pixels(), &[1.0]);
    }

    #[test]
    fn errors_carry_offsets() {
        let e = decode(b"P4\n1 1\n").unwrap_err();
        assert!(e.message.contains("P4") && e.offset == 0);
        let e = decode(b"P5\n2 2\n255\n\x00").unwrap_err();
        assert!(e.message.contains("truncated"));
        let e = decode(b"P5\nx 2\n255\n").unwrap_err();
        assert_eq!(e.offset, 3);
        let e = decode(b"P5 1 1 200\n\xff").unwrap_err();
        assert_eq!(e.offset, 11);
    }

    #[test]
    fn encode_round_trips_quantized_data() {
        let bytes = b"P5\n3 1\n255\n\x00\x07\xfe".to_vec();
        assert_eq!(encode_pgm(&decode(&bytes).unwrap()), bytes);
    }
}
