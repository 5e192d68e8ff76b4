//! Binary PPM ("P6") codec.
//!
//! The parser is strict: magic `P6`, whitespace/comment-tolerant header
//! (comments run from `#` to end of line), decimal width, height, and
//! maxval, exactly one whitespace byte, then exactly `width * height * 3`
//! raw bytes. Only maxval 255 is supported. The encoder emits the
//! canonical form `P6\n<w> <h>\n255\n<payload>`, so decode followed by
//! encode round-trips bitwise on canonical files.

use edm_core::augment::Image;

use crate::error::{Error, Result};

pub fn decode_ppm(bytes: &[u8]) -> Result<Image> {
    if bytes.len() < 2 || &bytes[..2] != b"P6" {
        return Err(Error::Format("not a binary PPM: missing P6 magic".into()));
    }
    let mut pos = 2;
    let width = read_header_int(bytes, &mut pos, "width")?;
    let height = read_header_int(bytes, &mut pos, "height")?;
    let maxval = read_header_int(bytes, &mut pos, "maxval")?;
    if maxval != 255 {
        return Err(Error::Unsupported(format!(
            "PPM maxval {maxval}; only 255 is supported"
        )));
    }
    if width == 0 || height == 0 {
        return Err(Error::Format(format!("degenerate PPM extents {width}x{height}")));
    }
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => {
            return Err(Error::Format(
                "expected a single whitespace byte after maxval".into(),
            ))
        }
    }
    let expected = (width as u64) * (height as u64) * 3;
    let remaining = (bytes.len() - pos) as u64;
    if remaining < expected {
        return Err(Error::Format(format!(
            "truncated PPM payload: expected {expected} bytes, found {remaining}"
        )));
    }
    if remaining > expected {
        return Err(Error::Format(format!(
            "trailing data after PPM payload: expected {expected} bytes, found {remaining}"
        )));
    }
    Image::new(width, height, bytes[pos..].to_vec()).map_err(|e| Error::Format(e.to_string()))
}

/// Canonical P6 encoding of an image.
pub fn encode_ppm(img: &Image) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.pixels());
    out
}

fn read_header_int(bytes: &[u8], pos: &mut usize, field: &str) -> Result<usize> {
    skip_ws_and_comments(bytes, pos);
    let start = *pos;
    while let Some(b) = bytes.get(*pos) {
        if b.is_ascii_digit() {
            *pos += 1;
        } else {
            break;
        }
    }
    if *pos == start {
        return Err(Error::Format(format!("missing {field} in PPM header")));
    }
    if *pos - start > 9 {
        return Err(Error::Format(format!("PPM {field} out of range")));
    }
    let text = std::str::from_utf8(&bytes[start..*pos]).expect("digits are ASCII");
    Ok(text.parse().expect("bounded digit run"))
}

fn skip_ws_and_comments(bytes: &[u8], pos: &mut usize) {
    loop {
        match bytes.get(*pos) {
            Some(b'#') => {
                while let Some(&b) = bytes.get(*pos) {
                    *pos += 1;
                    if b == b'\n' {
                        break;
                    }
                }
            }
            Some(b) if b.is_ascii_whitespace() => *pos += 1,
            _ => return,
        }
    }
}
