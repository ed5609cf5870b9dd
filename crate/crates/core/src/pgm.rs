//! Binary PGM (P5) frame I/O.
//!
//! Frames are written as `P5\n<width> <height>\n255\n<raw bytes>` and read
//! back tolerantly (arbitrary whitespace and `#` comments in the header).
//! 8-bit samples map to intensities by division by 255, so a write/read
//! round trip of an 8-bit-quantized image is exact.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::raster::Image;

pub fn encode(img: &Image) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(
        img.data()
            .iter()
            .map(|&v| (v * 255.0).round().clamp(0.0, 255.0) as u8),
    );
    out
}

pub fn decode(bytes: &[u8], origin: &str) -> Result<Image> {
    let mut pos = 0usize;
    let err = |message: &str| Error::parse(origin, message);

    if bytes.len() < 2 || &bytes[0..2] != b"P5" {
        return Err(err("missing P5 magic"));
    }
    pos += 2;

    let mut fields = [0usize; 3];
    for field in &mut fields {
        // skip whitespace and comment lines
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                break;
            }
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if pos == start {
            return Err(err("truncated header"));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .expect("digits are ascii")
            .parse()
            .map_err(|_| err("header field out of range"))?;
    }
    let [width, height, maxval] = fields;
    if maxval != 255 {
        return Err(err(&format!("unsupported maxval {maxval}, expected 255")));
    }
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(err("missing whitespace after maxval"));
    }
    pos += 1;

    let expected = width * height;
    let raw = &bytes[pos..];
    if raw.len() != expected {
        return Err(err(&format!(
            "expected {expected} samples, found {}",
            raw.len()
        )));
    }
    let data = raw.iter().map(|&b| b as f64 / 255.0).collect();
    Image::from_vec(width, height, data)
}

pub fn write_pgm(img: &Image, path: &Path) -> Result<()> {
    fs::write(path, encode(img)).map_err(|e| Error::io(path, e))
}

pub fn read_pgm(path: &Path) -> Result<Image> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn encode_layout_is_exact() {
        let img = Image::from_vec(2, 2, vec![0.0, 1.0, 0.5, 1.0 / 255.0]).unwrap();
        let bytes = encode(&img);
        assert_eq!(&bytes[..11], b"P5\n2 2\n255\n");
        assert_eq!(&bytes[11..], &[0u8, 255, 128, 1]);
    }

    #[test]
    fn decode_accepts_comments_and_whitespace() {
        let mut bytes = b"P5\n# a comment\n 3\t2 \n255\n".to_vec();
        bytes.extend([0u8, 10, 20, 30, 40, 50]);
        let img = decode(&bytes, "test").unwrap();
        assert_eq!((img.width(), img.height()), (3, 2));
        assert!((img.get(1, 1) - 40.0 / 255.0).abs() < 1e-15);
    }

    #[test]
    fn decode_rejects_bad_magic_and_short_payload() {
        assert!(decode(b"P6\n1 1\n255\n\0", "test").is_err());
        assert!(decode(b"P5\n2 2\n255\n\0\0", "test").is_err());
        assert!(decode(b"P5\n1 1\n65535\n\0", "test").is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("frame.pgm");
        let img = Image::from_fn(17, 9, |x, y| ((x * 13 + y * 7) % 256) as f64 / 255.0);
        write_pgm(&img, &path).unwrap();
        assert_eq!(read_pgm(&path).unwrap(), img);
    }

    proptest! {
        #[test]
        fn quantized_images_round_trip(w in 1usize..12, h in 1usize..12, seed in 0u64..1000) {
            let img = Image::from_fn(w, h, |x, y| {
                let v = seed
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(((y * w + x) as u64).wrapping_mul(1442695040888963407));
                (v >> 56) as f64 / 255.0
            });
            let back = decode(&encode(&img), "prop").unwrap();
            prop_assert_eq!(back, img);
        }
    }
}
