//! Grayscale images and binary PGM (P5) I/O.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::noiselet::Geometry;

/// Row-major grayscale image with `f64` pixels. Values are not clamped;
/// reconstructions may leave `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    rows: usize,
    cols: usize,
    pixels: Vec<f64>,
}

impl Image {
    pub fn new(rows: usize, cols: usize, pixels: Vec<f64>) -> Result<Self> {
        if pixels.len() != rows * cols {
            return Err(Error::LengthMismatch { expected: rows * cols, actual: pixels.len() });
        }
        Ok(Self { rows, cols, pixels })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, pixels: vec![0.0; rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut pixels = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                pixels.push(f(r, c));
            }
        }
        Self { rows, cols, pixels }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [f64] {
        &mut self.pixels
    }

    pub fn into_pixels(self) -> Vec<f64> {
        self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.cols + col]
    }

    /// Geometry, if both sides are powers of two.
    pub fn geometry(&self) -> Result<Geometry> {
        Geometry::new(self.rows, self.cols)
    }

    pub fn max(&self) -> f64 {
        self.pixels.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.pixels.iter().sum::<f64>() / self.pixels.len() as f64
    }

    /// Largest centred crop whose sides are powers of two.
    pub fn center_crop_pow2(&self) -> Image {
        let floor_pow2 = |v: usize| if v == 0 { 0 } else { 1usize << (usize::BITS - 1 - v.leading_zeros()) };
        let (h, w) = (floor_pow2(self.rows), floor_pow2(self.cols));
        let (r0, c0) = ((self.rows - h) / 2, (self.cols - w) / 2);
        Image::from_fn(h, w, |r, c| self.get(r0 + r, c0 + c))
    }

    /// Reads a binary PGM (8 or 16 bit), mapping samples to `[0, 1]`.
    pub fn read_pgm(path: impl AsRef<Path>) -> Result<Image> {
        let path = path.as_ref();
        let file = std::fs::File::open(path)
            .map_err(|e| Error::Image(format!("{}: {e}", path.display())))?;
        Self::read_pgm_from(BufReader::new(file))
    }

    pub fn read_pgm_from(mut reader: impl BufRead) -> Result<Image> {
        let magic = next_token(&mut reader)?;
        if magic != "P5" {
            return Err(Error::Image(format!("unsupported PGM magic {magic:?}, expected P5")));
        }
        let cols = parse_header_number(&mut reader, "width")?;
        let rows = parse_header_number(&mut reader, "height")?;
        let maxval = parse_header_number(&mut reader, "maxval")?;
        if maxval == 0 || maxval > 65535 {
            return Err(Error::Image(format!("maxval {maxval} out of range")));
        }
        let bytes_per = if maxval > 255 { 2 } else { 1 };
        let mut raw = vec![0u8; rows * cols * bytes_per];
        reader
            .read_exact(&mut raw)
            .map_err(|_| Error::Image("truncated PGM payload".into()))?;
        let scale = 1.0 / maxval as f64;
        let pixels = if bytes_per == 1 {
            raw.iter().map(|&b| f64::from(b) * scale).collect()
        } else {
            raw.chunks_exact(2)
                .map(|p| f64::from(u16::from_be_bytes([p[0], p[1]])) * scale)
                .collect()
        };
        Image::new(rows, cols, pixels)
    }

    /// Writes a binary PGM with the given maxval (255 or 65535), clamping to
    /// `[0, 1]`.
    pub fn write_pgm(&self, path: impl AsRef<Path>, maxval: u16) -> Result<()> {
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_pgm_to(&mut file, maxval)?;
        file.flush()?;
        Ok(())
    }

    pub fn write_pgm_to(&self, mut w: impl Write, maxval: u16) -> Result<()> {
        if maxval == 0 {
            return Err(Error::Image("maxval must be positive".into()));
        }
        write!(w, "P5\n{} {}\n{}\n", self.cols, self.rows, maxval)?;
        let m = f64::from(maxval);
        for &p in &self.pixels {
            let v = (p.clamp(0.0, 1.0) * m).round() as u16;
            if maxval > 255 {
                w.write_all(&v.to_be_bytes())?;
            } else {
                w.write_all(&[v as u8])?;
            }
        }
        Ok(())
    }
}

fn next_token(reader: &mut impl BufRead) -> Result<String> {
    let mut token = String::new();
    let mut byte = [0u8; 1];
    loop {
        if reader.read(&mut byte)? == 0 {
            if token.is_empty() {
                return Err(Error::Image("unexpected end of PGM header".into()));
            }
            return Ok(token);
        }
        let ch = byte[0] as char;
        if ch == '#' && token.is_empty() {
            let mut skip = String::new();
            reader.read_line(&mut skip)?;
        } else if ch.is_ascii_whitespace() {
            if !token.is_empty() {
                return Ok(token);
            }
        } else {
            token.push(ch);
        }
    }
}

fn parse_header_number(reader: &mut impl BufRead, what: &str) -> Result<usize> {
    let tok = next_token(reader)?;
    tok.parse().map_err(|_| Error::Image(format!("bad PGM {what}: {tok:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_round_trip_8_and_16_bit() {
        let img = Image::from_fn(4, 8, |r, c| ((r * 8 + c) as f64) / 31.0);
        for maxval in [255u16, 65535] {
            let mut buf = Vec::new();
            img.write_pgm_to(&mut buf, maxval).unwrap();
            let back = Image::read_pgm_from(&buf[..]).unwrap();
            assert_eq!((back.rows(), back.cols()), (4, 8));
            let tol = 0.5 / f64::from(maxval) + 1e-12;
            assert!(back.pixels().iter().zip(img.pixels()).all(|(a, b)| (a - b).abs() <= tol));
        }
    }

    #[test]
    fn pgm_header_comments() {
        let data = b"P5\n# made by hand\n2 1\n255\n\x00\xff";
        let img = Image::read_pgm_from(&data[..]).unwrap();
        assert_eq!(img.pixels(), &[0.0, 1.0]);
    }

    #[test]
    fn pgm_rejects_truncation_and_magic() {
        assert!(Image::read_pgm_from(&b"P5 2 2 255\n\x00"[..]).is_err());
        assert!(Image::read_pgm_from(&b"P2 1 1 255\n0"[..]).is_err());
    }

    #[test]
    fn crop_to_power_of_two() {
        let img = Image::from_fn(10, 20, |r, c| (r * 100 + c) as f64);
        let crop = img.center_crop_pow2();
        assert_eq!((crop.rows(), crop.cols()), (8, 16));
        assert_eq!(crop.get(0, 0), img.get(1, 2));
    }
}
