//! Bundle stream format.
//!
//! A stream is a sequence of self-describing frames, all integers
//! little-endian:
//!
//! ```text
//! magic      4 bytes  "NSPB"
//! version    u16      1
//! q          u8       log2(rows * cols)
//! rows       u32
//! cols       u32
//! width      u8       integer width the bundle was generated with
//! planes     u8       payload planes l (1..=23)
//! plane_map  l × { kind u8 (0 = a, 1 = b), complement u8 (0/1), row u32 (1-based) }
//! payload    rows*cols × u32, row-major
//! ```
//!
//! In each payload word bit 0 is the synchronisation plane (always 1) and
//! bit `t + 1` carries payload plane `t`, so a full frame uses 24 bits per
//! pixel. Bits above `l` are zero. The stream ends cleanly at a frame
//! boundary.

use std::io::{ErrorKind, Read, Write};

use crate::error::{Error, Result};
use crate::noiselet::Geometry;
use crate::patterns::{PackedBundle, PatternKind, PlaneDescriptor};

pub const MAGIC: [u8; 4] = *b"NSPB";
pub const VERSION: u16 = 1;
/// Payload planes per frame; one more bit is the sync plane.
pub const MAX_FRAME_PLANES: usize = 23;

pub struct BundleWriter<W: Write> {
    inner: W,
    geometry: Geometry,
    frames: usize,
}

impl<W: Write> BundleWriter<W> {
    pub fn new(inner: W, geometry: Geometry) -> Self {
        Self { inner, geometry, frames: 0 }
    }

    pub fn frames_written(&self) -> usize {
        self.frames
    }

    pub fn write(&mut self, bundle: &PackedBundle) -> Result<()> {
        let l = bundle.plane_count();
        if l == 0 || l > MAX_FRAME_PLANES {
            return Err(Error::Stream(format!(
                "{l} payload planes, a frame holds 1..={MAX_FRAME_PLANES}"
            )));
        }
        let n = self.geometry.n();
        if bundle.planes.len() != n {
            return Err(Error::LengthMismatch { expected: n, actual: bundle.planes.len() });
        }
        let mut header = Vec::with_capacity(18 + 6 * l);
        header.extend_from_slice(&MAGIC);
        header.extend_from_slice(&VERSION.to_le_bytes());
        header.push(self.geometry.order().q() as u8);
        header.extend_from_slice(&(self.geometry.rows() as u32).to_le_bytes());
        header.extend_from_slice(&(self.geometry.cols() as u32).to_le_bytes());
        header.push(bundle.width as u8);
        header.push(l as u8);
        for d in &bundle.plane_map {
            header.push(match d.kind {
                PatternKind::A => 0,
                PatternKind::B => 1,
            });
            header.push(u8::from(d.complement));
            let row = u32::try_from(d.row)
                .map_err(|_| Error::Stream(format!("row {} does not fit u32", d.row)))?;
            header.extend_from_slice(&row.to_le_bytes());
        }
        self.inner.write_all(&header)?;

        let keep = (1u64 << l) - 1;
        let mut payload = Vec::with_capacity(4 * n);
        for &w in &bundle.planes {
            let word = (((w & keep) << 1) | 1) as u32;
            payload.extend_from_slice(&word.to_le_bytes());
        }
        self.inner.write_all(&payload)?;
        self.frames += 1;
        Ok(())
    }

    pub fn into_inner(self) -> W {
        self.inner
    }
}

pub struct BundleReader<R: Read> {
    inner: R,
}

fn truncated() -> Error {
    Error::Stream("truncated frame".into())
}

impl<R: Read> BundleReader<R> {
    pub fn new(inner: R) -> Self {
        Self { inner }
    }

    fn read_exact(&mut self, buf: &mut [u8]) -> Result<()> {
        self.inner.read_exact(buf).map_err(|e| match e.kind() {
            ErrorKind::UnexpectedEof => truncated(),
            _ => Error::Io(e),
        })
    }

    /// Next frame, or `None` at a clean end of stream.
    pub fn next_frame(&mut self) -> Result<Option<(Geometry, PackedBundle)>> {
        let mut magic = [0u8; 4];
        let mut got = 0;
        while got < 4 {
            match self.inner.read(&mut magic[got..]) {
                Ok(0) if got == 0 => return Ok(None),
                Ok(0) => return Err(truncated()),
                Ok(k) => got += k,
                Err(e) if e.kind() == ErrorKind::Interrupted => {}
                Err(e) => return Err(Error::Io(e)),
            }
        }
        if magic != MAGIC {
            return Err(Error::Stream(format!("bad magic {magic:?}")));
        }
        let mut fixed = [0u8; 13];
        self.read_exact(&mut fixed)?;
        let version = u16::from_le_bytes([fixed[0], fixed[1]]);
        if version != VERSION {
            return Err(Error::Stream(format!("unsupported version {version}")));
        }
        let q = u32::from(fixed[2]);
        let rows = u32::from_le_bytes(fixed[3..7].try_into().unwrap()) as usize;
        let cols = u32::from_le_bytes(fixed[7..11].try_into().unwrap()) as usize;
        let width = u32::from(fixed[11]);
        let l = usize::from(fixed[12]);
        let geometry =
            Geometry::new(rows, cols).map_err(|e| Error::Stream(format!("bad geometry: {e}")))?;
        if geometry.order().q() != q {
            return Err(Error::Stream(format!("q = {q} does not match {rows}x{cols}")));
        }
        if l == 0 || l > MAX_FRAME_PLANES {
            return Err(Error::Stream(format!(
                "{l} payload planes, a frame holds 1..={MAX_FRAME_PLANES}"
            )));
        }

        let mut map_bytes = vec![0u8; 6 * l];
        self.read_exact(&mut map_bytes)?;
        let mut plane_map = Vec::with_capacity(l);
        for d in map_bytes.chunks_exact(6) {
            let kind = match d[0] {
                0 => PatternKind::A,
                1 => PatternKind::B,
                k => return Err(Error::Stream(format!("bad pattern kind {k}"))),
            };
            let complement = match d[1] {
                0 => false,
                1 => true,
                c => return Err(Error::Stream(format!("bad complement flag {c}"))),
            };
            let row = u32::from_le_bytes(d[2..6].try_into().unwrap()) as usize;
            plane_map.push(PlaneDescriptor { kind, row, complement });
        }

        let n = geometry.n();
        let mut payload = vec![0u8; 4 * n];
        self.read_exact(&mut payload)?;
        let mut planes = Vec::with_capacity(n);
        for (i, w) in payload.chunks_exact(4).enumerate() {
            let word = u32::from_le_bytes(w.try_into().unwrap());
            if word & 1 == 0 {
                return Err(Error::Stream(format!("sync bit missing at pixel {i}")));
            }
            if u64::from(word) >> (l + 1) != 0 {
                return Err(Error::Stream(format!("stray bits above plane {l} at pixel {i}")));
            }
            planes.push(u64::from(word >> 1));
        }
        Ok(Some((geometry, PackedBundle { planes, plane_map, width })))
    }
}

/// Writes all bundles as consecutive frames.
pub fn write_bundle_stream<W: Write>(
    out: W,
    geometry: Geometry,
    bundles: &[PackedBundle],
) -> Result<W> {
    let mut writer = BundleWriter::new(out, geometry);
    for b in bundles {
        writer.write(b)?;
    }
    Ok(writer.into_inner())
}

/// Reads every frame of a stream. All frames must share one geometry.
pub fn read_bundle_stream<R: Read>(input: R) -> Result<(Geometry, Vec<PackedBundle>)> {
    let mut reader = BundleReader::new(input);
    let mut geometry = None;
    let mut bundles = Vec::new();
    while let Some((g, b)) = reader.next_frame()? {
        match geometry {
            None => geometry = Some(g),
            Some(prev) if prev != g => {
                return Err(Error::Stream("frames with different geometries".into()))
            }
            Some(_) => {}
        }
        bundles.push(b);
    }
    let geometry = geometry.ok_or_else(|| Error::Stream("empty stream".into()))?;
    Ok((geometry, bundles))
}
