//! Little-endian primitives shared by the binary file formats.

use std::io::{self, Read, Write};

use crate::error::{Error, Result};
use crate::geometry::BinaryHash;
use crate::loss::FrameRef;

pub(crate) struct Decoder<R> {
    inner: R,
    format: &'static str,
}

impl<R: Read> Decoder<R> {
    pub fn new(inner: R, format: &'static str) -> Self {
        Self { inner, format }
    }

    pub fn error(&self, field: &'static str, reason: impl Into<String>) -> Error {
        Error::Format {
            format: self.format,
            field,
            reason: reason.into(),
        }
    }

    fn fill(&mut self, buf: &mut [u8], field: &'static str) -> Result<()> {
        self.inner.read_exact(buf).map_err(|e| match e.kind() {
            io::ErrorKind::UnexpectedEof => self.error(field, "truncated"),
            _ => Error::Io(e),
        })
    }

    pub fn magic(&mut self, expected: &[u8; 4]) -> Result<()> {
        let mut buf = [0u8; 4];
        self.fill(&mut buf, "magic")?;
        if &buf != expected {
            return Err(self.error(
                "magic",
                format!(
                    "expected {:?}, found {:?}",
                    String::from_utf8_lossy(expected),
                    String::from_utf8_lossy(&buf)
                ),
            ));
        }
        Ok(())
    }

    pub fn u16(&mut self, field: &'static str) -> Result<u16> {
        let mut buf = [0u8; 2];
        self.fill(&mut buf, field)?;
        Ok(u16::from_le_bytes(buf))
    }

    pub fn u32(&mut self, field: &'static str) -> Result<u32> {
        let mut buf = [0u8; 4];
        self.fill(&mut buf, field)?;
        Ok(u32::from_le_bytes(buf))
    }

    pub fn u64(&mut self, field: &'static str) -> Result<u64> {
        let mut buf = [0u8; 8];
        self.fill(&mut buf, field)?;
        Ok(u64::from_le_bytes(buf))
    }

    pub fn f64(&mut self, field: &'static str) -> Result<f64> {
        Ok(f64::from_bits(self.u64(field)?))
    }

    /// `u32` byte length followed by UTF-8.
    pub fn string(&mut self, field: &'static str) -> Result<String> {
        let len = self.u32(field)? as usize;
        let mut buf = Vec::new();
        (&mut self.inner)
            .take(len as u64)
            .read_to_end(&mut buf)
            .map_err(Error::Io)?;
        if buf.len() != len {
            return Err(self.error(field, "truncated"));
        }
        String::from_utf8(buf).map_err(|_| self.error(field, "invalid UTF-8"))
    }

    pub fn hash(&mut self, bits: u32) -> Result<BinaryHash> {
        let words = (0..crate::geometry::words_for_bits(bits))
            .map(|_| self.u64("hash"))
            .collect::<Result<Vec<_>>>()?;
        BinaryHash::from_words(bits, words).map_err(|e| self.error("hash", e.to_string()))
    }

    /// Frame fields in file order: video, shot, timestamp.
    pub fn frame(&mut self) -> Result<FrameRef> {
        let video_id = self.string("video_id")?;
        let shot_id = self.string("shot_id")?;
        let timestamp = self.f64("timestamp")?;
        Ok(FrameRef {
            video_id,
            shot_id,
            timestamp,
        })
    }

    /// Fails unless the source is exhausted.
    pub fn finish(mut self) -> Result<()> {
        let mut probe = [0u8; 1];
        match self.inner.read(&mut probe)? {
            0 => Ok(()),
            _ => Err(self.error("trailer", "unexpected bytes after last record")),
        }
    }
}

pub(crate) fn put_string<W: Write>(w: &mut W, s: &str) -> io::Result<()> {
    let len = u32::try_from(s.len())
        .map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "string too long"))?;
    w.write_all(&len.to_le_bytes())?;
    w.write_all(s.as_bytes())
}

pub(crate) fn put_frame<W: Write>(w: &mut W, frame: &FrameRef) -> io::Result<()> {
    put_string(w, &frame.video_id)?;
    put_string(w, &frame.shot_id)?;
    w.write_all(&frame.timestamp.to_le_bytes())
}

pub(crate) fn put_hash<W: Write>(w: &mut W, hash: &BinaryHash) -> io::Result<()> {
    for word in hash.words() {
        w.write_all(&word.to_le_bytes())?;
    }
    Ok(())
}
