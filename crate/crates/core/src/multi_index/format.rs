//! On-disk image of a [`MultiIndex`].
//!
//! ```text
//! magic    "CHMI"
//! version  u16
//! n        u32      hash bits
//! parts    u16
//! count    u64
//! count × { video_id: u32 len + UTF-8, shot_id: u32 len + UTF-8,
//!           timestamp: f64, hash: ⌈n/64⌉ × u64 }
//! ```
//!
//! All integers little-endian. Substring tables are rebuilt on load.

use std::io::{Read, Write};

use super::MultiIndex;
use crate::binio::{put_frame, put_hash, Decoder};
use crate::error::Result;

pub const INDEX_MAGIC: &[u8; 4] = b"CHMI";
pub const INDEX_VERSION: u16 = 1;

impl MultiIndex {
    pub fn save<W: Write>(&self, mut sink: W) -> Result<()> {
        sink.write_all(INDEX_MAGIC)?;
        sink.write_all(&INDEX_VERSION.to_le_bytes())?;
        sink.write_all(&self.n.to_le_bytes())?;
        let parts = u16::try_from(self.parts).expect("parts fits in u16");
        sink.write_all(&parts.to_le_bytes())?;
        sink.write_all(&(self.postings.len() as u64).to_le_bytes())?;
        for p in &self.postings {
            put_frame(&mut sink, &p.frame)?;
            put_hash(&mut sink, &p.hash)?;
        }
        sink.flush()?;
        Ok(())
    }

    pub fn load<R: Read>(source: R) -> Result<Self> {
        let mut dec = Decoder::new(source, "index");
        dec.magic(INDEX_MAGIC)?;
        let version = dec.u16("version")?;
        if version != INDEX_VERSION {
            return Err(dec.error("version", format!("unsupported version {version}")));
        }
        let n = dec.u32("n")?;
        let parts = dec.u16("parts")? as u32;
        let mut index = MultiIndex::new(n, parts).map_err(|e| dec.error("parts", e.to_string()))?;
        let count = dec.u64("count")?;
        for _ in 0..count {
            let frame = dec.frame()?;
            let hash = dec.hash(n)?;
            index.insert(hash, frame)?;
        }
        dec.finish()?;
        Ok(index)
    }
}
