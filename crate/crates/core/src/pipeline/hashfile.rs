//! Binary file of hashed frames.
//!
//! ```text
//! magic    "CHSH"
//! version  u16
//! n        u32
//! count    u64
//! count × { video: u32 len + UTF-8, shot: u32 len + UTF-8, t: f64,
//!           hash: ⌈n/64⌉ × u64 }
//! ```

use std::io::{Read, Write};

use crate::binio::{put_frame, put_hash, Decoder};
use crate::error::{Error, Result};
use crate::multi_index::Posting;

pub const HASH_MAGIC: &[u8; 4] = b"CHSH";
pub const HASH_VERSION: u16 = 1;

pub fn write_hash_dataset<W: Write>(n: u32, records: &[Posting], mut sink: W) -> Result<()> {
    if let Some(bad) = records.iter().find(|p| p.hash.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n as usize,
            actual: bad.hash.len() as usize,
        });
    }
    sink.write_all(HASH_MAGIC)?;
    sink.write_all(&HASH_VERSION.to_le_bytes())?;
    sink.write_all(&n.to_le_bytes())?;
    sink.write_all(&(records.len() as u64).to_le_bytes())?;
    for p in records {
        put_frame(&mut sink, &p.frame)?;
        put_hash(&mut sink, &p.hash)?;
    }
    sink.flush()?;
    Ok(())
}

/// Returns the hash length and the records.
pub fn read_hash_dataset<R: Read>(source: R) -> Result<(u32, Vec<Posting>)> {
    let mut dec = Decoder::new(source, "hash dataset");
    dec.magic(HASH_MAGIC)?;
    let version = dec.u16("version")?;
    if version != HASH_VERSION {
        return Err(dec.error("version", format!("unsupported version {version}")));
    }
    let n = dec.u32("n")?;
    if n == 0 {
        return Err(dec.error("n", "hash length must be positive"));
    }
    let count = dec.u64("count")?;
    let mut records = Vec::new();
    for _ in 0..count {
        let frame = dec.frame()?;
        let hash = dec.hash(n)?;
        records.push(Posting { hash, frame });
    }
    dec.finish()?;
    Ok((n, records))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::binarize;
    use crate::loss::FrameRef;

    #[test]
    fn round_trip_and_corruption() {
        let records: Vec<Posting> = (0..4)
            .map(|i| Posting {
                hash: binarize(&[1.0, -1.0, i as f64 - 1.5, 0.2]),
                frame: FrameRef::new("vid", "s", i as f64),
            })
            .collect();
        let mut buf = Vec::new();
        write_hash_dataset(4, &records, &mut buf).unwrap();
        assert_eq!(&buf[..4], b"CHSH");
        let (n, back) = read_hash_dataset(buf.as_slice()).unwrap();
        assert_eq!(n, 4);
        assert_eq!(back, records);

        buf[1] = b'?';
        assert!(matches!(
            read_hash_dataset(buf.as_slice()),
            Err(Error::Format { field: "magic", .. })
        ));
        assert!(write_hash_dataset(5, &records, Vec::new()).is_err());
    }
}
