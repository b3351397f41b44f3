//! Exact r-neighbor lookup over binary hashes.
//!
//! A hash of `n` bits is cut into `parts` contiguous substrings and each
//! substring value is an exact-match key in its own table. Any stored hash
//! within Hamming distance `r ≤ parts - 1` of the query agrees with it on at
//! least one whole substring (pigeonhole), so gathering the exact matches of
//! every substring and filtering by full distance returns every neighbor.

mod format;

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geometry::{hamming_words, BinaryHash};
use crate::loss::FrameRef;

/// Index into [`MultiIndex::postings`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PostingId(pub usize);

/// A stored hash and the frame it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Posting {
    pub hash: BinaryHash,
    pub frame: FrameRef,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Match<'a> {
    pub id: PostingId,
    pub posting: &'a Posting,
    pub distance: u32,
}

/// Matches within the query radius, sorted by posting id.
#[derive(Debug, Clone, PartialEq)]
pub struct LookupResult<'a> {
    pub matches: Vec<Match<'a>>,
    /// Raw candidates gathered from the substring tables before
    /// deduplication, i.e. the sum of the per-table exact-match counts.
    pub candidates: usize,
    /// Exact-match count per substring table.
    pub table_hits: Vec<usize>,
}

impl LookupResult<'_> {
    pub fn ids(&self) -> Vec<PostingId> {
        self.matches.iter().map(|m| m.id).collect()
    }
}

/// Splits `h` into `parts` substrings of `n / parts` bits each, lowest bits
/// first. Each substring must fit in 64 bits.
pub fn split_substrings(h: &BinaryHash, parts: u32) -> Result<Vec<u64>> {
    let width = substring_width(h.len(), parts)?;
    Ok((0..parts).map(|i| h.extract(i * width, width)).collect())
}

fn substring_width(n: u32, parts: u32) -> Result<u32> {
    if parts == 0 || !n.is_multiple_of(parts) {
        return Err(Error::InvalidArgument(format!(
            "{parts} substrings do not evenly divide a {n}-bit hash"
        )));
    }
    let width = n / parts;
    if width > 64 {
        return Err(Error::InvalidArgument(format!(
            "substring width {width} exceeds 64 bits"
        )));
    }
    Ok(width)
}

/// Multi-index over `n`-bit hashes with `parts` substring tables.
///
/// Readers take `&self` and writers `&mut self`, so the usual borrow rules
/// give many concurrent lookups or one insert at a time.
#[derive(Debug, Clone)]
pub struct MultiIndex {
    n: u32,
    parts: u32,
    width: u32,
    tables: Vec<HashMap<u64, Vec<PostingId>>>,
    postings: Vec<Posting>,
}

impl MultiIndex {
    pub fn new(n: u32, parts: u32) -> Result<Self> {
        let width = substring_width(n, parts)?;
        Ok(Self {
            n,
            parts,
            width,
            tables: vec![HashMap::new(); parts as usize],
            postings: Vec::new(),
        })
    }

    /// Builds an index from postings, assigning ids in iteration order.
    pub fn from_postings(
        n: u32,
        parts: u32,
        postings: impl IntoIterator<Item = Posting>,
    ) -> Result<Self> {
        let mut index = Self::new(n, parts)?;
        for p in postings {
            index.insert(p.hash, p.frame)?;
        }
        Ok(index)
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn parts(&self) -> u32 {
        self.parts
    }

    /// Bits per substring.
    pub fn substring_width(&self) -> u32 {
        self.width
    }

    pub fn len(&self) -> usize {
        self.postings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.postings.is_empty()
    }

    pub fn postings(&self) -> &[Posting] {
        &self.postings
    }

    pub fn posting(&self, id: PostingId) -> Option<&Posting> {
        self.postings.get(id.0)
    }

    /// Total posting-id entries across all tables.
    pub fn table_entries(&self) -> usize {
        self.tables
            .iter()
            .flat_map(|t| t.values())
            .map(Vec::len)
            .sum()
    }

    /// Largest radius with guaranteed complete results.
    pub fn max_complete_radius(&self) -> u32 {
        self.parts - 1
    }

    fn check_hash(&self, h: &BinaryHash) -> Result<()> {
        if h.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n as usize,
                actual: h.len() as usize,
            });
        }
        Ok(())
    }

    fn keys(&self, h: &BinaryHash) -> impl Iterator<Item = u64> + '_ {
        let h = h.clone();
        let width = self.width;
        (0..self.parts).map(move |i| h.extract(i * width, width))
    }

    pub fn insert(&mut self, hash: BinaryHash, frame: FrameRef) -> Result<PostingId> {
        self.check_hash(&hash)?;
        let id = PostingId(self.postings.len());
        let keys: Vec<u64> = self.keys(&hash).collect();
        for (table, key) in self.tables.iter_mut().zip(keys) {
            table.entry(key).or_default().push(id);
        }
        self.postings.push(Posting { hash, frame });
        Ok(id)
    }

    /// All postings within distance `r` of `h`.
    ///
    /// Refuses `r > parts - 1` with [`Error::IncompleteLookup`]; use
    /// [`MultiIndex::lookup_with`] to accept possibly incomplete results.
    pub fn lookup(&self, h: &BinaryHash, r: u32) -> Result<LookupResult<'_>> {
        self.lookup_with(h, r, false)
    }

    pub fn lookup_with(
        &self,
        h: &BinaryHash,
        r: u32,
        allow_incomplete: bool,
    ) -> Result<LookupResult<'_>> {
        self.check_hash(h)?;
        if r > self.max_complete_radius() && !allow_incomplete {
            return Err(Error::IncompleteLookup {
                radius: r,
                max: self.max_complete_radius(),
            });
        }
        let mut found = Vec::new();
        let mut table_hits = Vec::with_capacity(self.tables.len());
        for (table, key) in self.tables.iter().zip(self.keys(h)) {
            let hits = table.get(&key).map_or(&[][..], Vec::as_slice);
            table_hits.push(hits.len());
            found.extend_from_slice(hits);
        }
        let candidates = found.len();
        found.sort_unstable();
        found.dedup();
        let matches = found
            .into_iter()
            .filter_map(|id| {
                let posting = &self.postings[id.0];
                let distance = hamming_words(posting.hash.words(), h.words());
                (distance <= r).then_some(Match {
                    id,
                    posting,
                    distance,
                })
            })
            .collect();
        Ok(LookupResult {
            matches,
            candidates,
            table_hits,
        })
    }
}

/// Linear scan reference for [`MultiIndex::lookup`]. Ids are positions in
/// `postings`.
pub fn brute_force_lookup<'a>(
    postings: &'a [Posting],
    h: &BinaryHash,
    r: u32,
) -> Result<LookupResult<'a>> {
    let mut matches = Vec::new();
    for (i, posting) in postings.iter().enumerate() {
        let distance = crate::geometry::hamming_distance(&posting.hash, h)?;
        if distance <= r {
            matches.push(Match {
                id: PostingId(i),
                posting,
                distance,
            });
        }
    }
    Ok(LookupResult {
        matches,
        candidates: postings.len(),
        table_hits: Vec::new(),
    })
}
