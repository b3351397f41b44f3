use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// An `n`-bit sign code packed into little-endian 64-bit words.
///
/// Bit `k` lives in bit `k % 64` of word `k / 64`. Unused high bits of the
/// last word are always zero, so word-wise equality is code equality.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryHash {
    bits: u32,
    words: Vec<u64>,
}

pub(crate) fn words_for(bits: u32) -> usize {
    (bits as usize).div_ceil(64)
}

fn tail_mask(bits: u32) -> u64 {
    match bits % 64 {
        0 => u64::MAX,
        used => (1u64 << used) - 1,
    }
}

impl BinaryHash {
    pub fn zeros(bits: u32) -> Self {
        Self {
            bits,
            words: vec![0; words_for(bits)],
        }
    }

    /// Builds a hash from packed words, rejecting set bits past `bits`.
    pub fn from_words(bits: u32, words: Vec<u64>) -> Result<Self> {
        if bits == 0 {
            return Err(Error::InvalidArgument(
                "hash length must be positive".into(),
            ));
        }
        if words.len() != words_for(bits) {
            return Err(Error::DimensionMismatch {
                expected: words_for(bits),
                actual: words.len(),
            });
        }
        if words.last().is_some_and(|w| w & !tail_mask(bits) != 0) {
            return Err(Error::InvalidArgument(format!(
                "bits set beyond position {bits}"
            )));
        }
        Ok(Self { bits, words })
    }

    /// Number of bits `n`.
    pub fn len(&self) -> u32 {
        self.bits
    }

    pub fn is_empty(&self) -> bool {
        self.bits == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn bit(&self, k: u32) -> bool {
        assert!(
            k < self.bits,
            "bit {k} out of range for {}-bit hash",
            self.bits
        );
        self.words[(k / 64) as usize] >> (k % 64) & 1 == 1
    }

    pub fn set_bit(&mut self, k: u32, value: bool) {
        assert!(
            k < self.bits,
            "bit {k} out of range for {}-bit hash",
            self.bits
        );
        let word = &mut self.words[(k / 64) as usize];
        let mask = 1u64 << (k % 64);
        if value {
            *word |= mask;
        } else {
            *word &= !mask;
        }
    }

    /// Bitwise complement within the `n` used bits.
    pub fn complement(&self) -> Self {
        let mut words: Vec<u64> = self.words.iter().map(|w| !w).collect();
        if let Some(last) = words.last_mut() {
            *last &= tail_mask(self.bits);
        }
        Self {
            bits: self.bits,
            words,
        }
    }

    /// Reads `width ≤ 64` bits starting at bit `start` as an integer whose
    /// bit `i` is code bit `start + i`.
    pub fn extract(&self, start: u32, width: u32) -> u64 {
        assert!(width <= 64 && start + width <= self.bits);
        if width == 0 {
            return 0;
        }
        let word = (start / 64) as usize;
        let offset = start % 64;
        let mut value = self.words[word] >> offset;
        if offset + width > 64 {
            value |= self.words[word + 1] << (64 - offset);
        }
        if width < 64 {
            value &= (1u64 << width) - 1;
        }
        value
    }

    /// Hex form `"<bits>:<word0><word1>…"`, each word as 16 lowercase hex
    /// digits, least-significant word first.
    pub fn to_hex(&self) -> String {
        let mut s = format!("{}:", self.bits);
        for w in &self.words {
            s.push_str(&format!("{w:016x}"));
        }
        s
    }

    pub fn from_hex(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::InvalidArgument(format!("bad hash `{s}`: {why}"));
        let (len, digits) = s
            .split_once(':')
            .ok_or_else(|| bad("missing `<bits>:` prefix"))?;
        let bits: u32 = len
            .parse()
            .map_err(|_| bad("bit length is not an integer"))?;
        if bits == 0 {
            return Err(bad("bit length must be positive"));
        }
        let nwords = words_for(bits);
        if digits.len() != nwords * 16 || !digits.is_ascii() {
            return Err(bad("expected 16 hex digits per 64-bit word"));
        }
        let words = (0..nwords)
            .map(|i| u64::from_str_radix(&digits[i * 16..(i + 1) * 16], 16))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| bad("invalid hex digit"))?;
        Self::from_words(bits, words)
    }
}

impl fmt::Display for BinaryHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl FromStr for BinaryHash {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::from_hex(s)
    }
}

/// Sign binarization: bit `k` is set iff `x[k] > 0`. Zero maps to 0.
pub fn binarize(x: &[f64]) -> BinaryHash {
    let bits = u32::try_from(x.len()).expect("hash length fits in u32");
    let mut words = vec![0u64; words_for(bits)];
    for (k, &v) in x.iter().enumerate() {
        if v > 0.0 {
            words[k / 64] |= 1u64 << (k % 64);
        }
    }
    BinaryHash { bits, words }
}

/// Number of differing bit positions.
pub fn hamming_distance(a: &BinaryHash, b: &BinaryHash) -> Result<u32> {
    if a.bits != b.bits {
        return Err(Error::DimensionMismatch {
            expected: a.bits as usize,
            actual: b.bits as usize,
        });
    }
    Ok(hamming_words(&a.words, &b.words))
}

#[inline]
pub(crate) fn hamming_words(a: &[u64], b: &[u64]) -> u32 {
    a.iter().zip(b).map(|(x, y)| (x ^ y).count_ones()).sum()
}
