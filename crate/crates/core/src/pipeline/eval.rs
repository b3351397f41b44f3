//! Per-class match rates over all unordered frame pairs.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::hamming_words;
use crate::loss::{classify_pair, PairClass};
use crate::multi_index::{split_substrings, Posting};

use super::ingest::{hash_records, EmbeddingRecord};

pub const DEFAULT_MIN_TP: f64 = 0.6;
pub const DEFAULT_FP_PENALTY: f64 = 1e5;

/// Rows handed to one worker in the pairwise pass.
const ROW_BLOCK: usize = 64;

/// Matched and total pair counts per class, with the derived rates.
///
/// The H0 rate is the true-positive rate; H1–H3 rates are false-positive
/// rates. A rate is `None` when its class has no pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassRates {
    pub tp_h0: Option<f64>,
    pub fp_h1: Option<f64>,
    pub fp_h2: Option<f64>,
    pub fp_h3: Option<f64>,
    /// Pairs within the radius, indexed by [`PairClass::index`].
    pub matched: [u64; 4],
    /// All pairs, indexed by [`PairClass::index`].
    pub pairs: [u64; 4],
}

impl ClassRates {
    pub fn from_counts(matched: [u64; 4], pairs: [u64; 4]) -> Self {
        let rate = |c: usize| (pairs[c] > 0).then(|| matched[c] as f64 / pairs[c] as f64);
        Self {
            tp_h0: rate(0),
            fp_h1: rate(1),
            fp_h2: rate(2),
            fp_h3: rate(3),
            matched,
            pairs,
        }
    }

    /// Rates known without their counts, e.g. read back from a report.
    /// Counts are left at zero.
    pub fn from_rates(
        tp_h0: Option<f64>,
        fp_h1: Option<f64>,
        fp_h2: Option<f64>,
        fp_h3: Option<f64>,
    ) -> Self {
        Self {
            tp_h0,
            fp_h1,
            fp_h2,
            fp_h3,
            matched: [0; 4],
            pairs: [0; 4],
        }
    }

    pub fn rate(&self, class: PairClass) -> Option<f64> {
        match class {
            PairClass::H0 => self.tp_h0,
            PairClass::H1 => self.fp_h1,
            PairClass::H2 => self.fp_h2,
            PairClass::H3 => self.fp_h3,
        }
    }

    pub fn total_pairs(&self) -> u64 {
        self.pairs.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocPoint {
    pub r: u32,
    pub rates: ClassRates,
    /// Mean raw candidates per substring table when every record queries an
    /// index holding all the others.
    pub mean_candidates: Option<f64>,
}

/// Per-class histograms of pair distances from one pairwise pass.
#[derive(Debug, Clone, PartialEq)]
pub struct PairDistanceHistogram {
    n: u32,
    records: usize,
    counts: [Vec<u64>; 4],
    parts: Option<u32>,
    substring_matches: u64,
}

impl PairDistanceHistogram {
    fn empty(n: u32, records: usize, parts: Option<u32>) -> Self {
        Self {
            n,
            records,
            counts: std::array::from_fn(|_| vec![0; n as usize + 1]),
            parts,
            substring_matches: 0,
        }
    }

    fn merge(&mut self, other: &Self) {
        for (mine, theirs) in self.counts.iter_mut().zip(&other.counts) {
            for (a, b) in mine.iter_mut().zip(theirs) {
                *a += b;
            }
        }
        self.substring_matches += other.substring_matches;
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// Pairs at each distance for one class.
    pub fn counts(&self, class: PairClass) -> &[u64] {
        &self.counts[class.index()]
    }

    /// Number of unordered pairs examined.
    pub fn pairs(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn rates_at(&self, r: u32) -> ClassRates {
        let upto = (r.min(self.n) as usize) + 1;
        let matched = std::array::from_fn(|c| self.counts[c][..upto].iter().sum());
        let pairs = std::array::from_fn(|c| self.counts[c].iter().sum());
        ClassRates::from_counts(matched, pairs)
    }

    /// Each unordered pair sharing `m` substrings is a raw candidate `m`
    /// times in each direction.
    pub fn mean_candidates(&self) -> Option<f64> {
        let parts = self.parts?;
        if self.records == 0 {
            return None;
        }
        Some(2.0 * self.substring_matches as f64 / (self.records as f64 * parts as f64))
    }
}

fn common_length(records: &[Posting]) -> Result<u32> {
    let n = records.first().map(|p| p.hash.len()).ok_or_else(|| {
        Error::DegenerateInput("pair evaluation needs at least two records".into())
    })?;
    if records.len() < 2 {
        return Err(Error::DegenerateInput(
            "pair evaluation needs at least two records".into(),
        ));
    }
    if let Some(bad) = records.iter().find(|p| p.hash.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n as usize,
            actual: bad.hash.len() as usize,
        });
    }
    Ok(n)
}

/// Bins every unordered pair by class and distance. With `parts`, also counts
/// substring collisions for the candidate statistic.
pub fn pair_distance_histogram(
    records: &[Posting],
    t0: f64,
    parts: Option<u32>,
) -> Result<PairDistanceHistogram> {
    let n = common_length(records)?;
    let keys: Option<Vec<Vec<u64>>> = parts
        .map(|p| {
            records
                .iter()
                .map(|r| split_substrings(&r.hash, p))
                .collect()
        })
        .transpose()?;
    let k = records.len();
    let blocks: Vec<PairDistanceHistogram> = (0..k)
        .step_by(ROW_BLOCK)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|start| {
            let mut hist = PairDistanceHistogram::empty(n, k, parts);
            for i in start..(start + ROW_BLOCK).min(k) {
                let a = &records[i];
                for (j, b) in records.iter().enumerate().skip(i + 1) {
                    let d = hamming_words(a.hash.words(), b.hash.words());
                    let class = classify_pair(&a.frame, &b.frame, t0);
                    hist.counts[class.index()][d as usize] += 1;
                    if let Some(keys) = &keys {
                        hist.substring_matches +=
                            keys[i].iter().zip(&keys[j]).filter(|(x, y)| x == y).count() as u64;
                    }
                }
            }
            hist
        })
        .collect();
    let mut total = PairDistanceHistogram::empty(n, k, parts);
    for block in &blocks {
        total.merge(block);
    }
    Ok(total)
}

/// Rates at radius `r` over all unordered distinct pairs.
pub fn evaluate_pair_rates(records: &[Posting], r: u32, t0: f64) -> Result<ClassRates> {
    Ok(pair_distance_histogram(records, t0, None)?.rates_at(r))
}

/// Binarizes and then evaluates as [`evaluate_pair_rates`].
pub fn evaluate_embedding_rates(
    records: &[EmbeddingRecord],
    r: u32,
    t0: f64,
) -> Result<ClassRates> {
    evaluate_pair_rates(&hash_records(records), r, t0)
}

/// One ROC point per radius from a single pairwise pass.
pub fn roc_sweep(
    records: &[Posting],
    r_values: &[u32],
    t0: f64,
    parts: Option<u32>,
) -> Result<Vec<RocPoint>> {
    if r_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "radii must be strictly increasing".into(),
        ));
    }
    let hist = pair_distance_histogram(records, t0, parts)?;
    if let Some(&r) = r_values.last() {
        if r > hist.n() {
            return Err(Error::InvalidArgument(format!(
                "radius {r} exceeds hash length {}",
                hist.n()
            )));
        }
    }
    let mean_candidates = hist.mean_candidates();
    Ok(r_values
        .iter()
        .map(|&r| RocPoint {
            r,
            rates: hist.rates_at(r),
            mean_candidates,
        })
        .collect())
}

/// Radius maximizing `tp_h0 - fp_penalty * fp_h3` among points with
/// `tp_h0 >= min_tp`. Ties go to the smaller radius. A missing H3 rate counts
/// as zero; a missing H0 rate disqualifies the point.
pub fn select_radius(points: &[RocPoint], min_tp: f64, fp_penalty: f64) -> Option<u32> {
    let mut best: Option<(u32, f64)> = None;
    for p in points {
        let Some(tp) = p.rates.tp_h0 else { continue };
        if tp < min_tp {
            continue;
        }
        let score = tp - fp_penalty * p.rates.fp_h3.unwrap_or(0.0);
        best = match best {
            Some((r, s)) if s > score || (s == score && r <= p.r) => Some((r, s)),
            _ => Some((p.r, score)),
        };
    }
    best.map(|(r, _)| r)
}
