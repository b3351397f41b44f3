//! Text reports.
//!
//! Rates CSV columns: `r,tp_h0,fp_h1,fp_h2,fp_h3,mean_candidates`. An
//! undefined rate is an empty field. The plot TSV has columns
//! `fp_h3`, `tp_h0`, `r`.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geometry::HammingHistogram;

use super::eval::{ClassRates, RocPoint};
use super::scene::SceneMatch;

pub const RATES_HEADER: &str = "r,tp_h0,fp_h1,fp_h2,fp_h3,mean_candidates";

fn field(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn rates_csv(points: &[RocPoint]) -> String {
    let mut out = format!("{RATES_HEADER}\n");
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            p.r,
            field(p.rates.tp_h0),
            field(p.rates.fp_h1),
            field(p.rates.fp_h2),
            field(p.rates.fp_h3),
            field(p.mean_candidates)
        );
    }
    out
}

/// Reads [`rates_csv`] output. Counts are not recorded there and come back
/// as zero.
pub fn parse_rates_csv(text: &str) -> Result<Vec<RocPoint>> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, header)) if header.trim() == RATES_HEADER => {}
        Some((i, _)) => {
            return Err(Error::Parse {
                line: i + 1,
                reason: format!("expected header `{RATES_HEADER}`"),
            })
        }
        None => return Ok(Vec::new()),
    }
    lines
        .map(|(i, line)| {
            let err = |reason: String| Error::Parse {
                line: i + 1,
                reason,
            };
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() != 6 {
                return Err(err(format!("expected 6 columns, found {}", cols.len())));
            }
            let r = cols[0]
                .parse::<u32>()
                .map_err(|e| err(format!("radius: {e}")))?;
            let num = |s: &str| -> Result<Option<f64>> {
                if s.is_empty() {
                    return Ok(None);
                }
                s.parse::<f64>()
                    .map(Some)
                    .map_err(|e| err(format!("rate `{s}`: {e}")))
            };
            Ok(RocPoint {
                r,
                rates: ClassRates::from_rates(
                    num(cols[1])?,
                    num(cols[2])?,
                    num(cols[3])?,
                    num(cols[4])?,
                ),
                mean_candidates: num(cols[5])?,
            })
        })
        .collect()
}

pub fn roc_tsv(points: &[RocPoint]) -> String {
    let mut out = String::from("fp_h3\ttp_h0\tr\n");
    for p in points {
        let _ = writeln!(
            out,
            "{}\t{}\t{}",
            field(p.rates.fp_h3),
            field(p.rates.tp_h0),
            p.r
        );
    }
    out
}

pub fn scene_matches_jsonl(matches: &[SceneMatch]) -> String {
    matches
        .iter()
        .map(|m| serde_json::to_string(m).expect("scene match serializes") + "\n")
        .collect()
}

/// Empirical and binomial probabilities per distance, then a summary line
/// `# tvd=<tvd> mean=<mean> trials=<trials>`.
pub fn histogram_tsv(hist: &HammingHistogram, p: f64) -> Result<String> {
    let freq = hist.frequencies();
    let mut out = String::from("distance\tcount\tempirical\tbinomial\n");
    for (d, (&count, f)) in hist.counts().iter().zip(&freq).enumerate() {
        let expected = crate::geometry::binom_pmf(d as u64, hist.n() as u64, p)?;
        let _ = writeln!(out, "{d}\t{count}\t{f}\t{expected}");
    }
    let tvd = hist.total_variation_to_binomial(p)?;
    let _ = writeln!(
        out,
        "# tvd={tvd} mean={} trials={}",
        hist.mean(),
        hist.trials()
    );
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let points = vec![
            RocPoint {
                r: 2,
                rates: ClassRates::from_counts([3, 1, 0, 0], [4, 5, 0, 7]),
                mean_candidates: Some(0.25),
            },
            RocPoint {
                r: 3,
                rates: ClassRates::from_rates(Some(0.8), None, Some(1e-7), Some(2.18e-5)),
                mean_candidates: None,
            },
        ];
        let text = rates_csv(&points);
        assert!(text.starts_with(RATES_HEADER));
        assert!(text.contains("\n2,0.75,0.2,,0,0.25\n"));
        let back = parse_rates_csv(&text).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].rates.tp_h0, Some(0.75));
        assert_eq!(back[0].rates.fp_h2, None);
        assert_eq!(back[1].rates.fp_h3, Some(2.18e-5));
        assert_eq!(back[1].mean_candidates, None);
        assert!(matches!(
            parse_rates_csv("bad\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_rates_csv(&format!("{RATES_HEADER}\n1,x,,,,\n")),
            Err(Error::Parse { line: 2, .. })
        ));
    }
}
