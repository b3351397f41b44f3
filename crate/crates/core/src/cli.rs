//! `chasm` command-line front end.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on data errors. Data goes
//! to standard output or the `--out` file, diagnostics to standard error.
//! Frame inputs are either embedding JSON lines or a hash dataset file; the
//! format is detected from the first bytes.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::json;

use crate::error::{Error, Result};
use crate::geometry::{mc_hamming_distribution, BinaryHash};
use crate::loss::DEFAULT_T0;
use crate::multi_index::{LookupResult, MultiIndex, Posting};
use crate::pipeline::{
    evaluate_pair_rates, hash_records, ingest_embeddings, match_scenes, read_hash_dataset, report,
    roc_sweep, select_radius, write_hash_dataset, ClassRates, RocPoint, SceneParams,
    DEFAULT_FP_PENALTY, DEFAULT_MIN_TP, HASH_MAGIC,
};
use crate::trainer::{history_csv, TrainConfig};

#[derive(Debug, Parser)]
#[command(
    name = "chasm",
    version,
    about = "Binary frame hashing and scene matching"
)]
struct Cli {
    /// Worker threads for parallel stages; 0 uses all cores.
    #[arg(long, global = true, env = "CHASM_THREADS", default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Output {
    /// Write data here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Monte Carlo Hamming histogram for point pairs at a fixed angle.
    McVerify {
        #[arg(long)]
        n: usize,
        /// Angle between the points, radians.
        #[arg(long)]
        theta: f64,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Binarize embeddings into a hash dataset file.
    Hash {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        exclude_black: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Build a multi-index file from embeddings or hashes.
    IndexBuild {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        parts: u32,
        #[arg(long)]
        exclude_black: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Look up one hash; prints the lookup result as JSON.
    Query {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        r: u32,
        /// `<bits>:<hex words>`
        #[arg(long)]
        hash: String,
        /// Permit radii beyond the index's guaranteed-complete range.
        #[arg(long)]
        allow_incomplete: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Per-class pair rates at one radius, as CSV.
    Eval {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        r: u32,
        #[arg(long, default_value_t = DEFAULT_T0)]
        t0: f64,
        #[arg(long)]
        exclude_black: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Rates over a range of radii, as CSV or plot TSV.
    Roc {
        #[arg(long = "in")]
        input: PathBuf,
        /// Comma-separated ascending radii; defaults to 0..=n.
        #[arg(long, value_delimiter = ',')]
        r_values: Vec<u32>,
        #[arg(long, default_value_t = DEFAULT_T0)]
        t0: f64,
        /// Substring count for the mean-candidates column.
        #[arg(long)]
        parts: Option<u32>,
        #[arg(long)]
        exclude_black: bool,
        #[arg(long)]
        tsv: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Pick a radius from a rates CSV; prints the radius or `none`.
    SelectR {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MIN_TP)]
        min_tp: f64,
        #[arg(long, default_value_t = DEFAULT_FP_PENALTY)]
        fp_penalty: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Match query videos against an index; prints scene matches as JSON lines.
    Match {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        query: PathBuf,
        #[arg(long)]
        r: u32,
        #[arg(long, default_value_t = 5)]
        min_support: usize,
        #[arg(long, default_value_t = 1.0)]
        max_gap: f64,
        #[arg(long, default_value_t = DEFAULT_T0)]
        t0: f64,
        #[arg(long)]
        exclude_black: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Train the toy model; prints the loss history CSV.
    TrainToy {
        /// TOML configuration; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        steps: Option<usize>,
        #[command(flatten)]
        output: Output,
    },
}

enum Failure {
    Usage(String),
    Data(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Data(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Data(e.into())
    }
}

/// Runs with the process's standard streams.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = io::stdout();
    let stderr = io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

/// Runs with the given output and diagnostic streams.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = out.write_all(text.as_bytes());
                    0
                }
                _ => {
                    let _ = err.write_all(text.as_bytes());
                    1
                }
            };
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
    {
        Ok(pool) => pool,
        Err(e) => {
            let _ = writeln!(err, "error: thread pool: {e}");
            return 2;
        }
    };
    match dispatch(cli.command, &pool, out, err) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            1
        }
        Err(Failure::Data(e)) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}

fn emit(output: &Output, out: &mut dyn Write, bytes: &[u8]) -> io::Result<()> {
    match &output.out {
        Some(path) => {
            let mut file = BufWriter::new(File::create(path)?);
            file.write_all(bytes)?;
            file.flush()
        }
        None => {
            out.write_all(bytes)?;
            out.flush()
        }
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

/// Hashed frames from either input format.
pub fn load_frames(path: &Path, exclude_black: bool) -> Result<(u32, Vec<Posting>)> {
    let mut bytes = Vec::new();
    open(path)?.read_to_end(&mut bytes)?;
    if bytes.starts_with(HASH_MAGIC) {
        return read_hash_dataset(bytes.as_slice());
    }
    let data = ingest_embeddings(bytes.as_slice(), exclude_black)?;
    let n = data
        .dim()
        .ok_or_else(|| Error::DegenerateInput(format!("{} holds no frames", path.display())))?;
    Ok((n as u32, hash_records(&data.records)))
}

fn load_index(path: &Path) -> Result<MultiIndex> {
    MultiIndex::load(open(path)?)
}

/// JSON form of a lookup, as printed by `query`.
pub fn lookup_report(r: u32, result: &LookupResult<'_>) -> serde_json::Value {
    let matches: Vec<_> = result
        .matches
        .iter()
        .map(|m| {
            json!({
                "id": m.id.0,
                "distance": m.distance,
                "video": m.posting.frame.video_id,
                "shot": m.posting.frame.shot_id,
                "t": m.posting.frame.timestamp,
                "hash": m.posting.hash.to_hex(),
            })
        })
        .collect();
    json!({
        "r": r,
        "candidates": result.candidates,
        "table_hits": result.table_hits,
        "matches": matches,
    })
}

/// Query frames grouped by video, each group time-ordered.
pub fn split_query_videos(mut frames: Vec<Posting>) -> Vec<Vec<Posting>> {
    frames.sort_by(|a, b| {
        a.frame
            .video_id
            .cmp(&b.frame.video_id)
            .then(a.frame.timestamp.total_cmp(&b.frame.timestamp))
    });
    let mut groups: Vec<Vec<Posting>> = Vec::new();
    for p in frames {
        match groups.last_mut() {
            Some(g) if g[0].frame.video_id == p.frame.video_id => g.push(p),
            _ => groups.push(vec![p]),
        }
    }
    groups
}

fn dispatch(
    command: Command,
    pool: &rayon::ThreadPool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), Failure> {
    match command {
        Command::McVerify {
            n,
            theta,
            trials,
            seed,
            output,
        } => {
            let hist = pool.install(|| mc_hamming_distribution(n, theta, trials, seed))?;
            let p = theta / std::f64::consts::PI;
            emit(&output, out, report::histogram_tsv(&hist, p)?.as_bytes())?;
        }
        Command::Hash {
            input,
            exclude_black,
            output,
        } => {
            let data = ingest_embeddings(open(&input)?, exclude_black)?;
            if data.dropped_black > 0 {
                writeln!(err, "dropped {} black frames", data.dropped_black)?;
            }
            let n = data.dim().ok_or_else(|| {
                Error::DegenerateInput(format!("{} holds no frames", input.display()))
            })?;
            let mut bytes = Vec::new();
            write_hash_dataset(n as u32, &hash_records(&data.records), &mut bytes)?;
            emit(&output, out, &bytes)?;
        }
        Command::IndexBuild {
            input,
            parts,
            exclude_black,
            output,
        } => {
            let (n, frames) = load_frames(&input, exclude_black)?;
            let index = MultiIndex::from_postings(n, parts, frames)?;
            let mut bytes = Vec::new();
            index.save(&mut bytes)?;
            emit(&output, out, &bytes)?;
            writeln!(err, "indexed {} frames in {parts} tables", index.len())?;
        }
        Command::Query {
            index,
            r,
            hash,
            allow_incomplete,
            output,
        } => {
            let h: BinaryHash = hash
                .parse()
                .map_err(|e: Error| Failure::Usage(format!("--hash: {e}")))?;
            let index = load_index(&index)?;
            let result = index.lookup_with(&h, r, allow_incomplete)?;
            let text = lookup_report(r, &result).to_string() + "\n";
            emit(&output, out, text.as_bytes())?;
        }
        Command::Eval {
            input,
            r,
            t0,
            exclude_black,
            output,
        } => {
            let (_, frames) = load_frames(&input, exclude_black)?;
            let rates: ClassRates = pool.install(|| evaluate_pair_rates(&frames, r, t0))?;
            let point = RocPoint {
                r,
                rates,
                mean_candidates: None,
            };
            emit(&output, out, report::rates_csv(&[point]).as_bytes())?;
        }
        Command::Roc {
            input,
            r_values,
            t0,
            parts,
            exclude_black,
            tsv,
            output,
        } => {
            let (n, frames) = load_frames(&input, exclude_black)?;
            let radii = if r_values.is_empty() {
                (0..=n).collect()
            } else {
                r_values
            };
            let points = pool.install(|| roc_sweep(&frames, &radii, t0, parts))?;
            let text = if tsv {
                report::roc_tsv(&points)
            } else {
                report::rates_csv(&points)
            };
            emit(&output, out, text.as_bytes())?;
        }
        Command::SelectR {
            input,
            min_tp,
            fp_penalty,
            output,
        } => {
            let mut text = String::new();
            open(&input)?.read_to_string(&mut text)?;
            let points = report::parse_rates_csv(&text)?;
            if points.is_empty() {
                return Err(Error::DegenerateInput("no ROC points".into()).into());
            }
            let chosen = select_radius(&points, min_tp, fp_penalty)
                .map_or_else(|| "none".to_string(), |r| r.to_string());
            emit(&output, out, format!("{chosen}\n").as_bytes())?;
        }
        Command::Match {
            index,
            query,
            r,
            min_support,
            max_gap,
            t0,
            exclude_black,
            output,
        } => {
            let index = load_index(&index)?;
            let (_, frames) = load_frames(&query, exclude_black)?;
            let params = SceneParams {
                min_support,
                max_gap_seconds: max_gap,
                t0,
            };
            let groups = split_query_videos(frames);
            let found: Vec<_> = pool.install(|| {
                groups
                    .par_iter()
                    .map(|g| match_scenes(g, &index, r, &params))
                    .collect::<Result<_>>()
            })?;
            let all: Vec<_> = found.into_iter().flatten().collect();
            emit(&output, out, report::scene_matches_jsonl(&all).as_bytes())?;
        }
        Command::TrainToy {
            config,
            seed,
            steps,
            output,
        } => {
            let mut cfg = match config {
                Some(path) => {
                    let mut text = String::new();
                    open(&path)?.read_to_string(&mut text)?;
                    TrainConfig::from_toml(&text)?
                }
                None => TrainConfig::default(),
            };
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if let Some(steps) = steps {
                cfg.steps = steps;
            }
            let run = pool.install(|| cfg.run())?;
            emit(&output, out, history_csv(&run.history).as_bytes())?;
            match run.selected_r {
                Some(r) => {
                    let rates = &run.heldout[r as usize].rates;
                    writeln!(
                        err,
                        "selected r={r} heldout tp_h0={} fp_h3={}",
                        rates.tp_h0.unwrap_or(f64::NAN),
                        rates.fp_h3.unwrap_or(f64::NAN)
                    )?;
                }
                None => writeln!(err, "no radius reaches the minimum TP rate")?,
            }
        }
    }
    Ok(())
}
