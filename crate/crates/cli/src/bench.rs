//! `bench`: forward-backward runtime against sequence length.

use std::hint::black_box;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use anyhow::{bail, Result};
use clap::{Args, ValueEnum};
use serde::Serialize;
use weakauto::datagen::rng_for;
use weakauto::table::{log_softmax_rows, Table};
use weakauto::verify::random_logits;
use weakauto::{build_trellis, posteriors, SupervisionSpec, Trellis};

use crate::formats::write_json;
use crate::{Outcome, EXIT_CHECK_FAILED, EXIT_OK};

/// Inner loops are sized so one timed batch lasts about this long.
const TARGET_BATCH: Duration = Duration::from_millis(20);

/// Untimed work before calibration, to settle clocks and caches.
const WARM_UP: Duration = Duration::from_millis(50);

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchKind {
    /// Exactly `positives` positives per sequence.
    Lprop,
    /// At least one positive per sequence.
    MultiInstance,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BenchArgs {
    #[arg(long, value_enum, default_value_t = BenchKind::Lprop)]
    pub kind: BenchKind,
    /// Comma-separated sequence lengths.
    #[arg(long, value_delimiter = ',', default_value = "100,200,400,800")]
    pub lengths: Vec<usize>,
    /// Positive count for `lprop`.
    #[arg(long, default_value_t = 5)]
    pub positives: usize,
    /// Timed batches per length; the median is reported.
    #[arg(long, default_value_t = 20)]
    pub repeats: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fail if time grows by more than this factor between consecutive lengths.
    #[arg(long)]
    pub max_ratio: Option<f64>,
    /// Optional JSON table.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub len: usize,
    pub edges: usize,
    pub iterations: usize,
    /// Median seconds per sequence over the repeats.
    pub seconds: f64,
    /// `seconds` relative to the previous row.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub kind: BenchKind,
    pub positives: usize,
    pub repeats: usize,
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn max_ratio(&self) -> Option<f64> {
        self.rows.iter().filter_map(|r| r.ratio).reduce(f64::max)
    }
}

fn spec(kind: BenchKind, len: usize, positives: usize) -> SupervisionSpec {
    match kind {
        BenchKind::Lprop => SupervisionSpec::LabelProportion { len, positives },
        BenchKind::MultiInstance => SupervisionSpec::MultiInstance { len, present: true },
    }
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// One length's fixed inputs.
struct Case {
    trellis: Trellis,
    log_probs: Table,
    iterations: usize,
}

impl Case {
    fn new(args: &BenchArgs, len: usize) -> Result<Self> {
        let spec = spec(args.kind, len, args.positives);
        spec.validate(2)?;
        let trellis = build_trellis(&spec.compile(2)?, len);
        let mut rng = rng_for(args.seed, len as u64);
        let log_probs = log_softmax_rows(&random_logits(&mut rng, len, 2));
        let mut case = Case {
            trellis,
            log_probs,
            iterations: 1,
        };
        let start = Instant::now();
        let mut runs = 0;
        while start.elapsed() < WARM_UP {
            case.batch(1)?;
            runs += 1;
        }
        let single = start.elapsed().as_secs_f64() / runs as f64;
        case.iterations = (TARGET_BATCH.as_secs_f64() / single).ceil().max(1.0) as usize;
        Ok(case)
    }

    fn batch(&self, iterations: usize) -> Result<Duration> {
        let start = Instant::now();
        for _ in 0..iterations {
            black_box(posteriors(
                black_box(&self.trellis),
                black_box(&self.log_probs),
            )?);
        }
        Ok(start.elapsed())
    }

    /// Seconds per sequence over one calibrated batch.
    fn sample(&self) -> Result<f64> {
        Ok(self.batch(self.iterations)?.as_secs_f64() / self.iterations as f64)
    }
}

pub fn bench(args: &BenchArgs) -> Result<BenchReport> {
    if args.lengths.is_empty() {
        bail!("at least one length is required");
    }
    if args.lengths.contains(&0) {
        bail!("lengths must be at least 1");
    }
    if args.repeats == 0 {
        bail!("repeats must be at least 1");
    }
    let cases = args
        .lengths
        .iter()
        .map(|&len| Case::new(args, len))
        .collect::<Result<Vec<_>>>()?;
    // Repeats cycle through the lengths so slow drift affects all of them.
    let mut samples = vec![Vec::with_capacity(args.repeats); cases.len()];
    for _ in 0..args.repeats {
        for (case, times) in cases.iter().zip(&mut samples) {
            times.push(case.sample()?);
        }
    }
    let mut rows: Vec<BenchRow> = Vec::with_capacity(cases.len());
    for ((case, times), &len) in cases.iter().zip(samples).zip(&args.lengths) {
        let seconds = median(times);
        rows.push(BenchRow {
            len,
            edges: case.trellis.num_edges(),
            iterations: case.iterations,
            seconds,
            ratio: rows.last().map(|prev| seconds / prev.seconds),
        });
    }
    Ok(BenchReport {
        kind: args.kind,
        positives: args.positives,
        repeats: args.repeats,
        rows,
    })
}

pub fn run(args: &BenchArgs) -> Result<Outcome> {
    let report = bench(args)?;
    println!(
        "{:>8} {:>9} {:>10} {:>14} {:>7}",
        "length", "edges", "iters", "sec/seq", "ratio"
    );
    for r in &report.rows {
        let ratio = r.ratio.map_or_else(|| "-".into(), |x| format!("{x:.3}"));
        println!(
            "{:>8} {:>9} {:>10} {:>14.4e} {:>7}",
            r.len, r.edges, r.iterations, r.seconds, ratio
        );
    }
    if let Some(out) = &args.out {
        write_json(out, &report)?;
    }
    let status = match (args.max_ratio, report.max_ratio()) {
        (Some(limit), Some(worst)) if worst > limit => {
            println!("FAIL: ratio {worst:.3} exceeds {limit}");
            EXIT_CHECK_FAILED
        }
        _ => EXIT_OK,
    };
    Ok(Outcome {
        status,
        out: args.out.clone(),
    })
}
