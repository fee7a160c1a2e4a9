//! `sage bench`: wall-clock medians for the offset search and the pipeline.

use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use rand::Rng;
use serde::Serialize;

use sage_core::mixer::sage_augment;
use sage_core::rearrange::{search_budget, search_offset, search_offset_parallel};
use sage_core::saliency::prepare_pair;
use sage_core::types::{one_hot, ImageTensor, SaliencyMap};
use sage_core::{SageConfig, SeededRng};

use crate::error::{CliError, Result};
use crate::setup;

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Image side length to benchmark.
    #[arg(long, default_value_t = 32)]
    pub side: usize,
    /// Timed repetitions per measurement; the report records medians.
    #[arg(long, default_value_t = 25)]
    pub reps: usize,
    /// Search fractions to time.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.01f32, 0.1, 0.5, 1.0])]
    pub fractions: Vec<f32>,
    /// Seed for the benchmark inputs; falls back to SAGE_SEED, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Report file; omit to print to standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct SearchRow {
    fraction: f32,
    candidates: usize,
    median_seconds: f64,
    parallel_median_seconds: f64,
}

#[derive(Serialize)]
struct BenchReport {
    side: usize,
    reps: usize,
    seed: u64,
    search: Vec<SearchRow>,
    augment_median_seconds: f64,
}

pub fn run(args: BenchArgs) -> Result<()> {
    if args.reps == 0 {
        return Err(CliError::Usage("--reps must be at least 1".into()));
    }
    if args.side < 2 {
        return Err(CliError::Usage("--side must be at least 2".into()));
    }
    let seed = setup::resolve_seed(args.seed, None)?;
    let side = args.side;

    // Fixed random workload: two saliency maps and two images, prepared once.
    let mut input_rng = SeededRng::split(seed, 0);
    let map = |rng: &mut SeededRng| {
        SaliencyMap::new(side, (0..side * side).map(|_| rng.random()).collect())
            .expect("random entries are valid")
    };
    let s0 = map(&mut input_rng);
    let s1 = map(&mut input_rng);
    let x0 = ImageTensor::from_fn(side, |_, _, _| input_rng.random())?;
    let x1 = ImageTensor::from_fn(side, |_, _, _| input_rng.random())?;
    let (p0, p1) = prepare_pair(&s0, &s1, 0.5, 1.0)?;

    let mut search = Vec::new();
    for &fraction in &args.fractions {
        let sequential = median_time(args.reps, |rep| {
            let mut rng = SeededRng::split(seed, 1 + rep as u64);
            search_offset(&p0, &p1, fraction, &mut rng, 1e-8).map(|_| ())
        })?;
        let parallel = median_time(args.reps, |rep| {
            let mut rng = SeededRng::split(seed, 1 + rep as u64);
            search_offset_parallel(&p0, &p1, fraction, &mut rng, 1e-8).map(|_| ())
        })?;
        search.push(SearchRow {
            fraction,
            candidates: search_budget(side, fraction),
            median_seconds: sequential,
            parallel_median_seconds: parallel,
        });
    }

    let config = SageConfig {
        seed,
        ..SageConfig::default()
    };
    let y0 = one_hot(0, 2)?;
    let y1 = one_hot(1, 2)?;
    let augment_median_seconds = median_time(args.reps, |rep| {
        let mut rng = SeededRng::split(seed, 1000 + rep as u64);
        sage_augment(&x0, &y0, &x1, &y1, (&s0, &s1), &config, &mut rng).map(|_| ())
    })?;

    let report = BenchReport {
        side,
        reps: args.reps,
        seed,
        search,
        augment_median_seconds,
    };
    setup::emit(args.out.as_deref(), &setup::to_json_line(&report)?)
}

fn median_time(
    reps: usize,
    mut work: impl FnMut(usize) -> sage_core::Result<()>,
) -> Result<f64> {
    let mut times = Vec::with_capacity(reps);
    for rep in 0..reps {
        let start = Instant::now();
        work(rep)?;
        times.push(start.elapsed().as_secs_f64());
    }
    times.sort_by(f64::total_cmp);
    let mid = times.len() / 2;
    Ok(if times.len() % 2 == 1 {
        times[mid]
    } else {
        (times[mid - 1] + times[mid]) / 2.0
    })
}
