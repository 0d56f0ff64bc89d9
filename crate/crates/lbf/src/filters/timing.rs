//! Wall-clock query timing.

use std::hint::black_box;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::Filter;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingConfig {
    /// Independent repetitions; the median survives scheduler noise.
    pub repeats: usize,
    /// Each repetition tiles over the query set until at least this many
    /// queries ran, so short sets still produce measurable spans.
    pub min_queries: usize,
}

impl Default for TimingConfig {
    fn default() -> Self {
        TimingConfig {
            repeats: 5,
            min_queries: 10_000,
        }
    }
}

/// Median nanoseconds per query over repeated timed passes, after one
/// untimed warm-up pass.
pub fn query_time_ns<F: Filter + ?Sized>(
    filter: &F,
    queries: &[Vec<f64>],
    config: &TimingConfig,
) -> Result<f64> {
    if queries.is_empty() {
        return Err(Error::InvalidArgument("no queries to time".into()));
    }
    if config.repeats == 0 || config.min_queries == 0 {
        return Err(Error::InvalidArgument(
            "timing needs at least one repetition over at least one query".into(),
        ));
    }
    let tiles = config.min_queries.div_ceil(queries.len());
    let per_pass = (tiles * queries.len()) as f64;

    for q in queries {
        black_box(filter.accepts(black_box(q)));
    }

    let mut samples = Vec::with_capacity(config.repeats);
    for _ in 0..config.repeats {
        let start = Instant::now();
        for _ in 0..tiles {
            for q in queries {
                black_box(filter.accepts(black_box(q)));
            }
        }
        samples.push(start.elapsed().as_nanos() as f64 / per_pass);
    }
    samples.sort_by(f64::total_cmp);
    let mid = samples.len() / 2;
    Ok(if samples.len() % 2 == 1 {
        samples[mid]
    } else {
        (samples[mid - 1] + samples[mid]) / 2.0
    })
}

/// Signed percent difference from a baseline time; negative means faster.
pub fn percent_vs_baseline(time_ns: f64, baseline_ns: f64) -> f64 {
    100.0 * (time_ns - baseline_ns) / baseline_ns
}
