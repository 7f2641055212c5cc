use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::similarity::{rank, ScorerConfig};
use crate::store::{ItemKind, ReprStore, StoreError};

/// One timed text-to-image query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub query_id: String,
    pub rep: usize,
    /// Fetching the query representation from the store.
    pub lookup_secs: f64,
    /// Scoring and ranking the whole image gallery.
    pub scoring_secs: f64,
    pub total_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencySummary {
    pub samples: usize,
    pub mean_secs: f64,
    pub median_secs: f64,
    /// Nearest-rank 95th percentile.
    pub p95_secs: f64,
    pub min_secs: f64,
    pub max_secs: f64,
}

impl LatencySummary {
    /// `None` for an empty sample.
    pub fn of(samples: &[f64]) -> Option<Self> {
        if samples.is_empty() {
            return None;
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
        };
        let p95_rank = (0.95 * n as f64).ceil() as usize;
        Some(Self {
            samples: n,
            mean_secs: sorted.iter().sum::<f64>() / n as f64,
            median_secs: median,
            p95_secs: sorted[p95_rank.clamp(1, n) - 1],
            min_secs: sorted[0],
            max_secs: sorted[n - 1],
        })
    }
}

/// Machine the numbers were measured on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HardwareNote {
    pub logical_cpus: usize,
    pub worker_threads: usize,
    pub os: String,
    pub arch: String,
}

impl HardwareNote {
    pub fn current() -> Self {
        Self {
            logical_cpus: std::thread::available_parallelism().map_or(1, |n| n.get()),
            worker_threads: rayon::current_num_threads(),
            os: std::env::consts::OS.to_string(),
            arch: std::env::consts::ARCH.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyReport {
    pub gallery_size: usize,
    pub k: usize,
    pub alpha: f32,
    pub reps: usize,
    pub rows: Vec<TimingRow>,
    pub total: Option<LatencySummary>,
    pub lookup: Option<LatencySummary>,
    pub scoring: Option<LatencySummary>,
    pub hardware: HardwareNote,
}

impl LatencyReport {
    pub fn render(&self) -> String {
        let mut out = format!(
            "gallery={} k={} alpha={} reps={} samples={}\n",
            self.gallery_size,
            self.k,
            self.alpha,
            self.reps,
            self.rows.len()
        );
        out.push_str(&format!(
            "{:<8}{:>12}{:>12}{:>12}\n",
            "phase", "mean_s", "median_s", "p95_s"
        ));
        for (name, s) in [
            ("lookup", &self.lookup),
            ("scoring", &self.scoring),
            ("total", &self.total),
        ] {
            match s {
                Some(s) => out.push_str(&format!(
                    "{:<8}{:>12.6}{:>12.6}{:>12.6}\n",
                    name, s.mean_secs, s.median_secs, s.p95_secs
                )),
                None => out.push_str(&format!("{name:<8}{:>12}{:>12}{:>12}\n", "-", "-", "-")),
            }
        }
        out.push_str(&format!(
            "hardware: {} logical cpus, {} worker threads, {}/{}\n",
            self.hardware.logical_cpus, self.hardware.worker_threads, self.hardware.os, self.hardware.arch
        ));
        out
    }
}

/// Time text-to-image retrieval for each description id in `queries`, one
/// query at a time, `reps` times over. A first pass over all queries warms
/// caches and is not recorded.
pub fn time_retrieval(
    store: &ReprStore,
    queries: &[String],
    reps: usize,
    k: usize,
    scorer: &ScorerConfig,
) -> Result<LatencyReport, EvalError> {
    if k == 0 {
        return Err(EvalError::InvalidK);
    }
    for q in queries {
        if store.row_of(q, ItemKind::Description).is_none() {
            return Err(StoreError::UnknownItem(q.clone()).into());
        }
    }
    let scorer_impl = scorer.build()?;
    let gallery = store.candidates(ItemKind::Image);
    let mut rows = Vec::with_capacity(queries.len() * reps);
    for pass in 0..=reps {
        for q in queries {
            let started = Instant::now();
            let repr = store.get_representation(q, ItemKind::Description)?;
            let looked_up = Instant::now();
            let hits = rank(&repr.view(), &gallery, k, scorer_impl.as_ref())?;
            let done = Instant::now();
            std::hint::black_box(hits);
            if pass == 0 {
                continue;
            }
            rows.push(TimingRow {
                query_id: q.clone(),
                rep: pass - 1,
                lookup_secs: (looked_up - started).as_secs_f64(),
                scoring_secs: (done - looked_up).as_secs_f64(),
                total_secs: (done - started).as_secs_f64(),
            });
        }
    }
    let column = |f: fn(&TimingRow) -> f64| LatencySummary::of(&rows.iter().map(f).collect::<Vec<_>>());
    Ok(LatencyReport {
        gallery_size: store.image_count(),
        k,
        alpha: scorer.alpha,
        reps,
        total: column(|r| r.total_secs),
        lookup: column(|r| r.lookup_secs),
        scoring: column(|r| r.scoring_secs),
        rows,
        hardware: HardwareNote::current(),
    })
}
