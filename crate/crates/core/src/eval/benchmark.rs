use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Direction, EvalError, Ranking, RecallTable, RelevanceJudgments};
use crate::repr::{Dims, Representation};
use crate::similarity::{rank, ScorerConfig};
use crate::store::{write_store, ItemKind, ReprStore, StoreError};
use crate::synth::{row_rng, SynthSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchmarkConfig {
    pub ks: Vec<usize>,
    pub scorer: ScorerConfig,
    /// Evaluate only the first `n` queries of each direction, in id order.
    pub max_queries: Option<usize>,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            ks: vec![1, 5, 10],
            scorer: ScorerConfig::default(),
            max_queries: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionStats {
    pub direction: Direction,
    pub queries: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub tables: Vec<RecallTable>,
    pub stats: Vec<DirectionStats>,
}

impl BenchmarkReport {
    pub fn table(&self, direction: Direction) -> Option<&RecallTable> {
        self.tables.iter().find(|t| t.direction == direction)
    }

    pub fn render(&self) -> String {
        self.tables.iter().map(RecallTable::render).collect::<Vec<_>>().join("\n")
    }
}

/// Recall@k in both directions, using the store's own representations as
/// queries and the opposite side as the gallery.
pub fn run_benchmark(
    store: &ReprStore,
    judgments: &RelevanceJudgments,
    config: &BenchmarkConfig,
) -> Result<BenchmarkReport, EvalError> {
    if config.ks.is_empty() || config.ks.contains(&0) {
        return Err(EvalError::InvalidK);
    }
    judgments.validate(store)?;
    let scorer = config.scorer.build()?;
    let depth = *config.ks.iter().max().expect("ks is non-empty");
    let mut tables = Vec::new();
    let mut stats = Vec::new();
    for direction in Direction::BOTH {
        let judged = judgments.direction(direction);
        let limit = config.max_queries.unwrap_or(usize::MAX);
        let queries: Vec<&String> = judged.keys().take(limit).collect();
        let gallery = store.candidates(direction.target_kind());
        let started = Instant::now();
        let rankings: Vec<Ranking> = queries
            .par_iter()
            .map(|q| {
                let repr = store.get_representation(q, direction.query_kind())?;
                let hits = rank(&repr.view(), &gallery, depth, scorer.as_ref())?;
                Ok(((*q).clone(), hits.into_iter().map(|h| h.item_id).collect()))
            })
            .collect::<Result<_, EvalError>>()?;
        stats.push(DirectionStats {
            direction,
            queries: rankings.len(),
            seconds: started.elapsed().as_secs_f64(),
        });
        tables.push(RecallTable::compute(direction, &rankings, judged, &config.ks)?);
    }
    Ok(BenchmarkReport { tables, stats })
}

/// Where each description sits relative to its linked image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Planted {
    /// Description equals its image: the best possible match.
    Optimum,
    /// Description is the negated image: the worst possible match.
    Pessimum,
}

/// Image row whose local rows are all the same vector, so that its negation
/// scores exactly -1 on both terms.
fn planted_image(seed: u64, index: usize, dims: Dims) -> Representation {
    let mut rng = row_rng(seed, ItemKind::Image, index);
    let global = (0..dims.global).map(|_| rng.random_range(-1.0f32..1.0)).collect();
    let row: Vec<f32> = (0..dims.local).map(|_| rng.random_range(-1.0f32..1.0)).collect();
    let locals = row.repeat(dims.locals_per_item);
    Representation::new(global, locals, dims.local)
}

/// Write a store of `images` images with one description each, placed
/// according to `plant`. Returns the manifest path.
pub fn planted_store(
    dir: &Path,
    images: usize,
    dims: Dims,
    seed: u64,
    plant: Planted,
) -> Result<PathBuf, StoreError> {
    let mut manifest = SynthSpec::new(images, dims, seed).manifest();
    for (i, d) in manifest.descriptions.iter_mut().enumerate() {
        d.text = format!("planted description {i}");
    }
    write_store(dir, &manifest, |kind, i| {
        let image = planted_image(seed, i, dims);
        match (kind, plant) {
            (ItemKind::Image, _) | (ItemKind::Description, Planted::Optimum) => image,
            (ItemKind::Description, Planted::Pessimum) => image.scaled(-1.0),
        }
    })
}
