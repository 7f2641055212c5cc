//! Retrieval evaluation: Recall@k in both directions, latency measurement and
//! a pluggable text-match metric for conversation grounding.

mod benchmark;
mod metric;
mod timing;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use benchmark::{
    planted_store, run_benchmark, BenchmarkConfig, BenchmarkReport, DirectionStats, Planted,
};
pub use metric::{description_match_score, TextMetric, TokenF1};
pub use timing::{time_retrieval, HardwareNote, LatencyReport, LatencySummary, TimingRow};

use crate::similarity::SimilarityError;
use crate::store::{ItemKind, ReprStore, StoreError};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no judgments for query {0:?}")]
    MissingJudgment(String),
    #[error("k must be at least 1")]
    InvalidK,
    #[error("reference set is empty")]
    EmptyReferences,
    #[error("judgments reference unknown {kind:?} {id:?}")]
    UnknownItem { id: String, kind: ItemKind },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    TextToImage,
    ImageToText,
}

impl Direction {
    pub const BOTH: [Direction; 2] = [Direction::TextToImage, Direction::ImageToText];

    /// Kind of the query items.
    pub fn query_kind(self) -> ItemKind {
        match self {
            Direction::TextToImage => ItemKind::Description,
            Direction::ImageToText => ItemKind::Image,
        }
    }

    /// Kind of the ranked items.
    pub fn target_kind(self) -> ItemKind {
        match self {
            Direction::TextToImage => ItemKind::Image,
            Direction::ImageToText => ItemKind::Description,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Direction::TextToImage => "text-to-image",
            Direction::ImageToText => "image-to-text",
        }
    }
}

pub type Judgments = BTreeMap<String, BTreeSet<String>>;

/// Relevant targets per query for both retrieval directions.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelevanceJudgments {
    #[serde(default)]
    pub text_to_image: Judgments,
    #[serde(default)]
    pub image_to_text: Judgments,
}

impl RelevanceJudgments {
    /// Judgments implied by the store's description-to-image links: each
    /// description's image is relevant to it, and an image's descriptions to it.
    pub fn from_links(store: &ReprStore) -> Self {
        let mut out = Self::default();
        for image in &store.manifest().images {
            out.image_to_text.entry(image.id.clone()).or_default();
        }
        for d in &store.manifest().descriptions {
            out.text_to_image
                .entry(d.id.clone())
                .or_default()
                .insert(d.image.clone());
            out.image_to_text
                .entry(d.image.clone())
                .or_default()
                .insert(d.id.clone());
        }
        out.image_to_text.retain(|_, v| !v.is_empty());
        out
    }

    pub fn direction(&self, direction: Direction) -> &Judgments {
        match direction {
            Direction::TextToImage => &self.text_to_image,
            Direction::ImageToText => &self.image_to_text,
        }
    }

    pub fn load(path: &Path) -> Result<Self, EvalError> {
        let text = std::fs::read_to_string(path).map_err(|source| EvalError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| EvalError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), EvalError> {
        let json = serde_json::to_string_pretty(self).expect("judgments serialize");
        std::fs::write(path, json).map_err(|source| EvalError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Every query and target id must exist in `store`.
    pub fn validate(&self, store: &ReprStore) -> Result<(), EvalError> {
        for direction in Direction::BOTH {
            for (query, targets) in self.direction(direction) {
                let check = |id: &str, kind| {
                    store.row_of(id, kind).map(|_| ()).ok_or(EvalError::UnknownItem {
                        id: id.to_string(),
                        kind,
                    })
                };
                check(query, direction.query_kind())?;
                for t in targets {
                    check(t, direction.target_kind())?;
                }
            }
        }
        Ok(())
    }
}

/// A ranked list of item ids for one query.
pub type Ranking = (String, Vec<String>);

/// Percentage of queries with at least one relevant item in their top `k`.
///
/// An empty ranking set yields 0.0.
pub fn recall_at_k(rankings: &[Ranking], judgments: &Judgments, k: usize) -> Result<f64, EvalError> {
    if k == 0 {
        return Err(EvalError::InvalidK);
    }
    let mut hits = 0usize;
    for (query, ranked) in rankings {
        let relevant = judgments
            .get(query)
            .ok_or_else(|| EvalError::MissingJudgment(query.clone()))?;
        if ranked.iter().take(k).any(|id| relevant.contains(id)) {
            hits += 1;
        }
    }
    if rankings.is_empty() {
        return Ok(0.0);
    }
    Ok(100.0 * hits as f64 / rankings.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecallRow {
    pub k: usize,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecallTable {
    pub direction: Direction,
    pub queries: usize,
    pub rows: Vec<RecallRow>,
}

impl RecallTable {
    pub fn compute(
        direction: Direction,
        rankings: &[Ranking],
        judgments: &Judgments,
        ks: &[usize],
    ) -> Result<Self, EvalError> {
        let rows = ks
            .iter()
            .map(|&k| {
                Ok(RecallRow {
                    k,
                    recall: recall_at_k(rankings, judgments, k)?,
                })
            })
            .collect::<Result<_, EvalError>>()?;
        Ok(Self {
            direction,
            queries: rankings.len(),
            rows,
        })
    }

    pub fn recall(&self, k: usize) -> Option<f64> {
        self.rows.iter().find(|r| r.k == k).map(|r| r.recall)
    }

    /// Aligned text rendering: one header line and one line of values.
    pub fn render(&self) -> String {
        let mut head = format!("{:<14}", self.direction.label());
        let mut vals = format!("{:<14}", format!("n={}", self.queries));
        for r in &self.rows {
            head.push_str(&format!("{:>9}", format!("R@{}", r.k)));
            vals.push_str(&format!("{:>9.1}", r.recall));
        }
        format!("{head}\n{vals}\n")
    }
}
