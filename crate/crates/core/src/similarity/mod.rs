//! Image/description similarity and exhaustive top-k ranking.
//!
//! The reference scorer fuses a global cosine with a local term computed as
//! the mean, over query local rows, of the best cosine against any item
//! local row:
//!
//! ```text
//! score = alpha * cos(g_q, g_i) + (1 - alpha) * mean_q max_i cos(l_q, l_i)
//! ```
//!
//! Scorers are pluggable through [`Scorer`]; ranking works with any of them.

pub mod kernels;
mod rank;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use rank::{compare_hits, rank, RankedResult};

use crate::repr::{ReprView, Representation};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimilarityError {
    #[error("vector has zero norm")]
    ZeroVector,
    #[error("vector lengths differ ({left} vs {right})")]
    DimMismatch { left: usize, right: usize },
    #[error("local representation set is empty")]
    EmptyLocalSet,
    #[error("candidate set is empty")]
    EmptyCandidateSet,
    #[error("k must be at least 1")]
    InvalidK,
    #[error("alpha must lie in [0, 1], got {0}")]
    InvalidAlpha(f32),
    #[error("score for {0:?} is NaN")]
    NonFiniteScore(String),
    #[error("unknown scorer {0:?}")]
    UnknownScorer(String),
}

/// Cosine similarity of two equal-length vectors, in [-1, 1].
pub fn cosine(u: &[f32], v: &[f32]) -> Result<f32, SimilarityError> {
    if u.len() != v.len() {
        return Err(SimilarityError::DimMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    let (nu, nv) = (kernels::norm(u), kernels::norm(v));
    if nu == 0.0 || nv == 0.0 {
        return Err(SimilarityError::ZeroVector);
    }
    Ok(kernels::cosine_from_parts(kernels::dot(u, v), nu, nv))
}

/// Reference local term: mean over query rows of the best cosine against any item row.
///
/// Both inputs are row-major with `dim` columns.
pub fn local_score(query: &[f32], item: &[f32], dim: usize) -> Result<f32, SimilarityError> {
    if dim == 0 || query.is_empty() || item.is_empty() {
        return Err(SimilarityError::EmptyLocalSet);
    }
    if query.len() % dim != 0 || item.len() % dim != 0 {
        return Err(SimilarityError::DimMismatch {
            left: query.len(),
            right: item.len(),
        });
    }
    let item_norms = row_norms(item, dim)?;
    let mut total = 0.0f32;
    for q in query.chunks_exact(dim) {
        let qn = kernels::norm(q);
        if qn == 0.0 {
            return Err(SimilarityError::ZeroVector);
        }
        let best = item
            .chunks_exact(dim)
            .zip(&item_norms)
            .map(|(row, &rn)| kernels::cosine_from_parts(kernels::dot(q, row), qn, rn))
            .fold(f32::NEG_INFINITY, f32::max);
        total += best;
    }
    Ok(total / (query.len() / dim) as f32)
}

fn row_norms(rows: &[f32], dim: usize) -> Result<Vec<f32>, SimilarityError> {
    rows.chunks_exact(dim)
        .map(|r| match kernels::norm(r) {
            0.0 => Err(SimilarityError::ZeroVector),
            n => Ok(n),
        })
        .collect()
}

/// `alpha * global + (1 - alpha) * local`; a term with zero weight is not evaluated.
pub fn fused_score(
    query: &ReprView<'_>,
    item: &ReprView<'_>,
    alpha: f32,
) -> Result<f32, SimilarityError> {
    let global = if alpha > 0.0 {
        alpha * cosine(query.global, item.global)?
    } else {
        0.0
    };
    let local = if alpha < 1.0 {
        if query.local_dim != item.local_dim {
            return Err(SimilarityError::DimMismatch {
                left: query.local_dim,
                right: item.local_dim,
            });
        }
        (1.0 - alpha) * local_score(query.locals, item.locals, query.local_dim)?
    } else {
        0.0
    };
    Ok((global + local).clamp(-1.0, 1.0))
}

/// Scores a query representation against a candidate representation.
pub trait Scorer: Send + Sync + fmt::Debug {
    fn id(&self) -> &str;

    fn score(&self, query: &ReprView<'_>, item: &ReprView<'_>) -> Result<f32, SimilarityError>;
}

/// Alpha-weighted fusion of global cosine and max-mean local similarity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceScorer {
    alpha: f32,
}

impl ReferenceScorer {
    pub const ID: &'static str = "reference";

    pub fn new(alpha: f32) -> Result<Self, SimilarityError> {
        if (0.0..=1.0).contains(&alpha) {
            Ok(Self { alpha })
        } else {
            Err(SimilarityError::InvalidAlpha(alpha))
        }
    }

    pub fn alpha(&self) -> f32 {
        self.alpha
    }
}

impl Default for ReferenceScorer {
    fn default() -> Self {
        Self { alpha: 0.5 }
    }
}

impl Scorer for ReferenceScorer {
    fn id(&self) -> &str {
        Self::ID
    }

    fn score(&self, query: &ReprView<'_>, item: &ReprView<'_>) -> Result<f32, SimilarityError> {
        fused_score(query, item, self.alpha)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScorerConfig {
    /// Weight of the global term.
    pub alpha: f32,
    pub scorer_id: String,
}

impl Default for ScorerConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            scorer_id: ReferenceScorer::ID.to_string(),
        }
    }
}

impl ScorerConfig {
    pub fn with_alpha(alpha: f32) -> Self {
        Self {
            alpha,
            ..Self::default()
        }
    }

    /// Instantiate the configured scorer.
    pub fn build(&self) -> Result<Arc<dyn Scorer>, SimilarityError> {
        match self.scorer_id.as_str() {
            ReferenceScorer::ID => Ok(Arc::new(ReferenceScorer::new(self.alpha)?)),
            other => Err(SimilarityError::UnknownScorer(other.to_string())),
        }
    }
}

/// Reusable buffers for candidate sets that widen rows on access.
#[derive(Debug, Default)]
pub struct RowScratch {
    pub global: Vec<f32>,
    pub locals: Vec<f32>,
}

/// A random-access set of scorable items.
pub trait Candidates: Sync {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn id(&self, index: usize) -> &str;

    /// Representation of item `index`; may borrow from `scratch`.
    fn view<'s>(&'s self, index: usize, scratch: &'s mut RowScratch) -> ReprView<'s>;
}

/// In-memory candidate set.
#[derive(Debug, Clone, Default)]
pub struct CandidateList {
    ids: Vec<String>,
    reprs: Vec<Representation>,
}

impl CandidateList {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, id: impl Into<String>, repr: Representation) {
        self.ids.push(id.into());
        self.reprs.push(repr);
    }

    pub fn get(&self, index: usize) -> Option<(&str, &Representation)> {
        Some((self.ids.get(index)?.as_str(), self.reprs.get(index)?))
    }
}

impl FromIterator<(String, Representation)> for CandidateList {
    fn from_iter<T: IntoIterator<Item = (String, Representation)>>(iter: T) -> Self {
        let (ids, reprs) = iter.into_iter().unzip();
        Self { ids, reprs }
    }
}

impl Candidates for CandidateList {
    fn len(&self) -> usize {
        self.ids.len()
    }

    fn id(&self, index: usize) -> &str {
        &self.ids[index]
    }

    fn view<'s>(&'s self, index: usize, _scratch: &'s mut RowScratch) -> ReprView<'s> {
        self.reprs[index].view()
    }
}

#[cfg(test)]
mod tests;
