use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Candidates, RowScratch, Scorer, SimilarityError};
use crate::repr::ReprView;

/// Rows scored per work unit.
const CHUNK: usize = 512;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedResult {
    pub item_id: String,
    pub score: f32,
    /// 1-based.
    pub rank: usize,
}

/// Result order: higher score first, then ascending id.
pub fn compare_hits(a_score: f32, a_id: &str, b_score: f32, b_id: &str) -> Ordering {
    b_score
        .partial_cmp(&a_score)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a_id.cmp(b_id))
}

#[derive(Debug)]
struct Hit<'a> {
    score: f32,
    id: &'a str,
}

impl PartialEq for Hit<'_> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Hit<'_> {}

impl PartialOrd for Hit<'_> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Hit<'_> {
    // "Greater" means ranked later, so a max-heap keeps the weakest retained hit on top.
    fn cmp(&self, other: &Self) -> Ordering {
        compare_hits(self.score, self.id, other.score, other.id)
    }
}

fn top_k_chunk<'c, C: Candidates + ?Sized>(
    query: &ReprView<'_>,
    candidates: &'c C,
    rows: std::ops::Range<usize>,
    k: usize,
    scorer: &dyn Scorer,
) -> Result<Vec<Hit<'c>>, SimilarityError> {
    let mut heap: BinaryHeap<Hit<'c>> = BinaryHeap::with_capacity(k + 1);
    let mut scratch = RowScratch::default();
    for row in rows {
        let score = scorer.score(query, &candidates.view(row, &mut scratch))?;
        if score.is_nan() {
            return Err(SimilarityError::NonFiniteScore(candidates.id(row).to_string()));
        }
        let hit = Hit {
            score,
            id: candidates.id(row),
        };
        if heap.len() < k {
            heap.push(hit);
        } else if let Some(worst) = heap.peek() {
            if hit < *worst {
                heap.pop();
                heap.push(hit);
            }
        }
    }
    Ok(heap.into_vec())
}

/// Score every candidate and return the best `min(k, len)` in result order.
///
/// Candidates are scored in fixed-size chunks across the rayon pool and the
/// per-chunk top-k lists are merged; the output is independent of thread count.
pub fn rank<C: Candidates + ?Sized>(
    query: &ReprView<'_>,
    candidates: &C,
    k: usize,
    scorer: &dyn Scorer,
) -> Result<Vec<RankedResult>, SimilarityError> {
    if k == 0 {
        return Err(SimilarityError::InvalidK);
    }
    let n = candidates.len();
    if n == 0 {
        return Err(SimilarityError::EmptyCandidateSet);
    }
    let chunks: Vec<_> = (0..n.div_ceil(CHUNK))
        .map(|c| c * CHUNK..((c + 1) * CHUNK).min(n))
        .collect();

    let partials: Vec<Result<Vec<Hit<'_>>, SimilarityError>> = if chunks.len() == 1 {
        vec![top_k_chunk(query, candidates, 0..n, k, scorer)]
    } else {
        chunks
            .into_par_iter()
            .map(|rows| top_k_chunk(query, candidates, rows, k, scorer))
            .collect()
    };

    let mut hits = Vec::with_capacity(k * partials.len());
    for partial in partials {
        hits.extend(partial?);
    }
    hits.sort_unstable();
    hits.truncate(k);
    Ok(hits
        .into_iter()
        .enumerate()
        .map(|(i, h)| RankedResult {
            item_id: h.id.to_string(),
            score: h.score,
            rank: i + 1,
        })
        .collect())
}
