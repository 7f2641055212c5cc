use std::collections::HashMap;

use super::EvalError;

/// Similarity of a candidate text to one reference, in [0, 1].
pub trait TextMetric: Send + Sync {
    fn name(&self) -> &str;

    fn score(&self, candidate: &str, reference: &str) -> f64;
}

/// Harmonic mean of token precision and recall over lowercase alphanumeric
/// tokens, counting repeated tokens as a multiset.
#[derive(Debug, Clone, Copy, Default)]
pub struct TokenF1;

fn tokens(text: &str) -> HashMap<String, usize> {
    let mut bag = HashMap::new();
    for t in text
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
    {
        *bag.entry(t.to_lowercase()).or_insert(0) += 1;
    }
    bag
}

impl TextMetric for TokenF1 {
    fn name(&self) -> &str {
        "token-f1"
    }

    fn score(&self, candidate: &str, reference: &str) -> f64 {
        let (c, r) = (tokens(candidate), tokens(reference));
        let (nc, nr): (usize, usize) = (c.values().sum(), r.values().sum());
        if nc == 0 || nr == 0 {
            return if nc == nr { 1.0 } else { 0.0 };
        }
        let overlap: usize = c
            .iter()
            .map(|(t, n)| (*n).min(r.get(t).copied().unwrap_or(0)))
            .sum();
        if overlap == 0 {
            return 0.0;
        }
        let precision = overlap as f64 / nc as f64;
        let recall = overlap as f64 / nr as f64;
        2.0 * precision * recall / (precision + recall)
    }
}

/// Best score of `candidate` against any reference.
pub fn description_match_score(
    candidate: &str,
    references: &[&str],
    metric: &dyn TextMetric,
) -> Result<f64, EvalError> {
    references
        .iter()
        .map(|r| metric.score(candidate, r))
        .reduce(f64::max)
        .ok_or(EvalError::EmptyReferences)
}
