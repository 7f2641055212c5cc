use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::repr::{Dims, Representation};
use crate::synth::random_representation;

fn approx(a: f32, b: f32) -> bool {
    (a - b).abs() <= 1e-6
}

/// Every pair enumerated, no shared helper with the implementation.
fn naive_local(query: &[Vec<f32>], item: &[Vec<f32>]) -> f64 {
    let cos = |a: &[f32], b: &[f32]| {
        let dot: f64 = a.iter().zip(b).map(|(x, y)| *x as f64 * *y as f64).sum();
        let na: f64 = a.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
        let nb: f64 = b.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
        dot / (na * nb)
    };
    let total: f64 = query
        .iter()
        .map(|q| item.iter().map(|i| cos(q, i)).fold(f64::MIN, f64::max))
        .sum();
    total / query.len() as f64
}

/// Score everything through the public single-pair path, then fully sort.
pub(crate) fn brute_force(
    query: &Representation,
    items: &CandidateList,
    k: usize,
    scorer: &dyn Scorer,
) -> Vec<(String, f32)> {
    let mut all: Vec<(String, f32)> = (0..items.len())
        .map(|i| {
            let (id, repr) = items.get(i).unwrap();
            (id.to_string(), scorer.score(&query.view(), &repr.view()).unwrap())
        })
        .collect();
    all.sort_by(|a, b| compare_hits(a.1, &a.0, b.1, &b.0));
    all.truncate(k);
    all
}

fn random_list(rng: &mut ChaCha8Rng, n: usize, dims: Dims) -> CandidateList {
    (0..n)
        .map(|i| (format!("c{i:05}"), random_representation(rng, dims)))
        .collect()
}

#[test]
fn cosine_examples() {
    assert_eq!(cosine(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 1.0);
    assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
    assert!(approx(cosine(&[1.0, 2.0, 2.0], &[2.0, 1.0, 2.0]).unwrap(), 8.0 / 9.0));
}

#[test]
fn cosine_errors() {
    assert_eq!(cosine(&[0.0, 0.0], &[1.0, 0.0]), Err(SimilarityError::ZeroVector));
    assert_eq!(cosine(&[1.0, 0.0], &[0.0, 0.0]), Err(SimilarityError::ZeroVector));
    assert!(matches!(
        cosine(&[1.0], &[1.0, 0.0]),
        Err(SimilarityError::DimMismatch { .. })
    ));
}

#[test]
fn local_score_examples() {
    // rows [1,0] and [0,1] against a single row [1,0]: (1 + 0) / 2
    let q = [1.0, 0.0, 0.0, 1.0];
    assert_eq!(local_score(&q, &[1.0, 0.0], 2).unwrap(), 0.5);
    assert!(approx(
        naive_local(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[vec![1.0, 0.0]]) as f32,
        0.5
    ));

    let ortho = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
    assert_eq!(local_score(&ortho, &ortho, 3).unwrap(), 1.0);

    let (a, b) = ([3.0, 1.0, -2.0], [0.5, 2.0, 1.0]);
    assert_eq!(local_score(&a, &b, 3).unwrap(), cosine(&a, &b).unwrap());
}

#[test]
fn local_score_errors() {
    assert_eq!(local_score(&[], &[1.0], 1), Err(SimilarityError::EmptyLocalSet));
    assert_eq!(local_score(&[1.0], &[], 1), Err(SimilarityError::EmptyLocalSet));
    assert_eq!(
        local_score(&[1.0, 0.0], &[1.0, 0.0, 0.0, 0.0], 2),
        Err(SimilarityError::ZeroVector)
    );
}

#[test]
fn local_score_matches_pair_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let dims_q = Dims::new(4, 6, 5);
        let dims_i = Dims::new(4, 6, 9);
        let q = random_representation(&mut rng, dims_q);
        let i = random_representation(&mut rng, dims_i);
        let rows = |r: &Representation| r.locals.chunks(r.local_dim).map(<[f32]>::to_vec).collect::<Vec<_>>();
        let expected = naive_local(&rows(&q), &rows(&i));
        let got = local_score(&q.locals, &i.locals, 6).unwrap() as f64;
        assert!((got - expected).abs() < 1e-5, "{got} vs {expected}");
    }
}

#[test]
fn fused_endpoints_and_midpoint() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let dims = Dims::new(8, 4, 3);
    let (q, i) = (
        random_representation(&mut rng, dims),
        random_representation(&mut rng, dims),
    );
    let g = cosine(&q.global, &i.global).unwrap();
    let l = local_score(&q.locals, &i.locals, 4).unwrap();
    assert_eq!(fused_score(&q.view(), &i.view(), 1.0).unwrap(), g);
    assert_eq!(fused_score(&q.view(), &i.view(), 0.0).unwrap(), l);

    // global part 1.0 (same global), local part 0.5
    let q = Representation::new(vec![1.0, 1.0], vec![1.0, 0.0, 0.0, 1.0], 2);
    let i = Representation::new(vec![2.0, 2.0], vec![1.0, 0.0], 2);
    assert_eq!(fused_score(&q.view(), &i.view(), 0.5).unwrap(), 0.75);
}

#[test]
fn scorer_config_validation() {
    assert!(ScorerConfig::with_alpha(1.5).build().is_err());
    assert!(ScorerConfig::with_alpha(-0.1).build().is_err());
    let bad = ScorerConfig {
        scorer_id: "vitr".into(),
        ..Default::default()
    };
    assert_eq!(
        bad.build().unwrap_err(),
        SimilarityError::UnknownScorer("vitr".into())
    );
    let scorer = ScorerConfig::default().build().unwrap();
    assert_eq!(scorer.id(), "reference");
}

/// Scores fixed per id, for exercising the ranking rules in isolation.
#[derive(Debug)]
struct TableScorer(Vec<f32>);

impl Scorer for TableScorer {
    fn id(&self) -> &str {
        "table"
    }

    fn score(&self, _q: &ReprView<'_>, item: &ReprView<'_>) -> Result<f32, SimilarityError> {
        Ok(self.0[item.global[0] as usize])
    }
}

fn indexed_list(ids: &[&str]) -> CandidateList {
    ids.iter()
        .enumerate()
        .map(|(i, id)| (id.to_string(), Representation::new(vec![i as f32], vec![1.0], 1)))
        .collect()
}

#[test]
fn ties_break_by_ascending_id() {
    let list = indexed_list(&["b", "c", "a"]);
    let scorer = TableScorer(vec![0.9, 0.1, 0.9]);
    let q = Representation::new(vec![0.0], vec![1.0], 1);
    let out = rank(&q.view(), &list, 2, &scorer).unwrap();
    let got: Vec<_> = out.iter().map(|r| (r.item_id.as_str(), r.rank)).collect();
    assert_eq!(got, vec![("a", 1), ("b", 2)]);
}

#[test]
fn k_one_is_argmax_and_k_beyond_len_returns_all() {
    let list = indexed_list(&["x", "y", "z"]);
    let scorer = TableScorer(vec![0.2, 0.7, -0.4]);
    let q = Representation::new(vec![0.0], vec![1.0], 1);
    assert_eq!(rank(&q.view(), &list, 1, &scorer).unwrap()[0].item_id, "y");
    let all = rank(&q.view(), &list, 10, &scorer).unwrap();
    assert_eq!(
        all.iter().map(|r| r.item_id.as_str()).collect::<Vec<_>>(),
        ["y", "x", "z"]
    );
    assert_eq!(all.iter().map(|r| r.rank).collect::<Vec<_>>(), [1, 2, 3]);
}

#[test]
fn rank_errors() {
    let scorer = ReferenceScorer::default();
    let q = Representation::new(vec![1.0], vec![1.0], 1);
    assert_eq!(
        rank(&q.view(), &CandidateList::new(), 3, &scorer).unwrap_err(),
        SimilarityError::EmptyCandidateSet
    );
    assert_eq!(
        rank(&q.view(), &indexed_list(&["a"]), 0, &scorer).unwrap_err(),
        SimilarityError::InvalidK
    );
}

#[test]
fn five_thousand_candidates_match_full_sort() {
    let mut rng = ChaCha8Rng::seed_from_u64(5000);
    let dims = Dims::new(16, 8, 4);
    let list = random_list(&mut rng, 5000, dims);
    let q = random_representation(&mut rng, dims);
    let scorer = ReferenceScorer::default();
    let got: Vec<_> = rank(&q.view(), &list, 10, &scorer)
        .unwrap()
        .into_iter()
        .map(|r| (r.item_id, r.score))
        .collect();
    assert_eq!(got, brute_force(&q, &list, 10, &scorer));
}

#[test]
fn thread_count_does_not_change_output() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let dims = Dims::new(12, 6, 3);
    let list = random_list(&mut rng, 3000, dims);
    let q = random_representation(&mut rng, dims);
    let scorer = ReferenceScorer::new(0.3).unwrap();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| rank(&q.view(), &list, 40, &scorer).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(3));
    assert_eq!(one, run(8));
}

proptest! {
    #[test]
    fn cosine_is_symmetric_and_bounded(
        u in prop::collection::vec(-100.0f32..100.0, 1..64),
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v: Vec<f32> = u.iter().map(|_| rand::Rng::random_range(&mut rng, -100.0f32..100.0)).collect();
        prop_assume!(u.iter().any(|x| *x != 0.0) && v.iter().any(|x| *x != 0.0));
        let (a, b) = (cosine(&u, &v).unwrap(), cosine(&v, &u).unwrap());
        prop_assert!((a - b).abs() <= 1e-6);
        prop_assert!((-1.0..=1.0).contains(&a));
    }

    #[test]
    fn fused_scores_are_bounded(seed in any::<u64>(), alpha in 0.0f32..=1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dims = Dims::new(6, 3, 4);
        let q = random_representation(&mut rng, dims);
        let i = random_representation(&mut rng, dims);
        let s = fused_score(&q.view(), &i.view(), alpha).unwrap();
        prop_assert!((-1.0..=1.0).contains(&s));
    }

    #[test]
    fn rank_equals_full_sort(seed in any::<u64>(), n in 1usize..1500, k in prop::sample::select(vec![1usize, 5, 10, 40])) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dims = Dims::new(8, 4, 3);
        let list = random_list(&mut rng, n, dims);
        let q = random_representation(&mut rng, dims);
        let scorer = ReferenceScorer::default();
        let got: Vec<_> = rank(&q.view(), &list, k, &scorer).unwrap()
            .into_iter().map(|r| (r.item_id, r.score)).collect();
        prop_assert_eq!(got, brute_force(&q, &list, k, &scorer));
    }

    #[test]
    fn power_of_two_scaling_keeps_order(seed in any::<u64>(), exp in -20i32..20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dims = Dims::new(8, 4, 3);
        let list = random_list(&mut rng, 300, dims);
        let q = random_representation(&mut rng, dims);
        let factor = 2f32.powi(exp);
        let scaled: CandidateList = (0..list.len())
            .map(|i| { let (id, r) = list.get(i).unwrap(); (id.to_string(), r.scaled(factor)) })
            .collect();
        let scorer = ReferenceScorer::default();
        let ids = |l: &CandidateList| rank(&q.view(), l, 40, &scorer).unwrap()
            .into_iter().map(|r| r.item_id).collect::<Vec<_>>();
        prop_assert_eq!(ids(&list), ids(&scaled));
    }

    #[test]
    fn arbitrary_scaling_keeps_separated_order(seed in any::<u64>(), factor in 0.001f32..1000.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dims = Dims::new(8, 4, 3);
        let list = random_list(&mut rng, 200, dims);
        let q = random_representation(&mut rng, dims);
        let scaled: CandidateList = (0..list.len())
            .map(|i| { let (id, r) = list.get(i).unwrap(); (id.to_string(), r.scaled(factor)) })
            .collect();
        let scorer = ReferenceScorer::default();
        let base = rank(&q.view(), &list, 200, &scorer).unwrap();
        let moved = rank(&q.view(), &scaled, 200, &scorer).unwrap();
        // rounding may only swap neighbours whose scores are within a few ulps
        let pos = |id: &str| moved.iter().position(|r| r.item_id == id).unwrap();
        for pair in base.windows(2) {
            if pair[0].score - pair[1].score > 1e-5 {
                prop_assert!(pos(&pair[0].item_id) < pos(&pair[1].item_id));
            }
        }
    }
}
