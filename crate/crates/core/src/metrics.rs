//! Evaluation metrics: reconstruction ranks, mAP, Spearman ρ, threshold-calibrated
//! F1 and the dimension-vs-generality report.
//!
//! Ties are resolved with average ranks everywhere: a positive tied with `t`
//! negatives sits `t/2` places below the untied position.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::projector::{effective_dim, inclusion_score, overlap, Projector};
use crate::taxonomy::{Edge, NodeId, Taxonomy};
use crate::{Error, Result};

/// Which corruptions of a closure edge `(u, v)` make up its ranking pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RankingPool {
    /// `(u, v')` for every `v' ≠ u` with `(u, v') ∉ TC`.
    #[default]
    Tail,
    /// Tail corruptions plus `(u', v)` for every `u' ≠ v` with `(u', v) ∉ TC`.
    HeadAndTail,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankingReport {
    pub mean_rank: f64,
    pub map: f64,
    /// Rank of each closure edge among its pool (1 = best).
    pub ranks: Vec<(Edge, f64)>,
}

fn rank_against(positive: f64, negatives: impl Iterator<Item = f64>) -> f64 {
    let (mut above, mut tied) = (0usize, 0usize);
    for s in negatives {
        if s > positive {
            above += 1;
        } else if s == positive {
            tied += 1;
        }
    }
    1.0 + above as f64 + 0.5 * tied as f64
}

/// Ranks every closure edge by `score(u, v)` against its corruption pool.
///
/// Per query node `u`, AP is computed from the positives' ranks: with `r_k`
/// the k-th smallest rank, precision at that positive is `k / (k + r_k − 1)`.
pub fn reconstruction_ranks_with(
    t: &Taxonomy,
    pool: RankingPool,
    mut score: impl FnMut(NodeId, NodeId) -> Result<f64>,
) -> Result<RankingReport> {
    let n = t.node_count();
    let mut ranks = Vec::with_capacity(t.closure_edges().len());
    let mut by_query: Vec<Vec<f64>> = vec![Vec::new(); n];
    // Scores are reused across edges sharing an endpoint.
    let mut cache: Vec<Option<f64>> = vec![None; n * n];
    let mut cached = |a: NodeId, b: NodeId| -> Result<f64> {
        if let Some(s) = cache[a * n + b] {
            return Ok(s);
        }
        let s = score(a, b)?;
        cache[a * n + b] = Some(s);
        Ok(s)
    };
    for &(u, v) in t.closure_edges() {
        let pos = cached(u, v)?;
        let mut negs = Vec::new();
        for w in 0..n {
            if w != u && !t.in_closure(u, w) {
                negs.push(cached(u, w)?);
            }
        }
        if pool == RankingPool::HeadAndTail {
            for w in 0..n {
                if w != v && !t.in_closure(w, v) {
                    negs.push(cached(w, v)?);
                }
            }
        }
        let r = rank_against(pos, negs.into_iter());
        ranks.push(((u, v), r));
        by_query[u].push(r);
    }
    if ranks.is_empty() {
        return Err(Error::NoRelevant(0));
    }
    let mean_rank = ranks.iter().map(|(_, r)| r).sum::<f64>() / ranks.len() as f64;
    let mut ap_sum = 0.0;
    let mut queries = 0usize;
    for mut rs in by_query.into_iter().filter(|q| !q.is_empty()) {
        rs.sort_by(f64::total_cmp);
        let ap = rs
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let k = (i + 1) as f64;
                k / (k + r - 1.0)
            })
            .sum::<f64>()
            / rs.len() as f64;
        ap_sum += ap;
        queries += 1;
    }
    Ok(RankingReport {
        mean_rank,
        map: ap_sum / queries as f64,
        ranks,
    })
}

/// Reconstruction ranking by subspace overlap `tr(P_u P_v)`.
pub fn reconstruction_ranks(
    projectors: &[Projector],
    t: &Taxonomy,
    pool: RankingPool,
) -> Result<RankingReport> {
    require_coverage(projectors, t)?;
    reconstruction_ranks_with(t, pool, |u, v| overlap(&projectors[u], &projectors[v]))
}

fn require_coverage(projectors: &[Projector], t: &Taxonomy) -> Result<()> {
    if projectors.len() < t.node_count() {
        return Err(Error::UnknownNode(String::from(t.name(projectors.len()))));
    }
    Ok(())
}

/// Mean over queries of average precision. Each list is a ranking (best
/// first) with `true` marking relevant items.
pub fn mean_average_precision(lists: &[Vec<bool>]) -> Result<f64> {
    if lists.is_empty() {
        return Err(Error::NoRelevant(0));
    }
    let mut total = 0.0;
    for (q, list) in lists.iter().enumerate() {
        let mut hits = 0usize;
        let mut sum = 0.0;
        for (i, &rel) in list.iter().enumerate() {
            if rel {
                hits += 1;
                sum += hits as f64 / (i + 1) as f64;
            }
        }
        if hits == 0 {
            return Err(Error::NoRelevant(q));
        }
        total += sum / hits as f64;
    }
    Ok(total / lists.len() as f64)
}

/// 1-based ranks with ties sharing their average rank.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation: Pearson correlation of average-tie ranks.
pub fn spearman_rho(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::UndefinedCorrelation("fewer than two observations"));
    }
    pearson(&average_ranks(xs), &average_ranks(ys))
}

fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::UndefinedCorrelation("constant input sequence"));
    }
    Ok((sab / math::sqrt(saa * sbb)).clamp(-1.0, 1.0))
}

/// A classification score with its true label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledScore {
    pub score: f64,
    pub positive: bool,
}

impl LabeledScore {
    pub fn new(score: f64, positive: bool) -> Self {
        Self { score, positive }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdF1 {
    pub threshold: f64,
    pub val_f1: f64,
    pub test_f1: f64,
}

fn f1_from_counts(tp: usize, fp: usize, fn_: usize) -> f64 {
    if tp == 0 {
        0.0
    } else {
        2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
    }
}

/// F1 of the positive class when `score ≥ threshold` predicts positive.
pub fn f1_at(scores: &[LabeledScore], threshold: f64) -> f64 {
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for s in scores {
        match (s.score >= threshold, s.positive) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    f1_from_counts(tp, fp, fn_)
}

/// Picks the threshold maximizing validation F1 and reports F1 on `test` at
/// it. Candidates are the lowest validation score (everything positive) and
/// every midpoint between adjacent distinct validation scores; ties go to the
/// lowest threshold.
pub fn calibrate_threshold_f1(val: &[LabeledScore], test: &[LabeledScore]) -> Result<ThresholdF1> {
    let positives = val.iter().filter(|s| s.positive).count();
    if positives == 0 || positives == val.len() {
        return Err(Error::SingleClass);
    }
    let mut sorted: Vec<LabeledScore> = val.to_vec();
    sorted.sort_by(|a, b| a.score.total_cmp(&b.score));

    let mut tp = positives;
    let mut fp = val.len() - positives;
    let mut threshold = sorted[0].score;
    let mut val_f1 = f1_from_counts(tp, fp, 0);
    // Sweep upwards: everything at index > i is predicted positive.
    for i in 0..sorted.len() - 1 {
        if sorted[i].positive {
            tp -= 1;
        } else {
            fp -= 1;
        }
        if sorted[i].score == sorted[i + 1].score {
            continue;
        }
        let f1 = f1_from_counts(tp, fp, positives - tp);
        if f1 > val_f1 {
            val_f1 = f1;
            threshold = 0.5 * (sorted[i].score + sorted[i + 1].score);
        }
    }
    Ok(ThresholdF1 {
        threshold,
        val_f1,
        test_f1: f1_at(test, threshold),
    })
}

/// Inclusion scores `P(parent | child)` of `(child, parent)` edges.
pub fn inclusion_scores(projectors: &[Projector], edges: &[Edge]) -> Result<Vec<f64>> {
    edges
        .iter()
        .map(|&(c, p)| inclusion_score(&projectors[c], &projectors[p]))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DimensionRow {
    pub node: String,
    pub effective_dim: f64,
    pub descendant_count: usize,
    pub taxonomy_rank: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DimensionReport {
    pub rows: Vec<DimensionRow>,
    /// ρ(effective dimension, descendant count).
    pub rho_descendants: f64,
    /// ρ(effective dimension, taxonomy rank); negative when general concepts
    /// get larger subspaces.
    pub rho_rank: f64,
}

/// Effective dimension of every node next to its generality measures.
pub fn dimension_report(projectors: &[Projector], t: &Taxonomy) -> Result<DimensionReport> {
    require_coverage(projectors, t)?;
    let counts = t.descendant_counts();
    let ranks = t.taxonomy_ranks();
    let dims: Vec<f64> = projectors[..t.node_count()]
        .iter()
        .map(effective_dim)
        .collect();
    let rows = (0..t.node_count())
        .map(|v| DimensionRow {
            node: String::from(t.name(v)),
            effective_dim: dims[v],
            descendant_count: counts[v],
            taxonomy_rank: ranks[v],
        })
        .collect();
    let counts_f: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    Ok(DimensionReport {
        rows,
        rho_descendants: spearman_rho(&dims, &counts_f)?,
        rho_rank: spearman_rho(&dims, &ranks)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taxonomy::binary_tree;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rank_tie_convention() {
        assert_eq!(rank_against(5.0, [1.0, 2.0].into_iter()), 1.0);
        assert_eq!(rank_against(5.0, [5.0, 2.0].into_iter()), 1.5);
        assert_eq!(rank_against(5.0, [6.0, 5.0, 5.0].into_iter()), 3.0);
    }

    #[test]
    fn map_examples() {
        assert_eq!(
            mean_average_precision(&[vec![true, true, false]]).unwrap(),
            1.0
        );
        assert_eq!(mean_average_precision(&[vec![false, true]]).unwrap(), 0.5);
        let ap = mean_average_precision(&[vec![true, false, true]]).unwrap();
        assert!((ap - (1.0 + 2.0 / 3.0) / 2.0).abs() < 1e-15);
        assert_eq!(
            mean_average_precision(&[vec![false, false]]).unwrap_err(),
            Error::NoRelevant(0)
        );
    }

    #[test]
    fn spearman_examples() {
        assert_eq!(
            spearman_rho(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]).unwrap(),
            1.0
        );
        assert_eq!(
            spearman_rho(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(),
            -1.0
        );
        let r = spearman_rho(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert!((r - 0.8).abs() < 1e-15);
        assert!(matches!(
            spearman_rho(&[1.0, 1.0], &[1.0, 2.0]),
            Err(Error::UndefinedCorrelation(_))
        ));
    }

    #[test]
    fn spearman_is_invariant_to_monotone_transforms() {
        let mut rng = ChaCha8Rng::seed_from_u64(70);
        for _ in 0..20 {
            let xs: Vec<f64> = (0..12).map(|_| rng.random_range(-3.0..3.0)).collect();
            let ys: Vec<f64> = (0..12).map(|_| rng.random_range(-3.0..3.0)).collect();
            let base = spearman_rho(&xs, &ys).unwrap();
            let fx: Vec<f64> = xs.iter().map(|x| libm::exp(*x) * 4.0 + 1.0).collect();
            let fy: Vec<f64> = ys.iter().map(|y| y * y * y).collect();
            assert!((spearman_rho(&fx, &fy).unwrap() - base).abs() < 1e-12);
        }
    }

    fn ls(pairs: &[(f64, bool)]) -> Vec<LabeledScore> {
        pairs
            .iter()
            .map(|&(s, p)| LabeledScore::new(s, p))
            .collect()
    }

    #[test]
    fn threshold_f1_examples() {
        let val = ls(&[(0.9, true), (0.8, true), (0.2, false), (0.1, false)]);
        let r = calibrate_threshold_f1(&val, &val).unwrap();
        assert_eq!(r.test_f1, 1.0);
        assert!((r.threshold - 0.5).abs() < 1e-15);

        let test = ls(&[(0.1, true), (0.05, false)]);
        let r = calibrate_threshold_f1(&val, &test).unwrap();
        assert_eq!(r.test_f1, 0.0);

        assert_eq!(
            calibrate_threshold_f1(&ls(&[(0.3, true)]), &[]).unwrap_err(),
            Error::SingleClass
        );
    }

    #[test]
    fn threshold_ties_pick_lowest() {
        // Predicting everything positive and the 0.35 midpoint both give 2/3.
        let val = ls(&[(0.1, true), (0.2, false), (0.3, false), (0.4, true)]);
        let r = calibrate_threshold_f1(&val, &val).unwrap();
        assert!((r.val_f1 - 2.0 / 3.0).abs() < 1e-12);
        assert!((f1_at(&val, 0.35) - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.threshold, 0.1);
    }

    #[test]
    fn threshold_matches_exhaustive_sweep() {
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        for _ in 0..50 {
            let val: Vec<LabeledScore> = (0..20)
                .map(|i| LabeledScore::new(rng.random_range(0.0..1.0), i % 3 == 0))
                .collect();
            let r = calibrate_threshold_f1(&val, &val).unwrap();
            let mut scores: Vec<f64> = val.iter().map(|s| s.score).collect();
            scores.sort_by(f64::total_cmp);
            let best = scores
                .windows(2)
                .map(|w| f1_at(&val, 0.5 * (w[0] + w[1])))
                .fold(f1_at(&val, scores[0]), f64::max);
            assert_eq!(r.val_f1, best);
            assert_eq!(r.val_f1, f1_at(&val, r.threshold));
            // dense sweep never beats the calibrated value
            for k in 0..=1000 {
                assert!(f1_at(&val, k as f64 / 1000.0) <= r.val_f1 + 1e-15);
            }
        }
    }

    #[test]
    fn reconstruction_rank_examples() {
        let t = crate::taxonomy::Taxonomy::from_edges([("a", "b")]).unwrap();
        let mut b = crate::taxonomy::TaxonomyBuilder::new();
        b.add_edge("a", "b");
        b.add_node("c");
        let t3 = b.build().unwrap();
        let (a, bb, c) = (
            t3.id("a").unwrap(),
            t3.id("b").unwrap(),
            t3.id("c").unwrap(),
        );
        let strict = reconstruction_ranks_with(&t3, RankingPool::Tail, |u, v| {
            Ok(if (u, v) == (a, bb) {
                2.0
            } else if v == c {
                1.0
            } else {
                0.0
            })
        })
        .unwrap();
        assert_eq!(strict.ranks, vec![((a, bb), 1.0)]);
        assert_eq!(strict.map, 1.0);
        let tied = reconstruction_ranks_with(&t3, RankingPool::Tail, |_, _| Ok(1.0)).unwrap();
        assert_eq!(tied.ranks[0].1, 1.5);
        assert_eq!(tied.mean_rank, 1.5);
        let _ = t;
    }

    #[test]
    fn dimension_report_rows() {
        let t = binary_tree(2);
        let ps: Vec<Projector> = (0..t.node_count())
            .map(|v| {
                Projector::from_matrix(crate::Matrix::from_diag(&[1.0 + v as f64, 0.0])).unwrap()
            })
            .collect();
        let r = dimension_report(&ps, &t).unwrap();
        assert_eq!(r.rows.len(), t.node_count());
        assert!(r.rho_descendants < 0.0);
        assert!(dimension_report(&ps[..3], &t).is_err());
    }
}
