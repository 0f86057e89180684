//! Negative sampling and train/validation/test splits.
//!
//! All samplers take an explicit RNG and are otherwise pure, so a fixed seed
//! reproduces the same draws.

use alloc::format;
use alloc::vec::Vec;

use rand::seq::{index, IndexedRandom, SliceRandom};
use rand::Rng;

use super::{Edge, NodeId, Taxonomy};
use crate::math;
use crate::{Error, Result};

/// Nodes `v ≠ u` with neither `(u, v)` nor `(v, u)` in the closure.
pub fn reconstruction_candidates(t: &Taxonomy, u: NodeId) -> Vec<NodeId> {
    (0..t.node_count())
        .filter(|&v| v != u && !t.connected(u, v))
        .collect()
}

/// Draws `count` distinct nodes uniformly from [`reconstruction_candidates`].
pub fn sample_reconstruction_negatives<R: Rng + ?Sized>(
    t: &Taxonomy,
    u: NodeId,
    count: usize,
    rng: &mut R,
) -> Result<Vec<NodeId>> {
    let candidates = reconstruction_candidates(t, u);
    if candidates.len() < count {
        return Err(Error::InsufficientCandidates {
            requested: count,
            available: candidates.len(),
        });
    }
    Ok(index::sample(rng, candidates.len(), count)
        .into_iter()
        .map(|i| candidates[i])
        .collect())
}

/// Edge split for link prediction.
///
/// Validation and test edges come only from non-basic closure edges. Train
/// holds every basic edge plus a `coverage` fraction of the remaining
/// non-basic edges.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkPredSplit {
    pub train: Vec<Edge>,
    pub val: Vec<Edge>,
    pub test: Vec<Edge>,
    pub coverage: f64,
    pub val_frac: f64,
    pub test_frac: f64,
}

fn check_fraction(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::InvalidSplit(format!(
            "{name} must lie in [0, 1], got {v}"
        )));
    }
    Ok(())
}

/// `floor(frac · total)`, tolerant of representation error such as
/// `0.29 · 100 = 28.999…`.
fn fraction_of(frac: f64, total: usize) -> usize {
    math::floor(frac * total as f64 + 1e-9) as usize
}

/// Shuffles the non-basic edges, takes `floor(val_frac·N)` for validation and
/// `floor(test_frac·N)` for test, then adds `floor(coverage·M)` of the
/// remaining `M` edges to train alongside all basic edges.
///
/// For a fixed seed, validation and test do not depend on `coverage`, and the
/// revealed train edges are nested as coverage grows.
pub fn make_linkpred_split<R: Rng + ?Sized>(
    t: &Taxonomy,
    coverage: f64,
    val_frac: f64,
    test_frac: f64,
    rng: &mut R,
) -> Result<LinkPredSplit> {
    check_fraction("coverage", coverage)?;
    check_fraction("val_frac", val_frac)?;
    check_fraction("test_frac", test_frac)?;
    if val_frac + test_frac > 1.0 {
        return Err(Error::InvalidSplit(format!(
            "val_frac + test_frac = {} exceeds the available non-basic edges",
            val_frac + test_frac
        )));
    }
    let mut non_basic = t.non_basic_edges();
    non_basic.shuffle(rng);
    let total = non_basic.len();
    let n_val = fraction_of(val_frac, total);
    let n_test = fraction_of(test_frac, total);
    let val: Vec<Edge> = non_basic[..n_val].to_vec();
    let test: Vec<Edge> = non_basic[n_val..n_val + n_test].to_vec();
    let pool = &non_basic[n_val + n_test..];
    let n_cov = fraction_of(coverage, pool.len());
    let mut train: Vec<Edge> = t.basic_edges().iter().copied().collect();
    train.extend_from_slice(&pool[..n_cov]);
    train.sort_unstable();
    let mut val = val;
    let mut test = test;
    val.sort_unstable();
    test.sort_unstable();
    Ok(LinkPredSplit {
        train,
        val,
        test,
        coverage,
        val_frac,
        test_frac,
    })
}

/// How corrupted edges are drawn for a positive edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NegativeMode {
    /// Half corrupted heads, half corrupted tails, no repeats. When one side
    /// runs out of valid corruptions the other side fills the gap.
    Eval,
    /// Each draw corrupts the head or the tail with equal probability,
    /// uniformly over valid corruptions, with replacement.
    Train,
}

/// Corruptions of `(u, v)` that are not in the closure: heads `(u', v)` and
/// tails `(u, v')`, excluding self-loops.
fn corruptions(t: &Taxonomy, (u, v): Edge) -> (Vec<Edge>, Vec<Edge>) {
    let n = t.node_count();
    let heads = (0..n)
        .filter(|&h| h != v && h != u && !t.in_closure(h, v))
        .map(|h| (h, v))
        .collect();
    let tails = (0..n)
        .filter(|&w| w != u && w != v && !t.in_closure(u, w))
        .map(|w| (u, w))
        .collect();
    (heads, tails)
}

fn pick<R: Rng + ?Sized>(pool: &[Edge], k: usize, rng: &mut R) -> Vec<Edge> {
    index::sample(rng, pool.len(), k)
        .into_iter()
        .map(|i| pool[i])
        .collect()
}

/// Negative edges for a positive `(u, v)`; none of them is in the closure.
pub fn sample_linkpred_negatives<R: Rng + ?Sized>(
    t: &Taxonomy,
    edge: Edge,
    count: usize,
    mode: NegativeMode,
    rng: &mut R,
) -> Result<Vec<Edge>> {
    let (heads, tails) = corruptions(t, edge);
    let exhausted = || Error::NegativeSamplingExhausted {
        requested: count,
        attempts: 1000 * count,
    };
    match mode {
        NegativeMode::Eval => {
            if !count.is_multiple_of(2) {
                return Err(Error::InvalidConfig(format!(
                    "evaluation negatives must be even, got {count}"
                )));
            }
            if heads.len() + tails.len() < count {
                return Err(exhausted());
            }
            let half = count / 2;
            let mut n_heads = half.min(heads.len());
            let n_tails = (count - n_heads).min(tails.len());
            n_heads = count - n_tails;
            let mut out = pick(&heads, n_heads, rng);
            out.extend(pick(&tails, n_tails, rng));
            Ok(out)
        }
        NegativeMode::Train => {
            if heads.is_empty() && tails.is_empty() {
                return Err(exhausted());
            }
            let mut out = Vec::with_capacity(count);
            for _ in 0..count {
                let use_head = if heads.is_empty() {
                    false
                } else if tails.is_empty() {
                    true
                } else {
                    rng.random_bool(0.5)
                };
                let pool = if use_head { &heads } else { &tails };
                out.push(*pool.choose(rng).expect("nonempty pool"));
            }
            Ok(out)
        }
    }
}
