use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use super::{complement, join, meet, QueryExpr};
use crate::projector::{effective_dim, overlap, Projector, DEGENERATE_TRACE};
use crate::{Error, Result};

/// Named concept subspaces, looked up by trimmed, case-folded name.
#[derive(Debug, Clone, Default)]
pub struct ConceptStore {
    entries: BTreeMap<String, (String, Projector)>,
    dim: Option<usize>,
}

pub fn normalize_name(name: &str) -> String {
    name.trim().to_lowercase()
}

impl ConceptStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: &str, projector: Projector) -> Result<()> {
        let key = normalize_name(name);
        if key.is_empty() {
            return Err(Error::InvalidConfig(
                "concept names must be nonempty".into(),
            ));
        }
        if let Some(d) = self.dim {
            if projector.dim() != d {
                return Err(Error::DimensionMismatch {
                    op: "concept store",
                    left_rows: d,
                    left_cols: d,
                    right_rows: projector.dim(),
                    right_cols: projector.dim(),
                });
            }
        }
        if self.entries.contains_key(&key) {
            return Err(Error::DuplicateConcept(String::from(name)));
        }
        self.dim = Some(projector.dim());
        self.entries
            .insert(key, (String::from(name.trim()), projector));
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Projector> {
        self.entries.get(&normalize_name(name)).map(|(_, p)| p)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.dim
    }

    /// `(display name, projector)` pairs in key order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &Projector)> {
        self.entries.values().map(|(n, p)| (n.as_str(), p))
    }

    /// Stored names within edit distance 2 of `name`, closest first.
    pub fn suggestions(&self, name: &str) -> Vec<String> {
        let key = normalize_name(name);
        let mut close: Vec<(usize, &String)> = self
            .entries
            .iter()
            .filter_map(|(k, (display, _))| {
                let dist = levenshtein(&key, k);
                (dist <= 2).then_some((dist, display))
            })
            .collect();
        close.sort();
        close.into_iter().map(|(_, n)| n.clone()).collect()
    }
}

fn levenshtein(a: &str, b: &str) -> usize {
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = alloc::vec![0; b.len() + 1];
    for (i, ca) in a.chars().enumerate() {
        cur[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        core::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Evaluates a query: `And` → meet, `Or` → join, `Not` → complement.
pub fn eval_query(q: &QueryExpr, store: &ConceptStore) -> Result<Projector> {
    match q {
        QueryExpr::Concept(name) => store
            .get(name)
            .cloned()
            .ok_or_else(|| Error::UnknownConcept {
                name: name.clone(),
                suggestions: store.suggestions(name),
            }),
        QueryExpr::And(l, r) => meet(&eval_query(l, store)?, &eval_query(r, store)?),
        QueryExpr::Or(l, r) => join(&eval_query(l, store)?, &eval_query(r, store)?),
        QueryExpr::Not(c) => Ok(complement(&eval_query(c, store)?)),
    }
}

/// Which subspace the inclusion score conditions on when ranking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Conditioning {
    /// `tr(Q P_c) / tr(Q)`: how much of the query lies inside each candidate.
    #[default]
    Query,
    /// `tr(P_c Q) / tr(P_c)`: how much of each candidate lies inside the query.
    Candidate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedConcept {
    pub name: String,
    pub score: f64,
}

/// Scores every stored concept against the evaluated query and returns the
/// top `k`, by descending score with ties broken by ascending name.
///
/// When the conditioning subspace has trace at or below the degeneracy
/// threshold (e.g. `a AND NOT a` on hard projectors) its score is 0.
pub fn rank_by_query(
    q: &QueryExpr,
    store: &ConceptStore,
    k: usize,
    conditioning: Conditioning,
) -> Result<Vec<RankedConcept>> {
    if store.is_empty() {
        return Err(Error::EmptyStore);
    }
    if k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1".into()));
    }
    let query = eval_query(q, store)?;
    let query_trace = effective_dim(&query);
    let mut ranked = store
        .iter()
        .map(|(name, p)| {
            let denom = match conditioning {
                Conditioning::Query => query_trace,
                Conditioning::Candidate => effective_dim(p),
            };
            let score = if denom > DEGENERATE_TRACE {
                overlap(&query, p)? / denom
            } else {
                0.0
            };
            Ok(RankedConcept {
                name: String::from(name),
                score,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ranked.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.name.cmp(&b.name))
    });
    ranked.truncate(k);
    Ok(ranked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::parse_query;
    use crate::linalg::Matrix;
    use crate::projector::{inclusion_score, soft_projector, Regularizer, SpanMatrix};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn store2() -> ConceptStore {
        let mut s = ConceptStore::new();
        s.insert("x", Projector::line(&[1.0, 0.0]).unwrap())
            .unwrap();
        s.insert("y", Projector::line(&[0.0, 1.0]).unwrap())
            .unwrap();
        s
    }

    fn random_store(rng: &mut ChaCha8Rng, names: &[&str], d: usize, n: usize) -> ConceptStore {
        let reg = Regularizer::isotropic(n, 0.2).unwrap();
        let mut s = ConceptStore::new();
        for name in names {
            let x: Vec<f64> = (0..d * n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let p = soft_projector(
                &SpanMatrix::new(Matrix::new(d, n, x).unwrap()).unwrap(),
                &reg,
            )
            .unwrap();
            s.insert(name, p).unwrap();
        }
        s
    }

    #[test]
    fn eval_concept_and_lattice_identities() {
        let s = store2();
        assert_eq!(
            &eval_query(&parse_query("X").unwrap(), &s).unwrap(),
            s.get("x").unwrap()
        );
        let zero = eval_query(&parse_query("x AND NOT x").unwrap(), &s).unwrap();
        assert!(zero.matrix().max_abs() < 1e-15);
        let both = eval_query(&parse_query("x OR y").unwrap(), &s).unwrap();
        assert!((effective_dim(&both) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn unknown_concept_lists_near_names() {
        let mut s = store2();
        s.insert("mammal", Projector::line(&[1.0, 1.0]).unwrap())
            .unwrap();
        match eval_query(&parse_query("mamal").unwrap(), &s) {
            Err(Error::UnknownConcept { name, suggestions }) => {
                assert_eq!(name, "mamal");
                assert_eq!(suggestions, alloc::vec![String::from("mammal")]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn store_rejects_duplicates_and_mixed_dims() {
        let mut s = store2();
        assert!(matches!(
            s.insert(" X ", Projector::line(&[1.0, 1.0]).unwrap()),
            Err(Error::DuplicateConcept(_))
        ));
        assert!(s.insert("z", Projector::identity(3)).is_err());
    }

    #[test]
    fn ranking_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let s = random_store(&mut rng, &["a", "b", "c", "d", "e"], 6, 2);
        let top = rank_by_query(&parse_query("c").unwrap(), &s, 5, Conditioning::Query).unwrap();
        assert_eq!(top[0].name, "c");
        let p = s.get("c").unwrap();
        assert!((top[0].score - inclusion_score(p, p).unwrap()).abs() < 1e-15);

        let s2 = store2();
        let top =
            rank_by_query(&parse_query("NOT x").unwrap(), &s2, 1, Conditioning::Query).unwrap();
        assert_eq!(top.len(), 1);
        assert_eq!(top[0].name, "y");

        assert_eq!(
            rank_by_query(
                &parse_query("x").unwrap(),
                &ConceptStore::new(),
                1,
                Conditioning::Query
            )
            .unwrap_err(),
            Error::EmptyStore
        );
    }

    #[test]
    fn degenerate_query_scores_zero() {
        let s = store2();
        let ranked = rank_by_query(
            &parse_query("x AND NOT x").unwrap(),
            &s,
            2,
            Conditioning::Query,
        )
        .unwrap();
        assert!(ranked.iter().all(|r| r.score == 0.0));
        // Ties fall back to name order.
        assert_eq!(ranked[0].name, "x");
    }

    #[test]
    fn candidate_conditioning_flips_the_score() {
        let mut s = ConceptStore::new();
        s.insert("line", Projector::line(&[1.0, 0.0, 0.0]).unwrap())
            .unwrap();
        s.insert(
            "plane",
            Projector::from_matrix(Matrix::from_diag(&[1.0, 1.0, 0.0])).unwrap(),
        )
        .unwrap();
        let q = parse_query("plane").unwrap();
        let by_query = rank_by_query(&q, &s, 2, Conditioning::Query).unwrap();
        let by_cand = rank_by_query(&q, &s, 2, Conditioning::Candidate).unwrap();
        let score = |v: &[RankedConcept], n: &str| v.iter().find(|r| r.name == n).unwrap().score;
        assert!((score(&by_query, "line") - 0.5).abs() < 1e-12);
        assert!((score(&by_cand, "line") - 1.0).abs() < 1e-12);
    }

    #[test]
    fn levenshtein_basics() {
        assert_eq!(levenshtein("kitten", "sitting"), 3);
        assert_eq!(levenshtein("", "ab"), 2);
        assert_eq!(levenshtein("same", "same"), 0);
    }
}
