//! Subspace lattice operations and the boolean query language built on them.
//!
//! Meet is the symmetrized product `½(PQ + QP)`. It is the exact intersection
//! projector when `P` and `Q` commute and a contraction otherwise; it is never
//! projected back onto a true projector. Join is `P + Q − meet(P, Q)` and
//! complement is `I − P`.

mod query;
mod store;

pub use query::{parse_query, QueryExpr};
pub use store::{eval_query, rank_by_query, ConceptStore, Conditioning, RankedConcept};

use crate::linalg::Matrix;
use crate::projector::Projector;
use crate::Result;

/// `½(PQ + QP)`. Exactly symmetric in its arguments.
pub fn meet(p: &Projector, q: &Projector) -> Result<Projector> {
    p.check_dims(q, "meet")?;
    let pq = p.matrix().matmul(q.matrix())?;
    let qp = q.matrix().matmul(p.matrix())?;
    let sum = pq.zip_with("meet", &qp, |a, b| 0.5 * (a + b))?;
    Ok(Projector::raw(sum))
}

/// `P + Q − meet(P, Q)`.
pub fn join(p: &Projector, q: &Projector) -> Result<Projector> {
    let m = meet(p, q)?;
    let out = p.matrix().add(q.matrix())?.sub(m.matrix())?;
    Ok(Projector::raw(out))
}

/// `I − P`.
pub fn complement(p: &Projector) -> Projector {
    p.complement()
}

/// Greatest element: the whole space.
pub fn top(d: usize) -> Projector {
    Projector::raw(Matrix::identity(d))
}

/// Least element: the zero subspace.
pub fn bottom(d: usize) -> Projector {
    Projector::raw(Matrix::zeros(d, d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DEFAULT_RANK_TOL;
    use crate::projector::{hard_projector, SpanMatrix};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn diag(v: &[f64]) -> Projector {
        Projector::from_matrix(Matrix::from_diag(v)).unwrap()
    }

    fn max_diff(a: &Projector, b: &Projector) -> f64 {
        a.matrix().sub(b.matrix()).unwrap().max_abs()
    }

    #[test]
    fn meet_examples() {
        let m = meet(&diag(&[1.0, 1.0, 0.0]), &diag(&[0.0, 1.0, 1.0])).unwrap();
        assert_eq!(m, diag(&[0.0, 1.0, 0.0]));

        let mut rng = ChaCha8Rng::seed_from_u64(30);
        let x: alloc::vec::Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
        let p = hard_projector(
            &SpanMatrix::new(Matrix::new(4, 2, x).unwrap()).unwrap(),
            DEFAULT_RANK_TOL,
        )
        .unwrap();
        assert!(max_diff(&meet(&p, &top(4)).unwrap(), &p) < 1e-15);

        let e1 = Projector::line(&[1.0, 0.0]).unwrap();
        let v = Projector::line(&[1.0, 1.0]).unwrap();
        let m = meet(&e1, &v).unwrap();
        let expect =
            Projector::from_matrix(Matrix::from_rows(&[[0.5, 0.25], [0.25, 0.0]])).unwrap();
        assert!(max_diff(&m, &expect) < 1e-15);
    }

    #[test]
    fn join_examples() {
        let j = join(&diag(&[1.0, 1.0, 0.0]), &diag(&[0.0, 1.0, 1.0])).unwrap();
        assert_eq!(j, diag(&[1.0, 1.0, 1.0]));
        let p = Projector::line(&[0.6, 0.8]).unwrap();
        assert_eq!(join(&p, &bottom(2)).unwrap(), p);
        let e1 = Projector::line(&[1.0, 0.0]).unwrap();
        let e2 = Projector::line(&[0.0, 1.0]).unwrap();
        assert_eq!(join(&e1, &e2).unwrap(), diag(&[1.0, 1.0]));
    }

    #[test]
    fn complement_examples() {
        assert_eq!(complement(&bottom(3)), top(3));
        assert_eq!(complement(&top(3)), bottom(3));
        let e1 = Projector::line(&[1.0, 0.0]).unwrap();
        assert_eq!(complement(&e1), Projector::line(&[0.0, 1.0]).unwrap());
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        assert!(meet(&top(2), &top(3)).is_err());
        assert!(join(&top(2), &top(3)).is_err());
    }

    fn co_diagonal() -> impl Strategy<Value = (alloc::vec::Vec<f64>, alloc::vec::Vec<f64>)> {
        (1usize..=16).prop_flat_map(|d| {
            (
                proptest::collection::vec(prop_oneof![Just(0.0), Just(1.0)], d),
                proptest::collection::vec(prop_oneof![Just(0.0), Just(1.0)], d),
            )
        })
    }

    proptest! {
        #[test]
        fn commuting_case_is_exact((a, b) in co_diagonal()) {
            let p = diag(&a);
            let q = diag(&b);
            let and: alloc::vec::Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
            let or: alloc::vec::Vec<f64> = a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect();
            prop_assert!(max_diff(&meet(&p, &q).unwrap(), &diag(&and)) <= 1e-12);
            prop_assert!(max_diff(&join(&p, &q).unwrap(), &diag(&or)) <= 1e-12);
            let lhs = complement(&join(&p, &q).unwrap());
            let rhs = meet(&complement(&p), &complement(&q)).unwrap();
            prop_assert!(max_diff(&lhs, &rhs) <= 1e-10);
        }

        #[test]
        fn meet_is_symmetric_and_complement_involutive(
            seed in any::<u64>(), d in 1usize..8, k in 1usize..4
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rand_proj = |rng: &mut ChaCha8Rng| {
                let x: alloc::vec::Vec<f64> = (0..d * k).map(|_| rng.random_range(-1.0..1.0)).collect();
                hard_projector(&SpanMatrix::new(Matrix::new(d, k, x).unwrap()).unwrap(), DEFAULT_RANK_TOL).unwrap()
            };
            let p = rand_proj(&mut rng);
            let q = rand_proj(&mut rng);
            prop_assert_eq!(meet(&p, &q).unwrap(), meet(&q, &p).unwrap());
            prop_assert_eq!(complement(&complement(&p)), p);
        }
    }
}
