//! Synthetic hierarchies used by tests, the CLI fixtures and the walkthrough.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::IndexedRandom;
use rand::Rng;

use super::{Taxonomy, TaxonomyBuilder};

/// Full binary tree with `depth` levels below the root (`2^(depth+1) − 1`
/// nodes). Nodes are named `t{i}` in heap order, so `t0` is the root and the
/// children of `t{i}` are `t{2i+1}` and `t{2i+2}`.
pub fn binary_tree(depth: u32) -> Taxonomy {
    let count = (1usize << (depth + 1)) - 1;
    let mut b = TaxonomyBuilder::new();
    for i in 0..count {
        b.add_node(&format!("t{i}"));
    }
    for i in 1..count {
        b.add_edge(&format!("t{i}"), &format!("t{}", (i - 1) / 2));
    }
    b.build().expect("trees are acyclic")
}

/// `c0 → c1 → … → c{len-1}`; `c0` is the most specific node.
pub fn chain(len: usize) -> Taxonomy {
    let mut b = TaxonomyBuilder::new();
    for i in 0..len {
        b.add_node(&format!("c{i}"));
    }
    for i in 1..len {
        b.add_edge(&format!("c{}", i - 1), &format!("c{i}"));
    }
    b.build().expect("chains are acyclic")
}

/// `leaves` leaves `s1..` all attached to the root `s0`.
pub fn star(leaves: usize) -> Taxonomy {
    let mut b = TaxonomyBuilder::new();
    b.add_node("s0");
    for i in 1..=leaves {
        b.add_edge(&format!("s{i}"), "s0");
    }
    b.build().expect("stars are acyclic")
}

/// Random layered DAG with `nodes` nodes named `d{i}` over `layers` layers.
///
/// Layer 0 holds two roots (one if `nodes < 4`); the rest are spread evenly
/// over the remaining layers. Every non-root node takes one parent from the
/// layer directly above and, with probability `extra_parent_prob`, a second
/// distinct parent from any earlier layer.
pub fn layered_dag<R: Rng + ?Sized>(
    nodes: usize,
    layers: usize,
    extra_parent_prob: f64,
    rng: &mut R,
) -> Taxonomy {
    let layers = layers.max(1).min(nodes.max(1));
    let roots = if layers == 1 {
        nodes
    } else if nodes < 4 {
        1
    } else {
        2
    };
    let mut layer_of: Vec<Vec<usize>> = Vec::with_capacity(layers);
    layer_of.push((0..roots).collect());
    let rest = nodes - roots;
    let per = if layers > 1 { rest / (layers - 1) } else { 0 };
    let mut extra = if layers > 1 { rest % (layers - 1) } else { 0 };
    let mut next = roots;
    for _ in 1..layers {
        let mut size = per;
        if extra > 0 {
            size += 1;
            extra -= 1;
        }
        layer_of.push((next..next + size).collect());
        next += size;
    }
    let name = |i: usize| -> String { format!("d{i:02}") };
    let mut b = TaxonomyBuilder::new();
    for i in 0..nodes {
        b.add_node(&name(i));
    }
    for k in 1..layers {
        let earlier: Vec<usize> = layer_of[..k].iter().flatten().copied().collect();
        for &v in &layer_of[k] {
            let above = &layer_of[k - 1];
            let Some(&p) = above.choose(rng) else {
                continue;
            };
            b.add_edge(&name(v), &name(p));
            if rng.random_bool(extra_parent_prob.clamp(0.0, 1.0)) {
                if let Some(&q) = earlier.choose(rng) {
                    if q != p {
                        b.add_edge(&name(v), &name(q));
                    }
                }
            }
        }
    }
    b.build().expect("edges only point to earlier layers")
}

/// Ten-node hierarchy small enough to check its closure by hand.
///
/// ```text
/// entity ─┬─ animal ─┬─ mammal ─┬─ dog ── puppy
///         │          │          └─ cat
///         │          └─ bird ───── sparrow
///         └─ plant ──── tree
/// ```
pub fn worked_example() -> Taxonomy {
    Taxonomy::from_edges(WORKED_EXAMPLE_EDGES.iter().copied()).expect("acyclic")
}

pub(crate) const WORKED_EXAMPLE_EDGES: [(&str, &str); 9] = [
    ("animal", "entity"),
    ("plant", "entity"),
    ("mammal", "animal"),
    ("bird", "animal"),
    ("dog", "mammal"),
    ("cat", "mammal"),
    ("puppy", "dog"),
    ("sparrow", "bird"),
    ("tree", "plant"),
];
