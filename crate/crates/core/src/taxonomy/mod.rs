//! Hierarchies as DAGs of `(child, parent)` edges.
//!
//! The edge direction is always hyponym → hypernym: the child is the more
//! specific concept and should be included in the parent's subspace. A
//! [`Taxonomy`] is immutable once built and always carries its transitive
//! closure.

mod fixtures;
mod sampling;

pub use fixtures::{binary_tree, chain, layered_dag, star, worked_example};
pub use sampling::{
    make_linkpred_split, reconstruction_candidates, sample_linkpred_negatives,
    sample_reconstruction_negatives, LinkPredSplit, NegativeMode,
};

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

pub type NodeId = usize;

/// `(child, parent)`.
pub type Edge = (NodeId, NodeId);

/// Accumulates nodes and edges before validation.
#[derive(Debug, Clone, Default)]
pub struct TaxonomyBuilder {
    names: Vec<String>,
    index: BTreeMap<String, NodeId>,
    edges: BTreeSet<Edge>,
}

impl TaxonomyBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the id of `name`, adding it if needed.
    pub fn add_node(&mut self, name: &str) -> NodeId {
        if let Some(&id) = self.index.get(name) {
            return id;
        }
        let id = self.names.len();
        self.names.push(String::from(name));
        self.index.insert(String::from(name), id);
        id
    }

    /// Adds `child → parent`; duplicates are ignored.
    pub fn add_edge(&mut self, child: &str, parent: &str) -> &mut Self {
        let c = self.add_node(child);
        let p = self.add_node(parent);
        self.edges.insert((c, p));
        self
    }

    pub fn build(self) -> Result<Taxonomy> {
        Taxonomy::from_parts(self.names, self.index, self.edges)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Taxonomy {
    names: Vec<String>,
    index: BTreeMap<String, NodeId>,
    basic: BTreeSet<Edge>,
    closure: BTreeSet<Edge>,
    parents: Vec<Vec<NodeId>>,
    children: Vec<Vec<NodeId>>,
    ancestors: Vec<BTreeSet<NodeId>>,
    descendants: Vec<BTreeSet<NodeId>>,
    /// Parents before children.
    topo: Vec<NodeId>,
}

impl Taxonomy {
    /// Builds a taxonomy from `(child, parent)` name pairs.
    pub fn from_edges<'a, I>(edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut b = TaxonomyBuilder::new();
        for (c, p) in edges {
            b.add_edge(c, p);
        }
        b.build()
    }

    fn from_parts(
        names: Vec<String>,
        index: BTreeMap<String, NodeId>,
        basic: BTreeSet<Edge>,
    ) -> Result<Self> {
        let n = names.len();
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        for &(c, p) in &basic {
            parents[c].push(p);
            children[p].push(c);
        }
        let topo = topological_order(&parents).map_err(|cycle| {
            Error::Cycle(cycle.into_iter().map(|id| names[id].clone()).collect())
        })?;
        let ancestors = ancestor_sets(&parents, &topo);
        let mut descendants = vec![BTreeSet::new(); n];
        let mut closure = BTreeSet::new();
        for (c, anc) in ancestors.iter().enumerate() {
            for &a in anc {
                closure.insert((c, a));
                descendants[a].insert(c);
            }
        }
        Ok(Self {
            names,
            index,
            basic,
            closure,
            parents,
            children,
            ancestors,
            descendants,
            topo,
        })
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, id: NodeId) -> &str {
        &self.names[id]
    }

    pub fn id(&self, name: &str) -> Option<NodeId> {
        self.index.get(name).copied()
    }

    pub fn require_id(&self, name: &str) -> Result<NodeId> {
        self.id(name)
            .ok_or_else(|| Error::UnknownNode(String::from(name)))
    }

    pub fn basic_edges(&self) -> &BTreeSet<Edge> {
        &self.basic
    }

    pub fn closure_edges(&self) -> &BTreeSet<Edge> {
        &self.closure
    }

    /// Closure edges that are not basic edges.
    pub fn non_basic_edges(&self) -> Vec<Edge> {
        self.closure.difference(&self.basic).copied().collect()
    }

    pub fn in_closure(&self, child: NodeId, parent: NodeId) -> bool {
        self.ancestors[child].contains(&parent)
    }

    /// Either `(a, b)` or `(b, a)` is in the closure.
    pub fn connected(&self, a: NodeId, b: NodeId) -> bool {
        self.in_closure(a, b) || self.in_closure(b, a)
    }

    pub fn parents(&self, id: NodeId) -> &[NodeId] {
        &self.parents[id]
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.children[id]
    }

    pub fn ancestors(&self, id: NodeId) -> &BTreeSet<NodeId> {
        &self.ancestors[id]
    }

    pub fn descendants(&self, id: NodeId) -> &BTreeSet<NodeId> {
        &self.descendants[id]
    }

    /// Node ids with parents listed before their children.
    pub fn topological_order(&self) -> &[NodeId] {
        &self.topo
    }

    /// Number of nodes below each node in the closure.
    pub fn descendant_counts(&self) -> Vec<usize> {
        self.descendants.iter().map(BTreeSet::len).collect()
    }

    /// Taxonomy rank of each node: `sh / (sh + lh)`, where `sh` is the
    /// shortest path up to a root and `lh` the longest path down to a leaf.
    ///
    /// Roots get 0, leaves below a root get 1 and an isolated node gets 0.
    /// In a tree the rank increases as the descendant count drops.
    pub fn taxonomy_ranks(&self) -> Vec<f64> {
        let n = self.node_count();
        let mut up = vec![0usize; n];
        for &v in &self.topo {
            if let Some(m) = self.parents[v].iter().map(|&p| up[p]).min() {
                up[v] = m + 1;
            }
        }
        let mut down = vec![0usize; n];
        for &v in self.topo.iter().rev() {
            if let Some(m) = self.children[v].iter().map(|&c| down[c]).max() {
                down[v] = m + 1;
            }
        }
        (0..n)
            .map(|v| {
                let total = up[v] + down[v];
                if total == 0 {
                    0.0
                } else {
                    up[v] as f64 / total as f64
                }
            })
            .collect()
    }
}

/// Topological order (parents first) of the graph given by `parents`, or the
/// node ids of one cycle (first node repeated at the end).
fn topological_order(parents: &[Vec<NodeId>]) -> core::result::Result<Vec<NodeId>, Vec<NodeId>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    let n = parents.len();
    let mut mark = vec![Mark::New; n];
    let mut order = Vec::with_capacity(n);
    for root in 0..n {
        if mark[root] != Mark::New {
            continue;
        }
        // (node, next parent index)
        let mut stack: Vec<(NodeId, usize)> = vec![(root, 0)];
        mark[root] = Mark::Active;
        while let Some(top) = stack.last_mut() {
            let v = top.0;
            if let Some(&p) = parents[v].get(top.1) {
                top.1 += 1;
                match mark[p] {
                    Mark::New => {
                        mark[p] = Mark::Active;
                        stack.push((p, 0));
                    }
                    Mark::Active => {
                        let start = stack.iter().position(|&(u, _)| u == p).unwrap_or(0);
                        let mut cycle: Vec<NodeId> =
                            stack[start..].iter().map(|&(u, _)| u).collect();
                        cycle.push(p);
                        return Err(cycle);
                    }
                    Mark::Done => {}
                }
            } else {
                mark[v] = Mark::Done;
                order.push(v);
                stack.pop();
            }
        }
    }
    Ok(order)
}

/// Reachable-ancestor sets, filled in topological order so each node merges
/// its parents' already complete sets.
fn ancestor_sets(parents: &[Vec<NodeId>], topo: &[NodeId]) -> Vec<BTreeSet<NodeId>> {
    let mut anc: Vec<BTreeSet<NodeId>> = vec![BTreeSet::new(); parents.len()];
    for &v in topo {
        let mut set = BTreeSet::new();
        for &p in &parents[v] {
            set.insert(p);
            set.extend(anc[p].iter().copied());
        }
        anc[v] = set;
    }
    anc
}

/// Transitive closure of an edge set over `node_count` nodes.
///
/// Fails with the ids of a cycle if the edges are not acyclic.
pub fn transitive_closure(
    edges: &BTreeSet<Edge>,
    node_count: usize,
) -> core::result::Result<BTreeSet<Edge>, Vec<NodeId>> {
    let mut parents = vec![Vec::new(); node_count];
    for &(c, p) in edges {
        parents[c].push(p);
    }
    let topo = topological_order(&parents)?;
    let anc = ancestor_sets(&parents, &topo);
    Ok(anc
        .iter()
        .enumerate()
        .flat_map(|(c, set)| set.iter().map(move |&a| (c, a)))
        .collect())
}
