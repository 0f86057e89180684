//! Trainable embedding tables, losses, the Adam optimizer and the two
//! training loops.

mod adam;
mod beta;
mod loops;
mod losses;

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::autodiff::{Tape, Var};
use crate::linalg::Matrix;
use crate::projector::{
    hard_projector, record_inclusion_score, record_overlap, record_soft_projector, soft_projector,
    Projector, Regularizer, SpanMatrix,
};
use crate::taxonomy::NodeId;
use crate::{Error, Result};

pub use adam::{adam_step, clip_global_norm, AdamConfig, AdamState};
pub use beta::{beta_posterior, BetaHead};
pub use loops::{
    linkpred_eval_set, stream_rng, train_linkpred, train_reconstruction, LinkPredConfig,
    LinkPredEvalSet, MetricRecord, ReconConfig, Schedule, StopReason, TrainOutcome,
};
pub use losses::{infonce_loss, margin_loss};

/// One span matrix per node, all of the same shape, sharing one regularizer.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    names: Vec<String>,
    spans: Vec<SpanMatrix>,
    reg: Regularizer,
    seed: u64,
    step: u64,
}

impl EmbeddingTable {
    pub fn new(
        names: Vec<String>,
        spans: Vec<SpanMatrix>,
        reg: Regularizer,
        seed: u64,
        step: u64,
    ) -> Result<Self> {
        if names.len() != spans.len() {
            return Err(Error::LengthMismatch {
                left: names.len(),
                right: spans.len(),
            });
        }
        if names.is_empty() {
            return Err(Error::InvalidConfig(
                "embedding table needs at least one node".into(),
            ));
        }
        let (d, n) = (spans[0].d(), spans[0].n());
        if let Some((i, s)) = spans
            .iter()
            .enumerate()
            .find(|(_, s)| (s.d(), s.n()) != (d, n))
        {
            return Err(Error::InvalidConfig(format!(
                "node '{}' is {}x{}, expected {d}x{n}",
                names[i],
                s.d(),
                s.n()
            )));
        }
        if reg.len() != n {
            return Err(Error::InvalidRegularizer(format!(
                "regularizer has {} entries, spans have {n} columns",
                reg.len()
            )));
        }
        Ok(Self {
            names,
            spans,
            reg,
            seed,
            step,
        })
    }

    pub fn len(&self) -> usize {
        self.spans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }

    pub fn d(&self) -> usize {
        self.spans[0].d()
    }

    pub fn n(&self) -> usize {
        self.spans[0].n()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn span(&self, node: NodeId) -> &SpanMatrix {
        &self.spans[node]
    }

    pub fn spans(&self) -> &[SpanMatrix] {
        &self.spans
    }

    pub fn regularizer(&self) -> &Regularizer {
        &self.reg
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of optimizer steps applied so far.
    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn position(&self, name: &str) -> Option<NodeId> {
        self.names.iter().position(|n| n == name)
    }

    pub fn soft_projector(&self, node: NodeId) -> Result<Projector> {
        soft_projector(&self.spans[node], &self.reg)
    }

    pub fn soft_projectors(&self) -> Result<Vec<Projector>> {
        (0..self.len()).map(|v| self.soft_projector(v)).collect()
    }

    pub fn hard_projectors(&self, rank_tol: f64) -> Result<Vec<Projector>> {
        self.spans
            .iter()
            .map(|x| hard_projector(x, rank_tol))
            .collect()
    }
}

/// Table with i.i.d. `N(0, std²)` entries drawn from a ChaCha8 stream seeded by `seed`.
pub fn init_table(
    names: Vec<String>,
    d: usize,
    n: usize,
    reg: Regularizer,
    std: f64,
    seed: u64,
) -> Result<EmbeddingTable> {
    if !(std > 0.0 && std.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "init std must be positive, got {std}"
        )));
    }
    if d == 0 || n == 0 {
        return Err(Error::InvalidConfig(format!(
            "d and n must be at least 1, got {d}x{n}"
        )));
    }
    let normal = Normal::new(0.0, std).map_err(|e| Error::InvalidConfig(format!("{e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spans = names
        .iter()
        .map(|_| {
            let data = (0..d * n).map(|_| normal.sample(&mut rng)).collect();
            SpanMatrix::new(Matrix::new(d, n, data)?)
        })
        .collect::<Result<Vec<_>>>()?;
    EmbeddingTable::new(names, spans, reg, seed, 0)
}

/// Loss value and per-node gradients with respect to the span matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct LossAndGrads {
    pub loss: f64,
    pub grads: BTreeMap<NodeId, Matrix>,
}

/// A tape over a table. Each node's span matrix and soft projector are
/// recorded once, on first use.
pub struct Objective<'t> {
    table: &'t EmbeddingTable,
    tape: Tape,
    nodes: BTreeMap<NodeId, (Var, Var)>,
}

impl<'t> Objective<'t> {
    pub fn new(table: &'t EmbeddingTable) -> Self {
        Self {
            table,
            tape: Tape::new(),
            nodes: BTreeMap::new(),
        }
    }

    pub fn tape(&mut self) -> &mut Tape {
        &mut self.tape
    }

    pub fn projector(&mut self, node: NodeId) -> Result<Var> {
        if let Some(&(_, p)) = self.nodes.get(&node) {
            return Ok(p);
        }
        let span = self
            .table
            .spans
            .get(node)
            .ok_or_else(|| Error::UnknownNode(format!("#{node}")))?;
        let x = self.tape.leaf(span.matrix().clone());
        let p = record_soft_projector(&mut self.tape, x, &self.table.reg)?;
        self.nodes.insert(node, (x, p));
        Ok(p)
    }

    /// `tr(P_a P_b)`.
    pub fn overlap(&mut self, a: NodeId, b: NodeId) -> Result<Var> {
        let pa = self.projector(a)?;
        let pb = self.projector(b)?;
        record_overlap(&mut self.tape, pa, pb)
    }

    /// Inclusion score of `(child, parent)`: `tr(P_c P_p) / tr(P_c)`.
    pub fn inclusion(&mut self, child: NodeId, parent: NodeId) -> Result<Var> {
        let pc = self.projector(child)?;
        let pp = self.projector(parent)?;
        record_inclusion_score(&mut self.tape, pc, pp)
    }

    pub fn finish(self, loss: Var) -> Result<LossAndGrads> {
        let value = self.tape.scalar(loss);
        let mut grads = self.tape.backward(loss)?;
        let by_node = self
            .nodes
            .into_iter()
            .map(|(node, (x, _))| {
                let g = grads
                    .remove(x)
                    .unwrap_or_else(|| Matrix::zeros(self.table.d(), self.table.n()));
                (node, g)
            })
            .collect();
        Ok(LossAndGrads {
            loss: value,
            grads: by_node,
        })
    }
}
