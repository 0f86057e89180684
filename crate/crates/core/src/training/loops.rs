use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{adam_step, clip_global_norm, infonce_loss, init_table, margin_loss};
use super::{AdamConfig, AdamState, EmbeddingTable, Objective};
use crate::metrics::{
    calibrate_threshold_f1, dimension_report, inclusion_scores, reconstruction_ranks, LabeledScore,
    RankingPool,
};
use crate::projector::Regularizer;
use crate::taxonomy::{
    reconstruction_candidates, sample_linkpred_negatives, sample_reconstruction_negatives, Edge,
    LinkPredSplit, NegativeMode, Taxonomy,
};
use crate::{Error, Result};

/// Independent ChaCha8 stream `stream` of `seed`. Stream 0 initializes the
/// table, 1 drives training, 2 draws evaluation negatives, 3 builds splits.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One snapshot of a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRecord {
    pub epoch: usize,
    pub step: u64,
    /// Mean batch loss over the epoch.
    pub loss: f64,
    pub lr: f64,
    pub map: Option<f64>,
    pub mean_rank: Option<f64>,
    pub rho: Option<f64>,
    pub threshold: Option<f64>,
    pub val_f1: Option<f64>,
    pub test_f1: Option<f64>,
}

impl MetricRecord {
    fn new(epoch: usize, step: u64, loss: f64, lr: f64) -> Self {
        Self {
            epoch,
            step,
            loss,
            lr,
            map: None,
            mean_rank: None,
            rho: None,
            threshold: None,
            val_f1: None,
            test_f1: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MaxEpochs,
    /// The monitored metric did not improve for `patience` evaluations.
    Plateau {
        best_epoch: usize,
        patience: usize,
    },
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub table: EmbeddingTable,
    pub log: Vec<MetricRecord>,
    pub stop: StopReason,
}

/// Hyperparameters shared by both loops.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Evaluate every this many epochs.
    pub eval_every: usize,
    /// Evaluations without improvement before stopping.
    pub patience: usize,
    /// No plateau stop before this epoch.
    pub min_epochs: usize,
    pub clip_norm: Option<f64>,
    pub adam: AdamConfig,
}

impl Default for Schedule {
    fn default() -> Self {
        Self {
            batch_size: 128,
            max_epochs: 1000,
            eval_every: 5,
            patience: 10,
            min_epochs: 0,
            clip_norm: Some(10.0),
            adam: AdamConfig::default(),
        }
    }
}

impl Schedule {
    fn validate(&self) -> Result<()> {
        if self.batch_size == 0
            || self.max_epochs == 0
            || self.eval_every == 0
            || self.patience == 0
        {
            return Err(Error::InvalidConfig(
                "batch_size, max_epochs, eval_every and patience must be at least 1".into(),
            ));
        }
        if let Some(c) = self.clip_norm {
            if !(c > 0.0) {
                return Err(Error::InvalidConfig(alloc::format!(
                    "clip norm must be positive, got {c}"
                )));
            }
        }
        self.adam.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconConfig {
    pub d: usize,
    pub n: usize,
    pub lambda: f64,
    pub init_std: f64,
    pub temperature: f64,
    pub negatives: usize,
    pub seed: u64,
    pub schedule: Schedule,
}

impl Default for ReconConfig {
    fn default() -> Self {
        Self {
            d: 16,
            n: 16,
            lambda: 0.2,
            init_std: 1e-4,
            temperature: 1.0,
            negatives: 19,
            seed: 0,
            schedule: Schedule {
                batch_size: 32,
                max_epochs: 2000,
                eval_every: 10,
                patience: 10,
                min_epochs: 500,
                ..Schedule::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkPredConfig {
    pub d: usize,
    pub n: usize,
    pub lambda: f64,
    pub init_std: f64,
    pub gamma_pos: f64,
    pub gamma_neg: f64,
    /// Training negatives per positive.
    pub negatives: usize,
    /// Evaluation negatives per positive (half heads, half tails).
    pub eval_negatives: usize,
    pub seed: u64,
    pub schedule: Schedule,
}

impl Default for LinkPredConfig {
    fn default() -> Self {
        Self {
            d: 16,
            n: 16,
            lambda: 0.2,
            init_std: 1e-2,
            gamma_pos: 0.9,
            gamma_neg: 0.1,
            negatives: 10,
            eval_negatives: 10,
            seed: 0,
            schedule: Schedule {
                batch_size: 16,
                max_epochs: 2000,
                eval_every: 10,
                patience: 10,
                min_epochs: 300,
                clip_norm: Some(10.0),
                adam: AdamConfig {
                    lr: 5e-3,
                    decay: 0.995,
                    ..AdamConfig::default()
                },
            },
        }
    }
}

struct Plateau {
    best: f64,
    best_epoch: usize,
    stale: usize,
}

impl Plateau {
    fn new() -> Self {
        Self {
            best: f64::NEG_INFINITY,
            best_epoch: 0,
            stale: 0,
        }
    }

    /// Records a value; returns true when training should stop.
    fn update(&mut self, value: f64, epoch: usize, s: &Schedule) -> bool {
        if value > self.best {
            self.best = value;
            self.best_epoch = epoch;
            self.stale = 0;
        } else {
            self.stale += 1;
        }
        self.stale >= s.patience && epoch >= s.min_epochs
    }
}

fn optimizer_step(
    table: &mut EmbeddingTable,
    state: &mut AdamState,
    obj_grads: &mut alloc::collections::BTreeMap<usize, crate::Matrix>,
    clip: Option<f64>,
) -> Result<()> {
    if let Some(c) = clip {
        clip_global_norm(obj_grads, c);
    }
    adam_step(table, obj_grads, state)
}

/// InfoNCE training on every closure edge `(u, v)`: `v` is the positive for
/// anchor `u`, negatives are nodes unrelated to `u`, redrawn every epoch.
///
/// Anchors with fewer unrelated nodes than requested use all of them; anchors
/// with none are skipped. mAP is the monitored metric.
pub fn train_reconstruction(
    t: &Taxonomy,
    cfg: &ReconConfig,
    mut observer: impl FnMut(&MetricRecord),
) -> Result<TrainOutcome> {
    cfg.schedule.validate()?;
    if cfg.negatives == 0 {
        return Err(Error::InvalidConfig("negatives must be at least 1".into()));
    }
    let reg = Regularizer::isotropic(cfg.n, cfg.lambda)?;
    let mut table = init_table(
        t.names().to_vec(),
        cfg.d,
        cfg.n,
        reg,
        cfg.init_std,
        cfg.seed,
    )?;
    let mut state = AdamState::new(&table, cfg.schedule.adam)?;
    let mut rng = stream_rng(cfg.seed, 1);
    let available: Vec<usize> = (0..t.node_count())
        .map(|u| reconstruction_candidates(t, u).len())
        .collect();
    let mut edges: Vec<Edge> = t
        .closure_edges()
        .iter()
        .copied()
        .filter(|&(u, _)| available[u] > 0)
        .collect();
    if edges.is_empty() {
        return Err(Error::InvalidConfig(
            "no closure edge has an unrelated node to contrast against".into(),
        ));
    }

    let mut log = Vec::new();
    let mut plateau = Plateau::new();
    let s = &cfg.schedule;
    for epoch in 1..=s.max_epochs {
        edges.shuffle(&mut rng);
        let mut total = 0.0;
        let mut batches = 0usize;
        for batch in edges.chunks(s.batch_size) {
            let mut obj = Objective::new(&table);
            let mut terms = Vec::with_capacity(batch.len());
            for &(u, v) in batch {
                let k = cfg.negatives.min(available[u]);
                let negs = sample_reconstruction_negatives(t, u, k, &mut rng)?;
                terms.push(infonce_loss(&mut obj, u, v, &negs, cfg.temperature)?);
            }
            let sum = obj.tape().sum(&terms)?;
            let mean = obj.tape().scale(sum, 1.0 / terms.len() as f64)?;
            let mut out = obj.finish(mean)?;
            optimizer_step(&mut table, &mut state, &mut out.grads, s.clip_norm)?;
            total += out.loss;
            batches += 1;
        }
        let mut record = MetricRecord::new(epoch, table.step(), total / batches as f64, state.lr());
        state.end_epoch();
        if epoch % s.eval_every != 0 && epoch != s.max_epochs {
            continue;
        }
        let projectors = table.soft_projectors()?;
        let report = reconstruction_ranks(&projectors, t, RankingPool::Tail)?;
        record.map = Some(report.map);
        record.mean_rank = Some(report.mean_rank);
        record.rho = dimension_report(&projectors, t)
            .ok()
            .map(|r| r.rho_descendants);
        observer(&record);
        log.push(record);
        if plateau.update(report.map, epoch, s) {
            return Ok(TrainOutcome {
                table,
                log,
                stop: StopReason::Plateau {
                    best_epoch: plateau.best_epoch,
                    patience: s.patience,
                },
            });
        }
    }
    Ok(TrainOutcome {
        table,
        log,
        stop: StopReason::MaxEpochs,
    })
}

/// Positive edges with their evaluation corruptions.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinkPredEvalSet {
    pub positives: Vec<Edge>,
    pub negatives: Vec<Edge>,
}

impl LinkPredEvalSet {
    pub fn labeled_scores(&self, table: &EmbeddingTable) -> Result<Vec<LabeledScore>> {
        let projectors = table.soft_projectors()?;
        let pos = inclusion_scores(&projectors, &self.positives)?;
        let neg = inclusion_scores(&projectors, &self.negatives)?;
        Ok(pos
            .into_iter()
            .map(|s| LabeledScore::new(s, true))
            .chain(neg.into_iter().map(|s| LabeledScore::new(s, false)))
            .collect())
    }
}

/// `per_positive` evaluation corruptions (half heads, half tails) for each edge.
pub fn linkpred_eval_set<R: Rng + ?Sized>(
    t: &Taxonomy,
    edges: &[Edge],
    per_positive: usize,
    rng: &mut R,
) -> Result<LinkPredEvalSet> {
    let mut negatives = Vec::with_capacity(edges.len() * per_positive);
    for &e in edges {
        negatives.extend(sample_linkpred_negatives(
            t,
            e,
            per_positive,
            NegativeMode::Eval,
            rng,
        )?);
    }
    Ok(LinkPredEvalSet {
        positives: edges.to_vec(),
        negatives,
    })
}

/// Margin-loss training on `split.train` with `cfg.negatives` corrupted
/// edges per positive. Each evaluation calibrates a threshold on the
/// validation set and reports test F1 at it; validation F1 is monitored.
pub fn train_linkpred(
    t: &Taxonomy,
    split: &LinkPredSplit,
    cfg: &LinkPredConfig,
    mut observer: impl FnMut(&MetricRecord),
) -> Result<TrainOutcome> {
    cfg.schedule.validate()?;
    if cfg.negatives == 0 {
        return Err(Error::InvalidConfig("negatives must be at least 1".into()));
    }
    if split.train.is_empty() {
        return Err(Error::InvalidSplit("training set is empty".into()));
    }
    let reg = Regularizer::isotropic(cfg.n, cfg.lambda)?;
    let mut table = init_table(
        t.names().to_vec(),
        cfg.d,
        cfg.n,
        reg,
        cfg.init_std,
        cfg.seed,
    )?;
    let mut state = AdamState::new(&table, cfg.schedule.adam)?;
    let mut eval_rng = stream_rng(cfg.seed, 2);
    let val = linkpred_eval_set(t, &split.val, cfg.eval_negatives, &mut eval_rng)?;
    let test = linkpred_eval_set(t, &split.test, cfg.eval_negatives, &mut eval_rng)?;
    let mut rng = stream_rng(cfg.seed, 1);
    let mut edges = split.train.clone();

    let mut log = Vec::new();
    let mut plateau = Plateau::new();
    let s = &cfg.schedule;
    for epoch in 1..=s.max_epochs {
        edges.shuffle(&mut rng);
        let mut total = 0.0;
        let mut batches = 0usize;
        for batch in edges.chunks(s.batch_size) {
            let mut negs = Vec::with_capacity(batch.len() * cfg.negatives);
            for &e in batch {
                // Edges such as (bottom, top) of a chain have no valid corruption.
                match sample_linkpred_negatives(t, e, cfg.negatives, NegativeMode::Train, &mut rng)
                {
                    Ok(drawn) => negs.extend(drawn),
                    Err(Error::NegativeSamplingExhausted { .. }) => {}
                    Err(e) => return Err(e),
                }
            }
            let mut obj = Objective::new(&table);
            let sum = margin_loss(&mut obj, batch, &negs, cfg.gamma_pos, cfg.gamma_neg)?;
            let mean = obj.tape().scale(sum, 1.0 / batch.len() as f64)?;
            let mut out = obj.finish(mean)?;
            optimizer_step(&mut table, &mut state, &mut out.grads, s.clip_norm)?;
            total += out.loss;
            batches += 1;
        }
        let mut record = MetricRecord::new(epoch, table.step(), total / batches as f64, state.lr());
        state.end_epoch();
        if epoch % s.eval_every != 0 && epoch != s.max_epochs {
            continue;
        }
        let f1 =
            calibrate_threshold_f1(&val.labeled_scores(&table)?, &test.labeled_scores(&table)?)?;
        record.threshold = Some(f1.threshold);
        record.val_f1 = Some(f1.val_f1);
        record.test_f1 = Some(f1.test_f1);
        observer(&record);
        log.push(record);
        if plateau.update(f1.val_f1, epoch, s) {
            return Ok(TrainOutcome {
                table,
                log,
                stop: StopReason::Plateau {
                    best_epoch: plateau.best_epoch,
                    patience: s.patience,
                },
            });
        }
    }
    Ok(TrainOutcome {
        table,
        log,
        stop: StopReason::MaxEpochs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taxonomy::{binary_tree, make_linkpred_split, TaxonomyBuilder};

    fn quick(epochs: usize) -> Schedule {
        Schedule {
            max_epochs: epochs,
            eval_every: 1,
            patience: epochs,
            ..Schedule::default()
        }
    }

    #[test]
    fn single_edge_loss_decreases() {
        let mut b = TaxonomyBuilder::new();
        b.add_edge("a", "b");
        for i in 0..4 {
            b.add_node(&alloc::format!("iso{i}"));
        }
        let t = b.build().unwrap();
        let cfg = ReconConfig {
            d: 4,
            n: 4,
            init_std: 0.1,
            negatives: 3,
            schedule: Schedule {
                adam: AdamConfig {
                    lr: 1e-2,
                    ..AdamConfig::default()
                },
                ..quick(10)
            },
            ..ReconConfig::default()
        };
        let out = train_reconstruction(&t, &cfg, |_| {}).unwrap();
        let losses: Vec<f64> = out.log.iter().map(|r| r.loss).collect();
        assert_eq!(losses.len(), 10);
        assert!(losses.windows(2).all(|w| w[1] < w[0]), "{losses:?}");
    }

    #[test]
    fn reconstruction_is_deterministic() {
        let t = binary_tree(2);
        let cfg = ReconConfig {
            d: 4,
            n: 4,
            init_std: 0.1,
            negatives: 3,
            schedule: quick(5),
            ..ReconConfig::default()
        };
        let a = train_reconstruction(&t, &cfg, |_| {}).unwrap();
        let b = train_reconstruction(&t, &cfg, |_| {}).unwrap();
        assert_eq!(a.table, b.table);
        assert_eq!(a.log, b.log);
        let mut seen = 0;
        train_reconstruction(&t, &cfg, |_| seen += 1).unwrap();
        assert_eq!(seen, a.log.len());
    }

    #[test]
    fn linkpred_runs_and_is_deterministic() {
        let t = binary_tree(3);
        let split = make_linkpred_split(&t, 0.5, 0.2, 0.2, &mut stream_rng(1, 3)).unwrap();
        let cfg = LinkPredConfig {
            d: 4,
            n: 4,
            init_std: 0.1,
            schedule: quick(4),
            ..LinkPredConfig::default()
        };
        let a = train_linkpred(&t, &split, &cfg, |_| {}).unwrap();
        let b = train_linkpred(&t, &split, &cfg, |_| {}).unwrap();
        assert_eq!(a.log, b.log);
        assert!(a.log.iter().all(|r| r.test_f1.is_some() && r.map.is_none()));
    }

    #[test]
    fn plateau_stops_after_patience() {
        let s = Schedule {
            patience: 2,
            min_epochs: 0,
            ..Schedule::default()
        };
        let mut p = Plateau::new();
        assert!(!p.update(0.5, 1, &s));
        assert!(!p.update(0.5, 2, &s));
        assert!(p.update(0.4, 3, &s));
        assert_eq!(p.best_epoch, 1);
    }

    #[test]
    fn eval_set_sizes() {
        let t = binary_tree(3);
        let edges: Vec<Edge> = t.non_basic_edges().into_iter().take(3).collect();
        let set = linkpred_eval_set(&t, &edges, 10, &mut stream_rng(0, 2)).unwrap();
        assert_eq!(set.positives.len(), 3);
        assert_eq!(set.negatives.len(), 30);
        assert!(set.negatives.iter().all(|&(c, p)| !t.in_closure(c, p)));
    }
}
