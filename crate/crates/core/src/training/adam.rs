use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use super::EmbeddingTable;
use crate::linalg::Matrix;
use crate::math;
use crate::projector::SpanMatrix;
use crate::taxonomy::NodeId;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Multiplicative learning-rate decay applied by [`AdamState::end_epoch`].
    pub decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 5e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            decay: 1.0,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let bad =
            |what: &str, v: f64| Err(Error::InvalidConfig(format!("{what} out of range: {v}")));
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("learning rate", self.lr);
        }
        if !(0.0..1.0).contains(&self.beta1) {
            return bad("beta1", self.beta1);
        }
        if !(0.0..1.0).contains(&self.beta2) {
            return bad("beta2", self.beta2);
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return bad("eps", self.eps);
        }
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return bad("lr decay", self.decay);
        }
        Ok(())
    }
}

/// Moment estimates for every node of a table.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    config: AdamConfig,
    lr: f64,
    t: u64,
    m: Vec<Matrix>,
    v: Vec<Matrix>,
}

impl AdamState {
    pub fn new(table: &EmbeddingTable, config: AdamConfig) -> Result<Self> {
        config.validate()?;
        let zeros = || {
            (0..table.len())
                .map(|_| Matrix::zeros(table.d(), table.n()))
                .collect()
        };
        Ok(Self {
            config,
            lr: config.lr,
            t: 0,
            m: zeros(),
            v: zeros(),
        })
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn end_epoch(&mut self) {
        self.lr *= self.config.decay;
    }
}

/// Rescales `grads` so their joint Frobenius norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_global_norm(grads: &mut BTreeMap<NodeId, Matrix>, max_norm: f64) -> f64 {
    let norm = math::sqrt(
        grads
            .values()
            .flat_map(|g| g.as_slice())
            .map(|x| x * x)
            .sum::<f64>(),
    );
    if norm > max_norm && norm > 0.0 {
        let factor = max_norm / norm;
        for g in grads.values_mut() {
            for x in g.as_mut_slice() {
                *x *= factor;
            }
        }
    }
    norm
}

/// One bias-corrected Adam update. Nodes absent from `grads` are treated as
/// having a zero gradient.
pub fn adam_step(
    table: &mut EmbeddingTable,
    grads: &BTreeMap<NodeId, Matrix>,
    state: &mut AdamState,
) -> Result<()> {
    let (d, n) = (table.d(), table.n());
    for (&node, g) in grads {
        let name = table
            .names
            .get(node)
            .cloned()
            .ok_or_else(|| Error::UnknownNode(format!("#{node}")))?;
        if g.shape() != (d, n) {
            return Err(Error::DimensionMismatch {
                op: "adam_step",
                left_rows: d,
                left_cols: n,
                right_rows: g.rows(),
                right_cols: g.cols(),
            });
        }
        if !g.is_finite() {
            return Err(Error::NonFiniteGradient(name));
        }
    }
    let AdamConfig {
        beta1, beta2, eps, ..
    } = state.config;
    state.t += 1;
    let t = state.t as f64;
    let bc1 = 1.0 - libm::pow(beta1, t);
    let bc2 = 1.0 - libm::pow(beta2, t);
    let mut updated: Vec<SpanMatrix> = Vec::with_capacity(table.len());
    for node in 0..table.len() {
        let g = grads.get(&node);
        let m = state.m[node].as_mut_slice();
        let v = state.v[node].as_mut_slice();
        let mut x = table.spans[node].matrix().clone();
        let xs = x.as_mut_slice();
        for k in 0..xs.len() {
            let gk = g.map_or(0.0, |g| g.as_slice()[k]);
            m[k] = beta1 * m[k] + (1.0 - beta1) * gk;
            v[k] = beta2 * v[k] + (1.0 - beta2) * gk * gk;
            let m_hat = m[k] / bc1;
            let v_hat = v[k] / bc2;
            xs[k] -= state.lr * m_hat / (math::sqrt(v_hat) + eps);
        }
        if !x.is_finite() {
            return Err(Error::NonFinite {
                what: format!("span matrix of '{}' after update", table.names[node]),
            });
        }
        updated.push(SpanMatrix::new(x)?);
    }
    table.spans = updated;
    table.step += 1;
    Ok(())
}
