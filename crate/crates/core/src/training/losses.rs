use alloc::format;
use alloc::vec::Vec;

use super::Objective;
use crate::autodiff::Var;
use crate::taxonomy::{Edge, NodeId};
use crate::{Error, Result};

/// InfoNCE over subspace overlaps:
/// `−s⁺/τ + log(exp(s⁺/τ) + Σ_k exp(s_k/τ))` with `s = tr(P_anchor P_·)`.
pub fn infonce_loss(
    obj: &mut Objective<'_>,
    anchor: NodeId,
    positive: NodeId,
    negatives: &[NodeId],
    temperature: f64,
) -> Result<Var> {
    if negatives.is_empty() {
        return Err(Error::InvalidConfig(
            "InfoNCE needs at least one negative".into(),
        ));
    }
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "temperature must be positive, got {temperature}"
        )));
    }
    let inv_t = 1.0 / temperature;
    let pos = obj.overlap(anchor, positive)?;
    let pos = obj.tape().scale(pos, inv_t)?;
    let mut logits = Vec::with_capacity(negatives.len() + 1);
    logits.push(pos);
    for &neg in negatives {
        let s = obj.overlap(anchor, neg)?;
        logits.push(obj.tape().scale(s, inv_t)?);
    }
    let tape = obj.tape();
    let lse = tape.logsumexp(&logits)?;
    tape.sub(lse, pos)
}

fn check_margin(name: &str, g: f64) -> Result<()> {
    if !(g > 0.0 && g < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "{name} must lie in (0, 1), got {g}"
        )));
    }
    Ok(())
}

/// Hinge loss on inclusion scores of `(child, parent)` pairs:
/// `Σ_pos [γ₊ − s]₊ + Σ_neg [s − γ₋]₊`.
pub fn margin_loss(
    obj: &mut Objective<'_>,
    positives: &[Edge],
    negatives: &[Edge],
    gamma_pos: f64,
    gamma_neg: f64,
) -> Result<Var> {
    check_margin("gamma_pos", gamma_pos)?;
    check_margin("gamma_neg", gamma_neg)?;
    let mut terms = Vec::with_capacity(positives.len() + negatives.len());
    for &(c, p) in positives {
        let s = obj.inclusion(c, p)?;
        let tape = obj.tape();
        let neg_s = tape.scale(s, -1.0)?;
        let gap = tape.add_scalar(neg_s, gamma_pos)?;
        terms.push(tape.relu(gap)?);
    }
    for &(c, p) in negatives {
        let s = obj.inclusion(c, p)?;
        let tape = obj.tape();
        let gap = tape.add_scalar(s, -gamma_neg)?;
        terms.push(tape.relu(gap)?);
    }
    if terms.is_empty() {
        return Err(Error::InvalidConfig(
            "margin loss needs at least one pair".into(),
        ));
    }
    obj.tape().sum(&terms)
}
