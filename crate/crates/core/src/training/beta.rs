use alloc::format;

use crate::autodiff::sigmoid;
use crate::math;
use crate::{Error, Result};

/// Two Beta densities over the inclusion score: entailment `Beta(α_E, β_E)`
/// and contradiction `Beta(α_C, β_C)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaHead {
    alpha_e: f64,
    beta_e: f64,
    alpha_c: f64,
    beta_c: f64,
}

impl BetaHead {
    /// Requires all shapes positive, `β_E ≤ α_E` and `α_C ≤ β_C`.
    pub fn new(alpha_e: f64, beta_e: f64, alpha_c: f64, beta_c: f64) -> Result<Self> {
        for (name, v) in [
            ("alpha_e", alpha_e),
            ("beta_e", beta_e),
            ("alpha_c", alpha_c),
            ("beta_c", beta_c),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidBetaHead(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if beta_e > alpha_e {
            return Err(Error::InvalidBetaHead(format!(
                "entailment density must lean right: beta_e {beta_e} > alpha_e {alpha_e}"
            )));
        }
        if alpha_c > beta_c {
            return Err(Error::InvalidBetaHead(format!(
                "contradiction density must lean left: alpha_c {alpha_c} > beta_c {beta_c}"
            )));
        }
        Ok(Self {
            alpha_e,
            beta_e,
            alpha_c,
            beta_c,
        })
    }

    pub fn shapes(&self) -> [f64; 4] {
        [self.alpha_e, self.beta_e, self.alpha_c, self.beta_c]
    }
}

impl Default for BetaHead {
    fn default() -> Self {
        Self {
            alpha_e: 6.0,
            beta_e: 1.0,
            alpha_c: 1.0,
            beta_c: 6.0,
        }
    }
}

fn ln_beta_density(s: f64, a: f64, b: f64) -> f64 {
    let ln_b = math::lgamma(a) + math::lgamma(b) - math::lgamma(a + b);
    (a - 1.0) * math::ln(s) + (b - 1.0) * math::ln(1.0 - s) - ln_b
}

/// `(p_E, p_C)` under equal priors. `s` is clamped to `[1e-6, 1 − 1e-6]`.
pub fn beta_posterior(head: &BetaHead, s: f64) -> Result<(f64, f64)> {
    if s.is_nan() {
        return Err(Error::NonFinite {
            what: "inclusion score".into(),
        });
    }
    let s = s.clamp(1e-6, 1.0 - 1e-6);
    let le = ln_beta_density(s, head.alpha_e, head.beta_e);
    let lc = ln_beta_density(s, head.alpha_c, head.beta_c);
    if !(le.is_finite() && lc.is_finite()) {
        return Err(Error::NonFinite {
            what: format!("Beta log-density at s = {s}"),
        });
    }
    let p_e = sigmoid(le - lc);
    Ok((p_e, 1.0 - p_e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn closed_form(s: f64) -> f64 {
        let a = libm::pow(s, 5.0);
        let b = libm::pow(1.0 - s, 5.0);
        a / (a + b)
    }

    #[test]
    fn default_head_examples() {
        let h = BetaHead::new(6.0, 1.0, 1.0, 6.0).unwrap();
        assert_eq!(h, BetaHead::default());
        let (e, c) = beta_posterior(&h, 0.5).unwrap();
        assert!((e - 0.5).abs() < 1e-12 && (c - 0.5).abs() < 1e-12);
        let (e, _) = beta_posterior(&h, 0.9).unwrap();
        assert!((e - closed_form(0.9)).abs() < 1e-12);
        assert!(e > 0.99998);
        let (e, _) = beta_posterior(&h, 1.0).unwrap();
        assert!(e > 1.0 - 1e-12);
    }

    #[test]
    fn monotone_and_matches_closed_form_on_grid() {
        let h = BetaHead::default();
        let mut prev = 0.0;
        for k in 1..1000 {
            let s = k as f64 * 1e-3;
            let (e, c) = beta_posterior(&h, s).unwrap();
            assert!((e - closed_form(s)).abs() < 1e-10);
            assert!((e + c - 1.0).abs() < 1e-15);
            assert!(e > prev);
            prev = e;
        }
    }

    #[test]
    fn head_validation() {
        assert!(BetaHead::new(0.0, 1.0, 1.0, 6.0).is_err());
        assert!(BetaHead::new(1.0, 6.0, 1.0, 6.0).is_err());
        assert!(BetaHead::new(6.0, 1.0, 6.0, 1.0).is_err());
        assert!(beta_posterior(&BetaHead::default(), f64::NAN).is_err());
    }
}
