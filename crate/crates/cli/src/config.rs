//! Run configuration.
//!
//! A run is configured in three layers, later layers winning: the defaults
//! of the mode, an optional TOML file, then command-line flags. The merged
//! result is validated and written next to the run's artifacts.

use std::path::Path;

use serde::{Deserialize, Serialize};
use subspace_core::training::{AdamConfig, LinkPredConfig, ReconConfig, Schedule};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Recon,
    Linkpred,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Infonce,
    Margin,
}

macro_rules! run_config {
    ($( $(#[$doc:meta])* $field:ident : $ty:ty ),* $(,)?) => {
        /// Fully resolved configuration of one training run.
        #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
        #[serde(deny_unknown_fields)]
        pub struct RunConfig {
            $( $(#[$doc])* pub $field: $ty, )*
        }

        /// Any subset of [`RunConfig`], as read from a file or from flags.
        #[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
        #[serde(deny_unknown_fields)]
        pub struct PartialConfig {
            $( #[serde(default, skip_serializing_if = "Option::is_none")] pub $field: Option<$ty>, )*
        }

        impl RunConfig {
            fn apply(&mut self, p: &PartialConfig) {
                $( if let Some(v) = &p.$field { self.$field = v.clone(); } )*
            }
        }

        impl PartialConfig {
            /// Fields set in `over` replace those in `self`.
            pub fn merge(mut self, over: &PartialConfig) -> Self {
                $( if over.$field.is_some() { self.$field = over.$field.clone(); } )*
                self
            }
        }
    };
}

run_config! {
    mode: Mode,
    dataset: String,
    output_dir: String,
    seed: u64,
    d: usize,
    n: usize,
    lambda: f64,
    loss: LossKind,
    temperature: f64,
    gamma_pos: f64,
    gamma_neg: f64,
    lr: f64,
    lr_decay: f64,
    batch_size: usize,
    negatives: usize,
    eval_negatives: usize,
    /// Maximum number of epochs.
    epochs: usize,
    min_epochs: usize,
    eval_every: usize,
    /// Evaluations without improvement before stopping.
    patience: usize,
    /// Global gradient-norm clip; 0 disables clipping.
    clip_norm: f64,
    init_std: f64,
    coverage: f64,
    val_frac: f64,
    test_frac: f64,
}

fn schedule_fields(c: &mut RunConfig, s: &Schedule) {
    c.lr = s.adam.lr;
    c.lr_decay = s.adam.decay;
    c.batch_size = s.batch_size;
    c.epochs = s.max_epochs;
    c.min_epochs = s.min_epochs;
    c.eval_every = s.eval_every;
    c.patience = s.patience;
    c.clip_norm = s.clip_norm.unwrap_or(0.0);
}

impl RunConfig {
    pub fn defaults(mode: Mode) -> Self {
        let lp = LinkPredConfig::default();
        let mut c = RunConfig {
            mode,
            dataset: String::new(),
            output_dir: "runs".into(),
            seed: 0,
            d: lp.d,
            n: lp.n,
            lambda: lp.lambda,
            loss: LossKind::Margin,
            temperature: 1.0,
            gamma_pos: lp.gamma_pos,
            gamma_neg: lp.gamma_neg,
            lr: 0.0,
            lr_decay: 1.0,
            batch_size: 0,
            negatives: lp.negatives,
            eval_negatives: lp.eval_negatives,
            epochs: 0,
            min_epochs: 0,
            eval_every: 0,
            patience: 0,
            clip_norm: 0.0,
            init_std: lp.init_std,
            coverage: 0.0,
            val_frac: 0.05,
            test_frac: 0.05,
        };
        match mode {
            Mode::Recon => {
                let r = ReconConfig::default();
                c.loss = LossKind::Infonce;
                c.d = r.d;
                c.n = r.n;
                c.lambda = r.lambda;
                c.temperature = r.temperature;
                c.negatives = r.negatives;
                c.init_std = r.init_std;
                c.coverage = 1.0;
                schedule_fields(&mut c, &r.schedule);
            }
            Mode::Linkpred => schedule_fields(&mut c, &lp.schedule),
        }
        c
    }

    /// Mode defaults, then `file`, then `flags`.
    pub fn resolve(
        mode: Mode,
        file: Option<&PartialConfig>,
        flags: &PartialConfig,
    ) -> Result<Self> {
        let mut c = Self::defaults(mode);
        if let Some(f) = file {
            c.apply(f);
        }
        c.apply(flags);
        if c.mode != mode {
            return Err(CliError::Config(format!(
                "config is for mode '{}' but the subcommand trains '{}'",
                mode_name(c.mode),
                mode_name(mode)
            )));
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(CliError::Config(msg));
        if self.dataset.trim().is_empty() {
            return Err(CliError::Usage("missing dataset path (--dataset)".into()));
        }
        let expected = match self.mode {
            Mode::Recon => LossKind::Infonce,
            Mode::Linkpred => LossKind::Margin,
        };
        if self.loss != expected {
            return fail(format!(
                "{} training uses the {} loss",
                mode_name(self.mode),
                if expected == LossKind::Infonce {
                    "infonce"
                } else {
                    "margin"
                }
            ));
        }
        for (name, v) in [
            ("d", self.d),
            ("n", self.n),
            ("batch_size", self.batch_size),
            ("negatives", self.negatives),
            ("epochs", self.epochs),
            ("eval_every", self.eval_every),
            ("patience", self.patience),
        ] {
            if v == 0 {
                return fail(format!("{name} must be at least 1"));
            }
        }
        for (name, v) in [
            ("lambda", self.lambda),
            ("temperature", self.temperature),
            ("lr", self.lr),
            ("init_std", self.init_std),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return fail(format!("{name} must be positive and finite, got {v}"));
            }
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return fail(format!(
                "lr_decay must lie in (0, 1], got {}",
                self.lr_decay
            ));
        }
        if !(self.clip_norm >= 0.0 && self.clip_norm.is_finite()) {
            return fail(format!(
                "clip_norm must be 0 (off) or positive, got {}",
                self.clip_norm
            ));
        }
        if !(0.0 < self.gamma_neg && self.gamma_neg < self.gamma_pos && self.gamma_pos < 1.0) {
            return fail(format!(
                "margins must satisfy 0 < gamma_neg < gamma_pos < 1, got {} and {}",
                self.gamma_neg, self.gamma_pos
            ));
        }
        if self.eval_negatives < 2 || !self.eval_negatives.is_multiple_of(2) {
            return fail(format!(
                "eval_negatives must be even and at least 2, got {}",
                self.eval_negatives
            ));
        }
        for (name, v) in [
            ("coverage", self.coverage),
            ("val_frac", self.val_frac),
            ("test_frac", self.test_frac),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return fail(format!("{name} must lie in [0, 1], got {v}"));
            }
        }
        if self.val_frac + self.test_frac > 1.0 {
            return fail("val_frac + test_frac exceeds 1".into());
        }
        if self.seed > i64::MAX as u64 {
            return fail(format!("seed must be at most {}", i64::MAX));
        }
        Ok(())
    }

    fn schedule(&self) -> Schedule {
        Schedule {
            batch_size: self.batch_size,
            max_epochs: self.epochs,
            eval_every: self.eval_every,
            patience: self.patience,
            min_epochs: self.min_epochs,
            clip_norm: (self.clip_norm > 0.0).then_some(self.clip_norm),
            adam: AdamConfig {
                lr: self.lr,
                decay: self.lr_decay,
                ..AdamConfig::default()
            },
        }
    }

    pub fn recon(&self) -> ReconConfig {
        ReconConfig {
            d: self.d,
            n: self.n,
            lambda: self.lambda,
            init_std: self.init_std,
            temperature: self.temperature,
            negatives: self.negatives,
            seed: self.seed,
            schedule: self.schedule(),
        }
    }

    pub fn linkpred(&self) -> LinkPredConfig {
        LinkPredConfig {
            d: self.d,
            n: self.n,
            lambda: self.lambda,
            init_std: self.init_std,
            gamma_pos: self.gamma_pos,
            gamma_neg: self.gamma_neg,
            negatives: self.negatives,
            eval_negatives: self.eval_negatives,
            seed: self.seed,
            schedule: self.schedule(),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config fields are all TOML scalars")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }
}

pub fn mode_name(m: Mode) -> &'static str {
    match m {
        Mode::Recon => "recon",
        Mode::Linkpred => "linkpred",
    }
}

/// Reads a TOML config file; every key is optional.
pub fn read_partial(path: &Path) -> Result<PartialConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            CliError::Usage(format!("config file {} does not exist", path.display()))
        } else {
            CliError::io(path, e)
        }
    })?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn with_dataset() -> PartialConfig {
        PartialConfig {
            dataset: Some("data.tsv".into()),
            ..Default::default()
        }
    }

    #[test]
    fn defaults_match_the_library() {
        let r = RunConfig::resolve(Mode::Recon, None, &with_dataset()).unwrap();
        assert_eq!(r.recon(), ReconConfig::default());
        let l = RunConfig::resolve(Mode::Linkpred, None, &with_dataset()).unwrap();
        assert_eq!(l.linkpred(), LinkPredConfig::default());
    }

    #[test]
    fn flags_override_file() {
        let file: PartialConfig =
            toml::from_str("lambda = 0.5\nseed = 4\ndataset = \"a.tsv\"").unwrap();
        let flags = PartialConfig {
            seed: Some(9),
            ..Default::default()
        };
        let c = RunConfig::resolve(Mode::Recon, Some(&file), &flags).unwrap();
        assert_eq!((c.lambda, c.seed, c.dataset.as_str()), (0.5, 9, "a.tsv"));
    }

    #[test]
    fn toml_round_trip_is_lossless() {
        let mut c = RunConfig::resolve(Mode::Linkpred, None, &with_dataset()).unwrap();
        c.lr = 0.1 + 0.2;
        c.lambda = 1e-300;
        c.init_std = std::f64::consts::PI;
        let back = RunConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.lr.to_bits(), c.lr.to_bits());
    }

    #[test]
    fn invalid_values_are_config_errors() {
        for bad in [
            "lambda = 0.0",
            "lambda = -1.0",
            "gamma_neg = 0.95",
            "eval_negatives = 3",
            "lr_decay = 1.5",
        ] {
            let file: PartialConfig = toml::from_str(bad).unwrap();
            let e = RunConfig::resolve(Mode::Linkpred, Some(&file), &with_dataset()).unwrap_err();
            assert!(matches!(e, CliError::Config(_)), "{bad}: {e}");
            assert_eq!(e.exit_code(), 1);
        }
    }

    #[test]
    fn unknown_keys_and_wrong_loss_are_rejected() {
        assert!(toml::from_str::<PartialConfig>("lamda = 0.2").is_err());
        let file: PartialConfig = toml::from_str("loss = \"margin\"").unwrap();
        assert!(RunConfig::resolve(Mode::Recon, Some(&file), &with_dataset()).is_err());
        let file: PartialConfig = toml::from_str("mode = \"recon\"").unwrap();
        assert!(RunConfig::resolve(Mode::Linkpred, Some(&file), &with_dataset()).is_err());
    }

    #[test]
    fn missing_dataset_is_a_usage_error() {
        let e = RunConfig::resolve(Mode::Recon, None, &PartialConfig::default()).unwrap_err();
        assert!(matches!(e, CliError::Usage(_)));
    }
}
