//! Command-line grammar.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{LossKind, Mode, PartialConfig};
use crate::error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(
    name = "subspace",
    version,
    about = "Train, evaluate and query subspace embeddings of concept hierarchies"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train on the full transitive closure with the InfoNCE loss.
    TrainRecon(TrainArgs),
    /// Train on a link-prediction split with the margin loss. Comma lists
    /// for --coverage, --gamma-pos and --gamma-neg run a grid.
    TrainLinkpred(TrainArgs),
    /// Recompute reconstruction or link-prediction reports for a checkpoint.
    Eval(EvalArgs),
    /// Rank the concepts of a checkpoint against a boolean query.
    Query(QueryArgs),
    /// Write effective dimensions and raw span matrices as TSV.
    Export(ExportArgs),
    /// Write the bundled synthetic hierarchies as edge lists.
    Fixtures(FixturesArgs),
}

/// Flags mirror the keys of the config file.
#[derive(Debug, Args, Default)]
pub struct TrainArgs {
    /// TOML file with any subset of the run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Edge list, one `child<TAB>parent` per line.
    #[arg(long)]
    pub dataset: Option<String>,
    #[arg(long, visible_alias = "out")]
    pub output_dir: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Ambient dimension.
    #[arg(long)]
    pub d: Option<usize>,
    /// Columns of each span matrix.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    #[arg(long, value_enum)]
    pub loss: Option<LossKind>,
    #[arg(long, allow_negative_numbers = true)]
    pub temperature: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub gamma_pos: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub gamma_neg: Vec<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub lr: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub lr_decay: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub negatives: Option<usize>,
    #[arg(long)]
    pub eval_negatives: Option<usize>,
    /// Maximum number of epochs.
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub min_epochs: Option<usize>,
    #[arg(long)]
    pub eval_every: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    /// 0 disables clipping.
    #[arg(long, allow_negative_numbers = true)]
    pub clip_norm: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub init_std: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub coverage: Vec<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub val_frac: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub test_frac: Option<f64>,
    /// No progress lines on stderr.
    #[arg(long, short)]
    pub quiet: bool,
}

fn single(name: &str, v: &[f64]) -> Result<Option<f64>> {
    match v {
        [] => Ok(None),
        [x] => Ok(Some(*x)),
        _ => Err(CliError::Usage(format!(
            "--{name} takes a single value here"
        ))),
    }
}

impl TrainArgs {
    /// Scalar flags. Grid flags are handled by [`TrainArgs::grid`].
    pub fn partial(&self) -> PartialConfig {
        PartialConfig {
            dataset: self.dataset.clone(),
            output_dir: self.output_dir.clone(),
            seed: self.seed,
            d: self.d,
            n: self.n,
            lambda: self.lambda,
            loss: self.loss,
            temperature: self.temperature,
            lr: self.lr,
            lr_decay: self.lr_decay,
            batch_size: self.batch_size,
            negatives: self.negatives,
            eval_negatives: self.eval_negatives,
            epochs: self.epochs,
            min_epochs: self.min_epochs,
            eval_every: self.eval_every,
            patience: self.patience,
            clip_norm: self.clip_norm,
            init_std: self.init_std,
            val_frac: self.val_frac,
            test_frac: self.test_frac,
            ..PartialConfig::default()
        }
    }

    /// Every combination of the list-valued flags, coverage varying slowest.
    /// An empty list leaves that field to the lower layers.
    pub fn grid(&self) -> Vec<PartialConfig> {
        fn axis(v: &[f64]) -> Vec<Option<f64>> {
            if v.is_empty() {
                vec![None]
            } else {
                v.iter().copied().map(Some).collect()
            }
        }
        let mut out = Vec::new();
        for c in axis(&self.coverage) {
            for gp in axis(&self.gamma_pos) {
                for gn in axis(&self.gamma_neg) {
                    out.push(PartialConfig {
                        coverage: c,
                        gamma_pos: gp,
                        gamma_neg: gn,
                        ..PartialConfig::default()
                    });
                }
            }
        }
        out
    }

    /// Grid flags collapsed to single values, for modes without grids.
    pub fn scalar_grid(&self) -> Result<PartialConfig> {
        Ok(PartialConfig {
            coverage: single("coverage", &self.coverage)?,
            gamma_pos: single("gamma-pos", &self.gamma_pos)?,
            gamma_neg: single("gamma-neg", &self.gamma_neg)?,
            ..PartialConfig::default()
        })
    }
}

/// Checkpoint location, either explicit or taken from a run directory.
#[derive(Debug, Args, Default, Clone)]
pub struct Source {
    /// Run directory written by a train command; supplies defaults for
    /// --checkpoint, --config and --manifest.
    #[arg(long)]
    pub run: Option<PathBuf>,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Pool {
    /// Corrupt the tail of each edge only.
    #[default]
    Tail,
    /// Corrupt heads and tails.
    HeadAndTail,
}

#[derive(Debug, Args, Default)]
pub struct EvalArgs {
    #[command(flatten)]
    pub source: Source,
    /// Resolved run config; its d, n and lambda must match the checkpoint.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Defaults to the mode recorded in the config.
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Split manifest for link prediction; rebuilt from the config if absent.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Pool::Tail)]
    pub pool: Pool,
    /// Directory for report files; defaults to the checkpoint's directory.
    #[arg(long, visible_alias = "out")]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Direction {
    /// Score how much of the query lies inside each candidate.
    #[default]
    Query,
    /// Score how much of each candidate lies inside the query.
    Candidate,
}

#[derive(Debug, Args, Default)]
pub struct QueryArgs {
    #[command(flatten)]
    pub source: Source,
    /// Boolean query, e.g. `mammal AND NOT "dog"`.
    #[arg(long, short = 'q')]
    pub query: String,
    #[arg(short = 'k', long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, value_enum, default_value_t = Direction::Query)]
    pub direction: Direction,
    /// Round every soft projector to the hard projector onto its
    /// eigenvectors with eigenvalue above 0.5.
    #[arg(long)]
    pub hard: bool,
}

#[derive(Debug, Args, Default)]
pub struct ExportArgs {
    #[command(flatten)]
    pub source: Source,
    /// Adds descendant counts and taxonomy ranks to the dimension table.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long, visible_alias = "out")]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FixturesArgs {
    #[arg(long, visible_alias = "out", default_value = "fixtures")]
    pub output_dir: PathBuf,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_expands_in_order() {
        let cli = Cli::try_parse_from([
            "subspace",
            "train-linkpred",
            "--dataset",
            "x.tsv",
            "--coverage",
            "0,0.5",
            "--gamma-neg",
            "0.1,0.5",
        ])
        .unwrap();
        let Command::TrainLinkpred(a) = cli.command else {
            panic!()
        };
        let g = a.grid();
        let pairs: Vec<_> = g
            .iter()
            .map(|p| (p.coverage.unwrap(), p.gamma_neg.unwrap()))
            .collect();
        assert_eq!(pairs, vec![(0.0, 0.1), (0.0, 0.5), (0.5, 0.1), (0.5, 0.5)]);
        assert!(g.iter().all(|p| p.gamma_pos.is_none()));
        assert!(a.scalar_grid().is_err());
    }

    #[test]
    fn negative_numbers_parse_as_values() {
        let cli = Cli::try_parse_from(["subspace", "train-recon", "--lambda", "-1"]).unwrap();
        let Command::TrainRecon(a) = cli.command else {
            panic!()
        };
        assert_eq!(a.lambda, Some(-1.0));
    }

    #[test]
    fn clap_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
