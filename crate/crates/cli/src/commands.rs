//! Subcommand implementations. Each writes human-readable output to `out`
//! and artifacts to disk.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use subspace_core::lattice::{parse_query, rank_by_query, ConceptStore, Conditioning};
use subspace_core::metrics::{
    calibrate_threshold_f1, dimension_report, reconstruction_ranks, RankingPool, ThresholdF1,
};
use subspace_core::projector::{effective_dim, harden};
use subspace_core::taxonomy::{
    binary_tree, layered_dag, make_linkpred_split, worked_example, LinkPredSplit, Taxonomy,
};
use subspace_core::training::{
    linkpred_eval_set, stream_rng, train_linkpred as fit_linkpred,
    train_reconstruction as fit_reconstruction, EmbeddingTable, MetricRecord, StopReason,
};
use subspace_core::Projector;

use crate::args::{
    Direction, EvalArgs, ExportArgs, FixturesArgs, Pool, QueryArgs, Source, TrainArgs,
};
use crate::checkpoint;
use crate::config::{mode_name, read_partial, Mode, PartialConfig, RunConfig};
use crate::edgelist::{format_edges, load_edges};
use crate::error::{CliError, Result};
use crate::manifest::Manifest;
use crate::report::{fmt_f, fmt_opt, log_line, stop_line, stop_name, Table, TIE_NOTE};

pub const CHECKPOINT_FILE: &str = "checkpoint.bin";
pub const CONFIG_FILE: &str = "config.toml";
pub const MANIFEST_FILE: &str = "manifest.tsv";
pub const METRICS_FILE: &str = "metrics.jsonl";
pub const TIMING_FILE: &str = "timing.tsv";
pub const SUMMARY_FILE: &str = "summary.tsv";

/// Seed and generator parameters of the bundled 50-node DAG.
pub const DAG50: (usize, usize, f64, u64) = (50, 5, 0.3, 50);

pub fn dag50() -> Taxonomy {
    let (nodes, layers, p, seed) = DAG50;
    layered_dag(nodes, layers, p, &mut stream_rng(seed, 0))
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

/// Streams the metrics log and the wall-clock timings of one run.
struct RunLog {
    metrics: BufWriter<File>,
    metrics_path: PathBuf,
    timing: String,
    start: Instant,
    quiet: bool,
    error: Option<std::io::Error>,
    last_epoch: usize,
}

impl RunLog {
    fn create(dir: &Path, quiet: bool) -> Result<Self> {
        let path = dir.join(METRICS_FILE);
        let f = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        Ok(Self {
            metrics: BufWriter::new(f),
            metrics_path: path,
            timing: String::from("epoch\tseconds\n"),
            start: Instant::now(),
            quiet,
            error: None,
            last_epoch: 0,
        })
    }

    fn record(&mut self, r: &MetricRecord) {
        self.last_epoch = r.epoch;
        let secs = self.start.elapsed().as_secs_f64();
        self.timing.push_str(&format!("{}\t{secs:.3}\n", r.epoch));
        if let Err(e) = writeln!(self.metrics, "{}", log_line(r)) {
            self.error.get_or_insert(e);
        }
        if !self.quiet {
            let mut msg = format!("epoch {:>5}  loss {:.5}", r.epoch, r.loss);
            if let (Some(m), Some(mr)) = (r.map, r.mean_rank) {
                msg.push_str(&format!("  mAP {m:.4}  MR {mr:.3}  rho {}", fmt_opt(r.rho)));
            }
            if let (Some(v), Some(t)) = (r.val_f1, r.test_f1) {
                msg.push_str(&format!("  val F1 {v:.4}  test F1 {t:.4}"));
            }
            eprintln!("{msg}");
        }
    }

    fn finish(mut self, dir: &Path, stop: &StopReason) -> Result<()> {
        let io = |e| CliError::io(&self.metrics_path, e);
        if let Some(e) = self.error.take() {
            return Err(io(e));
        }
        writeln!(self.metrics, "{}", stop_line(stop, self.last_epoch)).map_err(io)?;
        self.metrics.flush().map_err(io)?;
        let total = self.start.elapsed().as_secs_f64();
        self.timing.push_str(&format!("total\t{total:.3}\n"));
        write_file(&dir.join(TIMING_FILE), &self.timing)
    }
}

fn file_layer(args: &TrainArgs) -> Result<Option<PartialConfig>> {
    args.config.as_deref().map(read_partial).transpose()
}

/// Ranking and dimension reports for reconstruction.
pub fn reconstruction_tables(
    projectors: &[Projector],
    t: &Taxonomy,
    pool: Pool,
) -> Result<(Table, Table)> {
    let pool_kind = match pool {
        Pool::Tail => RankingPool::Tail,
        Pool::HeadAndTail => RankingPool::HeadAndTail,
    };
    let ranks = reconstruction_ranks(projectors, t, pool_kind)?;
    let dims = dimension_report(projectors, t).ok();
    let mut report = Table::new(["metric", "value"])
        .note(TIE_NOTE)
        .note(match pool {
            Pool::Tail => "pool: tail corruptions outside the closure",
            Pool::HeadAndTail => "pool: head and tail corruptions outside the closure",
        });
    report.push(["mAP".to_string(), fmt_f(ranks.map)]);
    report.push(["mean_rank".to_string(), fmt_f(ranks.mean_rank)]);
    report.push([
        "rho_dim_descendants".to_string(),
        fmt_opt(dims.as_ref().map(|d| d.rho_descendants)),
    ]);
    report.push([
        "rho_dim_rank".to_string(),
        fmt_opt(dims.as_ref().map(|d| d.rho_rank)),
    ]);
    report.push(["nodes".to_string(), t.node_count().to_string()]);
    report.push(["ranked_edges".to_string(), ranks.ranks.len().to_string()]);
    Ok((report, dimension_table(projectors, Some(t))))
}

fn dimension_table(projectors: &[Projector], t: Option<&Taxonomy>) -> Table {
    match t {
        Some(t) => {
            let counts = t.descendant_counts();
            let ranks = t.taxonomy_ranks();
            let mut table = Table::new(["node", "effective_dim", "descendants", "taxonomy_rank"]);
            for v in 0..t.node_count() {
                table.push([
                    t.name(v).to_string(),
                    fmt_f(effective_dim(&projectors[v])),
                    counts[v].to_string(),
                    fmt_f(ranks[v]),
                ]);
            }
            table
        }
        None => Table::new(["node", "effective_dim"]),
    }
}

fn linkpred_table(f1: &ThresholdF1, split: &LinkPredSplit) -> Table {
    let mut t = Table::new(["metric", "value"])
        .note("threshold calibrated on validation F1; score >= threshold predicts an edge");
    t.push(["threshold".to_string(), fmt_f(f1.threshold)]);
    t.push(["val_f1".to_string(), fmt_f(f1.val_f1)]);
    t.push(["test_f1".to_string(), fmt_f(f1.test_f1)]);
    t.push(["train_edges".to_string(), split.train.len().to_string()]);
    t.push(["val_edges".to_string(), split.val.len().to_string()]);
    t.push(["test_edges".to_string(), split.test.len().to_string()]);
    t
}

#[derive(Debug, Clone)]
pub struct ReconRun {
    pub dir: PathBuf,
    pub config: RunConfig,
    pub log: Vec<MetricRecord>,
    pub stop: StopReason,
}

pub fn train_recon(args: &TrainArgs, out: &mut dyn Write) -> Result<ReconRun> {
    let flags = args.partial().merge(&args.scalar_grid()?);
    let cfg = RunConfig::resolve(Mode::Recon, file_layer(args)?.as_ref(), &flags)?;
    let t = load_edges(Path::new(&cfg.dataset))?;
    let dir = PathBuf::from(&cfg.output_dir);
    create_dir(&dir)?;
    write_file(&dir.join(CONFIG_FILE), cfg.to_toml())?;
    write_file(
        &dir.join(MANIFEST_FILE),
        Manifest::reconstruction(&t, cfg.seed).render(),
    )?;

    let mut log = RunLog::create(&dir, args.quiet)?;
    let outcome = fit_reconstruction(&t, &cfg.recon(), |r| log.record(r))?;
    log.finish(&dir, &outcome.stop)?;
    checkpoint::save(&dir.join(CHECKPOINT_FILE), &outcome.table)?;

    let projectors = outcome.table.soft_projectors()?;
    let (report, dims) = reconstruction_tables(&projectors, &t, Pool::Tail)?;
    write_file(&dir.join("recon_report.tsv"), report.to_tsv())?;
    write_file(&dir.join("dims.tsv"), dims.to_tsv())?;
    let last = outcome.log.last().map_or(0, |r| r.epoch);
    writeln!(
        out,
        "trained {} nodes for {last} epochs ({})",
        t.node_count(),
        stop_name(&outcome.stop)
    )
    .and_then(|_| write!(out, "{}", report.to_text()))
    .and_then(|_| writeln!(out, "artifacts in {}", dir.display()))
    .map_err(|e| CliError::io(Path::new("<stdout>"), e))?;
    Ok(ReconRun {
        dir,
        config: cfg,
        log: outcome.log,
        stop: outcome.stop,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkPredRun {
    pub dir: PathBuf,
    pub config: RunConfig,
    pub train_equals_basic: bool,
    pub last: Option<MetricRecord>,
    pub stop: StopReason,
}

fn grid_dir_name(c: &RunConfig) -> String {
    format!("cov{}_gp{}_gn{}", c.coverage, c.gamma_pos, c.gamma_neg)
}

pub fn train_linkpred(args: &TrainArgs, out: &mut dyn Write) -> Result<Vec<LinkPredRun>> {
    let file = file_layer(args)?;
    let base = args.partial();
    let grid = args.grid();
    let configs = grid
        .iter()
        .map(|g| RunConfig::resolve(Mode::Linkpred, file.as_ref(), &base.clone().merge(g)))
        .collect::<Result<Vec<_>>>()?;
    let root = PathBuf::from(&configs[0].output_dir);
    let t = load_edges(Path::new(&configs[0].dataset))?;
    create_dir(&root)?;

    let mut runs = Vec::with_capacity(configs.len());
    for mut cfg in configs {
        let dir = if grid.len() == 1 {
            root.clone()
        } else {
            root.join(grid_dir_name(&cfg))
        };
        cfg.output_dir = dir.to_string_lossy().into_owned();
        create_dir(&dir)?;
        if !args.quiet {
            eprintln!(
                "run {}: coverage {} gamma_pos {} gamma_neg {}",
                dir.display(),
                cfg.coverage,
                cfg.gamma_pos,
                cfg.gamma_neg
            );
        }
        let split = make_linkpred_split(
            &t,
            cfg.coverage,
            cfg.val_frac,
            cfg.test_frac,
            &mut stream_rng(cfg.seed, 3),
        )?;
        if split.val.is_empty() || split.test.is_empty() {
            return Err(CliError::Config(format!(
                "val_frac {} and test_frac {} leave an empty validation or test set ({} non-basic edges)",
                cfg.val_frac,
                cfg.test_frac,
                t.non_basic_edges().len()
            )));
        }
        let manifest = Manifest::linkpred(&t, &split, cfg.seed);
        write_file(&dir.join(CONFIG_FILE), cfg.to_toml())?;
        write_file(&dir.join(MANIFEST_FILE), manifest.render())?;
        let mut log = RunLog::create(&dir, args.quiet)?;
        let outcome = fit_linkpred(&t, &split, &cfg.linkpred(), |r| log.record(r))?;
        log.finish(&dir, &outcome.stop)?;
        checkpoint::save(&dir.join(CHECKPOINT_FILE), &outcome.table)?;
        let last = outcome.log.last().cloned();
        if let Some(r) = &last {
            let f1 = ThresholdF1 {
                threshold: r.threshold.unwrap_or(f64::NAN),
                val_f1: r.val_f1.unwrap_or(f64::NAN),
                test_f1: r.test_f1.unwrap_or(f64::NAN),
            };
            write_file(
                &dir.join("linkpred_report.tsv"),
                linkpred_table(&f1, &split).to_tsv(),
            )?;
        }
        runs.push(LinkPredRun {
            dir,
            config: cfg,
            train_equals_basic: manifest.train_equals_basic,
            last,
            stop: outcome.stop,
        });
    }

    let mut summary = Table::new([
        "run",
        "coverage",
        "gamma_pos",
        "gamma_neg",
        "seed",
        "epochs",
        "stop",
        "threshold",
        "val_f1",
        "test_f1",
    ])
    .note("F1 at the last evaluation; threshold calibrated on validation F1");
    for r in &runs {
        let rec = r.last.as_ref();
        summary.push([
            r.dir
                .strip_prefix(&root)
                .ok()
                .filter(|p| !p.as_os_str().is_empty())
                .map_or(".".into(), |p| p.display().to_string()),
            r.config.coverage.to_string(),
            r.config.gamma_pos.to_string(),
            r.config.gamma_neg.to_string(),
            r.config.seed.to_string(),
            rec.map_or(0, |x| x.epoch).to_string(),
            stop_name(&r.stop).to_string(),
            fmt_opt(rec.and_then(|x| x.threshold)),
            fmt_opt(rec.and_then(|x| x.val_f1)),
            fmt_opt(rec.and_then(|x| x.test_f1)),
        ]);
    }
    write_file(&root.join(SUMMARY_FILE), summary.to_tsv())?;
    write!(out, "{}", summary.to_text()).map_err(|e| CliError::io(Path::new("<stdout>"), e))?;
    Ok(runs)
}

fn checkpoint_path(src: &Source) -> Result<PathBuf> {
    match (&src.checkpoint, &src.run) {
        (Some(p), _) => Ok(p.clone()),
        (None, Some(run)) => Ok(run.join(CHECKPOINT_FILE)),
        (None, None) => Err(CliError::Usage("give --checkpoint or --run".into())),
    }
}

/// `explicit`, else `name` inside the run directory if it exists there.
fn run_file(explicit: &Option<PathBuf>, src: &Source, name: &str) -> Option<PathBuf> {
    explicit.clone().or_else(|| {
        src.run
            .as_ref()
            .map(|r| r.join(name))
            .filter(|p| p.exists())
    })
}

/// Reorders the checkpoint's nodes to the taxonomy's node order.
pub fn align(table: &EmbeddingTable, t: &Taxonomy) -> Result<EmbeddingTable> {
    let index: HashMap<&str, usize> = table
        .names()
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();
    let mut spans = Vec::with_capacity(t.node_count());
    for name in t.names() {
        let &i = index
            .get(name.as_str())
            .ok_or_else(|| CliError::Runtime(format!("node '{name}' is not in the checkpoint")))?;
        spans.push(table.span(i).clone());
    }
    Ok(EmbeddingTable::new(
        t.names().to_vec(),
        spans,
        table.regularizer().clone(),
        table.seed(),
        table.step(),
    )?)
}

fn check_shape(table: &EmbeddingTable, cfg: &RunConfig) -> Result<()> {
    if (table.d(), table.n()) != (cfg.d, cfg.n) {
        return Err(CliError::Config(format!(
            "checkpoint holds {}x{} span matrices but the config says d = {}, n = {}",
            table.d(),
            table.n(),
            cfg.d,
            cfg.n
        )));
    }
    if table.regularizer().diag().iter().any(|&l| l != cfg.lambda) {
        return Err(CliError::Config(format!(
            "checkpoint regularizer differs from lambda = {} in the config",
            cfg.lambda
        )));
    }
    Ok(())
}

pub fn eval(args: &EvalArgs, out: &mut dyn Write) -> Result<()> {
    let ckpt = checkpoint_path(&args.source)?;
    let table = checkpoint::load(&ckpt)?;
    let cfg = match run_file(&args.config, &args.source, CONFIG_FILE) {
        Some(p) => {
            let text = std::fs::read_to_string(&p).map_err(|e| CliError::io(&p, e))?;
            let c = RunConfig::from_toml(&text)?;
            check_shape(&table, &c)?;
            Some(c)
        }
        None => None,
    };
    let mode = args
        .mode
        .or(cfg.as_ref().map(|c| c.mode))
        .ok_or_else(|| CliError::Usage("give --mode or a config that records it".into()))?;
    let dataset = args
        .dataset
        .clone()
        .or_else(|| cfg.as_ref().map(|c| PathBuf::from(&c.dataset)))
        .ok_or_else(|| CliError::Usage("missing dataset path (--dataset)".into()))?;
    let t = load_edges(&dataset)?;
    let table = align(&table, &t)?;
    let dir = args
        .output_dir
        .clone()
        .unwrap_or_else(|| ckpt.parent().map(Path::to_path_buf).unwrap_or_default());
    if !dir.as_os_str().is_empty() {
        create_dir(&dir)?;
    }
    let text = match mode {
        Mode::Recon => {
            let (report, dims) = reconstruction_tables(&table.soft_projectors()?, &t, args.pool)?;
            write_file(&dir.join("recon_report.tsv"), report.to_tsv())?;
            write_file(&dir.join("dims.tsv"), dims.to_tsv())?;
            report.to_text()
        }
        Mode::Linkpred => {
            let split = match run_file(&args.manifest, &args.source, MANIFEST_FILE) {
                Some(p) => {
                    let text = std::fs::read_to_string(&p).map_err(|e| CliError::io(&p, e))?;
                    Manifest::parse(&text, &p)?.to_split(&t, &p)?
                }
                None => {
                    let c = cfg.as_ref().ok_or_else(|| {
                        CliError::Usage("link-prediction eval needs --manifest or --config".into())
                    })?;
                    make_linkpred_split(
                        &t,
                        c.coverage,
                        c.val_frac,
                        c.test_frac,
                        &mut stream_rng(c.seed, 3),
                    )?
                }
            };
            let per = cfg.as_ref().map_or(10, |c| c.eval_negatives);
            // Same stream and draw order as training, so the numbers match
            // the final evaluation in the metrics log.
            let mut rng = stream_rng(table.seed(), 2);
            let val = linkpred_eval_set(&t, &split.val, per, &mut rng)?;
            let test = linkpred_eval_set(&t, &split.test, per, &mut rng)?;
            let f1 = calibrate_threshold_f1(
                &val.labeled_scores(&table)?,
                &test.labeled_scores(&table)?,
            )?;
            let report = linkpred_table(&f1, &split);
            write_file(&dir.join("linkpred_report.tsv"), report.to_tsv())?;
            report.to_text()
        }
    };
    writeln!(out, "{} evaluation of {}", mode_name(mode), ckpt.display())
        .and_then(|_| write!(out, "{text}"))
        .map_err(|e| CliError::io(Path::new("<stdout>"), e))
}

/// Hard projector onto the eigenvectors of `p` with eigenvalue above one half.
pub const HARDEN_CUT: f64 = 0.5;

pub fn concept_store(table: &EmbeddingTable, hard: bool) -> Result<ConceptStore> {
    let mut store = ConceptStore::new();
    for (i, name) in table.names().iter().enumerate() {
        let soft = table.soft_projector(i)?;
        let p = if hard {
            harden(&soft, HARDEN_CUT)?
        } else {
            soft
        };
        store.insert(name, p)?;
    }
    Ok(store)
}

pub fn query(args: &QueryArgs, out: &mut dyn Write) -> Result<()> {
    let q = parse_query(&args.query)?;
    let table = checkpoint::load(&checkpoint_path(&args.source)?)?;
    let store = concept_store(&table, args.hard)?;
    let conditioning = match args.direction {
        Direction::Query => Conditioning::Query,
        Direction::Candidate => Conditioning::Candidate,
    };
    let ranked = rank_by_query(&q, &store, args.k, conditioning)?;
    let mut t = Table::new(["rank", "concept", "score"]);
    for (i, r) in ranked.iter().enumerate() {
        t.push([(i + 1).to_string(), r.name.clone(), fmt_f(r.score)]);
    }
    write!(out, "{}", t.to_tsv()).map_err(|e| CliError::io(Path::new("<stdout>"), e))
}

pub fn export(args: &ExportArgs, out: &mut dyn Write) -> Result<()> {
    let ckpt = checkpoint_path(&args.source)?;
    let mut table = checkpoint::load(&ckpt)?;
    let t = args.dataset.as_deref().map(load_edges).transpose()?;
    if let Some(t) = &t {
        table = align(&table, t)?;
    }
    let projectors = table.soft_projectors()?;
    let dims = match &t {
        Some(t) => dimension_table(&projectors, Some(t)),
        None => {
            let mut d = dimension_table(&projectors, None);
            for (name, p) in table.names().iter().zip(&projectors) {
                d.push([name.clone(), fmt_f(effective_dim(p))]);
            }
            d
        }
    };
    let mut header = vec!["node".to_string(), "row".to_string()];
    header.extend((0..table.n()).map(|j| format!("x{j}")));
    let mut spans = Table::new(header).note(format!(
        "d = {}, n = {}, row-major span matrices",
        table.d(),
        table.n()
    ));
    for (name, s) in table.names().iter().zip(table.spans()) {
        let m = s.matrix();
        for r in 0..m.rows() {
            let mut row = vec![name.clone(), r.to_string()];
            row.extend((0..m.cols()).map(|c| format!("{:e}", m[(r, c)])));
            spans.push(row);
        }
    }
    let dir = args
        .output_dir
        .clone()
        .unwrap_or_else(|| ckpt.parent().map(Path::to_path_buf).unwrap_or_default());
    if !dir.as_os_str().is_empty() {
        create_dir(&dir)?;
    }
    write_file(&dir.join("dims.tsv"), dims.to_tsv())?;
    write_file(&dir.join("spans.tsv"), spans.to_tsv())?;
    writeln!(
        out,
        "wrote dims.tsv and spans.tsv for {} nodes to {}",
        table.len(),
        dir.display()
    )
    .map_err(|e| CliError::io(Path::new("<stdout>"), e))
}

/// Name, description and taxonomy of every bundled fixture.
pub fn fixture_set() -> Vec<(String, String, Taxonomy)> {
    let mut v: Vec<(String, String, Taxonomy)> = (3..=6)
        .map(|depth| {
            let t = binary_tree(depth);
            (
                format!("tree{depth}.tsv"),
                format!(
                    "full binary tree of depth {depth}: {} nodes, {} closure edges",
                    t.node_count(),
                    t.closure_edges().len()
                ),
                t,
            )
        })
        .collect();
    let (nodes, layers, p, seed) = DAG50;
    let d = dag50();
    v.push((
        "dag50.tsv".into(),
        format!(
            "random layered DAG ({nodes} nodes, {layers} layers, extra parent probability {p}, seed {seed}): {} basic, {} closure edges",
            d.basic_edges().len(),
            d.closure_edges().len()
        ),
        d,
    ));
    let w = worked_example();
    v.push((
        "worked.tsv".into(),
        format!(
            "worked example: {} nodes, {} basic, {} closure edges",
            w.node_count(),
            w.basic_edges().len(),
            w.closure_edges().len()
        ),
        w,
    ));
    v
}

pub fn fixtures(args: &FixturesArgs, out: &mut dyn Write) -> Result<()> {
    create_dir(&args.output_dir)?;
    for (name, about, t) in fixture_set() {
        let path = args.output_dir.join(&name);
        write_file(&path, format_edges(&t, &about))?;
        writeln!(out, "{}\t{about}", path.display())
            .map_err(|e| CliError::io(Path::new("<stdout>"), e))?;
    }
    Ok(())
}
