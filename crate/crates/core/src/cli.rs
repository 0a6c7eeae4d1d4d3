//! Command-line front end.
//!
//! Every command reads an [`ExperimentConfig`] (flags override it), writes
//! its artifacts into one run directory together with `manifest.json`, and
//! prefixes each primary CSV with the effective configuration as `# ` lines.
//!
//! Exit codes: 0 success, 2 usage or config error, 3 training diverged
//! (partial metrics are still written), 4 missing or mismatched reference
//! checkpoint, 5 missing input files, 1 anything else.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::analysis::{learned_order, pearson, stddev_by_learned_group, table1_rows, write_table1_csv, Table1Row};
use crate::config::{CurriculumSpec, ExperimentConfig};
use crate::curriculum::{
    build_batch_plan_balanced, build_batch_plan_curriculum, build_batch_plan_vanilla, BatchPlan, MetricsLog,
    MetricsRow, Trainer,
};
use crate::data::{data_root, load_named, normalize, DatasetName, NormalizedDataset};
use crate::dcl::{read_rho_csv, train_reference, write_rho_csv, DclTrainer, DclVariant};
use crate::nn::{FcnArch, FcnModel};
use crate::scoring::{ascending_order, class_balanced_order, score_dataset, write_score_csv, Direction, Scorer};
use crate::stats::{mean, std_error};
use crate::Error;

#[derive(Debug, Parser)]
#[command(name = "curriculum", version, about = "Curriculum learning experiments")]
pub struct Cli {
    /// Worker threads (default: one per core).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score the training set and write `scores.csv`.
    Score(ScoreArgs),
    /// Train with a fixed curriculum or vanilla sampling.
    Train(TrainArgs),
    /// Dynamic curriculum runs against a reference optimum.
    Dcl(DclArgs),
    /// Reports over datasets or earlier run artifacts.
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Exact output directory (default: `<output_dir>/<command>-<unix time>`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Data root (default: `dataset.root`, then `$CURRICULUM_DATA_DIR`).
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    /// Overrides `train.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub scorer: Option<String>,
    #[arg(long)]
    pub direction: Option<String>,
    /// Rank by plain ascending score instead of the class-balanced order.
    #[arg(long)]
    pub plain: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Overrides `train.total_steps`.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Independent runs with seeds offset by 0..N (sampling and init).
    #[arg(long, default_value_t = 1)]
    pub seeds: usize,
    /// Also write `plan.csv` (and `scores.csv` for fixed curricula).
    #[arg(long)]
    pub dump_plan: bool,
    /// Record per-epoch train correctness (`correctness.csv`).
    #[arg(long)]
    pub track_per_example: bool,
}

#[derive(Debug, Args)]
pub struct DclArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub seeds: usize,
    /// Train the vanilla reference from the shared initialization first.
    #[arg(long)]
    pub train_reference: bool,
    /// Reference checkpoint (overrides `curriculum.reference`).
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Pace fractions to sweep, comma separated (overrides `curriculum.k`).
    #[arg(long, value_delimiter = ',')]
    pub k: Vec<f64>,
    /// `plus`, `minus` or both, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub variant: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum AnalyzeCommand {
    /// Median pixel distances of the stddev curricula per dataset.
    Table1 {
        #[arg(long, value_delimiter = ',', default_values_t = ["mnist".to_string(), "fashion-mnist".into(), "cifar10".into(), "cifar100".into(), "small-mammals".into()])]
        datasets: Vec<String>,
        #[arg(long, default_value_t = 100)]
        b: usize,
        #[arg(long)]
        data_dir: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pearson correlation of rho and stddev per epoch of rho dumps
    /// (files, or directories of `*.csv` dumps).
    Correlation {
        #[arg(long, required = true, num_args = 1..)]
        rho: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// First-learned epochs and stddev of early/late learned groups.
    Learned {
        /// Run directory holding `config.toml` and `correctness.csv`.
        #[arg(long)]
        run: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        quantile: f64,
        #[arg(long)]
        data_dir: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InvalidArgument(_) => 2,
        Error::Diverged { .. } => 3,
        Error::ArchitectureMismatch(_) | Error::Checkpoint(_) => 4,
        Error::Io { .. } | Error::MissingInput(_) => 5,
        _ => 1,
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        Self::new(exit_code(&e), e.to_string())
    }
}

type CliResult<T = ()> = std::result::Result<T, CliError>;

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::new(1, format!("cannot write {}: {e}", path.display()))
}

/// Output directory plus the list of artifacts written into it.
struct RunDir {
    root: PathBuf,
    command: String,
    artifacts: Vec<String>,
    extra: BTreeMap<String, serde_json::Value>,
}

impl RunDir {
    fn create(explicit: Option<&Path>, base: Option<&Path>, command: &str) -> CliResult<Self> {
        let root = match explicit {
            Some(p) => p.to_path_buf(),
            None => {
                let base = base.unwrap_or(Path::new("runs"));
                let secs = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
                let mut candidate = base.join(format!("{command}-{secs}"));
                let mut n = 1;
                while candidate.exists() {
                    candidate = base.join(format!("{command}-{secs}-{n}"));
                    n += 1;
                }
                candidate
            }
        };
        std::fs::create_dir_all(&root).map_err(|e| io_err(&root, e))?;
        Ok(Self {
            root,
            command: command.to_string(),
            artifacts: Vec::new(),
            extra: BTreeMap::new(),
        })
    }

    fn write(&mut self, rel: &str, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> CliResult {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
        }
        let file = File::create(&path).map_err(|e| io_err(&path, e))?;
        let mut w = BufWriter::new(file);
        f(&mut w).and_then(|_| w.flush()).map_err(|e| io_err(&path, e))?;
        self.artifacts.push(rel.to_string());
        Ok(())
    }

    fn write_bytes(&mut self, rel: &str, bytes: &[u8]) -> CliResult {
        self.write(rel, |w| w.write_all(bytes))
    }

    fn write_manifest(&mut self) -> CliResult {
        #[derive(Serialize)]
        struct Manifest<'a> {
            command: &'a str,
            version: &'a str,
            created_unix: u64,
            args: Vec<String>,
            artifacts: &'a [String],
            #[serde(flatten)]
            extra: &'a BTreeMap<String, serde_json::Value>,
        }
        let m = Manifest {
            command: &self.command,
            version: env!("CARGO_PKG_VERSION"),
            created_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            args: std::env::args().collect(),
            artifacts: &self.artifacts,
            extra: &self.extra,
        };
        let text = serde_json::to_string_pretty(&m).expect("manifest serializes");
        let path = self.root.join("manifest.json");
        std::fs::write(&path, text + "\n").map_err(|e| io_err(&path, e))
    }
}

fn load_config(common: &CommonArgs) -> CliResult<ExperimentConfig> {
    let mut cfg = ExperimentConfig::from_file(&common.config).map_err(|e| match e {
        Error::Io { .. } => CliError::new(5, e.to_string()),
        other => CliError::from(other),
    })?;
    if let Some(d) = &common.data_dir {
        cfg.dataset.root = Some(d.clone());
    }
    if let Some(s) = common.seed {
        cfg.train.seed = s;
    }
    Ok(cfg)
}

fn seeded(cfg: &ExperimentConfig, j: usize) -> ExperimentConfig {
    let mut c = cfg.clone();
    c.train.seed = c.train.seed.wrapping_add(j as u64);
    c.model.init_seed = c.model.init_seed.wrapping_add(j as u64);
    c
}

fn seed_prefix(seeds: usize, j: usize) -> String {
    if seeds > 1 {
        format!("seed-{j}/")
    } else {
        String::new()
    }
}

fn check_seeds(seeds: usize) -> CliResult {
    if seeds == 0 {
        return Err(CliError::new(2, "--seeds must be >= 1"));
    }
    Ok(())
}

fn arch_for(cfg: &ExperimentConfig, train: &NormalizedDataset) -> CliResult<FcnArch> {
    Ok(cfg.model.arch(train.dim(), train.num_classes())?)
}

fn write_metrics(run: &mut RunDir, rel: &str, log: &MetricsLog, header: &[String]) -> CliResult {
    run.write(rel, |w| log.write_csv(w, header))
}

/// Mean and standard error across seeds, row by row.
fn write_aggregate(run: &mut RunDir, rel: &str, logs: &[MetricsLog], header: &[String]) -> CliResult {
    let rows = logs.iter().map(|l| l.rows.len()).min().unwrap_or(0);
    run.write(rel, |w| {
        for line in header {
            writeln!(w, "# {line}")?;
        }
        writeln!(
            w,
            "step,n,train_loss_mean,train_loss_ste,train_acc_mean,train_acc_ste,test_loss_mean,test_loss_ste,test_acc_mean,test_acc_ste"
        )?;
        for r in 0..rows {
            let col = |f: fn(&MetricsRow) -> f64| -> Vec<f64> { logs.iter().map(|l| f(&l.rows[r])).collect() };
            let mut line = format!("{},{}", logs[0].rows[r].step, logs.len());
            for xs in [
                col(|m| m.train_loss),
                col(|m| m.train_acc),
                col(|m| m.test_loss),
                col(|m| m.test_acc),
            ] {
                line.push_str(&format!(",{},{}", mean(&xs), std_error(&xs)));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    })
}

pub fn run(cli: Cli) -> CliResult {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::new(1, e.to_string()))?;
    }
    match cli.command {
        Command::Score(a) => cmd_score(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Dcl(a) => cmd_dcl(&a),
        Command::Analyze(a) => cmd_analyze(&a),
    }
}

pub fn cmd_score(args: &ScoreArgs) -> CliResult {
    let cfg = load_config(&args.common)?;
    let fixed = match &cfg.curriculum {
        CurriculumSpec::Fixed {
            scorer,
            direction,
            class_balanced,
            ..
        } => Some((*scorer, *direction, *class_balanced)),
        _ => None,
    };
    let scorer = match &args.scorer {
        Some(s) => s.parse::<Scorer>()?,
        None => fixed
            .map(|f| f.0)
            .ok_or_else(|| CliError::new(2, "no scorer: pass --scorer or use a fixed curriculum config"))?,
    };
    let direction = match &args.direction {
        Some(d) => d.parse::<Direction>()?,
        None => fixed.map_or(Direction::Plus, |f| f.1),
    };
    let balanced = !args.plain && fixed.is_none_or(|f| f.2);

    let (train, _test) = cfg.dataset.load()?;
    let scores = score_dataset(&train, scorer, direction)?;
    let order = if balanced {
        class_balanced_order(&scores, train.labels())?
    } else {
        ascending_order(&scores.values)
    };

    let mut run = RunDir::create(args.common.out.as_deref(), cfg.output_dir.as_deref(), "score")?;
    let mut header = cfg.header_lines();
    header.push(format!("scores = \"{}\"", scores.name()));
    header.push(format!("class_balanced_rank = {balanced}"));
    run.write("scores.csv", |w| {
        for line in &header {
            writeln!(w, "# {line}")?;
        }
        write_score_csv(w, &scores, train.labels(), &order)
    })?;
    run.write("config.toml", |w| w.write_all(cfg.to_toml_string().as_bytes()))?;
    run.write_manifest()
}

fn fixed_plan(
    cfg: &ExperimentConfig,
    train: &NormalizedDataset,
) -> crate::Result<(BatchPlan, Option<crate::scoring::ScoreVector>)> {
    let t = &cfg.train;
    match &cfg.curriculum {
        CurriculumSpec::Vanilla => Ok((
            build_batch_plan_vanilla(train.len(), t.batch_size, t.total_steps, t.seed)?,
            None,
        )),
        CurriculumSpec::Fixed {
            scorer,
            direction,
            pace,
            class_balanced,
            balance_batches,
        } => {
            let scores = score_dataset(train, *scorer, *direction)?;
            let order = if *class_balanced {
                class_balanced_order(&scores, train.labels())?
            } else {
                ascending_order(&scores.values)
            };
            let plan = if *balance_batches {
                build_batch_plan_balanced(&order, pace, train.labels(), t.batch_size, t.total_steps, t.seed)?
            } else {
                build_batch_plan_curriculum(&order, pace, train.len(), t.batch_size, t.total_steps, t.seed)?
            };
            Ok((plan, Some(scores)))
        }
        CurriculumSpec::Dcl { .. } => Err(Error::Config("dcl curricula run with the `dcl` command".into())),
    }
}

pub fn cmd_train(args: &TrainArgs) -> CliResult {
    check_seeds(args.seeds)?;
    let mut cfg = load_config(&args.common)?;
    if let Some(s) = args.steps {
        cfg.train.total_steps = s;
    }
    if args.track_per_example {
        cfg.train.track_per_example = true;
    }
    cfg.validate()?;
    if matches!(cfg.curriculum, CurriculumSpec::Dcl { .. }) {
        return Err(CliError::new(2, "dcl curricula run with the `dcl` command"));
    }
    let (train, test) = cfg.dataset.load()?;
    let mut run = RunDir::create(args.common.out.as_deref(), cfg.output_dir.as_deref(), "train")?;
    let mut logs = Vec::with_capacity(args.seeds);

    for j in 0..args.seeds {
        let c = seeded(&cfg, j);
        let prefix = seed_prefix(args.seeds, j);
        let header = c.header_lines();
        let arch = arch_for(&c, &train)?;
        let (plan, scores) = fixed_plan(&c, &train)?;
        if args.dump_plan {
            run.write(&format!("{prefix}plan.csv"), |w| plan.write_csv(w))?;
            if let (Some(s), CurriculumSpec::Fixed { class_balanced, .. }) = (&scores, &c.curriculum) {
                let order = if *class_balanced {
                    class_balanced_order(s, train.labels())?
                } else {
                    ascending_order(&s.values)
                };
                run.write(&format!("{prefix}scores.csv"), |w| {
                    for line in &header {
                        writeln!(w, "# {line}")?;
                    }
                    write_score_csv(w, s, train.labels(), &order)
                })?;
            }
        }
        let mut trainer = Trainer::new(FcnModel::init(arch, c.model.init_seed), &train, &test, c.train.clone())?;
        let outcome = trainer.run(&plan);
        write_metrics(&mut run, &format!("{prefix}metrics.csv"), trainer.log(), &header)?;
        run.write(&format!("{prefix}config.toml"), |w| {
            w.write_all(c.to_toml_string().as_bytes())
        })?;
        if let Err(e) = outcome {
            run.write_manifest()?;
            return Err(e.into());
        }
        let (model, log) = trainer.finish();
        if c.train.track_per_example {
            run.write(&format!("{prefix}correctness.csv"), |w| log.write_correctness(w))?;
        }
        run.write_bytes(&format!("{prefix}model.ckpt"), &model.to_checkpoint_bytes())?;
        logs.push(log);
    }
    if args.seeds > 1 {
        write_aggregate(&mut run, "aggregate.csv", &logs, &cfg.header_lines())?;
    }
    run.write_manifest()
}

fn variant_label(v: DclVariant, k: f64) -> String {
    let name = match v {
        DclVariant::Plus => "dcl-plus",
        DclVariant::Minus => "dcl-minus",
    };
    format!("{name}-k{k}")
}

fn load_reference(path: &Path, arch: FcnArch) -> CliResult<FcnModel> {
    if !path.is_file() {
        return Err(CliError::new(
            4,
            format!("reference checkpoint {} not found", path.display()),
        ));
    }
    let model = FcnModel::load(path).map_err(|e| CliError::new(4, e.to_string()))?;
    if model.arch() != arch {
        return Err(CliError::new(
            4,
            format!(
                "reference architecture {:?} does not match the configured {:?}",
                model.arch(),
                arch
            ),
        ));
    }
    Ok(model)
}

pub fn cmd_dcl(args: &DclArgs) -> CliResult {
    check_seeds(args.seeds)?;
    let mut cfg = load_config(&args.common)?;
    if let Some(s) = args.steps {
        cfg.train.total_steps = s;
    }
    let CurriculumSpec::Dcl { k, variants, reference } = cfg.curriculum.clone() else {
        return Err(CliError::new(2, "the dcl command needs `curriculum.kind = \"dcl\"`"));
    };
    let ks = if args.k.is_empty() { vec![k] } else { args.k.clone() };
    let variants = if args.variant.is_empty() {
        variants
    } else {
        args.variant
            .iter()
            .map(|v| v.parse())
            .collect::<crate::Result<Vec<DclVariant>>>()?
    };
    for &k in &ks {
        if !(k > 0.0 && k <= 1.0) {
            return Err(CliError::new(2, format!("k must be in (0, 1], got {k}")));
        }
    }
    let reference = args.reference.clone().or(reference);
    if !args.train_reference && reference.is_none() {
        return Err(CliError::new(
            4,
            "no reference optimum: pass --train-reference or a reference checkpoint",
        ));
    }
    cfg.validate()?;

    let (train, test) = cfg.dataset.load()?;
    let arch = arch_for(&cfg, &train)?;
    let given_reference = match (&reference, args.train_reference) {
        (Some(p), false) => Some(load_reference(p, arch)?),
        _ => None,
    };
    let stddev = score_dataset(&train, Scorer::Stddev, Direction::Plus)?.values;

    let mut run = RunDir::create(args.common.out.as_deref(), cfg.output_dir.as_deref(), "dcl")?;
    let mut curves: BTreeMap<String, Vec<MetricsLog>> = BTreeMap::new();

    for j in 0..args.seeds {
        let c = seeded(&cfg, j);
        let prefix = seed_prefix(args.seeds, j);
        let header = c.header_lines();
        run.write(&format!("{prefix}config.toml"), |w| {
            w.write_all(c.to_toml_string().as_bytes())
        })?;

        let w_bar = match &given_reference {
            Some(m) => m.params().to_vec(),
            None => {
                let (w_bar, vlog) = match train_reference(&train, &test, arch, c.model.init_seed, &c.train) {
                    Ok(r) => r,
                    Err(e) => {
                        run.write_manifest()?;
                        return Err(e.into());
                    }
                };
                write_metrics(&mut run, &format!("{prefix}metrics-vanilla.csv"), &vlog, &header)?;
                run.write_bytes(&format!("{prefix}reference.ckpt"), &w_bar.to_checkpoint_bytes())?;
                curves.entry("vanilla".into()).or_default().push(vlog);
                w_bar.into_params()
            }
        };

        for &k in &ks {
            for &v in &variants {
                let label = variant_label(v, k);
                let mut hdr = header.clone();
                hdr.push(format!("run = \"{label}\""));
                let mut t = DclTrainer::new(&train, &test, arch, c.model.init_seed, &w_bar, k, &c.train, v)?;
                let mut failure = None;
                while !t.done() {
                    let epoch = t.epoch();
                    match t.run_epoch() {
                        Ok(rho) => {
                            let rho = rho.to_vec();
                            run.write(&format!("{prefix}rho/{label}/epoch-{epoch:04}.csv"), |w| {
                                write_rho_csv(w, epoch, &rho, &stddev, true)
                            })?;
                        }
                        Err(e) => {
                            failure = Some(e);
                            break;
                        }
                    }
                }
                write_metrics(&mut run, &format!("{prefix}metrics-{label}.csv"), t.log(), &hdr)?;
                if let Some(e) = failure {
                    run.write_manifest()?;
                    return Err(e.into());
                }
                let out = t.finish();
                run.write_bytes(&format!("{prefix}model-{label}.ckpt"), &out.model.to_checkpoint_bytes())?;
                curves.entry(label).or_default().push(out.log);
            }
        }
    }
    if args.seeds > 1 {
        for (label, logs) in &curves {
            write_aggregate(&mut run, &format!("aggregate-{label}.csv"), logs, &cfg.header_lines())?;
        }
    }
    run.write_manifest()
}

fn missing(path: &Path) -> CliError {
    CliError::new(5, format!("missing input {}", path.display()))
}

pub fn cmd_analyze(cmd: &AnalyzeCommand) -> CliResult {
    match cmd {
        AnalyzeCommand::Table1 {
            datasets,
            b,
            data_dir,
            out,
        } => {
            let names = datasets
                .iter()
                .map(|s| s.parse::<DatasetName>())
                .collect::<crate::Result<Vec<_>>>()?;
            let root = data_root(data_dir.as_deref())?;
            let mut rows: Vec<Table1Row> = Vec::new();
            for name in names {
                let (tr, te) = load_named(name, &root)?;
                let (nds, _) = normalize(tr, te)?;
                rows.extend(table1_rows(&nds, *b)?);
            }
            let mut run = RunDir::create(out.as_deref(), None, "table1")?;
            run.write("table1.csv", |w| {
                writeln!(w, "# b = {b}")?;
                write_table1_csv(w, &rows)
            })?;
            run.write("table1.json", |w| {
                serde_json::to_writer_pretty(&mut *w, &rows)?;
                writeln!(w)
            })?;
            run.write_manifest()
        }
        AnalyzeCommand::Correlation { rho, out } => {
            #[derive(Serialize)]
            struct Row {
                file: String,
                epoch: usize,
                n: usize,
                r: f64,
                p: f64,
            }
            let mut files = Vec::new();
            for path in rho {
                if path.is_dir() {
                    let mut found: Vec<PathBuf> = std::fs::read_dir(path)
                        .map_err(|_| missing(path))?
                        .filter_map(|e| e.ok().map(|e| e.path()))
                        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
                        .collect();
                    found.sort();
                    files.extend(found);
                } else {
                    files.push(path.clone());
                }
            }
            let mut rows = Vec::new();
            for path in &files {
                let file = File::open(path).map_err(|_| missing(path))?;
                let records = read_rho_csv(BufReader::new(file))?;
                let mut by_epoch: BTreeMap<usize, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
                for r in records {
                    let e = by_epoch.entry(r.epoch).or_default();
                    e.0.push(r.rho);
                    e.1.push(r.stddev);
                }
                for (epoch, (x, y)) in by_epoch {
                    let c = pearson(&x, &y)?;
                    rows.push(Row {
                        file: path.display().to_string(),
                        epoch,
                        n: c.n,
                        r: c.r,
                        p: c.p,
                    });
                }
            }
            let mut run = RunDir::create(out.as_deref(), None, "correlation")?;
            run.write("correlation.csv", |w| {
                writeln!(w, "file,epoch,n,r,p")?;
                for r in &rows {
                    writeln!(w, "{},{},{},{},{}", r.file, r.epoch, r.n, r.r, r.p)?;
                }
                Ok(())
            })?;
            run.write("correlation.json", |w| {
                serde_json::to_writer_pretty(&mut *w, &rows)?;
                writeln!(w)
            })?;
            run.write_manifest()
        }
        AnalyzeCommand::Learned {
            run: run_dir,
            quantile,
            data_dir,
            out,
        } => {
            let cfg_path = run_dir.join("config.toml");
            let corr_path = run_dir.join("correctness.csv");
            if !cfg_path.is_file() {
                return Err(missing(&cfg_path));
            }
            if !corr_path.is_file() {
                return Err(CliError::new(
                    5,
                    format!("{} not found; train with --track-per-example", corr_path.display()),
                ));
            }
            let mut cfg = ExperimentConfig::from_file(&cfg_path)?;
            if let Some(d) = data_dir {
                cfg.dataset.root = Some(d.clone());
            }
            let file = File::open(&corr_path).map_err(|_| missing(&corr_path))?;
            let matrix = MetricsLog::read_correctness(BufReader::new(file))?;
            let (train, _) = cfg.dataset.load()?;
            let learned = learned_order(&matrix)?;
            let groups = stddev_by_learned_group(train.base(), &learned, *quantile)?;
            let mut run = RunDir::create(out.as_deref(), None, "learned")?;
            let header = cfg.header_lines();
            run.write("learned.csv", |w| {
                for line in &header {
                    writeln!(w, "# {line}")?;
                }
                writeln!(w, "index,label,learned_epoch")?;
                for (i, (&e, &l)) in learned.iter().zip(train.labels()).enumerate() {
                    writeln!(w, "{i},{l},{e}")?;
                }
                Ok(())
            })?;
            run.write("learned.json", |w| {
                let report = serde_json::json!({
                    "epochs": matrix.len(),
                    "quantile": quantile,
                    "groups": groups,
                });
                serde_json::to_writer_pretty(&mut *w, &report)?;
                writeln!(w)
            })?;
            run.write_manifest()
        }
    }
}
