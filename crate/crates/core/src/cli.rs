//! Command-line front-end. Every subcommand wraps one library operation,
//! writes its settings into the output's provenance block and exits with
//! `error: <category>: <message>` on failure.
//!
//! Options can also come from `--config <file>` (`key=value` lines, keys
//! spelled like the long flags); flags given on the command line win.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use crate::closed_form::{assemble_spmi_solution, bisect_pair_minimizer, solve_pair, solve_pairs, PairCounts};
use crate::config::{check_same_source, split_provenance, RunConfig, SOURCE_KEY};
use crate::convex::{self, ContextMode, ContextSpec, ConvexModel, TrainConfig};
use crate::corpus::{build_vocabulary, count_cooccurrences, tokenize, CooccurrenceStats, Vocabulary, WindowSpec};
use crate::embedding::{Embedding, Score};
use crate::error::{Error, Result};
use crate::eval::{self, Metric, SimilarityDataset};
use crate::factorization::{self, Flavor, WeightedFactorizationProblem};
use crate::loss::LossKind;
use crate::par;
use crate::pmi::{build_matrix, Implicit, PmiVariant, SparseMatrix};
use crate::regularization::{regularized_matrix, RegKind, RegMethod, RegSpec, RegWeighting};
use crate::triplets::TripletFile;

#[derive(Debug, Parser)]
#[command(
    name = "cwb",
    version,
    about = "Co-occurrence word embeddings: counts, PMI, closed forms, factorization"
)]
pub struct Cli {
    /// Worker threads for data-parallel stages.
    #[arg(long, global = true, env = "COOC_THREADS", default_value_t = 1)]
    pub threads: usize,

    /// key=value file merged under the command-line flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
#[allow(clippy::large_enum_variant)]
pub enum Command {
    /// Count weighted co-occurrences in a corpus.
    Count(CountArgs),
    /// Build a PMI-family matrix from co-occurrences.
    Pmi(PmiArgs),
    /// Per-pair closed-form minimizers of a loss.
    Solve(SolveArgs),
    /// L1/L2-regularized per-pair solutions.
    Regularize(RegularizeArgs),
    /// Truncated SVD or weighted ALS word vectors from a matrix.
    Factorize(FactorizeArgs),
    /// Train sparse word vectors over fixed context features.
    TrainConvex(TrainConvexArgs),
    /// Largest coordinates of a trained sparse vector.
    Explain(ExplainArgs),
    /// Spearman correlation against a word-pair file.
    Eval(EvalArgs),
    /// Nearest neighbours of a word.
    Neighbors(NeighborsArgs),
    /// Consistency and closed-form checks as a TSV summary.
    Report(ReportArgs),
}

#[derive(Debug, Args, Default)]
pub struct WindowArgs {
    /// Symmetric window radius (sets both sides).
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub left: Option<usize>,
    #[arg(long)]
    pub right: Option<usize>,
    /// constant | reciprocal
    #[arg(long)]
    pub positional_weight: Option<String>,
    /// Down-sampling threshold for target words.
    #[arg(long)]
    pub subsample: Option<f64>,
    /// Down-sampling threshold for context words.
    #[arg(long)]
    pub context_subsample: Option<f64>,
    /// Draw down-sampling decisions instead of weighting.
    #[arg(long)]
    pub stochastic_subsample: bool,
}

#[derive(Debug, Args)]
pub struct CountArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Vocabulary TSV; defaults to `<out>.vocab.tsv`.
    #[arg(long)]
    pub vocab_out: Option<PathBuf>,
    #[arg(long)]
    pub min_count: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub window: WindowArgs,
}

#[derive(Debug, Args)]
pub struct PmiArgs {
    #[arg(long)]
    pub cooc: Option<PathBuf>,
    /// pmi | ppmi | spmi | sppmi
    #[arg(long)]
    pub variant: Option<String>,
    #[arg(long)]
    pub k: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub cooc: Option<PathBuf>,
    /// logistic | squared | squared-hinge | hinge | huber
    #[arg(long)]
    pub loss: Option<String>,
    #[arg(long)]
    pub k: Option<f64>,
    /// Solution matrix (triplets).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Store absent pairs explicitly instead of as the implicit value.
    #[arg(long)]
    pub include_absent: bool,
    /// Curvature weights with the same support as the solution matrix.
    #[arg(long)]
    pub alpha_out: Option<PathBuf>,
    /// One-hot-context word vectors (needs --vocab).
    #[arg(long)]
    pub embedding_out: Option<PathBuf>,
    #[arg(long)]
    pub vocab: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RegularizeArgs {
    #[arg(long)]
    pub cooc: Option<PathBuf>,
    /// l1 | l2
    #[arg(long)]
    pub kind: Option<String>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub k: Option<f64>,
    /// count-scaled | uniform
    #[arg(long)]
    pub weighting: Option<String>,
    /// closed-form | exact
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FactorizeArgs {
    /// Target matrix (triplets).
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    /// Per-entry weights; switches from SVD to weighted ALS.
    #[arg(long)]
    pub weights: Option<PathBuf>,
    /// Row labels; ids are used when absent.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    #[arg(long)]
    pub dim: Option<usize>,
    /// plain | symmetric (SVD only)
    #[arg(long)]
    pub flavor: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub ridge: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Context vectors (ALS only).
    #[arg(long)]
    pub contexts_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainConvexArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Vocabulary TSV; built from the corpus with --min-count when absent.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    #[arg(long)]
    pub min_count: Option<u64>,
    /// single | bag | positional
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub k_neg: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub eta0: Option<f64>,
    /// linear | constant
    #[arg(long)]
    pub schedule: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// negative-sampling | softmax
    #[arg(long)]
    pub objective: Option<String>,
    /// unigram | uniform
    #[arg(long)]
    pub noise: Option<String>,
    /// stochastic | full
    #[arg(long)]
    pub batch: Option<String>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub window: WindowArgs,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub word: Option<String>,
    #[arg(long)]
    pub top: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// TSV word1, word2, score.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// cosine | dot
    #[arg(long)]
    pub metric: Option<String>,
}

#[derive(Debug, Args)]
pub struct NeighborsArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub word: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub metric: Option<String>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub cooc: Option<PathBuf>,
    #[arg(long)]
    pub k: Option<f64>,
    /// Further artifacts whose provenance must match the co-occurrences.
    #[arg(long = "input", num_args = 1..)]
    pub inputs: Vec<PathBuf>,
    /// Cap on pairs used by the closed-form sweep.
    #[arg(long)]
    pub max_pairs: Option<usize>,
}

/// Command-line values layered over the config file.
struct Settings {
    values: RunConfig,
}

impl Settings {
    fn new(file: Option<&Path>) -> Result<(Self, RunConfig)> {
        let base = match file {
            Some(p) => RunConfig::from_kv_file(p)?,
            None => RunConfig::new(),
        };
        Ok((
            Settings {
                values: RunConfig::new(),
            },
            base,
        ))
    }

    fn put<T: ToString>(&mut self, key: &str, value: &Option<T>) {
        if let Some(v) = value {
            self.values.set(key, v.to_string());
        }
    }

    fn flag(&mut self, key: &str, on: bool) {
        if on {
            self.values.set(key, true);
        }
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|e| Error::InvalidConfig(format!("--{key}={raw}: {e}"))),
        }
    }

    fn or<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    fn require<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)?
            .ok_or_else(|| Error::InvalidConfig(format!("missing --{key}")))
    }

    fn path(&self, key: &str) -> Result<PathBuf> {
        self.require::<String>(key).map(PathBuf::from)
    }

    fn opt_path(&self, key: &str) -> Result<Option<PathBuf>> {
        Ok(self.get::<String>(key)?.map(PathBuf::from))
    }

    fn is_set(&self, key: &str) -> Result<bool> {
        self.or(key, false)
    }
}

fn basename(p: &Path) -> String {
    p.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| p.display().to_string())
}

/// Provenance for an output: the given settings, paths reduced to their
/// file names.
fn provenance(entries: &[(&str, String)]) -> RunConfig {
    let mut cfg = RunConfig::new();
    for (k, v) in entries {
        cfg.set(*k, v);
    }
    cfg
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn window_settings(s: &mut Settings, w: &WindowArgs) {
    s.put("window", &w.window);
    s.put("left", &w.left);
    s.put("right", &w.right);
    s.put("positional-weight", &w.positional_weight);
    s.put("subsample", &w.subsample);
    s.put("context-subsample", &w.context_subsample);
    s.flag("stochastic-subsample", w.stochastic_subsample);
}

fn window_from(s: &Settings) -> Result<WindowSpec> {
    let radius = s.get::<usize>("window")?;
    let left = s.get("left")?.or(radius).unwrap_or(2);
    let right = s.get("right")?.or(radius).unwrap_or(2);
    let mut win = WindowSpec::new(left, right)?;
    if let Some(pw) = s.get::<String>("positional-weight")? {
        win.positional_weight = pw.parse()?;
    }
    win.subsample_threshold = s.get("subsample")?;
    if let Some(t) = s.get::<f64>("context-subsample")? {
        win.context_subsample = true;
        win.context_threshold = Some(t);
    }
    win.stochastic_subsample = s.is_set("stochastic-subsample")?;
    win.validate()?;
    Ok(win)
}

fn parse_enum<T: FromStr<Err = Error>>(s: &Settings, key: &str, default: T) -> Result<T> {
    match s.get::<String>(key)? {
        Some(raw) => raw.parse(),
        None => Ok(default),
    }
}

fn read_corpus(path: &Path) -> Result<Vec<Vec<String>>> {
    Ok(tokenize(&std::fs::read_to_string(path)?))
}

fn load_stats(path: &Path) -> Result<(RunConfig, CooccurrenceStats)> {
    let file = TripletFile::load(path)?;
    let stats = CooccurrenceStats::from_triplets(&file, &path.display().to_string())?;
    Ok((file.config, stats))
}

fn load_matrix(path: &Path) -> Result<(RunConfig, SparseMatrix)> {
    let file = TripletFile::load(path)?;
    let m = SparseMatrix::from_triplets(&file, &path.display().to_string())?;
    Ok((file.config, m))
}

/// Provenance block of any artifact this tool writes.
pub fn read_provenance(path: &Path) -> Result<RunConfig> {
    let bytes = std::fs::read(path)?;
    if bytes.starts_with(crate::triplets::MAGIC) {
        return Ok(TripletFile::load(path)?.config);
    }
    let text = String::from_utf8_lossy(&bytes);
    Ok(split_provenance(&text).0)
}

fn id_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)?;
    Ok(())
}

/// Parses `args` and runs the command, returning what goes to stdout.
pub fn run<I, T>(args: I) -> Result<String>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    run_parsed(cli)
}

pub fn run_parsed(cli: Cli) -> Result<String> {
    let threads = cli.threads.max(1);
    if threads == 1 {
        return par::with_execution(par::Execution::Sequential, || dispatch(&cli));
    }
    #[cfg(feature = "parallel")]
    {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
        pool.install(|| dispatch(&cli))
    }
    #[cfg(not(feature = "parallel"))]
    dispatch(&cli)
}

fn dispatch(cli: &Cli) -> Result<String> {
    let (mut s, base) = Settings::new(cli.config.as_deref())?;
    match &cli.command {
        Command::Count(a) => {
            s.put("input", &a.input.as_ref().map(|p| p.display()));
            s.put("out", &a.out.as_ref().map(|p| p.display()));
            s.put("vocab-out", &a.vocab_out.as_ref().map(|p| p.display()));
            s.put("min-count", &a.min_count);
            s.put("seed", &a.seed);
            window_settings(&mut s, &a.window);
            s.values.merge_missing(&base);
            cmd_count(&s)
        }
        Command::Pmi(a) => {
            s.put("cooc", &a.cooc.as_ref().map(|p| p.display()));
            s.put("variant", &a.variant);
            s.put("k", &a.k);
            s.put("out", &a.out.as_ref().map(|p| p.display()));
            s.values.merge_missing(&base);
            cmd_pmi(&s)
        }
        Command::Solve(a) => {
            s.put("cooc", &a.cooc.as_ref().map(|p| p.display()));
            s.put("loss", &a.loss);
            s.put("k", &a.k);
            s.put("out", &a.out.as_ref().map(|p| p.display()));
            s.flag("include-absent", a.include_absent);
            s.put("alpha-out", &a.alpha_out.as_ref().map(|p| p.display()));
            s.put("embedding-out", &a.embedding_out.as_ref().map(|p| p.display()));
            s.put("vocab", &a.vocab.as_ref().map(|p| p.display()));
            s.values.merge_missing(&base);
            cmd_solve(&s)
        }
        Command::Regularize(a) => {
            s.put("cooc", &a.cooc.as_ref().map(|p| p.display()));
            s.put("kind", &a.kind);
            s.put("lambda", &a.lambda);
            s.put("k", &a.k);
            s.put("weighting", &a.weighting);
            s.put("method", &a.method);
            s.put("out", &a.out.as_ref().map(|p| p.display()));
            s.values.merge_missing(&base);
            cmd_regularize(&s)
        }
        Command::Factorize(a) => {
            s.put("matrix", &a.matrix.as_ref().map(|p| p.display()));
            s.put("weights", &a.weights.as_ref().map(|p| p.display()));
            s.put("vocab", &a.vocab.as_ref().map(|p| p.display()));
            s.put("dim", &a.dim);
            s.put("flavor", &a.flavor);
            s.put("seed", &a.seed);
            s.put("epochs", &a.epochs);
            s.put("ridge", &a.ridge);
            s.put("out", &a.out.as_ref().map(|p| p.display()));
            s.put("contexts-out", &a.contexts_out.as_ref().map(|p| p.display()));
            s.values.merge_missing(&base);
            cmd_factorize(&s)
        }
        Command::TrainConvex(a) => {
            s.put("input", &a.input.as_ref().map(|p| p.display()));
            s.put("vocab", &a.vocab.as_ref().map(|p| p.display()));
            s.put("min-count", &a.min_count);
            s.put("mode", &a.mode);
            s.put("lambda", &a.lambda);
            s.put("k-neg", &a.k_neg);
            s.put("epochs", &a.epochs);
            s.put("eta0", &a.eta0);
            s.put("schedule", &a.schedule);
            s.put("seed", &a.seed);
            s.put("objective", &a.objective);
            s.put("noise", &a.noise);
            s.put("batch", &a.batch);
            s.put("workers", &a.workers);
            s.put("tolerance", &a.tolerance);
            s.put("out", &a.out.as_ref().map(|p| p.display()));
            window_settings(&mut s, &a.window);
            s.values.merge_missing(&base);
            cmd_train_convex(&s)
        }
        Command::Explain(a) => {
            s.put("model", &a.model.as_ref().map(|p| p.display()));
            s.put("word", &a.word);
            s.put("top", &a.top);
            s.values.merge_missing(&base);
            cmd_explain(&s)
        }
        Command::Eval(a) => {
            s.put("model", &a.model.as_ref().map(|p| p.display()));
            s.put("dataset", &a.dataset.as_ref().map(|p| p.display()));
            s.put("metric", &a.metric);
            s.values.merge_missing(&base);
            cmd_eval(&s)
        }
        Command::Neighbors(a) => {
            s.put("model", &a.model.as_ref().map(|p| p.display()));
            s.put("word", &a.word);
            s.put("n", &a.n);
            s.put("metric", &a.metric);
            s.values.merge_missing(&base);
            cmd_neighbors(&s)
        }
        Command::Report(a) => {
            s.put("cooc", &a.cooc.as_ref().map(|p| p.display()));
            s.put("k", &a.k);
            s.put("max-pairs", &a.max_pairs);
            s.values.merge_missing(&base);
            let inputs = if a.inputs.is_empty() {
                s.get::<String>("input")?
                    .map(|v| v.split(',').map(PathBuf::from).collect())
                    .unwrap_or_default()
            } else {
                a.inputs.clone()
            };
            cmd_report(&s, &inputs)
        }
    }
}

fn cmd_count(s: &Settings) -> Result<String> {
    let input = s.path("input")?;
    let out = s.path("out")?;
    let vocab_out = s
        .opt_path("vocab-out")?
        .unwrap_or_else(|| PathBuf::from(format!("{}.vocab.tsv", out.display())));
    let min_count = s.or("min-count", 1u64)?;
    let seed = s.or("seed", 0u64)?;
    let win = window_from(s)?;
    let docs = read_corpus(&input)?;
    let vocab = build_vocabulary(docs.iter().flatten(), min_count)?;
    let stats = count_cooccurrences(&docs, &vocab, &win, seed)?;
    let mut cfg = provenance(&[
        ("command", "count".into()),
        ("input", basename(&input)),
        ("min-count", min_count.to_string()),
        ("seed", seed.to_string()),
        ("vocab", basename(&vocab_out)),
    ]);
    cfg.set(SOURCE_KEY, sha256_file(&input)?);
    win.record(&mut cfg);
    stats.to_triplets(cfg).save(&out)?;
    write_text(&vocab_out, &vocab.to_tsv())?;
    Ok(format!(
        "words\t{}\npairs\t{}\nmass\t{}\n",
        vocab.len(),
        stats.pairs().len(),
        stats.total()
    ))
}

fn cmd_pmi(s: &Settings) -> Result<String> {
    let cooc = s.path("cooc")?;
    let out = s.path("out")?;
    let variant: PmiVariant = parse_enum(s, "variant", PmiVariant::Sppmi)?;
    let k = s.or("k", 1.0)?;
    let (input_cfg, stats) = load_stats(&cooc)?;
    let m = build_matrix(&stats, variant, k)?;
    let mut cfg = provenance(&[
        ("command", "pmi".into()),
        ("cooc", basename(&cooc)),
        ("variant", variant.to_string()),
        ("k", k.to_string()),
    ]);
    cfg.inherit_source(&input_cfg);
    m.to_triplets(cfg, &variant.to_string(), k).save(&out)?;
    Ok(format!("rows\t{}\nstored\t{}\n", m.rows(), m.nnz()))
}

/// Value every absent pair takes under `kind`.
fn absent_value(kind: LossKind) -> Implicit {
    match kind {
        LossKind::Logistic => Implicit::Undefined,
        _ => Implicit::Value(-1.0),
    }
}

fn cmd_solve(s: &Settings) -> Result<String> {
    let cooc = s.path("cooc")?;
    let out = s.path("out")?;
    let kind: LossKind = parse_enum(s, "loss", LossKind::Logistic)?;
    let k = s.or("k", 1.0)?;
    let include_absent = s.is_set("include-absent")?;
    let (input_cfg, stats) = load_stats(&cooc)?;
    let solutions = solve_pairs(&stats, kind, k, include_absent)?;
    let n = stats.num_words();
    let mut cfg = provenance(&[
        ("command", "solve".into()),
        ("cooc", basename(&cooc)),
        ("loss", kind.to_string()),
        ("k", k.to_string()),
        ("include-absent", include_absent.to_string()),
    ]);
    cfg.inherit_source(&input_cfg);

    let mut x_entries = Vec::new();
    let mut alpha_entries = Vec::new();
    for (w, c, sol) in &solutions {
        match sol.x_star {
            Score::Finite(x) => x_entries.push((*w as u32, *c as u32, x)),
            // logistic absent pairs stay implicit
            Score::NegInf => continue,
        }
        if let Some(a) = sol.alpha {
            alpha_entries.push((*w as u32, *c as u32, a));
        }
    }
    let x_matrix = SparseMatrix::new(n, n, x_entries, absent_value(kind))?;
    x_matrix.to_triplets(cfg.clone(), &format!("x-{kind}"), k).save(&out)?;

    if let Some(alpha_out) = s.opt_path("alpha-out")? {
        if kind == LossKind::Hinge {
            return Err(Error::Domain("hinge loss has no curvature weights".into()));
        }
        let alpha = SparseMatrix::new(n, n, alpha_entries, Implicit::Zero)?;
        alpha
            .to_triplets(cfg.clone(), &format!("alpha-{kind}"), k)
            .save(&alpha_out)?;
    }
    if let Some(emb_out) = s.opt_path("embedding-out")? {
        let vocab = Vocabulary::load(&s.path("vocab")?)?;
        let pair = assemble_spmi_solution(&stats, vocab.words(), kind, k)?;
        pair.words.save(&emb_out, &cfg)?;
    }
    let positive = solutions.iter().filter(|(_, _, p)| p.pos_condition).count();
    Ok(format!("pairs\t{}\npositive\t{}\n", solutions.len(), positive))
}

fn cmd_regularize(s: &Settings) -> Result<String> {
    let cooc = s.path("cooc")?;
    let out = s.path("out")?;
    let kind: RegKind = parse_enum(s, "kind", RegKind::L1)?;
    let lambda: f64 = s.require("lambda")?;
    let k = s.or("k", 1.0)?;
    let weighting: RegWeighting = parse_enum(s, "weighting", RegWeighting::CountScaled)?;
    let method: RegMethod = parse_enum(s, "method", RegMethod::ClosedForm)?;
    let (input_cfg, stats) = load_stats(&cooc)?;
    let m = regularized_matrix(&stats, RegSpec::new(kind, lambda, k)?, weighting, method)?;
    let mut cfg = provenance(&[
        ("command", "regularize".into()),
        ("cooc", basename(&cooc)),
        ("kind", kind.to_string()),
        ("lambda", lambda.to_string()),
        ("k", k.to_string()),
        ("weighting", weighting.to_string()),
        ("method", method.to_string()),
    ]);
    cfg.inherit_source(&input_cfg);
    m.to_triplets(cfg, &format!("reg-{kind}"), k).save(&out)?;
    Ok(format!("stored\t{}\n", m.nnz()))
}

fn cmd_factorize(s: &Settings) -> Result<String> {
    let matrix_path = s.path("matrix")?;
    let out = s.path("out")?;
    let dim: usize = s.require("dim")?;
    let seed = s.or("seed", 0u64)?;
    let (input_cfg, m) = load_matrix(&matrix_path)?;
    let labels = match s.opt_path("vocab")? {
        Some(p) => {
            let v = Vocabulary::load(&p)?;
            if v.len() != m.rows() {
                return Err(Error::DimensionMismatch(format!(
                    "{} vocabulary words for {} matrix rows",
                    v.len(),
                    m.rows()
                )));
            }
            v.words().to_vec()
        }
        None => id_labels(m.rows()),
    };
    let mut cfg = provenance(&[
        ("command", "factorize".into()),
        ("matrix", basename(&matrix_path)),
        ("dim", dim.to_string()),
        ("seed", seed.to_string()),
    ]);
    cfg.inherit_source(&input_cfg);
    match s.opt_path("weights")? {
        None => {
            let flavor: Flavor = parse_enum(s, "flavor", Flavor::Plain)?;
            cfg.set("method", "svd").set("flavor", flavor);
            let svd = factorization::truncated_svd(&m, dim, seed)?;
            let emb = factorization::word_vectors(&svd, flavor, &labels)?;
            emb.save(&out, &cfg)?;
            let mut report = String::new();
            for (i, sv) in svd.sigma.iter().enumerate() {
                let _ = writeln!(report, "sigma{}\t{sv}", i + 1);
            }
            Ok(report)
        }
        Some(weights_path) => {
            let (weights_cfg, weights) = load_matrix(&weights_path)?;
            check_same_source([
                (matrix_path.to_str().unwrap_or("matrix"), &input_cfg),
                (weights_path.to_str().unwrap_or("weights"), &weights_cfg),
            ])?;
            let mut problem = WeightedFactorizationProblem::from_sparse(&m, Some(&weights), dim)?;
            problem.epochs = s.or("epochs", problem.epochs)?;
            problem.ridge = s.or("ridge", problem.ridge)?;
            cfg.set("method", "als")
                .set("weights", basename(&weights_path))
                .set("epochs", problem.epochs)
                .set("ridge", problem.ridge);
            let fit = factorization::weighted_factorize(&problem, seed)?;
            let objective = fit.objective();
            let sweeps = (fit.history.len() - 1) / 2;
            let ctx_labels = if m.cols() == labels.len() {
                labels.clone()
            } else {
                id_labels(m.cols())
            };
            Embedding::from_matrix(labels, &fit.words)?.save(&out, &cfg)?;
            if let Some(ctx_out) = s.opt_path("contexts-out")? {
                Embedding::from_matrix(ctx_labels, &fit.contexts)?.save(&ctx_out, &cfg)?;
            }
            Ok(format!("objective\t{objective}\nsweeps\t{sweeps}\n"))
        }
    }
}

fn cmd_train_convex(s: &Settings) -> Result<String> {
    let input = s.path("input")?;
    let out = s.path("out")?;
    let docs = read_corpus(&input)?;
    let vocab_path = s.opt_path("vocab")?;
    let min_count = s.or("min-count", 1u64)?;
    let vocab = match &vocab_path {
        Some(p) => Vocabulary::load(p)?,
        None => build_vocabulary(docs.iter().flatten(), min_count)?,
    };
    let mode: ContextMode = parse_enum(s, "mode", ContextMode::Single)?;
    let spec = ContextSpec::new(mode, window_from(s)?)?;
    let d = TrainConfig::default();
    let cfg = TrainConfig {
        lambda: s.or("lambda", d.lambda)?,
        k_neg: s.or("k-neg", d.k_neg)?,
        epochs: s.or("epochs", d.epochs)?,
        eta0: s.or("eta0", d.eta0)?,
        schedule: parse_enum(s, "schedule", d.schedule)?,
        seed: s.or("seed", d.seed)?,
        objective: parse_enum(s, "objective", d.objective)?,
        noise: parse_enum(s, "noise", d.noise)?,
        batch: parse_enum(s, "batch", d.batch)?,
        workers: s.or("workers", d.workers)?,
        tolerance: s.or("tolerance", d.tolerance)?,
    };
    let encoded: Vec<Vec<usize>> = docs.iter().map(|doc| vocab.encode(doc)).collect();
    let outcome = convex::train(&encoded, &vocab, &spec, &cfg)?;
    let mut prov = provenance(&[("command", "train-convex".into()), ("input", basename(&input))]);
    match &vocab_path {
        Some(p) => prov.set("vocab", basename(p)),
        None => prov.set("min-count", min_count),
    };
    prov.set(SOURCE_KEY, sha256_file(&input)?);
    cfg.record(&mut prov);
    outcome.model.save(&out, &prov)?;
    Ok(format!(
        "iterations\t{}\nfinal\t{}\nnonzeros\t{}\n",
        outcome.iterations,
        outcome.history.last().copied().unwrap_or(f64::NAN),
        outcome.model.nonzeros()
    ))
}

fn cmd_explain(s: &Settings) -> Result<String> {
    let (cfg, emb) = Embedding::load(&s.path("model")?)?;
    let model = ConvexModel::from_embedding(&cfg, emb)?;
    let word: String = s.require("word")?;
    let top = s.or("top", 10usize)?;
    let mut out = String::new();
    for (feature, weight) in convex::explain(&word, &model, top)? {
        let _ = writeln!(out, "{feature}\t{weight}");
    }
    Ok(out)
}

fn cmd_eval(s: &Settings) -> Result<String> {
    let (_, model) = Embedding::load(&s.path("model")?)?;
    let ds = SimilarityDataset::load(&s.path("dataset")?)?;
    let metric: Metric = parse_enum(s, "metric", Metric::Cosine)?;
    let r = eval::spearman(&model, &ds, metric)?;
    Ok(format!(
        "metric\tspearman\tcoverage\tscored\ttotal\n{metric}\t{}\t{}\t{}\t{}\n",
        r.correlation, r.coverage, r.scored, r.total
    ))
}

fn cmd_neighbors(s: &Settings) -> Result<String> {
    let (_, model) = Embedding::load(&s.path("model")?)?;
    let word: String = s.require("word")?;
    let n = s.or("n", 10usize)?;
    let metric: Metric = parse_enum(s, "metric", Metric::Cosine)?;
    let mut out = String::new();
    for (rank, nb) in eval::neighbors(&model, &word, n, metric)?.iter().enumerate() {
        let _ = writeln!(out, "{}\t{}\t{}", rank + 1, nb.word, nb.score);
    }
    Ok(out)
}

fn cmd_report(s: &Settings, inputs: &[PathBuf]) -> Result<String> {
    let cooc = s.path("cooc")?;
    let k = s.or("k", 1.0)?;
    let max_pairs = s.or("max-pairs", 2000usize)?;
    let (cooc_cfg, stats) = load_stats(&cooc)?;
    let mut configs = vec![(cooc.display().to_string(), cooc_cfg)];
    for p in inputs {
        configs.push((p.display().to_string(), read_provenance(p)?));
    }
    check_same_source(configs.iter().map(|(n, c)| (n.as_str(), c)))?;

    let mut out = String::from("check\tsubject\tvalue\n");
    let _ = writeln!(out, "provenance\tinputs\t{}", configs.len());
    let sppmi = build_matrix(&stats, PmiVariant::Sppmi, k)?;
    if stats.num_words() <= factorization::FULL_SVD_LIMIT {
        for flavor in [Flavor::Plain, Flavor::Symmetric] {
            let gap = factorization::consistency_report(&sppmi, flavor)?;
            let _ = writeln!(out, "consistency\t{flavor}\t{gap:e}");
        }
    } else {
        let _ = writeln!(out, "consistency\tskipped\t{}", stats.num_words());
    }
    let mut pairs: Vec<(usize, usize)> = stats
        .pairs()
        .iter()
        .map(|&(w, c, _)| (w as usize, c as usize))
        .collect();
    pairs.truncate(max_pairs);
    for kind in LossKind::ALL {
        let errors = par::map_slice(&pairs, |&(w, c)| -> Result<f64> {
            let counts = PairCounts::from_stats(&stats, w, c);
            let sol = solve_pair(kind, counts, k)?;
            if kind == LossKind::Hinge && counts.joint == counts.negative_weight(k) {
                return Ok(0.0);
            }
            Ok(match (sol.x_star, bisect_pair_minimizer(kind, counts, k)) {
                (Score::Finite(x), Some(y)) => (x - y).abs(),
                (Score::NegInf, None) => 0.0,
                _ => f64::INFINITY,
            })
        });
        let worst = errors
            .into_iter()
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        let _ = writeln!(out, "closed-form-max-abs-error\t{kind}\t{worst:e}");
    }
    let _ = writeln!(out, "pairs-checked\tall-losses\t{}", pairs.len());
    Ok(out)
}

/// Entry point used by the binary; maps errors to a one-line category.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            ) {
                print!("{e}");
                return 0;
            }
            eprintln!(
                "error: invalid-config: {}",
                e.to_string().lines().next().unwrap_or_default()
            );
            return 2;
        }
    };
    match run_parsed(cli) {
        Ok(out) => {
            print!("{out}");
            0
        }
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error: {}: {msg}", e.category());
            1
        }
    }
}
