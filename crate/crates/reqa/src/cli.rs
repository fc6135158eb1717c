//! Command-line surface.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use reqa_core::bm25::{DEFAULT_B, DEFAULT_K1};
use reqa_core::encode::{EncoderConfig, DEFAULT_ALPHA, DEFAULT_DIM};
use reqa_core::ivf::{IvfConfig, DEFAULT_LISTS, DEFAULT_MAX_ITERS, DEFAULT_PROBES};
use reqa_core::stats::compute_stats;
use reqa_core::{RuleSplitter, SentenceSplitter};
use serde_json::{json, Value};

use crate::artifacts::{self, read_json, to_json_bytes, write_bytes, write_json, StaleGuard};
use crate::config::{EncoderKind, InputFormat, RunConfig};
use crate::embed;
use crate::error::{Error, Result};
use crate::evaluate;
use crate::pipeline::{self, Bm25File, StatsFile};
use crate::report::{compare, parse_report, render_stats, render_table};
use crate::squad::{parse_squad, write_squad};

pub const DATA_DIR_ENV: &str = "REQA_DATA_DIR";

#[derive(Debug, Parser)]
#[command(name = "reqa", version, about = "Sentence- and paragraph-level answer retrieval benchmarks")]
pub struct Cli {
    /// Worker threads (0 = one per core).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Seed for feature hashing and k-means initialization.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// JSON run configuration; its values take precedence over flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory searched for relative input paths that do not exist.
    #[arg(long, global = true, env = DATA_DIR_ENV)]
    pub data_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert SQuAD or simplified NQ input to validated SQuAD JSON.
    Convert {
        #[arg(long, value_enum, default_value = "squad")]
        format: InputFormat,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print sentence spans as JSONL.
    Segment {
        #[arg(long = "in")]
        input: PathBuf,
        /// `text` treats each non-blank line as a paragraph.
        #[arg(long, value_enum, default_value = "text")]
        format: SegmentInput,
        #[arg(long)]
        show_offsets: bool,
    },
    /// Dataset statistics for a task directory.
    Stats {
        #[arg(long)]
        task: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write the Markdown tables here.
        #[arg(long)]
        markdown: Option<PathBuf>,
    },
    #[command(subcommand)]
    Index(IndexCommand),
    /// Score questions against answers and write a report.
    Eval(EvalArgs),
    /// Side-by-side metrics of two reports.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Markdown output; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Run every stage from a corpus to reports.
    Run {
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<InputFormat>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SegmentInput {
    Text,
    Squad,
}

#[derive(Debug, Subcommand)]
pub enum IndexCommand {
    /// Build the task directory (candidates, questions, gold).
    Build {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, value_enum, default_value = "squad")]
        format: InputFormat,
        #[arg(long)]
        out: PathBuf,
    },
    /// Encode answers and questions into RQAV files.
    Encode {
        #[arg(long)]
        task: PathBuf,
        #[arg(long, value_enum, default_value = "hash-tfidf")]
        encoder: EncoderKind,
        #[arg(long, default_value_t = DEFAULT_DIM)]
        dim: usize,
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f32,
        /// Answer vectors for `--encoder external`.
        #[arg(long)]
        answers_in: Option<PathBuf>,
        /// Question vectors for `--encoder external`.
        #[arg(long)]
        questions_in: Option<PathBuf>,
        /// Output directory; defaults to the task directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a BM25 paragraph index from a corpus file or task directory.
    Bm25 {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = DEFAULT_K1)]
        k1: f64,
        #[arg(long, default_value_t = DEFAULT_B)]
        b: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build an IVF index over answer vectors.
    Ivf {
        #[arg(long)]
        task: PathBuf,
        #[arg(long)]
        answers_vec: PathBuf,
        #[arg(long, default_value_t = DEFAULT_LISTS)]
        lists: usize,
        #[arg(long, default_value_t = DEFAULT_PROBES)]
        probes: usize,
        #[arg(long, default_value_t = DEFAULT_MAX_ITERS)]
        max_iters: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub task: PathBuf,
    #[arg(long, requires = "questions_vec")]
    pub answers_vec: Option<PathBuf>,
    #[arg(long, requires = "answers_vec")]
    pub questions_vec: Option<PathBuf>,
    /// Search through an IVF index instead of scoring every answer.
    #[arg(long)]
    pub ann: bool,
    #[arg(long, default_value_t = DEFAULT_PROBES)]
    pub probes: usize,
    /// Prebuilt IVF index; built on the fly when absent.
    #[arg(long)]
    pub ivf_index: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_LISTS)]
    pub lists: usize,
    #[arg(long)]
    pub bm25_index: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub cutoffs: Option<Vec<usize>>,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the Markdown table here.
    #[arg(long)]
    pub table: Option<PathBuf>,
}

struct Context {
    base: RunConfig,
    overrides: Option<Value>,
    data_dir: Option<PathBuf>,
}

impl Context {
    fn new(cli: &Cli) -> Result<Context> {
        let mut base = RunConfig::default();
        if let Some(t) = cli.threads {
            base.threads = t;
        }
        if let Some(s) = cli.seed {
            base.seed = s;
        }
        let overrides = cli.config.as_deref().map(read_json::<Value>).transpose()?;
        Ok(Context { base, overrides, data_dir: cli.data_dir.clone() })
    }

    /// Flags applied by `set`, then the config file on top.
    fn effective(&self, set: impl FnOnce(&mut RunConfig)) -> Result<RunConfig> {
        let mut c = self.base.clone();
        set(&mut c);
        match &self.overrides {
            Some(o) => c.overlay(o),
            None => Ok(c),
        }
    }

    fn input(&self, path: &Path) -> PathBuf {
        match &self.data_dir {
            Some(dir) if path.is_relative() && !path.exists() => dir.join(path),
            _ => path.to_path_buf(),
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let ctx = Context::new(&cli)?;
    let threads = ctx.effective(|_| {})?.threads;
    match cli.command {
        Command::Run { input, format, out } => {
            let config = ctx.effective(|c| {
                if let Some(i) = input {
                    c.input = Some(i);
                }
                if let Some(f) = format {
                    c.format = f;
                }
                if let Some(o) = out {
                    c.out_dir = Some(o);
                }
            })?;
            let config = RunConfig { input: config.input.as_deref().map(|p| ctx.input(p)), ..config };
            let result = pipeline::run_pipeline(&config)?;
            print_json(&json!({ "outputs": result.outputs }))
        }
        command => evaluate::with_threads(threads, || dispatch(&ctx, command))?,
    }
}

fn dispatch(ctx: &Context, command: Command) -> Result<()> {
    match command {
        Command::Convert { format, input, out } => {
            let (corpus, summary) = pipeline::load_corpus(&ctx.input(&input), format)?;
            write_bytes(&out, &write_squad(&corpus))?;
            let counts = corpus.counts();
            print_json(&json!({ "counts": counts, "nq_filter": summary }))
        }
        Command::Segment { input, format, show_offsets } => segment(&ctx.input(&input), format, show_offsets),
        Command::Stats { task, out, markdown } => {
            let task = artifacts::read_task(&ctx.input(&task))?;
            let stats = compute_stats(&task.task)?;
            write_json(&out, &StatsFile { task_fingerprint: task.fingerprint().into(), stats: stats.clone() })?;
            if let Some(md) = markdown {
                write_bytes(&md, render_stats(std::slice::from_ref(&stats)).as_bytes())?;
            }
            Ok(())
        }
        Command::Index(cmd) => index(ctx, cmd),
        Command::Eval(args) => eval(ctx, args),
        Command::Compare { a, b, out, json: json_out } => {
            let read = |p: &Path| fs::read(p).map_err(Error::io(p)).and_then(|bytes| parse_report(&bytes));
            let cmp = compare(&read(&a)?, &read(&b)?)?;
            if let Some(p) = json_out {
                write_json(&p, &cmp)?;
            }
            match out {
                Some(p) => write_bytes(&p, cmp.markdown.as_bytes()),
                None => write_stdout(cmp.markdown.as_bytes()),
            }
        }
        Command::Run { .. } => unreachable!("handled before dispatch"),
    }
}

fn segment(input: &Path, format: SegmentInput, show_offsets: bool) -> Result<()> {
    let contexts: Vec<String> = match format {
        SegmentInput::Text => {
            fs::read_to_string(input).map_err(Error::io(input))?.lines().filter(|l| !l.trim().is_empty()).map(str::to_string).collect()
        }
        SegmentInput::Squad => {
            let raw = fs::read(input).map_err(Error::io(input))?;
            parse_squad(&raw, "segment")?.paragraphs().map(|p| p.context.clone()).collect()
        }
    };
    let splitter = RuleSplitter::default();
    let mut out = Vec::new();
    for (p, context) in contexts.iter().enumerate() {
        for (s, span) in splitter.split(context).iter().enumerate() {
            let line = if show_offsets {
                json!({ "paragraph": p, "sentence": s, "start": span.start, "end": span.end, "text": span.text })
            } else {
                json!({ "paragraph": p, "sentence": s, "text": span.text })
            };
            serde_json::to_writer(&mut out, &line).expect("json line");
            out.push(b'\n');
        }
    }
    write_stdout(&out)
}

fn index(ctx: &Context, cmd: IndexCommand) -> Result<()> {
    match cmd {
        IndexCommand::Build { corpus, format, out } => {
            let (corpus, _) = pipeline::load_corpus(&ctx.input(&corpus), format)?;
            let task = pipeline::build_task(&corpus)?;
            let manifest = artifacts::write_task(&out, &task)?;
            print_json(&manifest)
        }
        IndexCommand::Encode { task, encoder, dim, alpha, answers_in, questions_in, out } => {
            let config = ctx.effective(|c| {
                c.encoder.kind = encoder;
                c.encoder.dim = dim;
                c.encoder.alpha = alpha;
                c.encoder.answers = answers_in;
                c.encoder.questions = questions_in;
            })?;
            config.validate()?;
            let task_dir = ctx.input(&task);
            let task = artifacts::read_task(&task_dir)?;
            let out = out.unwrap_or(task_dir);
            let guard = StaleGuard::mark(&out, "index encode")?;
            let encoded = match config.encoder.kind {
                EncoderKind::HashTfidf => {
                    let ec = EncoderConfig { dim: config.encoder.dim, alpha: config.encoder.alpha, seed: config.seed };
                    ec.validate()?;
                    embed::encode_hashing(&task.task, ec)?
                }
                EncoderKind::External => {
                    let a = ctx.input(config.encoder.answers.as_deref().expect("validated"));
                    let q = ctx.input(config.encoder.questions.as_deref().expect("validated"));
                    embed::load_external(&task.task, &a, &q)?
                }
            };
            let (a, q) = embed::write_encoded(&out, task.fingerprint(), &encoded)?;
            guard.finish()?;
            print_json(&json!({ "answers": a, "questions": q, "encoder": encoded.encoder }))
        }
        IndexCommand::Bm25 { corpus, k1, b, out } => {
            let config = ctx.effective(|c| {
                c.bm25.k1 = k1;
                c.bm25.b = b;
            })?;
            let task = pipeline::load_task_or_corpus(&ctx.input(&corpus))?;
            let index = evaluate::build_bm25(&task.task, config.bm25.k1, config.bm25.b)?;
            write_json(&out, &Bm25File { task_fingerprint: task.fingerprint().into(), index })
        }
        IndexCommand::Ivf { task, answers_vec, lists, probes, max_iters, out } => {
            let config = ctx.effective(|c| {
                c.ann.lists = lists;
                c.ann.probes = probes;
                c.ann.max_iters = max_iters;
            })?;
            let task = artifacts::read_task(&ctx.input(&task))?;
            let answers = crate::vectors::read_matrix(&ctx.input(&answers_vec))?;
            embed::check_alignment(&task.task, embed::VectorRole::Answers, &answers)?;
            let ivf_config =
                IvfConfig { lists: config.ann.lists, probes: config.ann.probes, max_iters: config.ann.max_iters, seed: config.seed };
            let file = pipeline::build_ivf(task.fingerprint(), &answers, ivf_config)?;
            write_json(&out, &file)
        }
    }
}

fn eval(ctx: &Context, args: EvalArgs) -> Result<()> {
    let config = ctx.effective(|c| {
        c.ann.enabled = args.ann;
        c.ann.probes = args.probes;
        c.ann.lists = args.lists;
        if let Some(cutoffs) = &args.cutoffs {
            c.cutoffs = cutoffs.clone();
        }
    })?;
    config.validate()?;
    let task = artifacts::read_task(&ctx.input(&args.task))?;
    let mut entries = Vec::new();
    if let (Some(a), Some(q)) = (&args.answers_vec, &args.questions_vec) {
        let encoded = embed::read_encoded(&task.task, task.fingerprint(), &ctx.input(a), &ctx.input(q))?;
        if config.ann.enabled {
            let file = match &args.ivf_index {
                Some(p) => pipeline::read_ivf(&ctx.input(p), task.fingerprint(), &encoded.answers)?,
                None => {
                    let ivf_config = IvfConfig {
                        lists: config.ann.lists,
                        probes: config.ann.probes,
                        max_iters: config.ann.max_iters,
                        seed: config.seed,
                    };
                    pipeline::build_ivf(task.fingerprint(), &encoded.answers, ivf_config)?
                }
            };
            let probes = config.ann.probes.min(file.index.n_lists());
            entries.extend(pipeline::dense_entries(&task, &encoded, Some((&file, probes)), &config.cutoffs)?);
        } else {
            entries.extend(pipeline::dense_entries(&task, &encoded, None, &config.cutoffs)?);
        }
    } else if config.ann.enabled {
        return Err(Error::Config("--ann needs --answers-vec and --questions-vec".into()));
    }
    if let Some(p) = &args.bm25_index {
        let index = pipeline::read_bm25(&ctx.input(p), task.fingerprint())?;
        entries.push(pipeline::bm25_entry(&task, &index, &config.cutoffs)?);
    }
    if entries.is_empty() {
        return Err(Error::Config("nothing to evaluate: give vector files, a BM25 index, or both".into()));
    }
    write_bytes(&args.out, &to_json_bytes(&entries))?;
    if let Some(t) = &args.table {
        write_bytes(t, render_table(&entries).as_bytes())?;
    }
    Ok(())
}

fn print_json(value: &impl serde::Serialize) -> Result<()> {
    write_stdout(&to_json_bytes(value))
}

fn write_stdout(bytes: &[u8]) -> Result<()> {
    let mut out = BufWriter::new(io::stdout().lock());
    out.write_all(bytes).and_then(|()| out.flush()).map_err(Error::io("<stdout>"))
}

/// Machine-readable failure record printed on stderr.
pub fn error_json(err: &Error) -> Value {
    json!({ "error": { "code": err.code(), "message": err.to_string() } })
}
