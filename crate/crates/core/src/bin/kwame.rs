use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use kwame::config::ServiceConfig;
use kwame::corpus::{
    generate_triplets, ingest_lesson, load_qa_pairs, split_triplets, AnswerBank, QaSet,
    DEFAULT_TRAIN_FRACTION,
};
use kwame::eval_harness::{evaluate, parse_report, render_report, EvalConfig, EvalReport, ReportFormat};
use kwame::qa_engine::{
    AskRequest, EmbeddingProvider, Engine, HttpProvider, PrecomputedProvider,
};
use kwame::retrieval::{build_index, Backend, BuildOptions, IndexArtifact};
use kwame::Lang;

/// Exit status of `ask` when the engine declines to answer.
const EXIT_NOT_ANSWERED: u8 = 3;

#[derive(Parser)]
#[command(name = "kwame", version, about = "Bilingual course-material question answering")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Clean a lesson document and add its paragraphs to an answer bank.
    Ingest {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        lang: Lang,
        #[arg(long)]
        lesson: u32,
        #[arg(long)]
        out: PathBuf,
        /// Add to an existing bank at `--out` instead of replacing it.
        #[arg(long)]
        append: bool,
    },
    /// Mine (anchor, positive, negative) sentence triplets and split them.
    Triplets {
        #[arg(long)]
        bank: PathBuf,
        #[arg(long)]
        lang: Lang,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_TRAIN_FRACTION)]
        split: f64,
        #[arg(long)]
        out_train: PathBuf,
        #[arg(long)]
        out_test: PathBuf,
    },
    /// Build a search index for one language and write it as a cache file.
    Index {
        #[arg(long)]
        bank: PathBuf,
        #[arg(long)]
        lang: Lang,
        #[arg(long)]
        backend: Backend,
        #[command(flatten)]
        build: BuildArgs,
        /// Paragraph vectors (JSON lines of id and vector), dense only.
        #[arg(long)]
        vectors: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Answer one question. Exits with status 3 when no answer is given.
    Ask(AskArgs),
    /// Measure top-k accuracy and time per question over labelled questions.
    Eval(EvalArgs),
    /// Merge JSON evaluation reports and render them.
    Report {
        #[arg(long = "in", required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, default_value = "text")]
        format: ReportFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the HTTP service.
    Serve {
        /// Defaults to the file named by KWAME_CONFIG.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Args, Clone)]
struct BuildArgs {
    /// Hash embedding dimension.
    #[arg(long, default_value_t = 1024)]
    dim: usize,
    /// Hash embedding seed.
    #[arg(long = "hash-seed", default_value_t = 0)]
    hash_seed: u64,
}

#[derive(Args)]
struct AskArgs {
    question: String,
    #[arg(long, short)]
    k: Option<usize>,
    #[arg(long)]
    lang: Option<Lang>,
    #[arg(long)]
    lesson: Option<u32>,
    #[arg(long)]
    backend: Option<Backend>,
    #[arg(long)]
    threshold: Option<f64>,
    /// Service config to load the engine from.
    #[arg(long, conflicts_with = "bank")]
    config: Option<PathBuf>,
    #[arg(long)]
    bank: Option<PathBuf>,
    /// Index caches to load instead of building from the bank.
    #[arg(long)]
    index: Vec<PathBuf>,
    #[command(flatten)]
    build: BuildArgs,
    /// Embedding service URL for dense indexes.
    #[arg(long)]
    provider_url: Option<String>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    bank: PathBuf,
    #[arg(long, required = true)]
    qa: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "tfidf")]
    backends: Vec<Backend>,
    #[arg(long, value_delimiter = ',', default_value = "1,3,5")]
    k: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    langs: Option<Vec<Lang>>,
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    #[arg(long, default_value_t = 1)]
    warmup: usize,
    #[command(flatten)]
    build: BuildArgs,
    /// Paragraph vectors for the dense backend, as LANG=PATH.
    #[arg(long, value_parser = parse_lang_path)]
    vectors: Vec<(Lang, PathBuf)>,
    /// Precomputed question vectors (JSON lines of text and vector).
    #[arg(long)]
    question_vectors: Option<PathBuf>,
    #[arg(long)]
    provider_url: Option<String>,
    /// Rename a row, as BACKEND=LABEL.
    #[arg(long, value_parser = parse_label)]
    label: Vec<(String, String)>,
    #[arg(long, default_value = "text")]
    format: ReportFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_lang_path(s: &str) -> Result<(Lang, PathBuf), String> {
    let (lang, path) = s.split_once('=').ok_or("expected LANG=PATH")?;
    Ok((lang.parse().map_err(|e| format!("{e}"))?, PathBuf::from(path)))
}

fn parse_label(s: &str) -> Result<(String, String), String> {
    let (from, to) = s.split_once('=').ok_or("expected BACKEND=LABEL")?;
    Ok((from.to_string(), to.to_string()))
}

fn write_output(out: Option<&Path>, doc: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, doc).with_context(|| format!("writing {}", p.display())),
        None => match std::io::stdout().lock().write_all(doc.as_bytes()) {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
            _ => Ok(()),
        },
    }
}

fn http_provider(url: &str) -> Arc<dyn EmbeddingProvider> {
    Arc::new(HttpProvider::new(url, Duration::from_secs(30)))
}

fn engine_from_args(args: &AskArgs) -> Result<Engine> {
    if let Some(path) = &args.config {
        let cfg = ServiceConfig::load(path)?;
        return Ok(cfg.build_engine()?);
    }
    let Some(bank_path) = &args.bank else {
        bail!("either --config or --bank is required");
    };
    let bank = AnswerBank::load(bank_path)?;
    let mut builder = Engine::builder(bank.clone());
    if args.index.is_empty() {
        let backend = args.backend.unwrap_or(Backend::Tfidf);
        let opts = BuildOptions {
            dim: args.build.dim,
            seed: args.build.hash_seed,
            vectors: None,
        };
        builder = builder.default_backend(backend).build_all(backend, &opts)?;
    } else {
        let mut default = None;
        for path in &args.index {
            let artifact = IndexArtifact::load(path, Some(&bank))
                .with_context(|| format!("loading {}", path.display()))?;
            default.get_or_insert(artifact.backend());
            builder = builder.index(artifact)?;
        }
        builder = builder.default_backend(args.backend.or(default).unwrap_or(Backend::Tfidf));
    }
    if let Some(url) = &args.provider_url {
        builder = builder.provider(http_provider(url));
    }
    Ok(builder.build())
}

fn run_ask(args: AskArgs) -> Result<ExitCode> {
    let engine = engine_from_args(&args)?;
    let req = AskRequest {
        top_k: args.k,
        lang_override: args.lang,
        lesson: args.lesson,
        threshold: args.threshold,
        backend: args.backend,
        ..AskRequest::new(&args.question)
    };
    let resp = engine.ask(&req)?;
    let mut doc = String::new();
    if args.json {
        doc = serde_json::to_string_pretty(&resp)? + "\n";
    } else {
        writeln!(doc, "language: {}", resp.lang_detected.display_name())?;
        if let Some(m) = &resp.message {
            writeln!(doc, "{m}")?;
        }
        for a in &resp.answers {
            writeln!(doc, "\n#{} {} (score {:.3})", a.rank, a.id, a.score)?;
            writeln!(doc, "{}", a.text)?;
            if !a.figure_refs.is_empty() {
                writeln!(doc, "see: {}", a.figure_refs.join(", "))?;
            }
        }
    }
    write_output(None, &doc)?;
    Ok(if resp.answered {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_NOT_ANSWERED)
    })
}

fn run_eval(args: EvalArgs) -> Result<()> {
    let bank = AnswerBank::load(&args.bank)?;
    let mut qa = QaSet::default();
    for path in &args.qa {
        qa = qa.merge(load_qa_pairs(path, &bank).with_context(|| format!("loading {}", path.display()))?)?;
    }
    let langs: Vec<Lang> = match args.langs {
        Some(l) => l,
        None => {
            let mut l: Vec<Lang> = qa.pairs.iter().map(|p| p.lang).collect();
            l.sort();
            l.dedup();
            l
        }
    };
    if langs.is_empty() {
        bail!("no questions to evaluate");
    }

    let vectors: BTreeMap<Lang, PathBuf> = args.vectors.into_iter().collect();
    let mut builder = Engine::builder(bank.clone());
    for &backend in &args.backends {
        for &lang in &langs {
            let opts = BuildOptions {
                dim: args.build.dim,
                seed: args.build.hash_seed,
                vectors: vectors.get(&lang).map(PathBuf::as_path),
            };
            if backend == Backend::Dense && opts.vectors.is_none() {
                bail!("dense backend needs --vectors {lang}=PATH");
            }
            builder = builder.index(build_index(&bank, lang, backend, &opts)?)?;
        }
    }
    if let Some(path) = &args.question_vectors {
        builder = builder.provider(Arc::new(PrecomputedProvider::load(path)?));
    } else if let Some(url) = &args.provider_url {
        builder = builder.provider(http_provider(url));
    } else if args.backends.contains(&Backend::Dense) {
        bail!("dense backend needs --question-vectors or --provider-url");
    }
    let engine = builder.build();

    let config = EvalConfig {
        backends: args.backends,
        languages: langs,
        k_values: args.k,
        timing_repeats: args.repeats,
        warmup_queries: args.warmup,
        ..EvalConfig::default()
    };
    let mut report = evaluate(&qa, &engine, &config)?;
    for (from, to) in &args.label {
        report.relabel(from, to);
    }
    write_output(args.out.as_deref(), &render_report(&report, args.format))
}

fn run() -> Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Ingest {
            input,
            lang,
            lesson,
            out,
            append,
        } => {
            let raw = std::fs::read(&input).with_context(|| format!("reading {}", input.display()))?;
            let paragraphs = ingest_lesson(&raw, lang, lesson)?;
            let n = paragraphs.len();
            let bank = if append && out.exists() {
                AnswerBank::load(&out)?.extend(paragraphs)?
            } else {
                AnswerBank::new(paragraphs)?
            };
            bank.save(&out)?;
            eprintln!("{n} paragraphs from {}; bank now holds {}", input.display(), bank.len());
        }
        Command::Triplets {
            bank,
            lang,
            seed,
            split,
            out_train,
            out_test,
        } => {
            let bank = AnswerBank::load(&bank)?;
            let all = generate_triplets(&bank, lang, seed)?;
            let (train, test) = split_triplets(&all, split, seed)?;
            train.save(&out_train)?;
            test.save(&out_test)?;
            eprintln!("{} triplets: {} train, {} test", all.len(), train.len(), test.len());
        }
        Command::Index {
            bank,
            lang,
            backend,
            build,
            vectors,
            out,
        } => {
            let bank = AnswerBank::load(&bank)?;
            let opts = BuildOptions {
                dim: build.dim,
                seed: build.hash_seed,
                vectors: vectors.as_deref(),
            };
            let artifact = build_index(&bank, lang, backend, &opts)?;
            artifact.save(&out)?;
            eprintln!(
                "{backend} index for {lang}: {} rows, dim {}",
                artifact.index.len(),
                artifact.index.dim()
            );
        }
        Command::Ask(args) => return run_ask(args),
        Command::Eval(args) => run_eval(args)?,
        Command::Report { inputs, format, out } => {
            let mut merged: Option<EvalReport> = None;
            for path in &inputs {
                let doc = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                let report = parse_report(&doc, ReportFormat::Json)?;
                merged = Some(match merged {
                    Some(m) => m.merge(report)?,
                    None => report,
                });
            }
            let report = merged.expect("clap requires at least one input");
            write_output(out.as_deref(), &render_report(&report, format))?;
        }
        Command::Serve { config } => {
            let cfg = ServiceConfig::load_with_env(config.as_deref())?;
            tokio::runtime::Runtime::new()?.block_on(kwame::service::serve(cfg))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
        )
        .with_writer(std::io::stderr)
        .init();
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
