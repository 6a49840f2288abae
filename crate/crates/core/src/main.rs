//! Command-line front end: ingest, graph, genbench, index, run, scale, eval,
//! report. All outputs are written atomically (temp file + rename) and every
//! subcommand prints a one-line summary.

use std::collections::BTreeMap;
use std::fs::File;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use scholarbench::agent::{run_agent, write_transcripts, RunConfig};
use scholarbench::benchgen::{
    analyze_shared_citations, emit_ablation_variants, gen_open_ended, gen_short_form,
    read_queries, write_queries, BenchmarkQuery, CitationContext,
};
use scholarbench::config::HarnessConfig;
use scholarbench::corpus::{ingest_corpus, write_corpus, write_rejections, Corpus};
use scholarbench::error::{HarnessError, Result};
use scholarbench::graph::{seed_pairs, write_edges, DEFAULT_OVERLAP_THRESHOLD};
use scholarbench::llm::{AutoStubLlm, HttpLlmClient, LlmClient, ScriptedLlm};
use scholarbench::metrics::RefCountMode;
use scholarbench::prompts::PromptSet;
use scholarbench::report::{evaluate, EvaluationReport, ReportFormat};
use scholarbench::retrieval::embed::HashEmbedder;
use scholarbench::retrieval::lexical::{Bm25Params, FieldPolicy, LexicalIndex};
use scholarbench::retrieval::vector::{build_vector_index, load_vector_file, VectorSearchTool};
use scholarbench::retrieval::SearchTool;
use scholarbench::scaling::scale_corpus;
use scholarbench::Score;

#[derive(Parser)]
#[command(name = "scholarbench", about = "Citation-graph benchmark harness for scientific-literature search agents", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate and normalize a line-delimited corpus file.
    Ingest(IngestArgs),
    /// Compute reference-overlap edges and seed pairs.
    Graph(GraphArgs),
    /// Generate benchmark queries from seed pairs.
    Genbench(GenbenchArgs),
    /// Build a search index over a corpus.
    Index(IndexArgs),
    /// Run the search agent over a benchmark.
    Run(RunArgs),
    /// Augment a corpus with metadata blocks and keywords.
    Scale(ScaleArgs),
    /// Score transcripts against a benchmark.
    Eval(EvalArgs),
    /// Render a stored evaluation report.
    Report(ReportArgs),
}

#[derive(Args)]
struct IngestArgs {
    /// Input corpus file (one JSON document per line).
    #[arg(long)]
    input: PathBuf,
    /// Normalized corpus output.
    #[arg(long)]
    out: PathBuf,
    /// Rejection report output.
    #[arg(long)]
    rejects: Option<PathBuf>,
}

#[derive(Args)]
struct GraphArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Minimum shared references for an edge.
    #[arg(long, default_value_t = DEFAULT_OVERLAP_THRESHOLD)]
    threshold: usize,
    /// Edge list output.
    #[arg(long)]
    out: PathBuf,
    /// Seed-pair list output.
    #[arg(long)]
    pairs: Option<PathBuf>,
}

#[derive(Args)]
struct GenbenchArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_OVERLAP_THRESHOLD)]
    threshold: usize,
    /// "auto" for the rule-based stub or a path to a scripted response file.
    #[arg(long)]
    stub: Option<String>,
    /// Config file supplying an LLM endpoint when no stub is used.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Stop after this many seed pairs.
    #[arg(long)]
    max_pairs: Option<usize>,
    /// Also emit the three single-clause-ablated variants per full query.
    #[arg(long)]
    ablations: bool,
    /// Reject seeds published before this year.
    #[arg(long)]
    min_seed_year: Option<i32>,
    /// Prompt template directory overriding the built-ins.
    #[arg(long)]
    prompt_dir: Option<PathBuf>,
}

#[derive(Args)]
struct IndexArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// "lexical" or "vector".
    #[arg(long, default_value = "lexical")]
    kind: String,
    #[arg(long, default_value_t = 1.2)]
    k1: f64,
    #[arg(long, default_value_t = 0.75)]
    b: f64,
    /// Embedding dimension for vector indexes.
    #[arg(long, default_value_t = 256)]
    dimension: usize,
    /// Precomputed vector file ("doc_id v1 .. vd" per line) instead of the
    /// hash embedder.
    #[arg(long)]
    vectors: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    index: PathBuf,
    #[arg(long)]
    bench: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    stub: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Hits per search (overrides config).
    #[arg(long)]
    k: Option<usize>,
    /// Tool-call budget per query (overrides config).
    #[arg(long)]
    max_iter: Option<usize>,
}

#[derive(Args)]
struct ScaleArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Per-document augmentation report.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    stub: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    prompt_dir: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    bench: PathBuf,
    #[arg(long)]
    transcripts: PathBuf,
    #[arg(long)]
    corpus: PathBuf,
    /// Evaluation report output (JSON).
    #[arg(long)]
    out: PathBuf,
    /// "cited_only" or "retrieved_union".
    #[arg(long, default_value = "cited_only")]
    ref_mode: String,
}

#[derive(Args)]
struct ReportArgs {
    /// Evaluation report produced by `eval`.
    #[arg(long)]
    eval: PathBuf,
    /// "table" or "lines".
    #[arg(long, default_value = "table")]
    format: String,
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = match dir {
        Some(dir) => tempfile::NamedTempFile::new_in(dir)?,
        None => tempfile::NamedTempFile::new_in(".")?,
    };
    use std::io::Write as _;
    tmp.write_all(bytes)?;
    tmp.persist(path)
        .map_err(|e| HarnessError::Io(e.error))?;
    Ok(())
}

fn load_corpus(path: &Path) -> Result<Corpus> {
    let outcome = ingest_corpus(path)?;
    if !outcome.rejections.is_empty() {
        return Err(HarnessError::Corpus(format!(
            "{} invalid records in {} (run ingest for the report)",
            outcome.rejections.len(),
            path.display()
        )));
    }
    Ok(outcome.corpus)
}

fn make_llm(stub: Option<&str>, config: Option<&Path>) -> Result<Box<dyn LlmClient>> {
    match stub {
        Some("auto") => Ok(Box::new(AutoStubLlm)),
        Some(path) => Ok(Box::new(ScriptedLlm::from_file(Path::new(path))?)),
        None => {
            let config = match config {
                Some(path) => HarnessConfig::load(path)?,
                None => HarnessConfig::default(),
            };
            if let Some(path) = &config.llm.stub_path {
                return Ok(Box::new(ScriptedLlm::from_file(path)?));
            }
            let endpoint = config.llm.endpoint.clone().ok_or_else(|| {
                HarnessError::Config(
                    "no LLM configured: pass --stub or set llm.endpoint/llm.stub_path".into(),
                )
            })?;
            let credential = config.llm.credential()?;
            Ok(Box::new(HttpLlmClient::new(
                endpoint,
                config.llm.model.clone(),
                credential,
            )))
        }
    }
}

fn load_prompts(dir: Option<&Path>) -> Result<PromptSet> {
    match dir {
        Some(dir) => PromptSet::load_dir(dir),
        None => Ok(PromptSet::builtin()),
    }
}

/// Minimal citing contexts derived from the corpus itself, for pipelines
/// without external citation-context data.
fn derive_contexts(corpus: &Corpus, seed: &str, shared_refs: &[String]) -> Vec<CitationContext> {
    let seed_doc = corpus.get(seed);
    let raw_titles: BTreeMap<&str, &str> = seed_doc
        .map(|d| {
            d.references
                .iter()
                .map(|r| (r.norm_key.as_str(), r.raw_title.as_str()))
                .collect()
        })
        .unwrap_or_default();
    shared_refs
        .iter()
        .map(|key| {
            let raw = raw_titles.get(key.as_str()).copied().unwrap_or(key.as_str());
            CitationContext {
                norm_key: key.clone(),
                shared_title: raw.to_string(),
                shared_authors: "unknown".into(),
                seed_contexts: vec![format!("cited as \"{raw}\" in the reference list")],
                seed_intents: "background".into(),
                partner_contexts: vec![format!("cited as \"{raw}\" in the reference list")],
                partner_intents: "background".into(),
            }
        })
        .collect()
}

fn cmd_ingest(args: IngestArgs) -> Result<()> {
    let outcome = ingest_corpus(&args.input)?;
    let mut buf = Vec::new();
    write_corpus(&outcome.corpus, &mut buf)?;
    write_atomic(&args.out, &buf)?;
    if let Some(rejects) = &args.rejects {
        let mut buf = Vec::new();
        write_rejections(&outcome.rejections, &mut buf)?;
        write_atomic(rejects, &buf)?;
    }
    println!(
        "ingest: accepted={} rejected={} out={}",
        outcome.corpus.len(),
        outcome.rejections.len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_graph(args: GraphArgs) -> Result<()> {
    let corpus = load_corpus(&args.corpus)?;
    let edges = scholarbench::graph::related_pairs(&corpus, args.threshold)?;
    let mut buf = Vec::new();
    write_edges(&edges, &mut buf)?;
    write_atomic(&args.out, &buf)?;
    let pairs = seed_pairs(&corpus, args.threshold)?;
    if let Some(path) = &args.pairs {
        let mut buf = Vec::new();
        for pair in &pairs {
            serde_json::to_writer(&mut buf, pair)?;
            buf.push(b'\n');
        }
        write_atomic(path, &buf)?;
    }
    println!(
        "graph: docs={} edges={} seed_pairs={} threshold={}",
        corpus.len(),
        edges.len(),
        pairs.len(),
        args.threshold
    );
    Ok(())
}

fn cmd_genbench(args: GenbenchArgs) -> Result<()> {
    let corpus = load_corpus(&args.corpus)?;
    let llm = make_llm(args.stub.as_deref(), args.config.as_deref())?;
    let prompts = load_prompts(args.prompt_dir.as_deref())?;
    let pairs = seed_pairs(&corpus, args.threshold)?;
    let limit = args.max_pairs.unwrap_or(usize::MAX);

    let mut queries: Vec<BenchmarkQuery> = Vec::new();
    let mut skipped = 0usize;
    for pair in pairs.iter().take(limit) {
        let (Some(seed_doc), Some(partner_doc)) = (corpus.get(&pair.seed), corpus.get(&pair.partner)) else {
            skipped += 1;
            continue;
        };
        let contexts = derive_contexts(&corpus, &pair.seed, &pair.edge.shared_refs);
        let result = analyze_shared_citations(pair, seed_doc, partner_doc, &contexts, llm.as_ref(), &prompts)
            .and_then(|analysis| {
                let sf = gen_short_form(
                    pair,
                    seed_doc,
                    partner_doc,
                    None,
                    &analysis,
                    llm.as_ref(),
                    &prompts,
                    args.min_seed_year,
                )?;
                let oe = gen_open_ended(pair, &corpus, &analysis, &contexts, llm.as_ref(), &prompts)?;
                Ok((sf, oe))
            });
        match result {
            Ok((sf, oe)) => {
                // Two-clause queries have no ablation set; skip them quietly.
                if args.ablations {
                    if let Ok(variants) = emit_ablation_variants(&sf) {
                        queries.extend(variants);
                    }
                }
                queries.push(sf);
                queries.push(oe);
            }
            Err(_) => skipped += 1,
        }
    }
    if queries.is_empty() {
        return Err(HarnessError::Generation(
            "no queries generated (no qualifying seed pairs?)".into(),
        ));
    }
    let mut buf = Vec::new();
    write_queries(&queries, &mut buf)?;
    write_atomic(&args.out, &buf)?;
    println!(
        "genbench: pairs={} queries={} skipped_pairs={} out={}",
        pairs.len().min(limit),
        queries.len(),
        skipped,
        args.out.display()
    );
    Ok(())
}

fn cmd_index(args: IndexArgs) -> Result<()> {
    let corpus = load_corpus(&args.corpus)?;
    match args.kind.as_str() {
        "lexical" => {
            let params = Bm25Params::<Score> {
                k1: args.k1,
                b: args.b,
            };
            let index = LexicalIndex::build(&corpus, params, FieldPolicy::FullText)?;
            let mut buf = Vec::new();
            index.save(&mut buf)?;
            write_atomic(&args.out, &buf)?;
            println!(
                "index: kind=lexical docs={} out={}",
                corpus.len(),
                args.out.display()
            );
        }
        "vector" => {
            let (index, skipped) = match &args.vectors {
                Some(path) => {
                    let file = File::open(path)?;
                    load_vector_file::<Score, _>(file, &corpus, args.dimension)?
                }
                None => {
                    let embedder = HashEmbedder::new(args.dimension);
                    build_vector_index::<Score>(&corpus, &embedder, args.dimension)?
                }
            };
            let mut buf = Vec::new();
            index.save(&mut buf)?;
            write_atomic(&args.out, &buf)?;
            println!(
                "index: kind=vector docs={} skipped={} out={}",
                index.len(),
                skipped.len(),
                args.out.display()
            );
        }
        other => {
            return Err(HarnessError::Config(format!(
                "unknown index kind {other:?}"
            )))
        }
    }
    Ok(())
}

fn open_search_tool(path: &Path, dimension: usize) -> Result<Box<dyn SearchTool<Score>>> {
    // A lexical index file starts with a JSON object carrying postings; try
    // lexical first, then vector.
    let file = File::open(path)?;
    if let Ok(index) = LexicalIndex::<Score>::load(file) {
        return Ok(Box::new(index));
    }
    let file = File::open(path)?;
    let index = scholarbench::retrieval::vector::VectorIndex::<Score>::load(file)?;
    Ok(Box::new(VectorSearchTool {
        index,
        embedder: Box::new(HashEmbedder::new(dimension)),
    }))
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let config = match &args.config {
        Some(path) => HarnessConfig::load(path)?,
        None => HarnessConfig::default(),
    };
    let corpus = load_corpus(&args.corpus)?;
    let queries = read_queries(File::open(&args.bench)?)?;
    let llm = make_llm(args.stub.as_deref(), args.config.as_deref())?;
    let run_config = RunConfig {
        max_iterations: args.max_iter.unwrap_or(config.run.max_iterations),
        k: args.k.unwrap_or(config.search.k),
        evidence_char_budget: config.run.evidence_char_budget,
        deterministic: config.run.deterministic,
    };
    let search = open_search_tool(&args.index, 256)?;

    let mut transcripts = Vec::new();
    let mut failed = 0usize;
    for query in &queries {
        let t = run_agent(
            &query.query_id,
            &query.text,
            search.as_ref(),
            llm.as_ref(),
            &corpus,
            &run_config,
        )?;
        if t.status == scholarbench::agent::RunStatus::Failed {
            failed += 1;
        }
        transcripts.push(t);
    }
    let mut buf = Vec::new();
    write_transcripts(&transcripts, &mut buf)?;
    write_atomic(&args.out, &buf)?;
    println!(
        "run: queries={} failed={} k={} max_iter={} out={}",
        queries.len(),
        failed,
        run_config.k,
        run_config.max_iterations,
        args.out.display()
    );
    Ok(())
}

fn cmd_scale(args: ScaleArgs) -> Result<()> {
    let corpus = load_corpus(&args.corpus)?;
    let llm = make_llm(args.stub.as_deref(), args.config.as_deref())?;
    let prompts = load_prompts(args.prompt_dir.as_deref())?;
    let (scaled, records) = scale_corpus(&corpus, llm.as_ref(), &prompts)?;
    let mut buf = Vec::new();
    write_corpus(&scaled, &mut buf)?;
    write_atomic(&args.out, &buf)?;
    if let Some(path) = &args.report {
        let mut buf = Vec::new();
        for record in &records {
            serde_json::to_writer(&mut buf, record)?;
            buf.push(b'\n');
        }
        write_atomic(path, &buf)?;
    }
    let full = records
        .iter()
        .filter(|r| r.status == scholarbench::scaling::AugmentStatus::Full)
        .count();
    println!(
        "scale: docs={} full={} metadata_only={} out={}",
        records.len(),
        full,
        records.len() - full,
        args.out.display()
    );
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let corpus = load_corpus(&args.corpus)?;
    let queries = read_queries(File::open(&args.bench)?)?;
    let transcripts = scholarbench::agent::read_transcripts(File::open(&args.transcripts)?)?;
    let ref_mode = match args.ref_mode.as_str() {
        "cited_only" => RefCountMode::CitedOnly,
        "retrieved_union" => RefCountMode::RetrievedUnion,
        other => {
            return Err(HarnessError::Config(format!(
                "unknown ref mode {other:?} (expected cited_only or retrieved_union)"
            )))
        }
    };
    let report = evaluate(&queries, &transcripts, &corpus, ref_mode)?;
    write_atomic(&args.out, &serde_json::to_vec_pretty(&report)?)?;
    let sf = report
        .short_form
        .as_ref()
        .map(|a| format!("{:.3}", a.avg_perf))
        .unwrap_or_else(|| "n/a".into());
    let oe = report
        .open_ended
        .as_ref()
        .map(|a| format!("{:.3}", a.avg_perf))
        .unwrap_or_else(|| "n/a".into());
    println!(
        "eval: queries={} short_form_avg={sf} open_ended_avg={oe} out={}",
        report.rows.len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_report(args: ReportArgs) -> Result<()> {
    let report: EvaluationReport = serde_json::from_reader(File::open(&args.eval)?)?;
    let format: ReportFormat = args.format.parse()?;
    print!("{}", report.render(format));
    println!("report: rows={} format={}", report.rows.len(), args.format);
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ingest(args) => cmd_ingest(args),
        Command::Graph(args) => cmd_graph(args),
        Command::Genbench(args) => cmd_genbench(args),
        Command::Index(args) => cmd_index(args),
        Command::Run(args) => cmd_run(args),
        Command::Scale(args) => cmd_scale(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Report(args) => cmd_report(args),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
