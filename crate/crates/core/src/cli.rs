//! Command-line front end. Exit codes: 0 success, 1 partial (some mentions
//! or cases failed), 2 invalid input or configuration.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::agents::{
    Agents, CallLog, CompletionProvider, HttpCompletionProvider, MockFixture, MockProvider, PromptSet,
};
use crate::eval::{
    adjudicate_mismatch, compute_metrics, export_comparison, label_distribution, mismatches, GoldAnnotation, Mismatch,
    RunRecord,
};
use crate::ingest::{ingest, load_dump, write_dump, EntityRecord, IngestConfig};
use crate::lexical::{Bm25Params, LexicalIndex};
use crate::pipeline::{link_batch, parse_results, serialize_result, PipelineConfig};
use crate::provider::HttpSettings;
use crate::retrieval::{Indexes, Mention};
use crate::vector::{EmbeddingProvider, FallbackEmbedder, HttpEmbedder, VectorIndex, DEFAULT_DIMENSION};

pub const LEXICAL_FILE: &str = "lexical.json";
pub const VECTOR_FILE: &str = "vectors.bin";

#[derive(Debug, Parser)]
#[command(name = "ontolink", version, about = "Link food mentions to ontology concepts")]
pub struct Cli {
    /// Application config (TOML). Command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse an N-Triples ontology and write the concept dump.
    Ingest(IngestArgs),
    /// Build the lexical and vector indexes for a dump.
    Index(IndexArgs),
    /// Link mentions and write JSON-lines results.
    Link(LinkArgs),
    /// Compute accuracy metrics for a results file against gold annotations.
    Eval(EvalArgs),
    /// Classify prediction/gold disagreements.
    Adjudicate(AdjudicateArgs),
    /// Align two result files for side-by-side review.
    CompareExport(CompareArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// N-Triples file.
    pub ontology: Option<PathBuf>,
    /// Dump output path.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Prefix/relation/pattern config (TOML or JSON).
    #[arg(long, value_name = "FILE")]
    pub ingest_config: Option<PathBuf>,
    /// Write the ingest report here instead of stderr.
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    pub dump: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub embedder: Option<EmbedderKind>,
    #[arg(long)]
    pub dimension: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ProviderArgs {
    #[arg(long, value_enum)]
    pub provider: Option<ProviderKind>,
    /// JSON fixture for the mock provider.
    #[arg(long, value_name = "FILE")]
    pub mock_fixture: Option<PathBuf>,
    /// Directory with prompt template overrides.
    #[arg(long, value_name = "DIR")]
    pub prompts: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LinkArgs {
    #[arg(long)]
    pub dump: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    pub index_dir: Option<PathBuf>,
    /// A single mention.
    #[arg(long, conflicts_with = "mentions")]
    pub mention: Option<String>,
    #[arg(long, requires = "mention")]
    pub context: Option<String>,
    /// JSON array of {"mention", "context"} objects.
    #[arg(long, value_name = "FILE")]
    pub mentions: Option<PathBuf>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub k_lex: Option<usize>,
    #[arg(long)]
    pub k_sem: Option<usize>,
    #[arg(long)]
    pub k_tot: Option<usize>,
    #[arg(long)]
    pub max_hops: Option<u32>,
    #[command(flatten)]
    pub provider: ProviderArgs,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Write the per-mention agent call log (prompts, responses, timings).
    #[arg(long, value_name = "FILE")]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// JSON-lines results from `link`.
    pub results: PathBuf,
    #[arg(long)]
    pub gold: PathBuf,
    /// Threshold the results were produced with, copied into the report.
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Write final predictions that miss the gold set, for `adjudicate`.
    #[arg(long, value_name = "FILE")]
    pub mismatches_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AdjudicateArgs {
    /// JSON array of {"query", "chosen", "gold"} cases.
    pub mismatches: PathBuf,
    #[arg(long)]
    pub dump: Option<PathBuf>,
    #[command(flatten)]
    pub provider: ProviderArgs,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Write the label distribution here (JSON).
    #[arg(long, value_name = "FILE")]
    pub distribution_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    pub run_a: PathBuf,
    pub run_b: PathBuf,
    #[arg(long)]
    pub dump: Option<PathBuf>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    #[default]
    Mock,
    Http,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbedderKind {
    #[default]
    Fallback,
    Http,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathsConfig {
    pub ontology: Option<PathBuf>,
    pub dump: Option<PathBuf>,
    pub index_dir: Option<PathBuf>,
    pub prompts_dir: Option<PathBuf>,
    pub ingest_config: Option<PathBuf>,
    pub mock_fixture: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProviderConfig {
    pub kind: ProviderKind,
    pub http: Option<HttpSettings>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmbedderConfig {
    pub kind: EmbedderKind,
    pub dimension: usize,
    pub http: Option<HttpSettings>,
}

impl Default for EmbedderConfig {
    fn default() -> Self {
        Self {
            kind: EmbedderKind::Fallback,
            dimension: DEFAULT_DIMENSION,
            http: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AppConfig {
    pub paths: PathsConfig,
    pub pipeline: PipelineConfig,
    pub provider: ProviderConfig,
    pub embedder: EmbedderConfig,
}

impl AppConfig {
    /// Parse a TOML config; relative paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: AppConfig = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let p = &mut cfg.paths;
        for slot in [
            &mut p.ontology,
            &mut p.dump,
            &mut p.index_dir,
            &mut p.prompts_dir,
            &mut p.ingest_config,
            &mut p.mock_fixture,
        ] {
            if let Some(rel) = slot.as_ref().filter(|r| r.is_relative()) {
                *slot = Some(base.join(rel));
            }
        }
        cfg.pipeline.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MentionInput {
    mention: String,
    #[serde(default)]
    context: Option<String>,
}

enum Outcome {
    Complete,
    Partial,
}

/// Parse `args` (program name first) and run; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli) {
        Ok(Outcome::Complete) => 0,
        Ok(Outcome::Partial) => 1,
        Err(e) => {
            eprintln!("error: {e:#}");
            2
        }
    }
}

fn execute(cli: Cli) -> Result<Outcome> {
    let app = match &cli.config {
        Some(p) => AppConfig::load(p)?,
        None => AppConfig::default(),
    };
    match cli.command {
        Command::Ingest(a) => cmd_ingest(&app, a),
        Command::Index(a) => cmd_index(&app, a),
        Command::Link(a) => cmd_link(&app, a),
        Command::Eval(a) => cmd_eval(a),
        Command::Adjudicate(a) => cmd_adjudicate(&app, a),
        Command::CompareExport(a) => cmd_compare_export(&app, a),
    }
}

fn pick(flag: Option<PathBuf>, configured: &Option<PathBuf>, what: &str) -> Result<PathBuf> {
    flag.or_else(|| configured.clone())
        .ok_or_else(|| anyhow!("no {what} given (flag or config)"))
}

fn existing(path: PathBuf) -> Result<PathBuf> {
    if !path.exists() {
        bail!("{} does not exist", path.display());
    }
    Ok(path)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn pretty<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn read_dump(path: &Path) -> Result<Vec<EntityRecord>> {
    let file = fs::File::open(path).with_context(|| format!("opening dump {}", path.display()))?;
    load_dump(BufReader::new(file)).with_context(|| format!("loading dump {}", path.display()))
}

fn cmd_ingest(app: &AppConfig, a: IngestArgs) -> Result<Outcome> {
    let source = existing(pick(a.ontology, &app.paths.ontology, "ontology file")?)?;
    let out = pick(a.out, &app.paths.dump, "dump output path")?;
    let config = match a.ingest_config.or_else(|| app.paths.ingest_config.clone()) {
        Some(p) => IngestConfig::load(&p)?,
        None => IngestConfig::foodon_default(),
    };
    let file = fs::File::open(&source).with_context(|| format!("opening {}", source.display()))?;
    let (records, report) =
        ingest(BufReader::new(file), &config).with_context(|| format!("parsing {}", source.display()))?;
    let mut buf = Vec::new();
    write_dump(&records, &mut buf)?;
    fs::write(&out, buf).with_context(|| format!("writing {}", out.display()))?;
    let report = pretty(&report)?;
    match a.report {
        Some(p) => fs::write(&p, report).with_context(|| format!("writing {}", p.display()))?,
        None => eprint!("{report}"),
    }
    log::info!("wrote {} records to {}", records.len(), out.display());
    Ok(Outcome::Complete)
}

fn make_embedder(cfg: &EmbedderConfig, kind: EmbedderKind, dimension: usize) -> Result<Box<dyn EmbeddingProvider>> {
    Ok(match kind {
        EmbedderKind::Fallback => Box::new(FallbackEmbedder::new(dimension)),
        EmbedderKind::Http => {
            let settings = cfg
                .http
                .clone()
                .ok_or_else(|| anyhow!("embedder kind http needs an [embedder.http] config section"))?;
            Box::new(HttpEmbedder::new(settings, dimension)?)
        }
    })
}

fn cmd_index(app: &AppConfig, a: IndexArgs) -> Result<Outcome> {
    let dump = existing(pick(a.dump, &app.paths.dump, "dump")?)?;
    let out_dir = pick(a.out_dir, &app.paths.index_dir, "index directory")?;
    let dimension = a.dimension.unwrap_or(app.embedder.dimension);
    if dimension == 0 {
        bail!("dimension must be positive");
    }
    let embedder = make_embedder(&app.embedder, a.embedder.unwrap_or(app.embedder.kind), dimension)?;
    let records = read_dump(&dump)?;
    let lexical = LexicalIndex::build(&records, Bm25Params::default())?;
    let vector = VectorIndex::build(&records, embedder.as_ref())?;
    fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    lexical.save(&out_dir.join(LEXICAL_FILE))?;
    vector.save(&out_dir.join(VECTOR_FILE))?;
    log::info!("indexed {} records into {}", records.len(), out_dir.display());
    Ok(Outcome::Complete)
}

fn load_indexes(app: &AppConfig, dump: Option<PathBuf>, index_dir: Option<PathBuf>) -> Result<Indexes> {
    let dump = existing(pick(dump, &app.paths.dump, "dump")?)?;
    let dir = existing(pick(index_dir, &app.paths.index_dir, "index directory")?)?;
    let records = read_dump(&dump)?;
    let lexical = LexicalIndex::load(&dir.join(LEXICAL_FILE))?;
    let vector = VectorIndex::load(&dir.join(VECTOR_FILE))?;
    // The query embedder must match whatever built the vector index.
    let kind = if vector.provider_name() == FallbackEmbedder::NAME {
        EmbedderKind::Fallback
    } else {
        EmbedderKind::Http
    };
    let embedder = make_embedder(&app.embedder, kind, vector.dimension())?;
    Ok(Indexes::from_parts(records, lexical, vector, embedder)?)
}

fn make_provider(app: &AppConfig, a: &ProviderArgs) -> Result<Box<dyn CompletionProvider>> {
    Ok(match a.provider.unwrap_or(app.provider.kind) {
        ProviderKind::Mock => {
            let fixture = match a.mock_fixture.clone().or_else(|| app.paths.mock_fixture.clone()) {
                Some(p) => MockFixture::load(&p)?,
                None => MockFixture::default(),
            };
            Box::new(MockProvider::with_fixture(fixture))
        }
        ProviderKind::Http => {
            let settings = app
                .provider
                .http
                .clone()
                .ok_or_else(|| anyhow!("provider kind http needs a [provider.http] config section"))?;
            Box::new(HttpCompletionProvider::new(settings)?)
        }
    })
}

fn load_prompts(app: &AppConfig, a: &ProviderArgs) -> Result<PromptSet> {
    Ok(match a.prompts.clone().or_else(|| app.paths.prompts_dir.clone()) {
        Some(dir) => PromptSet::load_dir(&existing(dir)?)?,
        None => PromptSet::builtin(),
    })
}

fn cmd_link(app: &AppConfig, a: LinkArgs) -> Result<Outcome> {
    let mut config = app.pipeline;
    if let Some(t) = a.tau {
        config.tau = t;
    }
    if let Some(h) = a.max_hops {
        config.max_hops = h;
    }
    if a.k_lex.is_some() || a.k_sem.is_some() {
        config.retrieval.k_lex = a.k_lex.unwrap_or(config.retrieval.k_lex);
        config.retrieval.k_sem = a.k_sem.unwrap_or(config.retrieval.k_sem);
        config.retrieval.k_tot = config.retrieval.k_lex + config.retrieval.k_sem;
    }
    if let Some(k) = a.k_tot {
        config.retrieval.k_tot = k;
    }
    config.validate()?;
    if a.jobs == 0 {
        bail!("--jobs must be at least 1");
    }

    let mentions: Vec<Mention> = match (&a.mention, &a.mentions) {
        (Some(m), _) => vec![Mention {
            text: m.clone(),
            context: a.context.clone(),
        }],
        (None, Some(path)) => read_json::<Vec<MentionInput>>(path)?
            .into_iter()
            .map(|m| Mention {
                text: m.mention,
                context: m.context,
            })
            .collect(),
        (None, None) => bail!("give --mention or --mentions"),
    };
    let indexes = load_indexes(app, a.dump, a.index_dir)?;
    let provider = make_provider(app, &a.provider)?;
    let prompts = load_prompts(app, &a.provider)?;

    let (results, logs) = link_batch(&mentions, &indexes, provider.as_ref(), &prompts, &config, a.jobs);
    let mut out = String::new();
    for r in &results {
        out.push_str(&serialize_result(r));
        out.push('\n');
    }
    emit(a.out.as_deref(), &out)?;
    if let Some(p) = &a.log {
        fs::write(p, pretty(&logs)?).with_context(|| format!("writing {}", p.display()))?;
    }
    let failed = results.iter().filter(|r| r.is_error()).count();
    if failed > 0 {
        log::warn!("{failed} of {} mentions failed", results.len());
        return Ok(Outcome::Partial);
    }
    Ok(Outcome::Complete)
}

fn read_results(path: &Path) -> Result<Vec<crate::pipeline::LinkResult>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_results(&text).with_context(|| format!("parsing {}", path.display()))
}

fn cmd_eval(a: EvalArgs) -> Result<Outcome> {
    if let Some(t) = a.tau {
        if !(0.0..=1.0).contains(&t) {
            bail!("tau must be within [0, 1], got {t}");
        }
    }
    let results = read_results(&a.results)?;
    let gold: Vec<GoldAnnotation> = read_json(&a.gold)?;
    let records: Vec<RunRecord> = results.iter().map(RunRecord::from).collect();
    let mut report = compute_metrics(&records, &gold)?;
    report.tau = a.tau;
    emit(a.out.as_deref(), &pretty(&report)?)?;
    if let Some(p) = &a.mismatches_out {
        let cases = mismatches(&records, &gold)?;
        fs::write(p, pretty(&cases)?).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(Outcome::Complete)
}

fn cmd_adjudicate(app: &AppConfig, a: AdjudicateArgs) -> Result<Outcome> {
    let cases: Vec<Mismatch> = read_json(&a.mismatches)?;
    let records: BTreeMap<String, EntityRecord> = match a.dump.or_else(|| app.paths.dump.clone()) {
        Some(p) => read_dump(&existing(p)?)?
            .into_iter()
            .map(|r| (r.curie.clone(), r))
            .collect(),
        None => BTreeMap::new(),
    };
    let provider = make_provider(app, &a.provider)?;
    let prompts = load_prompts(app, &a.provider)?;
    let agents = Agents::new(provider.as_ref(), &prompts);

    let mut out = String::new();
    let mut labels = Vec::new();
    let mut failed = 0usize;
    for case in &cases {
        let mut log = CallLog::new();
        match adjudicate_mismatch(&agents, case, &records, &mut log) {
            Ok(adj) => {
                labels.push(adj.label);
                out.push_str(&serde_json::to_string(&adj)?);
                out.push('\n');
            }
            Err(e) => {
                failed += 1;
                eprintln!("adjudication failed for {:?}: {e}", case.query);
            }
        }
    }
    emit(a.out.as_deref(), &out)?;
    let distribution = pretty(&label_distribution(&labels))?;
    match &a.distribution_out {
        Some(p) => fs::write(p, distribution).with_context(|| format!("writing {}", p.display()))?,
        None => eprint!("{distribution}"),
    }
    Ok(if failed > 0 {
        Outcome::Partial
    } else {
        Outcome::Complete
    })
}

fn cmd_compare_export(app: &AppConfig, a: CompareArgs) -> Result<Outcome> {
    let run_a = read_results(&a.run_a)?;
    let run_b = read_results(&a.run_b)?;
    let dump = existing(pick(a.dump, &app.paths.dump, "dump")?)?;
    let records: BTreeMap<String, EntityRecord> = read_dump(&dump)?.into_iter().map(|r| (r.curie.clone(), r)).collect();
    let export = export_comparison(&run_a, &run_b, &records)?;
    emit(a.out.as_deref(), &pretty(&export)?)?;
    Ok(Outcome::Complete)
}
