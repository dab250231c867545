//! Command-line interface.

use std::collections::HashSet;
use std::io::Write;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use groundcoref::agreement::{agreement_report, AgreementCell, AgreementTable};
use groundcoref::dataset::export::conll_exports;
use groundcoref::ingest::{ingest_quac, ingest_wiki, load_pages, load_quac_records, IngestReport, MarkableScope};
use groundcoref::scoring::metrics::score_all;
use groundcoref::service::{load_gold_pool, TaskService};
use groundcoref::{
    grounded_to_clusters, read_corpus, write_corpus, AnnotationRecord, ClusterSet, CorpusFile, Document, MentionId,
    PronounLexicon,
};

use crate::config::ServerConfig;
use crate::server::{serve, AppState};

#[derive(Debug, Parser)]
#[command(name = "groundcoref", version, about = "Grounded coreference annotation tools")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build an annotation corpus from raw pages.
    #[command(subcommand)]
    Ingest(IngestCommand),
    /// Inter-annotator agreement for one record pair or a whole corpus.
    Agree(AgreeArgs),
    /// Score a response clustering against a key with MUC, B3 and CEAF-e.
    Score {
        #[arg(long)]
        key: PathBuf,
        #[arg(long)]
        response: PathBuf,
    },
    /// Convert a grounded record into coreference clusters.
    Convert {
        #[arg(long)]
        doc: PathBuf,
        #[arg(long)]
        record: PathBuf,
    },
    /// Write a corpus out as CoNLL-2012 files or canonical JSON.
    #[command(subcommand)]
    Export(ExportCommand),
    /// Run the annotation task server.
    Serve(ServeArgs),
}

#[derive(Debug, Subcommand)]
pub enum IngestCommand {
    Wiki {
        /// Directory of `.html` or `.json` pages.
        #[arg(long)]
        pages: PathBuf,
        /// Pronoun lexicon (TSV); the built-in one by default.
        #[arg(long)]
        lexicon: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    Quac {
        /// QuAC records as a JSON array or JSON lines.
        #[arg(long)]
        records: PathBuf,
        /// Companion wiki pages the records refer to.
        #[arg(long)]
        pages: PathBuf,
        #[arg(long)]
        lexicon: Option<PathBuf>,
        /// Which sections receive markables.
        #[arg(long, value_enum, default_value_t = Scope::All)]
        scope: Scope,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Scope {
    /// Context plus every question and answer.
    All,
    /// The context paragraph only.
    Context,
}

#[derive(Debug, Args)]
pub struct AgreeArgs {
    /// Document both records annotate.
    #[arg(long, requires = "a")]
    pub doc: Option<String>,
    #[arg(long, requires = "b", required_unless_present = "corpus")]
    pub a: Option<PathBuf>,
    #[arg(long, requires = "a")]
    pub b: Option<PathBuf>,
    /// Aggregate over every doubly annotated document of a corpus.
    #[arg(long, conflicts_with_all = ["doc", "a", "b"])]
    pub corpus: Option<PathBuf>,
    /// Corpus mode: which average the table shows. JSON output has both.
    #[arg(long, value_enum, default_value_t = Average::Micro)]
    pub average: Average,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Average {
    /// Pooled over all markables of a cell.
    Micro,
    /// Mean of per-document scores.
    Macro,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Table,
}

#[derive(Debug, Subcommand)]
pub enum ExportCommand {
    /// One `.conll` file and one `.dropped.json` sidecar per grounded record.
    Conll {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Validate and rewrite a corpus in canonical form.
    Json {
        #[arg(long)]
        corpus: PathBuf,
        /// Standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// TOML configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub port: Option<u16>,
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    #[arg(long)]
    pub test_pool: Option<PathBuf>,
}

/// A clustering of one document, as read by `score`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterFile {
    pub document_id: String,
    pub clusters: Vec<Vec<MentionId>>,
}

fn read_json<T: DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_slice(&bytes).with_context(|| format!("parsing {}", path.display()))
}

fn read_corpus_file(path: &Path) -> anyhow::Result<CorpusFile> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    read_corpus(&bytes).with_context(|| format!("loading corpus {}", path.display()))
}

fn write_json(out: &mut dyn Write, value: &impl Serialize) -> anyhow::Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

fn lexicon(path: Option<&Path>) -> anyhow::Result<PronounLexicon> {
    match path {
        Some(p) => PronounLexicon::load(p).with_context(|| format!("loading lexicon {}", p.display())),
        None => Ok(PronounLexicon::default()),
    }
}

/// Write the corpus and stream the report to `err` as JSON lines.
fn finish_ingest(docs: Vec<Document>, report: &IngestReport, out: &Path, err: &mut dyn Write) -> anyhow::Result<()> {
    for entry in &report.entries {
        writeln!(err, "{}", serde_json::to_string(entry)?)?;
    }
    let bytes = write_corpus(&CorpusFile::new(docs))?;
    std::fs::write(out, bytes).with_context(|| format!("writing {}", out.display()))
}

/// First two complete records per document and protocol, in corpus order.
pub fn corpus_agreement(corpus: &CorpusFile) -> anyhow::Result<Vec<AgreementCell>> {
    let mut table = AgreementTable::default();
    for doc in &corpus.documents {
        for protocol in groundcoref::Protocol::ALL {
            let mut pair =
                corpus.records.iter().filter(|r| r.complete && r.document_id == doc.id && r.protocol == protocol);
            if let (Some(a), Some(b)) = (pair.next(), pair.next()) {
                table.add(doc.source, a, b)?;
            }
        }
    }
    Ok(table.rows())
}

fn agreement_table(rows: &[AgreementCell], average: Average) -> String {
    let mut s = format!("{:<6} {:<9} {:>5} {:>11} {:>7}\n", "source", "protocol", "docs", "exact", "F1");
    for row in rows {
        let (exact, f1) = match average {
            Average::Micro => (row.exact_match, row.f1),
            Average::Macro => (row.exact_match_macro, row.f1_macro),
        };
        s += &format!(
            "{:<6} {:<9} {:>5} {:>11.3} {:>7.3}\n",
            row.source.as_str(),
            row.protocol.as_str(),
            row.documents,
            exact,
            f1
        );
    }
    s
}

fn agree(args: AgreeArgs, out: &mut dyn Write) -> anyhow::Result<()> {
    if let Some(path) = &args.corpus {
        let rows = corpus_agreement(&read_corpus_file(path)?)?;
        return match args.format {
            Format::Json => write_json(out, &rows),
            Format::Table => Ok(write!(out, "{}", agreement_table(&rows, args.average))?),
        };
    }
    let (Some(a), Some(b)) = (&args.a, &args.b) else {
        bail!("either --corpus or both --a and --b are required");
    };
    let a: AnnotationRecord = read_json(a)?;
    let b: AnnotationRecord = read_json(b)?;
    if let Some(doc) = &args.doc {
        for r in [&a, &b] {
            ensure!(&r.document_id == doc, "record by {} annotates {}, not {doc}", r.annotator_id, r.document_id);
        }
    }
    write_json(out, &agreement_report(&a, &b)?)
}

fn score(key: &Path, response: &Path, out: &mut dyn Write) -> anyhow::Result<()> {
    let key: ClusterFile = read_json(key)?;
    let response: ClusterFile = read_json(response)?;
    ensure!(
        key.document_id == response.document_id,
        "key is for {} but response is for {}",
        key.document_id,
        response.document_id
    );
    let scores = score_all(&ClusterSet::new(key.clusters), &ClusterSet::new(response.clusters))?;
    write_json(out, &scores)
}

fn export_conll(corpus: &Path, dir: &Path, err: &mut dyn Write) -> anyhow::Result<()> {
    let corpus = read_corpus_file(corpus)?;
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut stems = HashSet::new();
    for export in conll_exports(&corpus) {
        ensure!(stems.insert(export.file_stem.clone()), "two records map to {}", export.file_stem);
        if let Some(conll) = &export.conll {
            std::fs::write(dir.join(format!("{}.conll", export.file_stem)), conll)?;
        }
        if let Some(e) = &export.sidecar.error {
            writeln!(err, "{}: {e}", export.file_stem)?;
        }
        let sidecar = serde_json::to_vec_pretty(&export.sidecar)?;
        std::fs::write(dir.join(format!("{}.dropped.json", export.file_stem)), sidecar)?;
    }
    Ok(())
}

fn run_server(args: ServeArgs) -> anyhow::Result<()> {
    let mut config = ServerConfig::load(args.config.as_deref())?;
    if let Some(port) = args.port {
        config.port = port;
    }
    if let Some(dir) = args.data_dir {
        config.data_dir = dir;
    }
    if let Some(pool) = args.test_pool {
        config.test_pool = Some(pool);
    }
    let gold = match &config.test_pool {
        Some(p) => load_gold_pool(p).with_context(|| format!("loading test pool {}", p.display()))?,
        None => {
            tracing::warn!("no test pool configured; annotators will never be tested and stall at their fifth task");
            Vec::new()
        }
    };
    std::fs::create_dir_all(&config.data_dir)?;
    let service = TaskService::open(&config.data_dir, config.service.clone(), gold)?;
    let host: IpAddr = config.host.parse().with_context(|| format!("host {}", config.host))?;
    let addr = SocketAddr::new(host, config.port);
    tokio::runtime::Runtime::new()?.block_on(serve(AppState::new(service), addr))
}

/// Execute one command. Results go to `out`, diagnostics to `err`.
pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> anyhow::Result<()> {
    match cli.command {
        Command::Ingest(IngestCommand::Wiki { pages, lexicon: lex, out: path }) => {
            let pages = load_pages(&pages)?;
            let (docs, report) = ingest_wiki(&pages, &lexicon(lex.as_deref())?);
            finish_ingest(docs, &report, &path, err)
        }
        Command::Ingest(IngestCommand::Quac { records, pages, lexicon: lex, scope, out: path }) => {
            let records = load_quac_records(&records)?;
            let pages = load_pages(&pages)?;
            let scope = match scope {
                Scope::All => MarkableScope::AllSections,
                Scope::Context => MarkableScope::ContextOnly,
            };
            let (docs, report) = ingest_quac(&records, &pages, &lexicon(lex.as_deref())?, scope);
            finish_ingest(docs, &report, &path, err)
        }
        Command::Agree(args) => agree(args, out),
        Command::Score { key, response } => score(&key, &response, out),
        Command::Convert { doc, record } => {
            let doc: Document = read_json(&doc)?;
            let record: AnnotationRecord = read_json(&record)?;
            write_json(out, &grounded_to_clusters(&doc, &record)?)
        }
        Command::Export(ExportCommand::Conll { corpus, out: dir }) => export_conll(&corpus, &dir, err),
        Command::Export(ExportCommand::Json { corpus, out: path }) => {
            let bytes = write_corpus(&read_corpus_file(&corpus)?)?;
            match path {
                Some(p) => std::fs::write(&p, bytes).with_context(|| format!("writing {}", p.display())),
                None => Ok(out.write_all(&bytes)?),
            }
        }
        Command::Serve(args) => run_server(args),
    }
}
