//! `procgraph`: batch runner and interactive shell for process-graph queries.

mod repl;
mod runner;

use std::fs;
use std::io::{self, BufReader, IsTerminal, Read};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use procgraph_core::graph::{ErGraph, GraphOptions, Triple};
use procgraph_core::ingest::{self, IngestError, IngestReport, LogMapping};
use procgraph_core::session::{OutputFormat, Session, SessionError};
use procgraph_core::SnapshotId;

use runner::Failure;

#[derive(Parser, Debug)]
#[command(name = "procgraph", version, about = "Query process graphs stored as triples")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct GlobalArgs {
    /// Triple file to load before running.
    #[arg(long, global = true, value_name = "FILE")]
    graph: Option<PathBuf>,
    /// CSV event log to load before running (needs --map).
    #[arg(long, global = true, value_name = "FILE", conflicts_with = "graph")]
    log: Option<PathBuf>,
    /// Column mapping for --log.
    #[arg(long, global = true, value_name = "CFG")]
    map: Option<PathBuf>,
    #[arg(long, global = true, default_value = "tsv", value_parser = ["tsv", "json"])]
    format: String,
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    parallelism: u16,
    /// Accept relationship cycles; path search is then bounded to 16 hops.
    #[arg(long, global = true)]
    allow_cycles: bool,
    /// Allow select queries whose patterns share no variables.
    #[arg(long, global = true)]
    allow_product: bool,
    /// Per-query time limit in seconds.
    #[arg(long, global = true, value_name = "SECS")]
    timeout: Option<f64>,
    /// Directory holding snapshots, folders and path nodes.
    #[arg(long, global = true, env = "PROCGRAPH_CATALOG", value_name = "DIR")]
    catalog: Option<PathBuf>,
    /// Run against this snapshot instead of the latest.
    #[arg(long, global = true, value_name = "ID")]
    snapshot: Option<SnapshotId>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Execute the statements of a file (`-` for stdin).
    Run { file: PathBuf },
    /// Interactive shell.
    Repl {
        /// History file; defaults to <catalog>/history or ~/.procgraph_history.
        #[arg(long, value_name = "FILE")]
        history: Option<PathBuf>,
    },
    /// Load data into the catalog as a new snapshot.
    #[command(subcommand)]
    Ingest(IngestCommand),
    /// Inspect or extend the snapshot history.
    #[command(subcommand)]
    Snapshot(SnapshotCommand),
    /// Write the current snapshot as triples to stdout.
    Export,
}

#[derive(Subcommand, Debug)]
enum IngestCommand {
    /// Triple file, one `subject predicate object` per line.
    Triples { file: PathBuf },
    /// CSV event log.
    Log {
        file: PathBuf,
        /// Link events in timestamp order with happened-before edges.
        #[arg(long)]
        time_order: bool,
    },
}

#[derive(Subcommand, Debug)]
enum SnapshotCommand {
    List,
    /// Commit a delta on top of the latest snapshot.
    Commit {
        #[arg(long, value_name = "FILE")]
        add: Option<PathBuf>,
        #[arg(long, value_name = "FILE")]
        remove: Option<PathBuf>,
    },
}

impl GlobalArgs {
    fn graph_options(&self) -> GraphOptions {
        GraphOptions {
            allow_cycles: self.allow_cycles,
        }
    }

    fn mapping(&self) -> Result<LogMapping, Failure> {
        let Some(map) = &self.map else {
            return Err(Failure::usage("--log needs --map <cfg>"));
        };
        LogMapping::from_file(map).map_err(ingest_failure)
    }
}

fn ingest_failure(e: IngestError) -> Failure {
    match e {
        IngestError::Io { .. } | IngestError::Config { .. } => Failure::usage(e.to_string()),
        other => Failure::query(other.to_string()),
    }
}

fn print_rejects(source: &Path, report: &IngestReport) {
    for r in &report.rejects {
        eprintln!("{}:{}: skipped: {}", source.display(), r.line, r.reason);
    }
}

fn read_graph_source(args: &GlobalArgs) -> Result<Option<ErGraph>, Failure> {
    let options = args.graph_options();
    let (path, loaded) = if let Some(path) = &args.graph {
        (path, ingest::load_triple_file(path, options))
    } else if let Some(path) = &args.log {
        (path, ingest::load_event_log(path, &args.mapping()?, options))
    } else {
        return Ok(None);
    };
    let (graph, report) = loaded.map_err(ingest_failure)?;
    print_rejects(path, &report);
    Ok(Some(graph))
}

fn open_session(args: &GlobalArgs) -> Result<Session, Failure> {
    let mut session = Session::open(args.catalog.as_deref(), args.graph_options()).map_err(session_failure)?;
    if let Some(graph) = read_graph_source(args)? {
        session.load_graph(&graph).map_err(session_failure)?;
    }
    if let Some(id) = args.snapshot {
        session
            .use_snapshot(id)
            .map_err(|e| Failure::usage(e.to_string()))?;
    }
    session.format = args.format.parse().unwrap_or(OutputFormat::Tsv);
    session.plan.parallelism = args.parallelism as usize;
    session.plan.allow_product = args.allow_product;
    session.plan.timeout = match args.timeout {
        Some(secs) if secs.is_finite() && secs >= 0.0 => Some(Duration::from_secs_f64(secs)),
        Some(_) => return Err(Failure::usage("--timeout must be a non-negative number of seconds")),
        None => None,
    };
    Ok(session)
}

fn session_failure(e: SessionError) -> Failure {
    Failure::query(e.to_string())
}

fn read_input(file: &Path) -> Result<(String, String), Failure> {
    if file.as_os_str() == "-" {
        let mut text = String::new();
        io::stdin()
            .read_to_string(&mut text)
            .map_err(|e| Failure::usage(format!("cannot read stdin: {e}")))?;
        return Ok(("<stdin>".to_string(), text));
    }
    let text = fs::read_to_string(file).map_err(|e| Failure::usage(format!("cannot read {}: {e}", file.display())))?;
    Ok((file.display().to_string(), text))
}

fn read_delta(path: Option<&Path>) -> Result<Vec<Triple>, Failure> {
    let Some(path) = path else { return Ok(Vec::new()) };
    let file = fs::File::open(path).map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
    let (triples, report) = ingest::read_triples(BufReader::new(file))
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
    print_rejects(path, &report);
    Ok(triples)
}

fn require_catalog(args: &GlobalArgs) -> Result<&Path, Failure> {
    args.catalog
        .as_deref()
        .ok_or_else(|| Failure::usage("this command needs --catalog <dir> or PROCGRAPH_CATALOG"))
}

fn run(cli: Cli) -> Result<(), Failure> {
    let args = &cli.global;
    match cli.command {
        Command::Run { file } => {
            let (name, text) = read_input(&file)?;
            let mut session = open_session(args)?;
            runner::run_batch(&mut session, &name, &text, &mut io::stdout().lock())
        }
        Command::Repl { history } => {
            let mut session = open_session(args)?;
            let history = history.or_else(|| match &args.catalog {
                Some(dir) => Some(dir.join("history")),
                None => std::env::var_os("HOME").map(|h| PathBuf::from(h).join(".procgraph_history")),
            });
            let interactive = io::stdin().is_terminal();
            let mut shell = repl::Repl::new(&mut session, history, interactive, args.graph_options());
            shell.run(io::stdin().lock(), &mut io::stdout().lock())
        }
        Command::Ingest(cmd) => {
            let options = args.graph_options();
            let (path, loaded) = match &cmd {
                IngestCommand::Triples { file } => (file, ingest::load_triple_file(file, options)),
                IngestCommand::Log { file, .. } => (file, ingest::load_event_log(file, &args.mapping()?, options)),
            };
            let (mut graph, report) = loaded.map_err(ingest_failure)?;
            if let IngestCommand::Log { time_order: true, .. } = cmd {
                graph = ingest::emit_time_order_edges(&graph, None).map_err(|e| Failure::query(e.to_string()))?;
            }
            print_rejects(path, &report);
            let mut session = Session::open(args.catalog.as_deref(), options).map_err(session_failure)?;
            let id = session.load_graph(&graph).map_err(session_failure)?;
            println!(
                "snapshot {id}: {} rows read, {} rejected, {} triples",
                report.rows_read,
                report.rows_rejected,
                graph.triple_count()
            );
            Ok(())
        }
        Command::Snapshot(SnapshotCommand::List) => {
            let dir = require_catalog(args)?;
            let session = Session::open(Some(dir), args.graph_options()).map_err(session_failure)?;
            println!("id\tparent\tcreated\ttriples\tadded\tremoved");
            for s in session.snapshots() {
                let parent = s.parent.map_or("-".to_string(), |p| p.to_string());
                println!(
                    "{}\t{parent}\t{}\t{}\t{}\t{}",
                    s.id, s.created_at, s.triples, s.added, s.removed
                );
            }
            Ok(())
        }
        Command::Snapshot(SnapshotCommand::Commit { add, remove }) => {
            let dir = require_catalog(args)?;
            if add.is_none() && remove.is_none() {
                return Err(Failure::usage("snapshot commit needs --add and/or --remove"));
            }
            let add = read_delta(add.as_deref())?;
            let remove = read_delta(remove.as_deref())?;
            let mut session = Session::open(Some(dir), args.graph_options()).map_err(session_failure)?;
            let id = session.commit(&add, &remove).map_err(session_failure)?;
            let info = session.snapshots().into_iter().find(|s| s.id == id);
            match info {
                Some(s) => println!("snapshot {id}: +{} -{} ({} triples)", s.added, s.removed, s.triples),
                None => println!("snapshot {id}"),
            }
            Ok(())
        }
        Command::Export => {
            let session = open_session(args)?;
            ingest::export_triples(session.graph(), io::stdout().lock())
                .map_err(|e| Failure::query(format!("cannot write output: {e}")))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if !f.reported {
                eprintln!("error: {}", f.message);
            }
            ExitCode::from(f.code)
        }
    }
}
