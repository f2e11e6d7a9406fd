use std::fs::OpenOptions;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use procgraph_core::graph::GraphOptions;
use procgraph_core::ingest::{self, LogMapping};
use procgraph_core::session::{OutputFormat, Session};

use crate::runner::{run_statements, Failure};

const HELP: &str = "\
statements end with ';' or a blank line
\\load <file> [map]       load triples, or a CSV log with a column map
\\folders                 list folder nodes
\\paths                   list path nodes
\\explain <stmt>          show the plan of a select or entity statement
\\format [tsv|json]       show or set the output format
\\refresh <name>          re-evaluate a timed folder or path node
\\summarize <folder|*> <dims> [measures]
                         group by comma-separated attributes
\\discover <folder|prefix> [algorithm]
                         process model of the matching folders
\\use <id>                switch to another snapshot
\\snapshots               list snapshots
\\quit                    leave
";

pub struct Repl<'a> {
    session: &'a mut Session,
    history: Option<PathBuf>,
    interactive: bool,
    options: GraphOptions,
    buffer: String,
}

enum Flow {
    Continue,
    Quit,
}

impl<'a> Repl<'a> {
    pub fn new(session: &'a mut Session, history: Option<PathBuf>, interactive: bool, options: GraphOptions) -> Self {
        Self {
            session,
            history,
            interactive,
            options,
            buffer: String::new(),
        }
    }

    fn record(&self, line: &str) {
        let Some(path) = &self.history else { return };
        if line.trim().is_empty() {
            return;
        }
        // history is best effort; a read-only home must not stop the shell
        if let Ok(mut f) = OpenOptions::new().create(true).append(true).open(path) {
            let _ = writeln!(f, "{line}");
        }
    }

    fn prompt(&self, out: &mut dyn Write) {
        if self.interactive {
            let p = if self.buffer.is_empty() { "procgraph> " } else { "      ...> " };
            let _ = write!(out, "{p}");
            let _ = out.flush();
        }
    }

    pub fn run(&mut self, input: impl BufRead, out: &mut dyn Write) -> Result<(), Failure> {
        if self.interactive {
            let _ = writeln!(out, "snapshot {}; \\help for commands", self.session.snapshot());
        }
        self.prompt(out);
        for line in input.lines() {
            let line = line.map_err(|e| Failure::usage(format!("cannot read input: {e}")))?;
            self.record(&line);
            let trimmed = line.trim();
            if self.buffer.is_empty() && trimmed.starts_with('\\') {
                if let Flow::Quit = self.command(trimmed, out) {
                    return Ok(());
                }
            } else if trimmed.is_empty() || trimmed.ends_with(';') {
                self.buffer.push_str(&line);
                self.buffer.push('\n');
                self.flush(out);
            } else {
                self.buffer.push_str(&line);
                self.buffer.push('\n');
            }
            self.prompt(out);
        }
        self.flush(out);
        Ok(())
    }

    fn flush(&mut self, out: &mut dyn Write) {
        let text = std::mem::take(&mut self.buffer);
        if text.trim().is_empty() {
            return;
        }
        if let Err(message) = run_statements(self.session, "<input>", &text, out) {
            eprintln!("{message}");
        }
    }

    fn command(&mut self, line: &str, out: &mut dyn Write) -> Flow {
        let (name, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let rest = rest.trim();
        let args: Vec<&str> = rest.split_whitespace().collect();
        let result: Result<String, String> = match name {
            "\\quit" | "\\q" => return Flow::Quit,
            "\\help" => Ok(HELP.to_string()),
            "\\folders" => Ok(self.session.render_folder_list()),
            "\\paths" => Ok(self.session.render_path_node_list()),
            "\\explain" => {
                let stmt = rest.trim_end_matches(';');
                self.session.explain(stmt).map_err(|e| e.to_string())
            }
            "\\format" => match args.first() {
                None => Ok(format!(
                    "{}\n",
                    match self.session.format {
                        OutputFormat::Tsv => "tsv",
                        OutputFormat::Json => "json",
                    }
                )),
                Some(f) => f
                    .parse()
                    .map(|f| {
                        self.session.format = f;
                        String::new()
                    })
                    .map_err(|e: procgraph_core::session::SessionError| e.to_string()),
            },
            "\\load" => self.load(&args),
            "\\refresh" => match args.first() {
                Some(n) => self.session.refresh(n).map_err(|e| e.to_string()),
                None => Err("usage: \\refresh <name>".into()),
            },
            "\\summarize" => match args.as_slice() {
                [folder, dims, measures @ ..] if measures.len() <= 1 => {
                    let dims = split_list(dims);
                    let measures = measures.first().map(|m| split_list(m)).unwrap_or_default();
                    self.session.summarize(folder, &dims, &measures).map_err(|e| e.to_string())
                }
                _ => Err("usage: \\summarize <folder|*> <dim,...> [measure,...]".into()),
            },
            "\\discover" => match args.as_slice() {
                [sel] => self.session.discover(sel, "dfg").map_err(|e| e.to_string()),
                [sel, algo] => self.session.discover(sel, algo).map_err(|e| e.to_string()),
                _ => Err("usage: \\discover <folder|prefix> [algorithm]".into()),
            },
            "\\use" => match args.first().and_then(|a| a.parse().ok()) {
                Some(id) => self
                    .session
                    .use_snapshot(id)
                    .map(|_| format!("snapshot {id}\n"))
                    .map_err(|e| e.to_string()),
                None => Err("usage: \\use <snapshot id>".into()),
            },
            "\\snapshots" => {
                let mut s = String::from("id\tparent\ttriples\tadded\tremoved\n");
                for i in self.session.snapshots() {
                    let parent = i.parent.map_or("-".to_string(), |p| p.to_string());
                    s.push_str(&format!("{}\t{parent}\t{}\t{}\t{}\n", i.id, i.triples, i.added, i.removed));
                }
                Ok(s)
            }
            other => Err(format!("unknown command {other}; \\help lists them")),
        };
        match result {
            Ok(text) => {
                let _ = out.write_all(text.as_bytes());
                let _ = out.flush();
            }
            Err(e) => eprintln!("error: {e}"),
        }
        Flow::Continue
    }

    fn load(&mut self, args: &[&str]) -> Result<String, String> {
        let loaded = match args {
            [file] => ingest::load_triple_file(file, self.options),
            [file, map] => {
                let mapping = LogMapping::from_file(Path::new(map)).map_err(|e| e.to_string())?;
                ingest::load_event_log(file, &mapping, self.options)
            }
            _ => return Err("usage: \\load <file> [map]".into()),
        };
        let (graph, report) = loaded.map_err(|e| e.to_string())?;
        for r in &report.rejects {
            eprintln!("{}:{}: skipped: {}", args[0], r.line, r.reason);
        }
        let id = self.session.load_graph(&graph).map_err(|e| e.to_string())?;
        Ok(format!("snapshot {id}: {} triples\n", graph.triple_count()))
    }
}

fn split_list(s: &str) -> Vec<String> {
    s.split(',').filter(|p| !p.is_empty()).map(str::to_string).collect()
}
