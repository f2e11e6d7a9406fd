use std::io::Write;

use procgraph_core::query::{line_col, split_statements};
use procgraph_core::session::{Session, SessionError};

/// A command failure with its exit code. `reported` means the diagnostic
/// has already been written to stderr.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
    pub reported: bool,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
            reported: false,
        }
    }

    pub fn query(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
            reported: false,
        }
    }
}

/// `source:line:col: message`, using the syntax error position when there
/// is one and the statement start otherwise.
pub fn diagnostic(source: &str, text: &str, offset: usize, err: SessionError) -> String {
    let err = err.relocate(text, offset);
    match err.syntax() {
        Some(syn) => format!("{source}:{syn}"),
        None => {
            let (line, col) = line_col(text, offset);
            format!("{source}:{line}:{col}: {err}")
        }
    }
}

/// Runs each statement of `text` in order, writing results to `out`.
/// Stops at the first failing statement.
pub fn run_statements(
    session: &mut Session,
    source: &str,
    text: &str,
    out: &mut dyn Write,
) -> Result<(), String> {
    for (offset, piece) in split_statements(text) {
        match session.execute(piece) {
            Ok(rendered) => {
                out.write_all(rendered.as_bytes())
                    .and_then(|_| out.flush())
                    .map_err(|e| format!("cannot write output: {e}"))?;
            }
            Err(e) => return Err(diagnostic(source, text, offset, e)),
        }
    }
    Ok(())
}

pub fn run_batch(session: &mut Session, source: &str, text: &str, out: &mut dyn Write) -> Result<(), Failure> {
    run_statements(session, source, text, out).map_err(|message| {
        eprintln!("{message}");
        Failure {
            code: 1,
            message,
            reported: true,
        }
    })
}
