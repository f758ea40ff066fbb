//! The `#` preamble written at the top of every output file.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Duration;

pub struct RunManifest {
    command: &'static str,
    params: Vec<(String, String)>,
}

impl RunManifest {
    pub fn new(command: &'static str) -> Self {
        Self { command, params: Vec::new() }
    }

    pub fn param(mut self, key: &str, value: impl ToString) -> Self {
        self.params.push((key.to_string(), value.to_string()));
        self
    }

    /// Preamble lines. Passing `None` for `elapsed` omits the timing line, which keeps
    /// repeated runs byte-identical.
    pub fn render(&self, elapsed: Option<Duration>) -> String {
        let mut out = String::new();
        writeln!(out, "# fraclap {} {}", self.command, env!("CARGO_PKG_VERSION")).unwrap();
        for (k, v) in &self.params {
            writeln!(out, "# {k} = {v}").unwrap();
        }
        if let Some(t) = elapsed {
            writeln!(out, "# elapsed_s = {:.6}", t.as_secs_f64()).unwrap();
        }
        out
    }
}

/// Writes `body` to `path`, or to standard output when no path is given.
pub fn emit(path: Option<&Path>, body: &str) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, body),
        None => {
            use std::io::Write;
            std::io::stdout().lock().write_all(body.as_bytes())
        }
    }
}
