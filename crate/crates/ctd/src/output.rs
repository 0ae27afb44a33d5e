//! Output files: provenance header, CSV rows, JSON documents.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use ctd_core::WellLedger;
use serde_json::{json, Map, Value};

use crate::config::{mode_name, Command, ExperimentConfig};
use crate::error::{CliError, Result};

pub const HEADER_PREFIX: &str = "# ";
pub const HEADER_START: &str = "# generator=";
pub const HEADER_END: &str = "# end-header";

pub fn generator() -> String {
    format!("ctd {}", env!("CARGO_PKG_VERSION"))
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn timestamp() -> String {
    chrono::Utc::now().format("%Y-%m-%dT%H:%M:%SZ").to_string()
}

/// Everything needed to rerun the command that produced a file.
#[derive(Debug, Clone)]
pub struct Header {
    pub generator: String,
    pub timestamp: String,
    pub entries: Vec<(String, String)>,
}

impl Header {
    pub fn new(command: Command, cfg: &ExperimentConfig) -> Self {
        Self {
            generator: generator(),
            timestamp: timestamp(),
            entries: cfg.entries(command),
        }
    }

    pub fn write_csv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "{HEADER_START}{}", self.generator)?;
        writeln!(w, "{HEADER_PREFIX}timestamp={}", self.timestamp)?;
        for (k, v) in &self.entries {
            writeln!(w, "{HEADER_PREFIX}{k}={v}")?;
        }
        writeln!(w, "{HEADER_END}")
    }

    pub fn to_json(&self) -> Value {
        let config: Map<String, Value> = self
            .entries
            .iter()
            .map(|(k, v)| (k.clone(), Value::String(v.clone())))
            .collect();
        json!({
            "generator": self.generator,
            "timestamp": self.timestamp,
            "config": config,
        })
    }
}

/// Drops the timestamp line or field so two outputs can be compared.
pub fn without_timestamp(text: &str) -> String {
    if text.trim_start().starts_with('{') {
        let mut v: Value = match serde_json::from_str(text) {
            Ok(v) => v,
            Err(_) => return text.to_string(),
        };
        if let Some(h) = v.get_mut("header").and_then(Value::as_object_mut) {
            h.remove("timestamp");
        }
        return v.to_string();
    }
    text.lines()
        .filter(|l| !l.starts_with("# timestamp="))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Destination of a command's main output.
pub enum Sink {
    Stdout(io::Stdout),
    File { path: PathBuf, writer: BufWriter<File> },
}

impl Sink {
    pub fn open(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Sink::Stdout(io::stdout())),
            Some(p) => {
                let f = File::create(p).map_err(|e| CliError::io(p.display().to_string(), e))?;
                Ok(Sink::File {
                    path: p.to_path_buf(),
                    writer: BufWriter::new(f),
                })
            }
        }
    }

    fn name(&self) -> String {
        match self {
            Sink::Stdout(_) => "stdout".into(),
            Sink::File { path, .. } => path.display().to_string(),
        }
    }

    pub fn finish(mut self) -> Result<()> {
        self.flush().map_err(|e| CliError::io(self.name(), e))
    }

    pub fn wrap(&self, e: io::Error) -> CliError {
        CliError::io(self.name(), e)
    }
}

impl Write for Sink {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        match self {
            Sink::Stdout(s) => s.write(buf),
            Sink::File { writer, .. } => writer.write(buf),
        }
    }

    fn flush(&mut self) -> io::Result<()> {
        match self {
            Sink::Stdout(s) => s.flush(),
            Sink::File { writer, .. } => writer.flush(),
        }
    }
}

/// Writes a complete CSV document (header, column row, data rows).
pub fn write_csv(path: Option<&Path>, header: &Header, columns: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut sink = Sink::open(path)?;
    let r = (|| -> io::Result<()> {
        header.write_csv(&mut sink)?;
        writeln!(sink, "{}", columns.join(","))?;
        for row in rows {
            writeln!(sink, "{}", row.join(","))?;
        }
        Ok(())
    })();
    r.map_err(|e| sink.wrap(e))?;
    sink.finish()
}

/// Writes `body` with the header inserted under `"header"`.
pub fn write_json(path: Option<&Path>, header: &Header, mut body: Map<String, Value>) -> Result<()> {
    body.insert("header".into(), header.to_json());
    let mut sink = Sink::open(path)?;
    let text = serde_json::to_string_pretty(&Value::Object(body)).expect("JSON values always serialize");
    writeln!(sink, "{text}").map_err(|e| sink.wrap(e))?;
    sink.finish()
}

/// Well ledger with every real written as a decimal string.
pub fn ledger_json(ledger: &WellLedger) -> Value {
    let wells: Vec<Value> = ledger
        .wells()
        .iter()
        .map(|w| {
            json!({
                "index": w.index,
                "character": w.character.short(),
                "center": fmt_f64(w.center),
                "log_half_width": fmt_f64(w.log_half_width),
                "depth": fmt_f64(w.depth),
            })
        })
        .collect();
    json!({
        "epsilon": fmt_f64(ledger.params().epsilon()),
        "truncation": ledger.truncation(),
        "mode": mode_name(ledger.mode()),
        "wells": wells,
    })
}

/// Finite floats as JSON numbers, the rest as strings.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or_else(|| Value::String(fmt_f64(x)), Value::Number)
}
