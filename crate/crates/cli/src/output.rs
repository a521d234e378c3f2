//! Record tables and run metadata.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use debias_bench::records::{write_csv, write_jsonl, SCHEMA_VERSION};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::Format;
use crate::error::CliResult;

fn create(path: &Path) -> io::Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| io::Error::new(e.kind(), format!("cannot create {}: {e}", path.display())))
}

/// Writes `rows` to `output` (stdout when `None`).
pub fn write_rows<S: Serialize>(rows: &[S], output: Option<&Path>, format: Format) -> CliResult<()> {
    let sink: Box<dyn Write> = match output {
        Some(path) => Box::new(create(path)?),
        None => Box::new(io::stdout().lock()),
    };
    match format {
        Format::Csv => write_csv(sink, rows)?,
        Format::Json => write_jsonl(sink, rows)?,
    }
    Ok(())
}

/// Metadata goes to `meta`, else next to `output` as `<output>.meta.json`,
/// else to stderr as one JSON line.
pub fn write_meta(
    command: &str,
    config: &impl Serialize,
    extra: Value,
    output: Option<&Path>,
    meta: Option<&Path>,
) -> CliResult<()> {
    let mut doc = json!({
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": config,
    });
    if let (Value::Object(d), Value::Object(e)) = (&mut doc, extra) {
        d.extend(e);
    }
    let target: Option<PathBuf> = meta.map(Path::to_path_buf).or_else(|| {
        output.map(|p| {
            let mut s = p.as_os_str().to_owned();
            s.push(".meta.json");
            PathBuf::from(s)
        })
    });
    match target {
        Some(path) => {
            let mut w = create(&path)?;
            serde_json::to_writer_pretty(&mut w, &doc).map_err(io::Error::other)?;
            w.write_all(b"\n")?;
            w.flush()?;
        }
        None => eprintln!("{doc}"),
    }
    Ok(())
}

/// Pretty JSON on stdout.
pub fn print_json(value: &impl Serialize) -> CliResult<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value).map_err(io::Error::other)?;
    out.write_all(b"\n")?;
    Ok(())
}
