use std::fs::OpenOptions;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

/// Bumped whenever a header, column or document key changes.
pub const SCHEMA_VERSION: u32 = 1;

/// Opens `path` for writing (appending if asked), or stdout.
pub fn open(path: Option<&Path>, append: bool) -> Result<Box<dyn Write>> {
    match path {
        None => Ok(Box::new(BufWriter::new(io::stdout()))),
        Some(p) => {
            let file = OpenOptions::new()
                .create(true)
                .write(true)
                .append(append)
                .truncate(!append)
                .open(p)
                .with_context(|| format!("cannot open {}", p.display()))?;
            Ok(Box::new(BufWriter::new(file)))
        }
    }
}

/// Comment lines opening every CSV or table output: the schema tag and the
/// fully resolved configuration. Concatenated outputs stay parseable since
/// each block starts with its own header.
pub fn write_header(out: &mut dyn Write, kind: &str, config: &Value) -> Result<()> {
    writeln!(out, "# mfdim-{kind} v{SCHEMA_VERSION}")?;
    writeln!(out, "# config: {config}")?;
    Ok(())
}

/// One JSON document per line, so appended runs form a JSON Lines file.
pub fn write_json_doc<T: Serialize>(
    out: &mut dyn Write,
    kind: &str,
    config: &Value,
    result: &T,
) -> Result<()> {
    let doc = json!({
        "schema": format!("mfdim-{kind}/{SCHEMA_VERSION}"),
        "config": config,
        "result": result,
    });
    writeln!(out, "{}", serde_json::to_string(&doc)?)?;
    Ok(())
}
