use std::fs::File;
use std::io::{self, BufWriter, Write};

use crate::CliError;

pub const SCHEMA: u32 = 1;

/// CSV destination: a file path, or standard output for `-`.
pub fn open(path: &str) -> Result<Box<dyn Write>, CliError> {
    if path == "-" {
        Ok(Box::new(BufWriter::new(io::stdout().lock())))
    } else {
        let f = File::create(path).map_err(|e| CliError::Io(format!("{path}: {e}")))?;
        Ok(Box::new(BufWriter::new(f)))
    }
}

/// Writes the `#` comment header: schema, tool version, command, resolved
/// configuration, then any extra lines.
pub fn header(
    out: &mut dyn Write,
    command: &str,
    config: &[(String, String)],
    extra: &[String],
) -> io::Result<()> {
    writeln!(out, "# schema={SCHEMA}")?;
    writeln!(out, "# generator=cavity-qnd {}", env!("CARGO_PKG_VERSION"))?;
    writeln!(out, "# command={command}")?;
    for (k, v) in config {
        writeln!(out, "# {k}={v}")?;
    }
    for line in extra {
        writeln!(out, "# {line}")?;
    }
    Ok(())
}

/// Shortest representation that parses back to the same value, in
/// scientific notation outside `[1e-4, 1e15)`.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn writer(out: Box<dyn Write>) -> csv::Writer<Box<dyn Write>> {
    csv::WriterBuilder::new().from_writer(out)
}
