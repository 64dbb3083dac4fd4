use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::IterationRecord;

pub const HISTORY_HEADER: &str =
    "iter,objective,fp_residual_lambda,kkt_residual,feasibility_violation,elapsed_ms";

/// Writes the header and one row per record. Reals use Rust's shortest
/// round-trip formatting, so parsing the file recovers every value exactly.
pub fn emit_history_csv<W: Write>(history: &[IterationRecord], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{HISTORY_HEADER}")?;
    for r in history {
        writeln!(
            out,
            "{},{:?},{:?},{:?},{:?},{:?}",
            r.iter,
            r.objective,
            r.fp_residual_lambda,
            r.kkt_residual,
            r.feasibility_violation,
            r.elapsed_ms
        )?;
    }
    out.flush()
}

pub fn write_history_csv(history: &[IterationRecord], path: &Path) -> Result<()> {
    let io_err = |source| Error::Io { path: path.to_path_buf(), source };
    let file = File::create(path).map_err(io_err)?;
    emit_history_csv(history, BufWriter::new(file)).map_err(io_err)
}

pub fn parse_history_csv<R: BufRead>(input: R, origin: &Path) -> Result<Vec<IterationRecord>> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };
    let mut lines = input.lines().enumerate();
    match lines.next() {
        Some((_, Ok(h))) if h.trim_end() == HISTORY_HEADER => {}
        Some((_, Ok(h))) => return Err(parse_err(1, format!("unexpected header `{h}`"))),
        Some((_, Err(e))) => return Err(Error::Io { path: origin.to_path_buf(), source: e }),
        None => return Err(parse_err(1, "empty file".into())),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        let line = line.map_err(|e| Error::Io { path: origin.to_path_buf(), source: e })?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.trim_end().split(',').collect();
        if fields.len() != 6 {
            return Err(parse_err(i + 1, format!("expected 6 fields, got {}", fields.len())));
        }
        let real = |k: usize| -> Result<f64> {
            fields[k]
                .parse::<f64>()
                .map_err(|e| parse_err(i + 1, format!("field {}: {e}", k + 1)))
        };
        out.push(IterationRecord {
            iter: fields[0]
                .parse()
                .map_err(|e| parse_err(i + 1, format!("iter: {e}")))?,
            objective: real(1)?,
            fp_residual_lambda: real(2)?,
            kkt_residual: real(3)?,
            feasibility_violation: real(4)?,
            elapsed_ms: real(5)?,
        });
    }
    Ok(out)
}

pub fn read_history_csv(path: &Path) -> Result<Vec<IterationRecord>> {
    let file = File::open(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    parse_history_csv(BufReader::new(file), path)
}
