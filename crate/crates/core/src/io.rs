//! Plain-text image and vector files.

use std::fs;
use std::path::Path;

use crate::error::{check_len, Error, Result};

/// A grayscale image with intensities nominally in `[0, 1]`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct GrayImage {
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

/// Parses an ASCII (P2) PGM image, scaling samples by `1/maxval`.
pub fn parse_pgm(text: &str, origin: &Path) -> Result<GrayImage> {
    let mut tokens = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let content = line.split('#').next().unwrap_or("");
        tokens.extend(content.split_whitespace().map(|t| (i + 1, t)));
    }
    let err = |line: usize, message: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };
    let mut it = tokens.into_iter();
    match it.next() {
        Some((_, "P2")) => {}
        Some((l, m)) => return Err(err(l, format!("expected magic `P2`, got `{m}`"))),
        None => return Err(err(1, "empty file".into())),
    }
    let mut header = [0usize; 3];
    for slot in header.iter_mut() {
        let (l, t) = it.next().ok_or_else(|| err(1, "truncated header".into()))?;
        *slot = t.parse().map_err(|e| err(l, format!("bad header field `{t}`: {e}")))?;
    }
    let [width, height, maxval] = header;
    if width == 0 || height == 0 || maxval == 0 {
        return Err(err(1, "width, height and maxval must be positive".into()));
    }
    let mut data = Vec::with_capacity(width * height);
    for (l, t) in it {
        let v: usize = t.parse().map_err(|e| err(l, format!("bad sample `{t}`: {e}")))?;
        if v > maxval {
            return Err(err(l, format!("sample {v} exceeds maxval {maxval}")));
        }
        data.push(v as f64 / maxval as f64);
    }
    if data.len() != width * height {
        return Err(err(
            text.lines().count().max(1),
            format!("expected {} samples, got {}", width * height, data.len()),
        ));
    }
    Ok(GrayImage { height, width, data })
}

pub fn read_pgm(path: &Path) -> Result<GrayImage> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    parse_pgm(&text, path)
}

/// Renders `data` as a P2 PGM with maxval 255, clamping to `[0, 1]`.
pub fn format_pgm(height: usize, width: usize, data: &[f64]) -> Result<String> {
    check_len("format_pgm", height * width, data.len())?;
    let mut out = format!("P2\n{width} {height}\n255\n");
    for row in data.chunks(width.max(1)) {
        let line: Vec<String> = row
            .iter()
            .map(|v| ((v.clamp(0.0, 1.0) * 255.0).round() as u32).to_string())
            .collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    Ok(out)
}

pub fn write_pgm(path: &Path, height: usize, width: usize, data: &[f64]) -> Result<()> {
    let text = format_pgm(height, width, data)?;
    fs::write(path, text).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

/// Writes equal-length columns as CSV, reals in shortest round-trip form.
pub fn write_columns_csv(path: &Path, headers: &[&str], columns: &[&[f64]]) -> Result<()> {
    check_len("write_columns_csv", headers.len(), columns.len())?;
    let rows = columns.first().map_or(0, |c| c.len());
    for c in columns {
        check_len("write_columns_csv", rows, c.len())?;
    }
    let mut out = headers.join(",");
    out.push('\n');
    for i in 0..rows {
        let cells: Vec<String> = columns.iter().map(|c| format!("{:?}", c[i])).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

/// Reads one named column from a CSV written by [`write_columns_csv`].
pub fn read_csv_column(path: &Path, name: &str) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
    let col = header
        .split(',')
        .position(|h| h.trim() == name)
        .ok_or_else(|| err(1, format!("no column `{name}`")))?;
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cell = line
            .split(',')
            .nth(col)
            .ok_or_else(|| err(i + 2, "short row".into()))?;
        out.push(cell.trim().parse().map_err(|e| err(i + 2, format!("`{cell}`: {e}")))?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_round_trip() {
        let img = [0.0, 1.0, 0.2, 0.4, 0.6, 0.8];
        let text = format_pgm(2, 3, &img).unwrap();
        assert!(text.starts_with("P2\n3 2\n255\n"));
        let back = parse_pgm(&text, Path::new("mem")).unwrap();
        assert_eq!((back.height, back.width), (2, 3));
        for (a, b) in back.data.iter().zip(img) {
            assert!((a - b).abs() <= 0.5 / 255.0 + 1e-12);
        }
    }

    #[test]
    fn pgm_comments_and_errors() {
        let text = "P2\n# made by hand\n2 1\n# max\n4\n0 4\n";
        assert_eq!(parse_pgm(text, Path::new("m")).unwrap().data, vec![0.0, 1.0]);
        assert!(parse_pgm("P5\n1 1\n1\n0\n", Path::new("m")).is_err());
        assert!(parse_pgm("P2\n2 1\n4\n0\n", Path::new("m")).is_err());
        assert!(parse_pgm("P2\n1 1\n4\n9\n", Path::new("m")).is_err());
    }

    #[test]
    fn csv_columns_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("v.csv");
        let x = [0.1, -1.0 / 3.0, 1e-300];
        let idx = [0.0, 1.0, 2.0];
        write_columns_csv(&p, &["index", "x"], &[&idx, &x]).unwrap();
        assert_eq!(read_csv_column(&p, "x").unwrap(), x.to_vec());
        assert!(read_csv_column(&p, "y").is_err());
    }
}
