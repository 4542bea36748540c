//! Text formats: ConfMat files, alphabet files and record manifests.
//!
//! A ConfMat file is
//!
//! ```text
//! CONFMAT 1
//! <T> <L>
//! <L label tokens>
//! <T lines of L probabilities>
//! ```
//!
//! Label tokens are `<nac>`, `<sp>`, `<nl>` or a single character.

use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use thiserror::Error;

use crate::alphabet::Alphabet;
use crate::confmat::{check_stochastic, ConfMat, ConfMatError};

pub const CONFMAT_MAGIC: &str = "CONFMAT 1";

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl FormatError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        Self::Parse {
            line,
            message: message.into(),
        }
    }

    /// 1-based line number of a parse error.
    pub fn line(&self) -> Option<usize> {
        match self {
            Self::Parse { line, .. } => Some(*line),
            Self::Io(_) => None,
        }
    }
}

/// Reads a ConfMat file. Rows must be stochastic within `ROW_SUM_TOLERANCE`.
pub fn load_confmat<R: BufRead>(reader: R) -> Result<ConfMat, FormatError> {
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut next = |what: &str| -> Result<(usize, String), FormatError> {
        match lines.next() {
            Some((n, l)) => Ok((n, l?)),
            None => Err(FormatError::at(
                0,
                format!("unexpected end of file, expected {what}"),
            )),
        }
    };

    let (n, magic) = next("header")?;
    if magic.trim_end() != CONFMAT_MAGIC {
        return Err(FormatError::at(n, format!("malformed header {magic:?}")));
    }
    let (n, dims) = next("dimensions")?;
    let dims: Vec<usize> = dims
        .split_whitespace()
        .map(|d| d.parse())
        .collect::<Result<_, _>>()
        .map_err(|e| FormatError::at(n, format!("bad dimensions: {e}")))?;
    let [frames, width] = dims[..] else {
        return Err(FormatError::at(n, "dimensions must be `<T> <L>`"));
    };
    let (n, tokens) = next("label tokens")?;
    let alphabet = Alphabet::from_tokens(tokens.split_whitespace())
        .map_err(|e| FormatError::at(n, e.to_string()))?;
    if alphabet.len() != width {
        return Err(FormatError::at(
            n,
            format!("{} label tokens, header declares {width}", alphabet.len()),
        ));
    }

    let mut rows = Vec::with_capacity(frames);
    for (n, line) in lines.by_ref() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if rows.len() == frames {
            return Err(FormatError::at(
                n,
                format!("row count mismatch: more than {frames} rows"),
            ));
        }
        let row: Vec<f64> = line
            .split_whitespace()
            .map(|v| v.parse())
            .collect::<Result<_, _>>()
            .map_err(|e| FormatError::at(n, format!("bad probability: {e}")))?;
        if row.len() != width {
            return Err(FormatError::at(
                n,
                format!("row has {} values, expected {width}", row.len()),
            ));
        }
        check_stochastic(rows.len(), &row).map_err(|e| match e {
            ConfMatError::RowNotStochastic { sum, .. } => {
                FormatError::at(n, format!("row not stochastic (sums to {sum})"))
            }
            other => FormatError::at(n, other.to_string()),
        })?;
        rows.push(row);
    }
    if rows.len() != frames {
        return Err(FormatError::at(
            0,
            format!(
                "row count mismatch: header declares {frames} rows, found {}",
                rows.len()
            ),
        ));
    }
    ConfMat::new(Arc::new(alphabet), rows).map_err(|e| FormatError::at(0, e.to_string()))
}

/// Writes a ConfMat; values carry 17 significant digits so that loading
/// reproduces them exactly.
pub fn save_confmat<W: Write>(cm: &ConfMat, mut w: W) -> io::Result<()> {
    writeln!(w, "{CONFMAT_MAGIC}")?;
    writeln!(w, "{} {}", cm.frames(), cm.labels())?;
    writeln!(w, "{}", cm.alphabet().tokens().join(" "))?;
    for row in cm.rows() {
        let mut first = true;
        for v in row {
            if !first {
                w.write_all(b" ")?;
            }
            first = false;
            write!(w, "{v:.16e}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn read_confmat_file(path: &Path) -> Result<ConfMat, FormatError> {
    let f = std::fs::File::open(path)?;
    load_confmat(io::BufReader::new(f))
}

/// Reads an alphabet file: label tokens separated by whitespace, possibly
/// spread over several lines. `#` starts a comment line.
pub fn parse_alphabet(text: &str) -> Result<Alphabet, FormatError> {
    let tokens = text
        .lines()
        .filter(|l| !l.trim_start().starts_with('#'))
        .flat_map(str::split_whitespace);
    Alphabet::from_tokens(tokens).map_err(|e| FormatError::at(0, e.to_string()))
}

/// Grammar files hold one expression; the final line break, if any, is not
/// part of it.
pub fn grammar_source(text: &str) -> &str {
    text.strip_suffix('\n')
        .map(|t| t.strip_suffix('\r').unwrap_or(t))
        .unwrap_or(text)
}

/// One record of a manifest: an identifier and its line ConfMats in reading
/// order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestRecord {
    pub id: String,
    pub lines: Vec<PathBuf>,
}

/// Parses a manifest. Blank lines separate records; a `# <id>` line names the
/// record it precedes, otherwise records are numbered from 1. Relative paths
/// are resolved against `base`.
pub fn parse_manifest(text: &str, base: &Path) -> Vec<ManifestRecord> {
    let mut records = Vec::new();
    let mut id: Option<String> = None;
    let mut lines: Vec<PathBuf> = Vec::new();
    let mut flush = |id: &mut Option<String>, lines: &mut Vec<PathBuf>| {
        if !lines.is_empty() {
            let n = records.len() + 1;
            records.push(ManifestRecord {
                id: id.take().unwrap_or_else(|| n.to_string()),
                lines: std::mem::take(lines),
            });
        }
    };
    for raw in text.lines() {
        let line = raw.trim();
        if line.is_empty() {
            flush(&mut id, &mut lines);
        } else if let Some(name) = line.strip_prefix('#') {
            flush(&mut id, &mut lines);
            id = Some(name.trim().to_string());
        } else {
            lines.push(base.join(line));
        }
    }
    flush(&mut id, &mut lines);
    records
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ConfMat {
        let al = Arc::new(Alphabet::from_tokens("<nac> a <sp> <nl>".split(' ')).unwrap());
        ConfMat::new(
            al,
            vec![
                vec![0.1, 0.2, 0.3, 0.4],
                vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0],
            ],
        )
        .unwrap()
    }

    #[test]
    fn save_then_load_is_identity() {
        let cm = sample();
        let mut buf = Vec::new();
        save_confmat(&cm, &mut buf).unwrap();
        let back = load_confmat(buf.as_slice()).unwrap();
        assert_eq!(back, cm);
    }

    #[test]
    fn half_mass_row_is_rejected() {
        let text = "CONFMAT 1\n1 2\n<nac> a\n0.25 0.25\n";
        let err = load_confmat(text.as_bytes()).unwrap_err();
        assert_eq!(err.line(), Some(4));
        assert!(err.to_string().contains("row not stochastic"), "{err}");
    }

    #[test]
    fn missing_rows_are_rejected() {
        let text = "CONFMAT 1\n3 2\n<nac> a\n0.5 0.5\n0.5 0.5\n";
        let err = load_confmat(text.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("row count mismatch"), "{err}");
    }

    #[test]
    fn extra_rows_and_bad_header_are_rejected() {
        let text = "CONFMAT 1\n1 2\n<nac> a\n0.5 0.5\n0.5 0.5\n";
        assert_eq!(load_confmat(text.as_bytes()).unwrap_err().line(), Some(5));
        let text = "CONFMAT 2\n1 2\n<nac> a\n0.5 0.5\n";
        assert_eq!(load_confmat(text.as_bytes()).unwrap_err().line(), Some(1));
        let text = "CONFMAT 1\n1 3\n<nac> a\n0.5 0.5\n";
        assert_eq!(load_confmat(text.as_bytes()).unwrap_err().line(), Some(3));
    }

    #[test]
    fn manifest_records() {
        let m = parse_manifest("a.cm\nb.cm\n\n\n# R7\nc.cm\n", Path::new("/x"));
        assert_eq!(m.len(), 2);
        assert_eq!(m[0].id, "1");
        assert_eq!(
            m[0].lines,
            vec![PathBuf::from("/x/a.cm"), PathBuf::from("/x/b.cm")]
        );
        assert_eq!(m[1].id, "R7");
        assert_eq!(m[1].lines, vec![PathBuf::from("/x/c.cm")]);
    }
}
