//! Per-frame label probability matrices and the CTC collapse map.

use std::ops::Range;
use std::sync::Arc;

use thiserror::Error;

use crate::alphabet::{Alphabet, Label};

/// Maximum deviation of a row sum from 1.
pub const ROW_SUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfMatError {
    #[error("row {row} not stochastic (sums to {sum})")]
    RowNotStochastic { row: usize, sum: f64 },
    #[error("row {row} label {label}: value {value} outside [0,1]")]
    EntryOutOfRange {
        row: usize,
        label: usize,
        value: f64,
    },
    #[error("row {row} has {got} entries, expected {expected}")]
    RowLength {
        row: usize,
        got: usize,
        expected: usize,
    },
    #[error("label index {0} out of range")]
    LabelOutOfRange(Label),
    #[error("alphabet mismatch")]
    AlphabetMismatch,
    #[error("alphabet has no space character for the insert-space separator")]
    NoSpaceLabel,
}

/// How consecutive line matrices are joined into one record matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SeparatorPolicy {
    /// One synthetic frame, certain on the space character, between parts.
    #[default]
    InsertSpace,
    None,
}

impl std::str::FromStr for SeparatorPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "insert-space" => Ok(Self::InsertSpace),
            "none" => Ok(Self::None),
            other => Err(format!("unknown separator policy {other:?}")),
        }
    }
}

/// A `T x L` matrix of label probabilities, one row per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfMat {
    alphabet: Arc<Alphabet>,
    data: Vec<f64>,
    frames: usize,
}

impl ConfMat {
    /// Builds a matrix from rows, checking that each row is a probability
    /// distribution.
    pub fn new(alphabet: Arc<Alphabet>, rows: Vec<Vec<f64>>) -> Result<Self, ConfMatError> {
        let cm = Self::from_rows(alphabet, rows)?;
        for t in 0..cm.frames {
            check_stochastic(t, cm.row(t))?;
        }
        Ok(cm)
    }

    /// Builds a matrix whose rows are non-negative scores without requiring
    /// them to sum to one, e.g. likelihoods rescaled per frame.
    pub fn with_unnormalized_rows(
        alphabet: Arc<Alphabet>,
        rows: Vec<Vec<f64>>,
    ) -> Result<Self, ConfMatError> {
        let cm = Self::from_rows(alphabet, rows)?;
        for t in 0..cm.frames {
            for (l, &v) in cm.row(t).iter().enumerate() {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(ConfMatError::EntryOutOfRange {
                        row: t,
                        label: l,
                        value: v,
                    });
                }
            }
        }
        Ok(cm)
    }

    fn from_rows(alphabet: Arc<Alphabet>, rows: Vec<Vec<f64>>) -> Result<Self, ConfMatError> {
        let width = alphabet.len();
        let frames = rows.len();
        let mut data = Vec::with_capacity(frames * width);
        for (t, row) in rows.into_iter().enumerate() {
            if row.len() != width {
                return Err(ConfMatError::RowLength {
                    row: t,
                    got: row.len(),
                    expected: width,
                });
            }
            data.extend(row);
        }
        Ok(Self {
            alphabet,
            data,
            frames,
        })
    }

    pub fn empty(alphabet: Arc<Alphabet>) -> Self {
        Self {
            alphabet,
            data: Vec::new(),
            frames: 0,
        }
    }

    /// Matrix that puts all mass on the given label at each frame.
    pub fn one_hot(alphabet: Arc<Alphabet>, labels: &[Label]) -> Result<Self, ConfMatError> {
        let width = alphabet.len();
        let mut data = vec![0.0; labels.len() * width];
        for (t, &l) in labels.iter().enumerate() {
            if l >= width {
                return Err(ConfMatError::LabelOutOfRange(l));
            }
            data[t * width + l] = 1.0;
        }
        Ok(Self {
            alphabet,
            data,
            frames: labels.len(),
        })
    }

    pub fn alphabet(&self) -> &Arc<Alphabet> {
        &self.alphabet
    }

    /// Frame count `T`.
    pub fn frames(&self) -> usize {
        self.frames
    }

    /// Label count `L`.
    pub fn labels(&self) -> usize {
        self.alphabet.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames == 0
    }

    pub fn row(&self, t: usize) -> &[f64] {
        let w = self.labels();
        &self.data[t * w..(t + 1) * w]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        // chunks_exact panics on zero width, which Alphabet rules out.
        self.data.chunks_exact(self.labels())
    }

    pub fn prob(&self, t: usize, label: Label) -> f64 {
        self.data[t * self.labels() + label]
    }

    /// Natural log of `prob`, with `ln 0 = -inf`.
    pub fn log_prob(&self, t: usize, label: Label) -> f64 {
        self.prob(t, label).ln()
    }

    /// Copy of the half-open frame range.
    pub fn slice(&self, frames: Range<usize>) -> Self {
        let w = self.labels();
        let end = frames.end.min(self.frames);
        let start = frames.start.min(end);
        Self {
            alphabet: Arc::clone(&self.alphabet),
            data: self.data[start * w..end * w].to_vec(),
            frames: end - start,
        }
    }

    /// Row-wise concatenation of `parts` in order.
    pub fn concat(
        alphabet: Arc<Alphabet>,
        parts: &[ConfMat],
        policy: SeparatorPolicy,
    ) -> Result<Self, ConfMatError> {
        if parts.iter().any(|p| *p.alphabet != *alphabet) {
            return Err(ConfMatError::AlphabetMismatch);
        }
        let separator = match policy {
            SeparatorPolicy::InsertSpace if parts.len() > 1 => {
                let space = alphabet.label_of(' ').ok_or(ConfMatError::NoSpaceLabel)?;
                let mut row = vec![0.0; alphabet.len()];
                row[space] = 1.0;
                Some(row)
            }
            _ => None,
        };
        let mut data = Vec::new();
        let mut frames = 0;
        for (i, part) in parts.iter().enumerate() {
            if i > 0 {
                if let Some(sep) = &separator {
                    data.extend_from_slice(sep);
                    frames += 1;
                }
            }
            data.extend_from_slice(&part.data);
            frames += part.frames;
        }
        Ok(Self {
            alphabet,
            data,
            frames,
        })
    }
}

pub(crate) fn check_stochastic(t: usize, row: &[f64]) -> Result<(), ConfMatError> {
    for (l, &v) in row.iter().enumerate() {
        if !(0.0..=1.0).contains(&v) {
            return Err(ConfMatError::EntryOutOfRange {
                row: t,
                label: l,
                value: v,
            });
        }
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
        return Err(ConfMatError::RowNotStochastic { row: t, sum });
    }
    Ok(())
}

/// The collapse map: merges runs of identical labels, then drops NaC.
pub fn collapse(seq: &[Label], nac: Label) -> Vec<Label> {
    let mut out = Vec::with_capacity(seq.len());
    let mut prev = None;
    for &l in seq {
        if prev != Some(l) && l != nac {
            out.push(l);
        }
        prev = Some(l);
    }
    out
}

/// Collapses a label sequence and renders it as text.
pub fn collapse_to_string(seq: &[Label], alphabet: &Alphabet) -> String {
    collapse(seq, alphabet.nac())
        .into_iter()
        .filter_map(|l| alphabet.char_of(l))
        .collect()
}

/// Probability of a label sequence; zero unless it has exactly one label per
/// frame.
pub fn seq_probability(seq: &[Label], cm: &ConfMat) -> Result<f64, ConfMatError> {
    if let Some(&bad) = seq.iter().find(|&&l| l >= cm.labels()) {
        return Err(ConfMatError::LabelOutOfRange(bad));
    }
    if seq.len() != cm.frames() {
        return Ok(0.0);
    }
    Ok(seq
        .iter()
        .enumerate()
        .map(|(t, &l)| cm.prob(t, l))
        .product())
}

/// Log-domain `seq_probability`; `-inf` on length mismatch.
pub fn seq_log_probability(seq: &[Label], cm: &ConfMat) -> Result<f64, ConfMatError> {
    if let Some(&bad) = seq.iter().find(|&&l| l >= cm.labels()) {
        return Err(ConfMatError::LabelOutOfRange(bad));
    }
    if seq.len() != cm.frames() {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(seq
        .iter()
        .enumerate()
        .map(|(t, &l)| cm.log_prob(t, l))
        .sum())
}

/// Per-frame argmax labels, lowest index on ties.
pub fn best_path_labels(cm: &ConfMat) -> Vec<Label> {
    cm.rows()
        .map(|row| {
            let mut best = 0;
            for (l, &v) in row.iter().enumerate().skip(1) {
                if v > row[best] {
                    best = l;
                }
            }
            best
        })
        .collect()
}

/// Unconstrained decoding: collapse of the per-frame argmax and its log
/// probability.
pub fn greedy_best_path(cm: &ConfMat) -> (String, f64) {
    let labels = best_path_labels(cm);
    let score = labels
        .iter()
        .enumerate()
        .map(|(t, &l)| cm.log_prob(t, l))
        .sum();
    (collapse_to_string(&labels, cm.alphabet()), score)
}
