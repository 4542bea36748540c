//! Word lists with relative frequencies.

use std::collections::HashSet;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LexiconError {
    #[error("lexicon {0:?} is empty")]
    Empty(String),
    #[error("lexicon {name:?}: duplicate word {word:?}")]
    Duplicate { name: String, word: String },
    #[error("lexicon {name:?}: empty word")]
    EmptyWord { name: String },
    #[error("lexicon {name:?}: weight {weight} of {word:?} must be positive and finite")]
    BadWeight {
        name: String,
        word: String,
        weight: f64,
    },
    #[error("lexicon {name:?}: frequencies sum to {sum}, expected 1")]
    NotNormalized { name: String, sum: f64 },
    #[error("lexicon {name:?} line {line}: {message}")]
    Parse {
        name: String,
        line: usize,
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lexicon {
    name: String,
    entries: Vec<(String, f64)>,
}

impl Lexicon {
    /// Builds a lexicon from words and relative frequencies, which must sum
    /// to one within 1e-6.
    pub fn new(name: impl Into<String>, entries: Vec<(String, f64)>) -> Result<Self, LexiconError> {
        let name = name.into();
        validate(&name, &entries)?;
        let sum: f64 = entries.iter().map(|(_, f)| f).sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(LexiconError::NotNormalized { name, sum });
        }
        Ok(Self { name, entries })
    }

    /// Builds a lexicon from positive counts (or unnormalized weights).
    pub fn from_counts(
        name: impl Into<String>,
        counts: Vec<(String, f64)>,
    ) -> Result<Self, LexiconError> {
        let name = name.into();
        validate(&name, &counts)?;
        let total: f64 = counts.iter().map(|(_, c)| c).sum();
        let entries = counts.into_iter().map(|(w, c)| (w, c / total)).collect();
        Ok(Self { name, entries })
    }

    /// Parses `<count-or-frequency>\t<word>` lines. Blank lines and lines
    /// starting with `#` are skipped.
    pub fn parse(name: impl Into<String>, text: &str) -> Result<Self, LexiconError> {
        let name = name.into();
        let mut counts = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| LexiconError::Parse {
                name: name.clone(),
                line: i + 1,
                message,
            };
            let (count, word) = line
                .split_once('\t')
                .ok_or_else(|| err("expected `<count>\\t<word>`".into()))?;
            let count: f64 = count
                .trim()
                .parse()
                .map_err(|e| err(format!("bad count {count:?}: {e}")))?;
            counts.push((word.to_string(), count));
        }
        Self::from_counts(name, counts)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn frequency(&self, word: &str) -> Option<f64> {
        self.entries
            .iter()
            .find(|(w, _)| w == word)
            .map(|(_, f)| *f)
    }

    /// Smallest log frequency over all words.
    pub fn min_log_frequency(&self) -> f64 {
        self.entries
            .iter()
            .map(|(_, f)| f.ln())
            .fold(f64::INFINITY, f64::min)
    }
}

fn validate(name: &str, entries: &[(String, f64)]) -> Result<(), LexiconError> {
    if entries.is_empty() {
        return Err(LexiconError::Empty(name.to_string()));
    }
    let mut seen = HashSet::new();
    for (word, weight) in entries {
        if word.is_empty() {
            return Err(LexiconError::EmptyWord {
                name: name.to_string(),
            });
        }
        if !(weight.is_finite() && *weight > 0.0) {
            return Err(LexiconError::BadWeight {
                name: name.to_string(),
                word: word.clone(),
                weight: *weight,
            });
        }
        if !seen.insert(word.as_str()) {
            return Err(LexiconError::Duplicate {
                name: name.to_string(),
                word: word.clone(),
            });
        }
    }
    Ok(())
}
