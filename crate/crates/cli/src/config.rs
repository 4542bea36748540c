//! Loading the files a command names, with errors mapped to exit codes.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::Args;

use rxctc::compile::DEFAULT_OOV_LOGPENALTY;
use rxctc::format::{parse_alphabet, read_confmat_file, FormatError};
use rxctc::{Alphabet, ConfMat, Lexicon, PriorMode, PriorModel};

use crate::error::CliError;

#[derive(Debug, Args)]
pub struct PriorArgs {
    /// Multiplier on lexicon log frequencies, at least 0.
    #[arg(long, default_value_t = 1.0)]
    prior_scale: f64,
    /// Log weight charged per character of an out-of-vocabulary word, at most 0.
    #[arg(long, default_value_t = DEFAULT_OOV_LOGPENALTY, allow_hyphen_values = true)]
    oov_penalty: f64,
    /// Give lexicon words zero weight instead of their log frequency.
    #[arg(long)]
    no_prior: bool,
}

impl PriorArgs {
    pub fn model(&self) -> Result<PriorModel, CliError> {
        let model = PriorModel {
            mode: if self.no_prior {
                PriorMode::Off
            } else {
                PriorMode::Competition
            },
            oov_char_logpenalty: self.oov_penalty,
            prior_scale: self.prior_scale,
        };
        model
            .validate()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(model)
    }
}

pub fn parse_beam(s: &str) -> Result<rxctc::Beam, String> {
    if s == "unbounded" {
        return Ok(rxctc::Beam::Unbounded);
    }
    match s.parse::<usize>() {
        Ok(n) if n > 0 => Ok(rxctc::Beam::Width(n)),
        _ => Err(format!(
            "expected a positive width or `unbounded`, got {s:?}"
        )),
    }
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn load_alphabet(path: &Path) -> Result<Arc<Alphabet>, CliError> {
    let alphabet = parse_alphabet(&read_text(path)?).map_err(|e| CliError::grammar(path, e))?;
    Ok(Arc::new(alphabet))
}

/// Files in `dir` with extension `ext`, keyed by file stem, in name order.
fn files_by_stem(dir: &Path, ext: &str) -> Result<BTreeMap<String, PathBuf>, CliError> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).map_err(|e| CliError::io(dir, e))? {
        let path = entry.map_err(|e| CliError::io(dir, e))?.path();
        if path.extension().is_some_and(|x| x == ext) {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                out.insert(stem.to_string(), path);
            }
        }
    }
    Ok(out)
}

/// Every `<name>.txt` in `dir`, as lexicon `name`.
pub fn load_lexicons(dir: &Path) -> Result<BTreeMap<String, Lexicon>, CliError> {
    files_by_stem(dir, "txt")?
        .into_iter()
        .map(|(name, path)| {
            let lex = Lexicon::parse(name.as_str(), &read_text(&path)?)
                .map_err(|e| CliError::grammar(&path, e))?;
            Ok((name, lex))
        })
        .collect()
}

/// Every `<person>.rx` in `dir`.
pub fn load_grammar_dir(dir: &Path) -> Result<BTreeMap<String, PathBuf>, CliError> {
    files_by_stem(dir, "rx")
}

/// Reads a ConfMat and checks that its labels are those of `alphabet`.
pub fn load_confmat(path: &Path, alphabet: &Arc<Alphabet>) -> Result<ConfMat, CliError> {
    let cm = read_confmat_file(path).map_err(|e| match e {
        FormatError::Io(source) => CliError::io(path, source),
        e => CliError::data(path, e),
    })?;
    if cm.alphabet() != alphabet {
        return Err(CliError::data(
            path,
            format!(
                "labels [{}] differ from the alphabet [{}]",
                cm.alphabet().tokens().join(" "),
                alphabet.tokens().join(" ")
            ),
        ));
    }
    Ok(cm)
}
