//! Character set and label set of a recognizer output layer.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

/// File token for the not-a-character label.
pub const NAC_TOKEN: &str = "<nac>";
/// File token for the space character.
pub const SPACE_TOKEN: &str = "<sp>";
/// File token for the linebreak character.
pub const NEWLINE_TOKEN: &str = "<nl>";

/// Index of a label within the label set (characters plus NaC).
pub type Label = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AlphabetError {
    #[error("duplicate character {0:?} in alphabet")]
    Duplicate(char),
    #[error("alphabet declares no NaC label")]
    MissingNac,
    #[error("alphabet declares more than one NaC label")]
    DuplicateNac,
    #[error("invalid label token {0:?}")]
    BadToken(String),
    #[error("NaC index {index} out of range for {len} labels")]
    NacOutOfRange { index: usize, len: usize },
}

/// The ordered character set together with the position of the NaC label.
///
/// Label indices run over `0..len()`. The NaC label sits at `nac()`, the
/// characters fill the remaining slots in order.
#[derive(Clone, PartialEq, Eq)]
pub struct Alphabet {
    labels: Vec<Option<char>>,
    nac: Label,
    index: HashMap<char, Label>,
}

impl Alphabet {
    /// Builds an alphabet whose label set is `characters` with NaC inserted
    /// at `nac_index`.
    pub fn new(characters: &[char], nac_index: usize) -> Result<Self, AlphabetError> {
        if nac_index > characters.len() {
            return Err(AlphabetError::NacOutOfRange {
                index: nac_index,
                len: characters.len() + 1,
            });
        }
        let mut labels: Vec<Option<char>> = characters.iter().copied().map(Some).collect();
        labels.insert(nac_index, None);
        Self::from_labels(labels)
    }

    /// Builds an alphabet from a full label list where `None` marks NaC.
    pub fn from_labels(labels: Vec<Option<char>>) -> Result<Self, AlphabetError> {
        let mut nac = None;
        let mut index = HashMap::with_capacity(labels.len());
        for (i, l) in labels.iter().enumerate() {
            match l {
                None if nac.is_some() => return Err(AlphabetError::DuplicateNac),
                None => nac = Some(i),
                Some(c) => {
                    if index.insert(*c, i).is_some() {
                        return Err(AlphabetError::Duplicate(*c));
                    }
                }
            }
        }
        let nac = nac.ok_or(AlphabetError::MissingNac)?;
        Ok(Self { labels, nac, index })
    }

    /// Parses whitespace separated label tokens (`<nac>`, `<sp>`, `<nl>` or a
    /// single character each).
    pub fn from_tokens<'a, I>(tokens: I) -> Result<Self, AlphabetError>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let labels = tokens
            .into_iter()
            .map(parse_token)
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_labels(labels)
    }

    /// Number of labels, characters plus NaC.
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn nac(&self) -> Label {
        self.nac
    }

    /// Character carried by `label`, `None` for NaC or out of range.
    pub fn char_of(&self, label: Label) -> Option<char> {
        self.labels.get(label).copied().flatten()
    }

    pub fn label_of(&self, c: char) -> Option<Label> {
        self.index.get(&c).copied()
    }

    pub fn contains(&self, c: char) -> bool {
        self.index.contains_key(&c)
    }

    /// Characters in label order, NaC skipped.
    pub fn characters(&self) -> impl Iterator<Item = char> + '_ {
        self.labels.iter().filter_map(|l| *l)
    }

    /// `(label, char)` pairs for every character label.
    pub fn char_labels(&self) -> impl Iterator<Item = (Label, char)> + '_ {
        self.labels
            .iter()
            .enumerate()
            .filter_map(|(i, l)| l.map(|c| (i, c)))
    }

    /// File tokens in label order.
    pub fn tokens(&self) -> Vec<String> {
        self.labels.iter().map(|l| label_token(*l)).collect()
    }

    /// Encodes a string as character labels, failing on the first foreign
    /// character.
    pub fn encode(&self, s: &str) -> Result<Vec<Label>, char> {
        s.chars().map(|c| self.label_of(c).ok_or(c)).collect()
    }
}

impl fmt::Debug for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Alphabet")
            .field("labels", &self.tokens().join(" "))
            .finish()
    }
}

/// Whether `c` is a word separator (space or linebreak).
pub fn is_whitespace(c: char) -> bool {
    c == ' ' || c == '\n'
}

pub fn parse_token(tok: &str) -> Result<Option<char>, AlphabetError> {
    match tok {
        NAC_TOKEN => Ok(None),
        SPACE_TOKEN => Ok(Some(' ')),
        NEWLINE_TOKEN => Ok(Some('\n')),
        _ => {
            let mut chars = tok.chars();
            match (chars.next(), chars.next()) {
                (Some(c), None) if !c.is_whitespace() => Ok(Some(c)),
                _ => Err(AlphabetError::BadToken(tok.to_string())),
            }
        }
    }
}

pub fn label_token(label: Option<char>) -> String {
    match label {
        None => NAC_TOKEN.to_string(),
        Some(' ') => SPACE_TOKEN.to_string(),
        Some('\n') => NEWLINE_TOKEN.to_string(),
        Some(c) => c.to_string(),
    }
}
