//! Regular-expression constrained CTC decoding for handwritten records.
//!
//! A recognizer emits a [`ConfMat`]: per frame, a probability for every
//! character and for the not-a-character label (NaC). This crate finds the
//! most likely character sequence accepted by a tagged regular expression
//! over weighted dictionaries, and reads off the tagged spans.

pub mod alphabet;
pub mod automaton;
pub mod compile;
pub mod confmat;
pub mod decoder;
pub mod eval;
pub mod example;
pub mod format;
pub mod lexicon;
#[cfg(any(test, feature = "oracle"))]
pub mod oracle;
pub mod record;
pub mod regex;
pub mod synth;

pub use alphabet::{Alphabet, Label};
pub use automaton::{Acceptance, Automaton};
pub use compile::{compile, CompileError, PriorMode, PriorModel};
pub use confmat::{collapse, greedy_best_path, seq_probability, ConfMat, SeparatorPolicy};
pub use decoder::{decode, Beam, Decoding, Span};
pub use lexicon::Lexicon;
pub use record::{decode_record, RecordResult};
pub use regex::{parse_regex, Node, NodeKind, TagSpec};
