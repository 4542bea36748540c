//! Two-step decoding of whole records.
//!
//! The line ConfMats of a record are concatenated and decoded with a coarse
//! automaton whose person-tagged groups mark one region per person. Each
//! region is cut out of the record ConfMat and decoded again with that
//! person's fine automaton, which tags the category of every word.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::ops::Range;

use thiserror::Error;

use crate::alphabet::is_whitespace;
use crate::automaton::Automaton;
use crate::confmat::{ConfMat, ConfMatError, SeparatorPolicy};
use crate::decoder::{decode, Beam, DecodeError, Decoding, Span};
use crate::eval::{EvalError, Item, Prediction};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RecordError {
    #[error(transparent)]
    ConfMat(#[from] ConfMatError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordStatus {
    Ok,
    /// The coarse automaton accepts nothing the record can produce.
    NoParse,
}

impl RecordStatus {
    pub fn token(self) -> &'static str {
        match self {
            RecordStatus::Ok => "ok",
            RecordStatus::NoParse => "no-parse",
        }
    }
}

/// A tagged span with its person resolved and its frames relative to the
/// whole record.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedSpan {
    pub person: Option<String>,
    pub category: String,
    pub text: String,
    /// Character indices into the region text.
    pub chars: Range<usize>,
    /// Frames of the record ConfMat.
    pub frames: Range<usize>,
    /// Score of the decoding the span was read from.
    pub log_score: f64,
}

/// One decoded slice of a record.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    /// Person the coarse step assigned, `None` for single-pass decoding.
    pub person: Option<String>,
    /// Frames of the record ConfMat.
    pub frames: Range<usize>,
    /// Characters of the record decoding that the region stands for.
    pub chars: Range<usize>,
    /// `None` when the region did not parse.
    pub decoding: Option<Decoding>,
    pub diagnostic: Option<String>,
    pub spans: Vec<ResolvedSpan>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecordResult {
    pub id: String,
    pub status: RecordStatus,
    /// Decoding of the whole record (coarse step, or the only step).
    pub record: Option<Decoding>,
    pub regions: Vec<Region>,
}

impl RecordResult {
    fn empty(id: &str, status: RecordStatus) -> Self {
        Self {
            id: id.to_string(),
            status,
            record: None,
            regions: Vec::new(),
        }
    }

    pub fn spans(&self) -> impl Iterator<Item = &ResolvedSpan> + '_ {
        self.regions.iter().flat_map(|r| &r.spans)
    }

    /// The record decoding with every parsed region replaced by its own
    /// decoding, stripped of surrounding whitespace. `None` on no-parse.
    pub fn reading(&self) -> Option<String> {
        let record = self.record.as_ref()?;
        let chars = record.chars();
        let mut out = String::new();
        let mut at = 0;
        for region in &self.regions {
            out.extend(&chars[at..region.chars.start]);
            match &region.decoding {
                Some(d) if region.person.is_some() => out.push_str(d.text.trim()),
                Some(d) => out.push_str(&d.text),
                None => out.extend(&chars[region.chars.clone()]),
            }
            at = region.chars.end;
        }
        out.extend(&chars[at..]);
        Some(out)
    }

    /// Spans whose person and category belong to the scored sets.
    pub fn prediction(&self) -> Prediction {
        Prediction {
            id: self.id.clone(),
            items: self.spans().filter_map(span_item).collect(),
        }
    }
}

fn span_item(s: &ResolvedSpan) -> Option<Item> {
    Some(Item::new(
        s.person.as_deref()?.parse().ok()?,
        s.category.parse().ok()?,
        s.text.clone(),
    ))
}

fn resolve(
    spans: &[Span],
    person: Option<&str>,
    offset: usize,
    log_score: f64,
) -> Vec<ResolvedSpan> {
    spans
        .iter()
        .map(|s| ResolvedSpan {
            person: s.person.clone().or_else(|| person.map(str::to_string)),
            category: s.category.clone(),
            text: s.text.clone(),
            chars: s.chars.clone(),
            frames: s.frames.start + offset..s.frames.end + offset,
            log_score,
        })
        .collect()
}

/// Frames of the record given to the region of `span`: from the end of the
/// preceding character's run to the start of the following character,
/// widened over adjacent untagged whitespace.
pub fn region_frames(d: &Decoding, span: &Span, total_frames: usize) -> Range<usize> {
    let chars = d.chars();
    let loose = |i: usize| is_whitespace(chars[i]) && d.char_tags[i].is_none();
    let (mut i, mut j) = (span.chars.start, span.chars.end);
    while i > 0 && loose(i - 1) {
        i -= 1;
    }
    while j < chars.len() && loose(j) {
        j += 1;
    }
    let start = if i > 0 { d.run_ends[i - 1] } else { 0 };
    let end = if j < chars.len() {
        d.alignment[j]
    } else {
        total_frames
    };
    start..end
}

/// Decodes a record in one pass with a single automaton.
pub fn decode_single(
    id: &str,
    lines: &[ConfMat],
    automaton: &Automaton,
    beam: Beam,
    policy: SeparatorPolicy,
) -> Result<RecordResult, RecordError> {
    if lines.is_empty() {
        return Ok(RecordResult::empty(id, RecordStatus::Ok));
    }
    let cm = ConfMat::concat(automaton.alphabet().clone(), lines, policy)?;
    let Some(d) = decode(&cm, automaton, beam)? else {
        return Ok(RecordResult::empty(id, RecordStatus::NoParse));
    };
    let region = Region {
        person: None,
        frames: 0..cm.frames(),
        chars: 0..d.text.chars().count(),
        spans: resolve(&d.spans, None, 0, d.log_score),
        decoding: Some(d.clone()),
        diagnostic: None,
    };
    Ok(RecordResult {
        id: id.to_string(),
        status: RecordStatus::Ok,
        record: Some(d),
        regions: vec![region],
    })
}

/// Two-step decoding: `coarse` splits the record into person regions, and
/// `fine[person]` extracts the categories of each region. Persons from the
/// fine tags take precedence over the region's person.
pub fn decode_record(
    id: &str,
    lines: &[ConfMat],
    coarse: &Automaton,
    fine: &BTreeMap<String, Automaton>,
    beam: Beam,
    policy: SeparatorPolicy,
) -> Result<RecordResult, RecordError> {
    if lines.is_empty() {
        return Ok(RecordResult::empty(id, RecordStatus::Ok));
    }
    let cm = ConfMat::concat(coarse.alphabet().clone(), lines, policy)?;
    let Some(d) = decode(&cm, coarse, beam)? else {
        return Ok(RecordResult::empty(id, RecordStatus::NoParse));
    };
    let mut regions = Vec::new();
    for span in &d.spans {
        let Some(person) = &span.person else { continue };
        let frames = region_frames(&d, span, cm.frames());
        let mut region = Region {
            person: Some(person.clone()),
            frames: frames.clone(),
            chars: span.chars.clone(),
            decoding: None,
            diagnostic: None,
            spans: Vec::new(),
        };
        match fine.get(person) {
            None => region.diagnostic = Some(format!("no fine grammar for person {person:?}")),
            Some(a) => match decode(&cm.slice(frames.clone()), a, beam)? {
                None => region.diagnostic = Some("no parse".to_string()),
                Some(fd) => {
                    region.spans = resolve(&fd.spans, Some(person), frames.start, fd.log_score);
                    region.decoding = Some(fd);
                }
            },
        }
        regions.push(region);
    }
    Ok(RecordResult {
        id: id.to_string(),
        status: RecordStatus::Ok,
        record: Some(d),
        regions,
    })
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out
}

fn unescape(s: &str) -> Result<String, String> {
    let mut out = String::with_capacity(s.len());
    let mut it = s.chars();
    while let Some(c) = it.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match it.next() {
            Some('\\') => out.push('\\'),
            Some('n') => out.push('\n'),
            Some('t') => out.push('\t'),
            other => {
                return Err(format!(
                    "bad escape \\{}",
                    other.map(String::from).unwrap_or_default()
                ))
            }
        }
    }
    Ok(out)
}

fn range(r: &Range<usize>) -> String {
    format!("{}..{}", r.start, r.end)
}

/// Line-oriented serialization: `key<TAB>value` lines grouped into blocks
/// separated by blank lines. A `record` block comes first, then one
/// `region` block per region, each followed by one `span` block per span.
/// The record block carries a `reading` line when the regions' own
/// decodings differ from the record decoding.
pub fn write_result(r: &RecordResult) -> String {
    let mut out = String::new();
    let w = &mut out;
    let _ = writeln!(w, "record\t{}", escape(&r.id));
    let _ = writeln!(w, "status\t{}", r.status.token());
    if let Some(d) = &r.record {
        let _ = writeln!(w, "text\t{}", escape(&d.text));
        if let Some(reading) = r.reading().filter(|t| *t != d.text) {
            let _ = writeln!(w, "reading\t{}", escape(&reading));
        }
        let _ = writeln!(w, "log_score\t{:.9}", d.log_score);
    }
    for region in &r.regions {
        let _ = writeln!(
            w,
            "\nregion\t{}",
            escape(region.person.as_deref().unwrap_or(""))
        );
        let _ = writeln!(w, "record\t{}", escape(&r.id));
        let _ = writeln!(w, "frames\t{}", range(&region.frames));
        match &region.decoding {
            Some(d) => {
                let _ = writeln!(w, "status\tok");
                let _ = writeln!(w, "text\t{}", escape(&d.text));
                let _ = writeln!(w, "log_score\t{:.9}", d.log_score);
            }
            None => {
                let _ = writeln!(w, "status\tno-parse");
            }
        }
        if let Some(msg) = &region.diagnostic {
            let _ = writeln!(w, "diagnostic\t{}", escape(msg));
        }
        for s in &region.spans {
            let _ = writeln!(w, "\nspan\t{}", escape(&s.text));
            let _ = writeln!(w, "record\t{}", escape(&r.id));
            let _ = writeln!(w, "person\t{}", escape(s.person.as_deref().unwrap_or("")));
            let _ = writeln!(w, "category\t{}", escape(&s.category));
            let _ = writeln!(w, "text\t{}", escape(&s.text));
            let _ = writeln!(w, "chars\t{}", range(&s.chars));
            let _ = writeln!(w, "frames\t{}", range(&s.frames));
            let _ = writeln!(w, "log_score\t{:.9}", s.log_score);
        }
    }
    out.push('\n');
    out
}

/// Reads predictions back from [`write_result`] output. Records keep their
/// order of appearance; spans with a person or category outside the scored
/// sets are skipped.
pub fn parse_predictions(text: &str) -> Result<Vec<Prediction>, EvalError> {
    let mut preds: Vec<Prediction> = Vec::new();
    let mut block: Vec<(usize, &str, &str)> = Vec::new();
    let lines = text.lines().chain(std::iter::once(""));
    for (i, line) in lines.enumerate() {
        if !line.trim().is_empty() {
            let Some((k, v)) = line.split_once('\t') else {
                return Err(EvalError::Parse {
                    line: i + 1,
                    message: "expected key<TAB>value".into(),
                });
            };
            block.push((i + 1, k, v));
            continue;
        }
        let Some(&(first, kind, _)) = block.first() else {
            continue;
        };
        let field = |key: &str| -> Result<String, EvalError> {
            let &(line, _, v) = block
                .iter()
                .skip(1)
                .find(|(_, k, _)| *k == key)
                .ok_or_else(|| EvalError::Parse {
                    line: first,
                    message: format!("{kind} block lacks {key:?}"),
                })?;
            unescape(v).map_err(|message| EvalError::Parse { line, message })
        };
        match kind {
            "record" => {
                let id = unescape(block[0].2).map_err(|message| EvalError::Parse {
                    line: first,
                    message,
                })?;
                if !preds.iter().any(|p| p.id == id) {
                    preds.push(Prediction {
                        id,
                        items: Vec::new(),
                    });
                }
            }
            "span" => {
                let id = field("record")?;
                let item = (|| {
                    Some(Item::new(
                        field("person").ok()?.parse().ok()?,
                        field("category").ok()?.parse().ok()?,
                        String::new(),
                    ))
                })();
                let word = field("text")?;
                let pos = match preds.iter().position(|p| p.id == id) {
                    Some(p) => p,
                    None => {
                        preds.push(Prediction {
                            id,
                            items: Vec::new(),
                        });
                        preds.len() - 1
                    }
                };
                if let Some(mut item) = item {
                    item.word = word;
                    preds[pos].items.push(item);
                }
            }
            "region" => {}
            other => {
                return Err(EvalError::Parse {
                    line: first,
                    message: format!("unknown block {other:?}"),
                })
            }
        }
        block.clear();
    }
    Ok(preds)
}
