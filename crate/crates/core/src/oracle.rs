//! Exponential-time reference implementations for tests.
//!
//! [`brute_force_decode`] enumerates every label sequence, collapses it,
//! and keeps the best accepted string. [`ast_matches`] interprets a regex
//! tree directly, without building an automaton. The generators produce the
//! small random instances both are checked on.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use rand::seq::IndexedRandom;
use rand::Rng;
use thiserror::Error;

use crate::alphabet::{is_whitespace, Alphabet, Label};
use crate::automaton::{Acceptance, Automaton};
use crate::confmat::{collapse, seq_log_probability, ConfMat};
use crate::decoder::{extract_spans, Decoding};
use crate::lexicon::Lexicon;
use crate::regex::{Node, NodeKind, TagSpec};

/// Default bound on the number of enumerated label sequences.
pub const DEFAULT_ENUMERATION_CAP: u64 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("{labels}^{frames} label sequences exceed the enumeration cap {cap}")]
    CapExceeded {
        labels: usize,
        frames: usize,
        cap: u64,
    },
}

/// Exhaustive decoder: maximizes `ln p(l|X) + w(F(l))` over all label
/// sequences `l` whose collapse is accepted, breaking ties towards the
/// smaller text. Sequences of probability zero never win.
pub fn brute_force_decode(
    cm: &ConfMat,
    automaton: &Automaton,
    cap: u64,
) -> Result<Option<Decoding>, OracleError> {
    let width = cm.labels();
    let frames = cm.frames();
    let total = (width as u64).checked_pow(frames as u32);
    if total.is_none_or(|n| n > cap) {
        return Err(OracleError::CapExceeded {
            labels: width,
            frames,
            cap,
        });
    }
    let alphabet = cm.alphabet();
    let mut memo: HashMap<Vec<Label>, Acceptance> = HashMap::new();
    let mut best: Option<(f64, String, Vec<Label>)> = None;
    let mut seq = vec![0; frames];
    loop {
        let z = collapse(&seq, alphabet.nac());
        let acc = memo.entry(z.clone()).or_insert_with(|| {
            let text: String = z.iter().filter_map(|&l| alphabet.char_of(l)).collect();
            automaton.accepts(&text)
        });
        if acc.accepted {
            let score = seq_log_probability(&seq, cm).expect("labels in range") + acc.weight;
            if score > f64::NEG_INFINITY {
                let text: String = z.iter().filter_map(|&l| alphabet.char_of(l)).collect();
                let better = match &best {
                    None => true,
                    Some((s, t, _)) => score > *s || (score == *s && text < *t),
                };
                if better {
                    best = Some((score, text, seq.clone()));
                }
            }
        }
        // odometer increment
        let mut i = 0;
        loop {
            if i == frames {
                return Ok(best.map(|(score, text, labels)| {
                    build_decoding(cm, automaton, score, text, labels)
                }));
            }
            seq[i] += 1;
            if seq[i] < width {
                break;
            }
            seq[i] = 0;
            i += 1;
        }
    }
}

fn build_decoding(
    cm: &ConfMat,
    automaton: &Automaton,
    log_score: f64,
    text: String,
    labels: Vec<Label>,
) -> Decoding {
    let nac = cm.alphabet().nac();
    let mut alignment = Vec::new();
    let mut run_ends = Vec::new();
    let mut prev = nac;
    for (t, &l) in labels.iter().enumerate() {
        if l != prev {
            if prev != nac {
                run_ends.push(t);
            }
            if l != nac {
                alignment.push(t);
            }
        }
        prev = l;
    }
    if prev != nac {
        run_ends.push(labels.len());
    }
    let acc = automaton.accepts(&text);
    let mut d = Decoding {
        text,
        log_score,
        path_weight: acc.weight,
        labels,
        alignment,
        run_ends,
        char_tags: acc.tags,
        spans: Vec::new(),
    };
    d.spans = extract_spans(&d);
    d
}

/// Whether `node` matches all of `s`, by direct interpretation of the tree.
pub fn ast_matches(node: &Node, s: &str, lexicons: &BTreeMap<String, Lexicon>) -> bool {
    let chars: Vec<char> = s.chars().collect();
    ends(node, &chars, 0, lexicons).contains(&chars.len())
}

/// Positions where a match of `node` starting at `from` can end.
fn ends(
    node: &Node,
    s: &[char],
    from: usize,
    lexicons: &BTreeMap<String, Lexicon>,
) -> BTreeSet<usize> {
    let single = |ok: &dyn Fn(char) -> bool| -> BTreeSet<usize> {
        match s.get(from) {
            Some(&c) if ok(c) => [from + 1].into(),
            _ => BTreeSet::new(),
        }
    };
    match &node.kind {
        NodeKind::Literal(c) => single(&|x| x == *c),
        NodeKind::AnyChar => single(&|_| true),
        NodeKind::CharClass { negated, ranges } => {
            single(&|x| ranges.iter().any(|&(lo, hi)| lo <= x && x <= hi) != *negated)
        }
        NodeKind::Whitespace => {
            let mut out = BTreeSet::new();
            let mut i = from;
            while i < s.len() && is_whitespace(s[i]) {
                i += 1;
                out.insert(i);
            }
            out
        }
        NodeKind::OovRef => {
            let mut out = BTreeSet::new();
            let mut i = from;
            while i < s.len() && !is_whitespace(s[i]) {
                i += 1;
                out.insert(i);
            }
            out
        }
        NodeKind::DictRef(name) => lexicons[name]
            .entries()
            .iter()
            .filter_map(|(w, _)| {
                let w: Vec<char> = w.chars().collect();
                s[from..].starts_with(&w).then_some(from + w.len())
            })
            .collect(),
        NodeKind::Concat(items) => {
            let mut cur: BTreeSet<usize> = [from].into();
            for item in items {
                cur = cur
                    .iter()
                    .flat_map(|&p| ends(item, s, p, lexicons))
                    .collect();
            }
            cur
        }
        NodeKind::Alternation(branches) => branches
            .iter()
            .flat_map(|b| ends(b, s, from, lexicons))
            .collect(),
        NodeKind::TagGroup { child, .. } => ends(child, s, from, lexicons),
        NodeKind::Optional(child) => {
            let mut out = ends(child, s, from, lexicons);
            out.insert(from);
            out
        }
        NodeKind::Star(child) | NodeKind::Plus(child) => {
            let mut reached = BTreeSet::new();
            let mut frontier: BTreeSet<usize> = [from].into();
            let mut seen: BTreeSet<usize> = [from].into();
            while !frontier.is_empty() {
                let mut next = BTreeSet::new();
                for &p in &frontier {
                    for e in ends(child, s, p, lexicons) {
                        reached.insert(e);
                        if seen.insert(e) {
                            next.insert(e);
                        }
                    }
                }
                frontier = next;
            }
            if matches!(node.kind, NodeKind::Star(_)) {
                reached.insert(from);
            }
            reached
        }
    }
}

/// Random regex tree of at most `depth` levels over `chars`, referring to
/// the dictionaries `dicts`.
pub fn random_ast<R: Rng>(rng: &mut R, depth: u32, chars: &[char], dicts: &[String]) -> Node {
    let leaf = depth == 0 || rng.random_bool(0.3);
    if leaf {
        let kind = match rng.random_range(0..10) {
            0..=3 => NodeKind::Literal(*chars.choose(rng).unwrap()),
            4 => NodeKind::AnyChar,
            5 => {
                let a = *chars.choose(rng).unwrap();
                let b = *chars.choose(rng).unwrap();
                NodeKind::CharClass {
                    negated: rng.random_bool(0.3),
                    ranges: vec![(a.min(b), a.max(b))],
                }
            }
            6 if chars.iter().any(|&c| is_whitespace(c)) => NodeKind::Whitespace,
            7 => NodeKind::OovRef,
            8 | 9 if !dicts.is_empty() => NodeKind::DictRef(dicts.choose(rng).unwrap().clone()),
            _ => NodeKind::Literal(*chars.choose(rng).unwrap()),
        };
        return Node::new(kind);
    }
    let sub = |rng: &mut R| Box::new(random_ast(rng, depth - 1, chars, dicts));
    let kind = match rng.random_range(0..7) {
        0 | 1 => {
            let n = rng.random_range(2..=3);
            NodeKind::Concat((0..n).map(|_| *sub(rng)).collect())
        }
        2 => {
            let n = rng.random_range(2..=3);
            NodeKind::Alternation((0..n).map(|_| *sub(rng)).collect())
        }
        3 => NodeKind::Star(sub(rng)),
        4 => NodeKind::Plus(sub(rng)),
        5 => NodeKind::Optional(sub(rng)),
        _ => NodeKind::TagGroup {
            tag: TagSpec::new(["x", "y"][rng.random_range(0..2)], None),
            child: sub(rng),
        },
    };
    Node::new(kind)
}

/// Random lexicon of 1 to 3 distinct words of length 1 to 3 over `chars`.
pub fn random_lexicon<R: Rng>(rng: &mut R, name: &str, chars: &[char]) -> Lexicon {
    let n = rng.random_range(1..=3);
    let mut words: Vec<String> = Vec::new();
    while words.len() < n {
        let len = rng.random_range(1..=3);
        let w: String = (0..len).map(|_| *chars.choose(rng).unwrap()).collect();
        if !words.contains(&w) {
            words.push(w);
        }
    }
    let counts = words
        .into_iter()
        .map(|w| (w, rng.random_range(1..=10) as f64))
        .collect();
    Lexicon::from_counts(name, counts).expect("valid random lexicon")
}

/// Random ConfMat with every entry strictly positive.
pub fn random_confmat<R: Rng>(rng: &mut R, alphabet: &Arc<Alphabet>, frames: usize) -> ConfMat {
    let rows = (0..frames)
        .map(|_| {
            let raw: Vec<f64> = (0..alphabet.len())
                .map(|_| rng.random_range(0.01..1.0))
                .collect();
            let sum: f64 = raw.iter().sum();
            raw.into_iter().map(|v| v / sum).collect()
        })
        .collect();
    ConfMat::new(Arc::clone(alphabet), rows).expect("normalized rows")
}

/// Random string of length up to `max_len` over `chars`.
pub fn random_string<R: Rng>(rng: &mut R, chars: &[char], max_len: usize) -> String {
    let len = rng.random_range(0..=max_len);
    (0..len).map(|_| *chars.choose(rng).unwrap()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compile::{compile, PriorModel};
    use crate::regex::parse_regex;

    #[test]
    fn single_blank_frame() {
        let al = Arc::new(Alphabet::new(&['a'], 0).unwrap());
        let a = compile(
            &parse_regex("a?").unwrap(),
            &BTreeMap::new(),
            al.clone(),
            &PriorModel::default(),
        )
        .unwrap();
        let cm = ConfMat::one_hot(al, &[0]).unwrap();
        let d = brute_force_decode(&cm, &a, DEFAULT_ENUMERATION_CAP)
            .unwrap()
            .unwrap();
        assert_eq!(d.text, "");
        assert_eq!(d.log_score, 0.0);
    }

    #[test]
    fn rejecting_automaton_is_no_parse() {
        let al = Arc::new(Alphabet::new(&['a'], 0).unwrap());
        let a = compile(
            &parse_regex("[b]").unwrap(),
            &BTreeMap::new(),
            al.clone(),
            &PriorModel::default(),
        )
        .unwrap();
        let cm = ConfMat::new(al, vec![vec![0.5, 0.5]; 2]).unwrap();
        assert_eq!(brute_force_decode(&cm, &a, 100).unwrap(), None);
    }

    #[test]
    fn cap_is_enforced() {
        let al = Arc::new(Alphabet::new(&['a', 'b'], 0).unwrap());
        let a = compile(
            &parse_regex("a").unwrap(),
            &BTreeMap::new(),
            al.clone(),
            &PriorModel::default(),
        )
        .unwrap();
        let cm = ConfMat::new(al, vec![vec![1.0 / 3.0; 3]; 5]).unwrap();
        assert!(matches!(
            brute_force_decode(&cm, &a, 100),
            Err(OracleError::CapExceeded { .. })
        ));
    }

    #[test]
    fn matcher_basics() {
        let lex: BTreeMap<String, Lexicon> = [(
            "D".to_string(),
            Lexicon::new("D", vec![("ab".into(), 1.0)]).unwrap(),
        )]
        .into();
        let m = |re: &str, s: &str| ast_matches(&parse_regex(re).unwrap(), s, &lex);
        assert!(m("a*b", "aab"));
        assert!(!m("a*b", "a"));
        assert!(m("${D}+", "abab"));
        assert!(!m("${D}", "a"));
        assert!(m("${oov}\\s.", "ab  a"));
        assert!(!m("${oov}", "a b"));
        assert!(m("(a|)*", ""));
    }
}
