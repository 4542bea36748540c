//! Compilation of tagged regexes, lexicons and the OOV escape into
//! epsilon-free weighted automata.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use thiserror::Error;

use crate::alphabet::{is_whitespace, Alphabet, Label};
use crate::automaton::{Automaton, StateId, TagId, Transition};
use crate::lexicon::Lexicon;
use crate::regex::{Node, NodeKind, TagSpec};

/// Category placeholder meaning "inherit from the enclosing group".
pub const ANY_CATEGORY: &str = "_";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompileError {
    #[error("unresolved dictionary reference ${{{name}}} at byte {offset}")]
    UnresolvedDict { name: String, offset: usize },
    #[error("literal {ch:?} at byte {offset} is not in the alphabet")]
    LiteralOutsideAlphabet { ch: char, offset: usize },
    #[error("lexicon {lexicon:?}: word {word:?} contains {ch:?} which is not in the alphabet")]
    WordOutsideAlphabet {
        lexicon: String,
        word: String,
        ch: char,
    },
    #[error("\\s at byte {offset} needs a space or linebreak in the alphabet")]
    NoWhitespace { offset: usize },
    #[error("lexicon {0:?} is empty")]
    EmptyLexicon(String),
    #[error("invalid prior model: {0}")]
    BadPrior(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PriorMode {
    /// Network prior taken as uniform: score is `p_S(z|X) * p_T(z)`.
    #[default]
    Competition,
    /// No word prior; lexicon paths carry zero weight.
    Off,
}

/// How word priors enter the automaton weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorModel {
    pub mode: PriorMode,
    /// Log weight charged per character matched by `${oov}`.
    pub oov_char_logpenalty: f64,
    /// Multiplier on lexicon log frequencies.
    pub prior_scale: f64,
}

impl Default for PriorModel {
    fn default() -> Self {
        Self {
            mode: PriorMode::Competition,
            oov_char_logpenalty: DEFAULT_OOV_LOGPENALTY,
            prior_scale: 1.0,
        }
    }
}

/// `ln(1e-4)`
pub const DEFAULT_OOV_LOGPENALTY: f64 = -9.210340371976182;

impl PriorModel {
    pub fn validate(&self) -> Result<(), CompileError> {
        if !(self.oov_char_logpenalty.is_finite() && self.oov_char_logpenalty <= 0.0) {
            return Err(CompileError::BadPrior(format!(
                "OOV penalty {} must be finite and non-positive",
                self.oov_char_logpenalty
            )));
        }
        if !(self.prior_scale.is_finite() && self.prior_scale >= 0.0) {
            return Err(CompileError::BadPrior(format!(
                "prior scale {} must be finite and non-negative",
                self.prior_scale
            )));
        }
        Ok(())
    }

    /// Scale actually applied to lexicon log frequencies.
    pub fn lexicon_scale(&self) -> f64 {
        match self.mode {
            PriorMode::Competition => self.prior_scale,
            PriorMode::Off => 0.0,
        }
    }

    /// OOV penalty clamped so that one OOV character costs at least as much
    /// as the rarest word of any of `lexicons`.
    pub fn effective_oov_penalty<'a>(
        &self,
        lexicons: impl IntoIterator<Item = &'a Lexicon>,
    ) -> f64 {
        let scale = self.lexicon_scale();
        lexicons
            .into_iter()
            .map(|l| scaled_log(scale, l.min_log_frequency().exp()))
            .fold(self.oov_char_logpenalty, f64::min)
    }
}

fn scaled_log(scale: f64, freq: f64) -> f64 {
    if scale == 0.0 {
        0.0
    } else {
        scale * freq.ln()
    }
}

/// Trie automaton accepting exactly the words of `lex`. The whole weight
/// `scale * ln f(w)` of a word sits on its last arc.
pub fn build_lexicon_automaton(
    lex: &Lexicon,
    alphabet: Arc<Alphabet>,
    scale: f64,
) -> Result<Automaton, CompileError> {
    if lex.is_empty() {
        return Err(CompileError::EmptyLexicon(lex.name().to_string()));
    }
    const ROOT: StateId = 0;
    const FINAL: StateId = 1;
    let mut arcs: Vec<Vec<Transition>> = vec![Vec::new(), Vec::new()];
    let mut children: HashMap<(StateId, Label), StateId> = HashMap::new();
    for (word, freq) in lex.entries() {
        let labels = alphabet
            .encode(word)
            .map_err(|ch| CompileError::WordOutsideAlphabet {
                lexicon: lex.name().to_string(),
                word: word.clone(),
                ch,
            })?;
        let (&last, prefix) = labels.split_last().expect("words are non-empty");
        let mut node = ROOT;
        for &l in prefix {
            node = *children.entry((node, l)).or_insert_with(|| {
                let id = arcs.len() as StateId;
                arcs.push(Vec::new());
                arcs[node as usize].push(Transition {
                    label: l,
                    weight: 0.0,
                    tag: None,
                    to: id,
                });
                id
            });
        }
        arcs[node as usize].push(Transition {
            label: last,
            weight: scaled_log(scale, *freq),
            tag: None,
            to: FINAL,
        });
    }
    let mut accepting = vec![false; arcs.len()];
    accepting[FINAL as usize] = true;
    Ok(Automaton::from_parts(
        alphabet,
        arcs,
        ROOT,
        accepting,
        Vec::new(),
    ))
}

/// Automaton accepting any non-empty run of non-whitespace characters at
/// `penalty` per character.
pub fn build_oov_automaton(alphabet: Arc<Alphabet>, penalty: f64) -> Automaton {
    let chars: Vec<Label> = alphabet
        .char_labels()
        .filter(|&(_, c)| !is_whitespace(c))
        .map(|(l, _)| l)
        .collect();
    let step = |to| {
        chars
            .iter()
            .map(|&label| Transition {
                label,
                weight: penalty,
                tag: None,
                to,
            })
            .collect::<Vec<_>>()
    };
    Automaton::from_parts(
        alphabet,
        vec![step(1), step(1)],
        0,
        vec![false, true],
        Vec::new(),
    )
}

/// The OOV automaton under `model`, with the penalty clamped against
/// `lexicons`.
pub fn oov_automaton_for<'a>(
    alphabet: Arc<Alphabet>,
    model: &PriorModel,
    lexicons: impl IntoIterator<Item = &'a Lexicon>,
) -> Automaton {
    build_oov_automaton(alphabet, model.effective_oov_penalty(lexicons))
}

/// Dictionary references in `ast` that `lexicons` cannot resolve, with their
/// byte offsets.
pub fn unresolved_refs(ast: &Node, lexicons: &BTreeMap<String, Lexicon>) -> Vec<(String, usize)> {
    let mut out = Vec::new();
    ast.walk(&mut |n| {
        if let NodeKind::DictRef(name) = &n.kind {
            if !lexicons.contains_key(name) {
                out.push((name.clone(), n.span.start));
            }
        }
    });
    out
}

/// Compiles `ast` into a trimmed epsilon-free automaton.
///
/// Dictionary references embed the lexicon trie, `${oov}` the OOV automaton
/// and `\s` one or more of space/linebreak. Characters inside tag groups get
/// the innermost group's tag; a group that leaves the person unset or uses the
/// category `_` inherits that field from the enclosing group.
pub fn compile(
    ast: &Node,
    lexicons: &BTreeMap<String, Lexicon>,
    alphabet: Arc<Alphabet>,
    model: &PriorModel,
) -> Result<Automaton, CompileError> {
    model.validate()?;
    if let Some((name, offset)) = unresolved_refs(ast, lexicons).into_iter().next() {
        return Err(CompileError::UnresolvedDict { name, offset });
    }
    let referenced: Vec<&Lexicon> = ast.dict_refs().iter().map(|n| &lexicons[*n]).collect();
    let scale = model.lexicon_scale();
    let mut dicts = HashMap::new();
    for lex in &referenced {
        dicts.insert(
            lex.name().to_string(),
            build_lexicon_automaton(lex, Arc::clone(&alphabet), scale)?,
        );
    }
    // clamp against the lexicons the expression actually uses
    let oov = oov_automaton_for(Arc::clone(&alphabet), model, referenced.iter().copied());

    let mut b = Builder {
        alphabet: &alphabet,
        dicts: &dicts,
        oov: &oov,
        states: Vec::new(),
        tags: Vec::new(),
    };
    let start = b.add_state();
    let end = b.add_state();
    b.fragment(ast, None, start, end)?;
    Ok(b.finish(start, end))
}

#[derive(Default)]
struct NfaState {
    eps: Vec<StateId>,
    arcs: Vec<Transition>,
}

struct Builder<'a> {
    alphabet: &'a Arc<Alphabet>,
    dicts: &'a HashMap<String, Automaton>,
    oov: &'a Automaton,
    states: Vec<NfaState>,
    tags: Vec<TagSpec>,
}

impl Builder<'_> {
    fn add_state(&mut self) -> StateId {
        self.states.push(NfaState::default());
        (self.states.len() - 1) as StateId
    }

    fn eps(&mut self, from: StateId, to: StateId) {
        self.states[from as usize].eps.push(to);
    }

    fn arc(&mut self, from: StateId, label: Label, weight: f64, tag: Option<TagId>, to: StateId) {
        self.states[from as usize].arcs.push(Transition {
            label,
            weight,
            tag,
            to,
        });
    }

    fn intern(&mut self, tag: TagSpec) -> TagId {
        match self.tags.iter().position(|t| *t == tag) {
            Some(i) => i as TagId,
            None => {
                self.tags.push(tag);
                (self.tags.len() - 1) as TagId
            }
        }
    }

    fn resolve(&self, inner: &TagSpec, outer: Option<TagId>) -> TagSpec {
        let outer = outer.map(|id| &self.tags[id as usize]);
        let category = match outer {
            Some(o) if inner.category == ANY_CATEGORY => o.category.clone(),
            _ => inner.category.clone(),
        };
        let person = inner
            .person
            .clone()
            .or_else(|| outer.and_then(|o| o.person.clone()));
        TagSpec { category, person }
    }

    /// Copies an epsilon-free automaton between `from` and `to`.
    fn embed(&mut self, a: &Automaton, tag: Option<TagId>, from: StateId, to: StateId) {
        let base = self.states.len() as StateId;
        for _ in 0..a.num_states() {
            self.add_state();
        }
        self.eps(from, base + a.start());
        for q in 0..a.num_states() as StateId {
            for t in a.arcs(q) {
                self.arc(base + q, t.label, t.weight, tag, base + t.to);
            }
            if a.is_accepting(q) {
                self.eps(base + q, to);
            }
        }
    }

    /// Adds states and arcs so that paths from `from` to `to` match `node`.
    fn fragment(
        &mut self,
        node: &Node,
        tag: Option<TagId>,
        from: StateId,
        to: StateId,
    ) -> Result<(), CompileError> {
        match &node.kind {
            NodeKind::Literal(c) => {
                let l = self
                    .alphabet
                    .label_of(*c)
                    .ok_or(CompileError::LiteralOutsideAlphabet {
                        ch: *c,
                        offset: node.span.start,
                    })?;
                self.arc(from, l, 0.0, tag, to);
            }
            NodeKind::Concat(items) => {
                let mut cur = from;
                for (i, item) in items.iter().enumerate() {
                    let next = if i + 1 == items.len() {
                        to
                    } else {
                        self.add_state()
                    };
                    self.fragment(item, tag, cur, next)?;
                    cur = next;
                }
                if items.is_empty() {
                    self.eps(from, to);
                }
            }
            NodeKind::Alternation(branches) => {
                for b in branches {
                    let s = self.add_state();
                    let e = self.add_state();
                    self.eps(from, s);
                    self.fragment(b, tag, s, e)?;
                    self.eps(e, to);
                }
            }
            NodeKind::Star(child) | NodeKind::Plus(child) | NodeKind::Optional(child) => {
                let s = self.add_state();
                let e = self.add_state();
                self.eps(from, s);
                self.fragment(child, tag, s, e)?;
                self.eps(e, to);
                if !matches!(node.kind, NodeKind::Plus(_)) {
                    self.eps(from, to);
                }
                if !matches!(node.kind, NodeKind::Optional(_)) {
                    self.eps(e, s);
                }
            }
            NodeKind::CharClass { negated, ranges } => {
                let members: Vec<Label> = self
                    .alphabet
                    .char_labels()
                    .filter(|&(_, c)| ranges.iter().any(|&(lo, hi)| lo <= c && c <= hi) != *negated)
                    .map(|(l, _)| l)
                    .collect();
                for l in members {
                    self.arc(from, l, 0.0, tag, to);
                }
            }
            NodeKind::AnyChar => {
                let all: Vec<Label> = self.alphabet.char_labels().map(|(l, _)| l).collect();
                for l in all {
                    self.arc(from, l, 0.0, tag, to);
                }
            }
            NodeKind::Whitespace => {
                let ws: Vec<Label> = [' ', '\n']
                    .iter()
                    .filter_map(|&c| self.alphabet.label_of(c))
                    .collect();
                if ws.is_empty() {
                    return Err(CompileError::NoWhitespace {
                        offset: node.span.start,
                    });
                }
                let mid = self.add_state();
                for &l in &ws {
                    self.arc(from, l, 0.0, tag, mid);
                    self.arc(mid, l, 0.0, tag, mid);
                }
                self.eps(mid, to);
            }
            NodeKind::DictRef(name) => {
                let a = &self.dicts[name];
                self.embed(a, tag, from, to);
            }
            NodeKind::OovRef => {
                let a = self.oov;
                self.embed(a, tag, from, to);
            }
            NodeKind::TagGroup { tag: spec, child } => {
                let resolved = self.resolve(spec, tag);
                let id = self.intern(resolved);
                self.fragment(child, Some(id), from, to)?;
            }
        }
        Ok(())
    }

    /// Epsilon elimination over the states that begin a path (start and arc
    /// targets), then trimming.
    fn finish(self, start: StateId, end: StateId) -> Automaton {
        let n = self.states.len();
        let mut important = vec![false; n];
        important[start as usize] = true;
        for s in &self.states {
            for t in &s.arcs {
                important[t.to as usize] = true;
            }
        }
        let mut remap = vec![StateId::MAX; n];
        let mut count = 0;
        for q in 0..n {
            if important[q] {
                remap[q] = count;
                count += 1;
            }
        }

        let mut arcs = Vec::with_capacity(count as usize);
        let mut accepting = Vec::with_capacity(count as usize);
        let mut mark = vec![usize::MAX; n];
        let mut stack = Vec::new();
        for q in (0..n).filter(|&q| important[q]) {
            // epsilon closure of q in discovery order
            let mut closure = vec![q as StateId];
            mark[q] = q;
            stack.push(q as StateId);
            while let Some(p) = stack.pop() {
                for &r in &self.states[p as usize].eps {
                    if mark[r as usize] != q {
                        mark[r as usize] = q;
                        closure.push(r);
                        stack.push(r);
                    }
                }
            }
            let mut out = Vec::new();
            for &p in &closure {
                for t in &self.states[p as usize].arcs {
                    out.push(Transition {
                        to: remap[t.to as usize],
                        ..t.clone()
                    });
                }
            }
            arcs.push(out);
            accepting.push(closure.contains(&end));
        }
        Automaton::from_parts(
            Arc::clone(self.alphabet),
            arcs,
            remap[start as usize],
            accepting,
            self.tags,
        )
        .trim()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regex::parse_regex;

    fn alphabet(chars: &str) -> Arc<Alphabet> {
        let cs: Vec<char> = chars.chars().collect();
        Arc::new(Alphabet::new(&cs, 0).unwrap())
    }

    fn lexicons(list: &[(&str, &[(&str, f64)])]) -> BTreeMap<String, Lexicon> {
        list.iter()
            .map(|(name, entries)| {
                let e = entries.iter().map(|(w, f)| (w.to_string(), *f)).collect();
                (name.to_string(), Lexicon::new(*name, e).unwrap())
            })
            .collect()
    }

    fn build(src: &str, al: &Arc<Alphabet>, lex: &BTreeMap<String, Lexicon>) -> Automaton {
        compile(
            &parse_regex(src).unwrap(),
            lex,
            al.clone(),
            &PriorModel::default(),
        )
        .unwrap()
    }

    #[test]
    fn lexicon_trie_paths() {
        let al = alphabet("AnuJa");
        let lex = Lexicon::new("N", vec![("Anna".into(), 0.7), ("Jua".into(), 0.3)]).unwrap();
        let a = build_lexicon_automaton(&lex, al.clone(), 1.0).unwrap();
        assert_eq!(a.accepts("Anna").weight, 0.7f64.ln());
        assert_eq!(a.accepts("Jua").weight, 0.3f64.ln());
        assert!(!a.accepts("Ann").accepted);
        assert!(!a.accepts("").accepted);

        let flat = build_lexicon_automaton(&lex, al.clone(), 0.0).unwrap();
        assert_eq!(flat.accepts("Anna").weight, 0.0);
        assert_eq!(flat.accepts("Jua").weight, 0.0);

        let single = Lexicon::new("A", vec![("a".into(), 1.0)]).unwrap();
        assert_eq!(
            build_lexicon_automaton(&single, al, 1.0)
                .unwrap()
                .accepts("a")
                .weight,
            0.0
        );
    }

    #[test]
    fn lexicon_prefix_words_keep_separate_weights() {
        let al = alphabet("Juan");
        let lex = Lexicon::new("N", vec![("Jua".into(), 0.25), ("Juan".into(), 0.75)]).unwrap();
        let a = build_lexicon_automaton(&lex, al, 1.0).unwrap();
        assert_eq!(a.accepts("Jua").weight, 0.25f64.ln());
        assert_eq!(a.accepts("Juan").weight, 0.75f64.ln());
    }

    #[test]
    fn word_outside_alphabet() {
        let lex = Lexicon::new("N", vec![("xy".into(), 1.0)]).unwrap();
        assert!(matches!(
            build_lexicon_automaton(&lex, alphabet("x"), 1.0),
            Err(CompileError::WordOutsideAlphabet { ch: 'y', .. })
        ));
    }

    #[test]
    fn oov_costs_per_character() {
        let al = alphabet("ab ");
        let a = build_oov_automaton(al, -3.0);
        assert_eq!(a.accepts("a").weight, -3.0);
        assert_eq!(a.accepts("ab").weight, -6.0);
        assert!(!a.accepts("").accepted);
        assert!(!a.accepts("a b").accepted);
    }

    #[test]
    fn oov_penalty_is_clamped_below_rarest_word() {
        let lex = Lexicon::new("N", vec![("a".into(), 1e-6), ("b".into(), 1.0 - 1e-6)]).unwrap();
        let p = PriorModel::default().effective_oov_penalty([&lex]);
        assert_eq!(p, 1e-6f64.ln());
        let off = PriorModel {
            mode: PriorMode::Off,
            ..PriorModel::default()
        };
        assert_eq!(off.effective_oov_penalty([&lex]), DEFAULT_OOV_LOGPENALTY);
    }

    #[test]
    fn star_then_literal() {
        let al = alphabet("ab");
        let a = build("a*b", &al, &BTreeMap::new());
        for s in ["b", "ab", "aaab"] {
            assert!(a.accepts(s).accepted, "{s}");
        }
        for s in ["a", "", "ba", "abb"] {
            assert!(!a.accepts(s).accepted, "{s}");
        }
    }

    #[test]
    fn alternation_and_classes() {
        let al = alphabet("abc \n");
        let empty = BTreeMap::new();
        let a = build("a|b", &al, &empty);
        assert_eq!(a.accepts("a").weight, 0.0);
        assert!(!a.accepts("c").accepted);
        let a = build("[^a]\\s.", &al, &empty);
        assert!(a.accepts("b \n a").accepted);
        assert!(a.accepts("c\nc").accepted);
        assert!(!a.accepts("a b").accepted);
        assert!(!a.accepts("bc").accepted);
    }

    #[test]
    fn errors() {
        let al = alphabet("ab");
        let empty = BTreeMap::new();
        let err = compile(
            &parse_regex("a${x}").unwrap(),
            &empty,
            al.clone(),
            &PriorModel::default(),
        );
        assert_eq!(
            err.unwrap_err(),
            CompileError::UnresolvedDict {
                name: "x".into(),
                offset: 1
            }
        );
        let err = compile(
            &parse_regex("az").unwrap(),
            &empty,
            al.clone(),
            &PriorModel::default(),
        );
        assert_eq!(
            err.unwrap_err(),
            CompileError::LiteralOutsideAlphabet { ch: 'z', offset: 1 }
        );
        let err = compile(
            &parse_regex("a\\s").unwrap(),
            &empty,
            al,
            &PriorModel::default(),
        );
        assert!(matches!(err, Err(CompileError::NoWhitespace { .. })));
    }

    #[test]
    fn tags_reach_characters() {
        let al = alphabet("JuaBrgesntil ");
        let lex = lexicons(&[
            ("F", &[("Jua", 1.0)]),
            ("S", &[("Burgues", 0.5), ("Basili", 0.5)]),
        ]);
        let a = build(
            "(?<name>${F})(\\s(?<name>${F}))*\\s(?<surname>${S})",
            &al,
            &lex,
        );
        let r = a.accepts("Jua Burgues");
        assert!(r.accepted);
        assert_eq!(r.weight, 0.5f64.ln());
        let cats: Vec<Option<&str>> = r
            .tags
            .iter()
            .map(|t| t.as_ref().map(|t| t.category.as_str()))
            .collect();
        assert_eq!(cats[..3], [Some("name"); 3]);
        assert_eq!(cats[3], None);
        assert_eq!(cats[4..], [Some("surname"); 7]);
    }

    #[test]
    fn nested_tags_inherit_unset_fields() {
        let al = alphabet("ab");
        let a = build(
            "(?<_:husband>a(?<name>b)(?<x:wife>a))",
            &al,
            &BTreeMap::new(),
        );
        let r = a.accepts("aba");
        assert_eq!(r.tags[0], Some(TagSpec::new("_", Some("husband"))));
        assert_eq!(r.tags[1], Some(TagSpec::new("name", Some("husband"))));
        assert_eq!(r.tags[2], Some(TagSpec::new("x", Some("wife"))));
    }

    #[test]
    fn lexicon_branch_outweighs_oov() {
        let al = alphabet("Jua");
        let lex = lexicons(&[("S", &[("Jua", 0.2), ("a", 0.8)])]);
        let a = build("(?<s>${S})|(?<o>${oov})", &al, &lex);
        let r = a.accepts("Jua");
        assert_eq!(r.weight, 0.2f64.ln());
        assert_eq!(r.tags[0].as_ref().unwrap().category, "s");
        let r = a.accepts("uu");
        assert_eq!(r.weight, 2.0 * DEFAULT_OOV_LOGPENALTY);
    }

    #[test]
    fn dead_branch_tags_are_not_in_use() {
        let al = alphabet("ab");
        let a = build("a|(?<dead>b[c-d])", &al, &BTreeMap::new());
        assert_eq!(a.tags().len(), 1);
        assert!(a.tags_in_use().is_empty());
    }
}
