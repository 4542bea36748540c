//! Frame-synchronous search for the best accepted character sequence.
//!
//! A search state is a pair `(automaton state, last label)`. Per frame a
//! state may
//!
//! 1. emit NaC and keep its automaton state (`last` becomes NaC),
//! 2. repeat its last character, which the collapse map merges,
//! 3. emit a character `c` along an arc, provided `c` differs from the last
//!    character (a doubled character needs a NaC in between).
//!
//! States with equal keys merge by maximum, so with an unbounded beam the
//! search returns the exact maximum over accepted strings `z` of
//! `max_{l in F^-1(z)} prod_t y[t][l_t]` times the automaton weight of `z`.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashMap};
use std::ops::Range;

use thiserror::Error;

use crate::alphabet::Label;
use crate::automaton::{Automaton, StateId};
use crate::confmat::ConfMat;
use crate::regex::TagSpec;

/// Beam width used when none is configured.
pub const DEFAULT_BEAM_WIDTH: usize = 256;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecodeError {
    #[error("ConfMat alphabet does not match the automaton alphabet")]
    AlphabetMismatch,
}

/// Number of search states kept after each frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Beam {
    Unbounded,
    Width(usize),
}

impl Default for Beam {
    fn default() -> Self {
        Beam::Width(DEFAULT_BEAM_WIDTH)
    }
}

impl Beam {
    fn limit(self) -> usize {
        match self {
            Beam::Unbounded => usize::MAX,
            Beam::Width(w) => w.max(1),
        }
    }
}

/// A run of consecutive characters carrying the same tag.
#[derive(Debug, Clone, PartialEq)]
pub struct Span {
    pub category: String,
    pub person: Option<String>,
    /// Character indices into the decoded text.
    pub chars: Range<usize>,
    /// Frames from the first label of the first character to the end of the
    /// last character's run.
    pub frames: Range<usize>,
    pub text: String,
}

/// The winning character sequence and how it was read off the ConfMat.
#[derive(Debug, Clone, PartialEq)]
pub struct Decoding {
    pub text: String,
    /// `ln prod_t y[t][labels[t]] + path_weight`.
    pub log_score: f64,
    /// Sum of arc weights along the automaton path.
    pub path_weight: f64,
    /// Best label sequence, one label per frame.
    pub labels: Vec<Label>,
    /// Frame where each character's label was first emitted.
    pub alignment: Vec<usize>,
    /// Frame (exclusive) where each character's run of labels ends.
    pub run_ends: Vec<usize>,
    /// Tag of each character, from the arc it was emitted on.
    pub char_tags: Vec<Option<TagSpec>>,
    pub spans: Vec<Span>,
}

impl Decoding {
    pub fn chars(&self) -> Vec<char> {
        self.text.chars().collect()
    }
}

const NONE: u32 = u32::MAX;

/// A character emission on the search path.
#[derive(Debug, Clone, Copy)]
struct Emission {
    parent: u32,
    from: StateId,
    arc: u32,
    frame: u32,
    /// Decoded text up to and including this emission.
    text: u32,
}

/// A node of the trie of decoded text prefixes. Children of one node carry
/// distinct labels, so equal texts share one node.
#[derive(Debug, Clone, Copy)]
struct TextNode {
    parent: u32,
    label: Label,
    depth: u32,
}

#[derive(Debug, Clone, Copy)]
struct Hyp {
    state: StateId,
    last: Label,
    score: f64,
    node: u32,
}

#[derive(Debug, Clone, Copy)]
struct Cand {
    state: StateId,
    last: Label,
    score: f64,
    parent: u32,
    /// `(from state, arc index)` when this step emits a character.
    emit: Option<(StateId, u32)>,
}

/// A text as a trie node plus an optional character not yet interned.
type Text = (u32, Option<Label>);

struct Search<'a> {
    automaton: &'a Automaton,
    nodes: Vec<Emission>,
    texts: Vec<TextNode>,
    text_ids: HashMap<(u32, Label), u32>,
}

impl Search<'_> {
    fn new(automaton: &Automaton) -> Search<'_> {
        Search {
            automaton,
            nodes: Vec::new(),
            texts: Vec::new(),
            text_ids: HashMap::new(),
        }
    }

    fn intern(&mut self, parent: u32, label: Label) -> u32 {
        let depth = self.depth(parent) + 1;
        let texts = &mut self.texts;
        *self.text_ids.entry((parent, label)).or_insert_with(|| {
            texts.push(TextNode {
                parent,
                label,
                depth,
            });
            (texts.len() - 1) as u32
        })
    }

    fn depth(&self, t: u32) -> u32 {
        if t == NONE {
            0
        } else {
            self.texts[t as usize].depth
        }
    }

    fn ancestor(&self, mut t: u32, depth: u32) -> u32 {
        while self.depth(t) > depth {
            t = self.texts[t as usize].parent;
        }
        t
    }

    fn text_of_node(&self, node: u32) -> u32 {
        if node == NONE {
            NONE
        } else {
            self.nodes[node as usize].text
        }
    }

    fn cand_text(&self, c: &Cand) -> Text {
        let tail = c
            .emit
            .map(|(from, arc)| self.automaton.arcs(from)[arc as usize].label);
        (self.text_of_node(c.parent), tail)
    }

    /// Character at position `i` of `x`, `None` past its end.
    fn char_at(&self, x: Text, i: u32) -> Option<Option<char>> {
        let d = self.depth(x.0);
        let label = if i < d {
            Some(self.texts[self.ancestor(x.0, i + 1) as usize].label)
        } else if i == d {
            x.1
        } else {
            None
        };
        label.map(|l| self.automaton.alphabet().char_of(l))
    }

    /// Lexicographic order of two texts by character.
    fn text_cmp(&self, a: Text, b: Text) -> Ordering {
        if a == b {
            return Ordering::Equal;
        }
        // Longest common prefix of the interned parts.
        let d = self.depth(a.0).min(self.depth(b.0));
        let (mut x, mut y) = (self.ancestor(a.0, d), self.ancestor(b.0, d));
        while x != y {
            x = self.texts[x as usize].parent;
            y = self.texts[y as usize].parent;
        }
        let mut i = self.depth(x);
        loop {
            match (self.char_at(a, i), self.char_at(b, i)) {
                (None, None) => return Ordering::Equal,
                (ca, cb) if ca != cb => return ca.cmp(&cb),
                _ => i += 1,
            }
        }
    }

    /// Orders candidates best first: higher score, then smaller text.
    fn cand_cmp(&self, a: &Cand, b: &Cand) -> Ordering {
        b.score
            .total_cmp(&a.score)
            .then_with(|| self.text_cmp(self.cand_text(a), self.cand_text(b)))
    }
}

/// Score ordered by `total_cmp`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Score(f64);

impl Eq for Score {}

impl PartialOrd for Score {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Score {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Candidates of one frame, merged by key.
struct Frontier<'a> {
    cands: Vec<Cand>,
    index: &'a mut KeyIndex,
    dist: &'a [u32],
    remaining: u64,
    limit: usize,
    /// The `limit` best scores at which keys were first inserted. Merging
    /// only raises scores, so the least of them bounds the final pruning
    /// threshold from below.
    firsts: BinaryHeap<Reverse<Score>>,
    /// Candidates strictly under this score cannot survive pruning.
    bound: f64,
}

impl Frontier<'_> {
    #[inline]
    fn offer(&mut self, search: &Search, c: Cand) {
        if c.score == f64::NEG_INFINITY
            || c.score < self.bound
            || self.dist[c.state as usize] as u64 > self.remaining
        {
            return;
        }
        match self.index.get_or_insert(c.state, c.last, self.cands.len()) {
            None => {
                self.cands.push(c);
                if self.limit != usize::MAX {
                    self.firsts.push(Reverse(Score(c.score)));
                    if self.firsts.len() > self.limit {
                        self.firsts.pop();
                    }
                    if self.firsts.len() == self.limit {
                        self.bound = self.firsts.peek().map_or(self.bound, |s| s.0 .0);
                    }
                }
            }
            Some(i) => {
                if search.cand_cmp(&c, &self.cands[i]) == Ordering::Less {
                    self.cands[i] = c;
                }
            }
        }
    }
}

/// Position of each search key among the current frame's candidates.
enum KeyIndex {
    /// One slot per `(state, label)`; only touched slots are reset.
    Dense {
        slots: Vec<u32>,
        touched: Vec<usize>,
        width: usize,
    },
    /// For automata too large for a dense table.
    Sparse(HashMap<(StateId, Label), usize>),
}

/// Largest dense table, in slots.
const DENSE_INDEX_LIMIT: usize = 1 << 24;

impl KeyIndex {
    fn new(states: usize, width: usize) -> Self {
        match states.checked_mul(width) {
            Some(n) if n <= DENSE_INDEX_LIMIT => KeyIndex::Dense {
                slots: vec![NONE; n],
                touched: Vec::new(),
                width,
            },
            _ => KeyIndex::Sparse(HashMap::new()),
        }
    }

    /// Returns the candidate already holding the key, or records `next` as
    /// its holder.
    fn get_or_insert(&mut self, state: StateId, last: Label, next: usize) -> Option<usize> {
        match self {
            KeyIndex::Dense {
                slots,
                touched,
                width,
            } => {
                let k = state as usize * *width + last;
                if slots[k] == NONE {
                    slots[k] = next as u32;
                    touched.push(k);
                    None
                } else {
                    Some(slots[k] as usize)
                }
            }
            KeyIndex::Sparse(map) => match map.entry((state, last)) {
                std::collections::hash_map::Entry::Occupied(e) => Some(*e.get()),
                std::collections::hash_map::Entry::Vacant(e) => {
                    e.insert(next);
                    None
                }
            },
        }
    }

    fn clear(&mut self) {
        match self {
            KeyIndex::Dense { slots, touched, .. } => {
                for k in touched.drain(..) {
                    slots[k] = NONE;
                }
            }
            KeyIndex::Sparse(map) => map.clear(),
        }
    }
}

/// Decodes `cm` under `automaton`. Returns `Ok(None)` when no accepted
/// string has positive probability (or survives the beam).
pub fn decode(
    cm: &ConfMat,
    automaton: &Automaton,
    beam: Beam,
) -> Result<Option<Decoding>, DecodeError> {
    if **cm.alphabet() != **automaton.alphabet() {
        return Err(DecodeError::AlphabetMismatch);
    }
    let frames = cm.frames();
    let width = cm.labels();
    let nac = cm.alphabet().nac();
    let limit = beam.limit();
    let dist = automaton.distance_to_accept();

    let mut search = Search::new(automaton);
    let mut hyps = vec![Hyp {
        state: automaton.start(),
        last: nac,
        score: 0.0,
        node: NONE,
    }];
    let mut cands: Vec<Cand> = Vec::new();
    let mut index = KeyIndex::new(automaton.num_states(), width);
    let mut log_row = vec![0.0; width];

    for t in 0..frames {
        for (l, v) in log_row.iter_mut().enumerate() {
            *v = cm.log_prob(t, l);
        }
        cands.clear();
        index.clear();
        let remaining = (frames - t - 1) as u64;

        let mut frontier = Frontier {
            cands: std::mem::take(&mut cands),
            index: &mut index,
            dist: &dist,
            remaining,
            limit,
            firsts: BinaryHeap::new(),
            bound: f64::NEG_INFINITY,
        };
        let row_max = log_row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        // Group hypotheses by state, best first within a group: an emission
        // along an arc can only be won by the first hypothesis of the group
        // whose last label differs from the arc's, or by exact ties with it.
        {
            let s = &search;
            hyps.sort_by(|a, b| {
                a.state.cmp(&b.state).then_with(|| {
                    b.score.total_cmp(&a.score).then_with(|| {
                        s.text_cmp(
                            (s.text_of_node(a.node), None),
                            (s.text_of_node(b.node), None),
                        )
                    })
                })
            });
        }
        for group in hyps.chunk_by(|a, b| a.state == b.state) {
            let q = group[0].state;
            // Arc weights are non-positive.
            if group[0].score + row_max < frontier.bound {
                continue;
            }
            for h in group {
                frontier.offer(
                    &search,
                    Cand {
                        state: q,
                        last: nac,
                        score: h.score + log_row[nac],
                        parent: h.node,
                        emit: None,
                    },
                );
                if h.last != nac {
                    frontier.offer(
                        &search,
                        Cand {
                            state: q,
                            last: h.last,
                            score: h.score + log_row[h.last],
                            parent: h.node,
                            emit: None,
                        },
                    );
                }
            }
            for (i, arc) in automaton.arcs(q).iter().enumerate() {
                let gain = log_row[arc.label] + arc.weight;
                let mut winner = None;
                for h in group.iter().filter(|h| h.last != arc.label) {
                    let score = h.score + gain;
                    if score < frontier.bound || winner.is_some_and(|w| score < w) {
                        break;
                    }
                    winner = Some(score);
                    frontier.offer(
                        &search,
                        Cand {
                            state: arc.to,
                            last: arc.label,
                            score,
                            parent: h.node,
                            emit: Some((q, i as u32)),
                        },
                    );
                }
            }
        }
        cands = frontier.cands;

        if cands.len() > limit {
            let s = &search;
            cands.select_nth_unstable_by(limit - 1, |a, b| s.cand_cmp(a, b));
            cands.truncate(limit);
        }

        hyps.clear();
        for c in &cands {
            let node = match c.emit {
                None => c.parent,
                Some((from, arc)) => {
                    let label = automaton.arcs(from)[arc as usize].label;
                    let text = search.intern(search.text_of_node(c.parent), label);
                    search.nodes.push(Emission {
                        parent: c.parent,
                        from,
                        arc,
                        frame: t as u32,
                        text,
                    });
                    (search.nodes.len() - 1) as u32
                }
            };
            hyps.push(Hyp {
                state: c.state,
                last: c.last,
                score: c.score,
                node,
            });
        }
        if hyps.is_empty() {
            return Ok(None);
        }
    }

    let mut best: Option<&Hyp> = None;
    for h in hyps.iter().filter(|h| automaton.is_accepting(h.state)) {
        best = match best {
            None => Some(h),
            Some(b) => {
                let ord = h.score.total_cmp(&b.score).reverse().then_with(|| {
                    search.text_cmp(
                        (search.text_of_node(h.node), None),
                        (search.text_of_node(b.node), None),
                    )
                });
                Some(if ord == Ordering::Less { h } else { b })
            }
        };
    }
    Ok(best.map(|h| reconstruct(cm, &search, h)))
}

fn reconstruct(cm: &ConfMat, search: &Search, best: &Hyp) -> Decoding {
    let automaton = search.automaton;
    let alphabet = cm.alphabet();
    let nac = alphabet.nac();
    let frames = cm.frames();

    let mut path = Vec::new();
    let mut node = best.node;
    while node != NONE {
        let e = search.nodes[node as usize];
        path.push(e);
        node = e.parent;
    }
    path.reverse();

    let arcs: Vec<_> = path
        .iter()
        .map(|e| &automaton.arcs(e.from)[e.arc as usize])
        .collect();
    let chars: Vec<Label> = arcs.iter().map(|a| a.label).collect();
    let alignment: Vec<usize> = path.iter().map(|e| e.frame as usize).collect();
    let path_weight = arcs.iter().map(|a| a.weight).sum();
    let char_tags = arcs
        .iter()
        .map(|a| a.tag.map(|id| automaton.tag(id).clone()))
        .collect();

    // Between two emissions the label path is a run of the character
    // followed by a run of NaC; pick the best split.
    let mut labels = vec![nac; frames];
    let mut run_ends = Vec::with_capacity(chars.len());
    for (i, &c) in chars.iter().enumerate() {
        let start = alignment[i];
        let next = alignment.get(i + 1).copied().unwrap_or(frames);
        let needs_gap = chars.get(i + 1) == Some(&c);
        let last_split = if needs_gap { next - 1 } else { next };
        // score(s) = sum_{start<t<s} ln y[t][c] + sum_{s<=t<next} ln y[t][nac]
        let mut blank_tail = vec![0.0; next - start];
        for s in (start + 1..next).rev() {
            blank_tail[s - start - 1] = blank_tail[s - start] + cm.log_prob(s, nac);
        }
        let mut run = 0.0;
        let (mut best_split, mut best_score) = (start + 1, blank_tail[0]);
        for s in start + 2..=last_split {
            run += cm.log_prob(s - 1, c);
            let score = run + blank_tail[s - start - 1];
            if score > best_score {
                best_score = score;
                best_split = s;
            }
        }
        labels[start..best_split].fill(c);
        run_ends.push(best_split);
    }

    let text: String = chars.iter().filter_map(|&l| alphabet.char_of(l)).collect();
    // With a pruned beam the best split can beat the path the search kept;
    // report the score of the labels actually returned.
    let frame_score: f64 = labels
        .iter()
        .enumerate()
        .map(|(t, &l)| cm.log_prob(t, l))
        .sum();
    debug_assert!(frame_score + path_weight >= best.score - 1e-9);
    let mut d = Decoding {
        text,
        log_score: frame_score + path_weight,
        path_weight,
        labels,
        alignment,
        run_ends,
        char_tags,
        spans: Vec::new(),
    };
    d.spans = extract_spans(&d);
    d
}

/// Groups consecutive characters with equal tags into spans; untagged
/// characters belong to none.
pub fn extract_spans(d: &Decoding) -> Vec<Span> {
    let chars = d.chars();
    let mut spans = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let Some(tag) = &d.char_tags[i] else {
            i += 1;
            continue;
        };
        let mut j = i + 1;
        while j < chars.len() && d.char_tags[j].as_ref() == Some(tag) {
            j += 1;
        }
        spans.push(Span {
            category: tag.category.clone(),
            person: tag.person.clone(),
            chars: i..j,
            frames: d.alignment[i]..d.run_ends[j - 1],
            text: chars[i..j].iter().collect(),
        });
        i = j;
    }
    spans
}
