//! Epsilon-free weighted automata with tagged character arcs.

use std::collections::VecDeque;
use std::sync::Arc;

use crate::alphabet::{Alphabet, Label};
use crate::regex::TagSpec;

pub type StateId = u32;
pub type TagId = u32;

/// A character arc. `weight` is a log value and never positive.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub label: Label,
    pub weight: f64,
    pub tag: Option<TagId>,
    pub to: StateId,
}

#[derive(Debug, Clone)]
pub struct Automaton {
    alphabet: Arc<Alphabet>,
    arcs: Vec<Vec<Transition>>,
    start: StateId,
    accepting: Vec<bool>,
    tags: Vec<TagSpec>,
}

/// Result of matching a string against an automaton.
#[derive(Debug, Clone, PartialEq)]
pub struct Acceptance {
    pub accepted: bool,
    /// Weight of the best accepting path, `-inf` when rejected.
    pub weight: f64,
    /// Tag of each character on the best path; empty when rejected.
    pub tags: Vec<Option<TagSpec>>,
}

impl Automaton {
    /// Assembles an automaton from per-state arc lists. Arcs are sorted
    /// into a canonical order; no trimming is done.
    pub fn from_parts(
        alphabet: Arc<Alphabet>,
        mut arcs: Vec<Vec<Transition>>,
        start: StateId,
        accepting: Vec<bool>,
        tags: Vec<TagSpec>,
    ) -> Self {
        assert_eq!(arcs.len(), accepting.len());
        assert!((start as usize) < arcs.len());
        for out in &mut arcs {
            out.sort_by(|a, b| {
                (a.label, a.to, a.tag)
                    .cmp(&(b.label, b.to, b.tag))
                    .then(b.weight.total_cmp(&a.weight))
            });
            // parallel arcs with one tag collapse to the heaviest
            out.dedup_by(|b, a| a.label == b.label && a.to == b.to && a.tag == b.tag);
        }
        Self {
            alphabet,
            arcs,
            start,
            accepting,
            tags,
        }
    }

    pub fn alphabet(&self) -> &Arc<Alphabet> {
        &self.alphabet
    }

    pub fn num_states(&self) -> usize {
        self.arcs.len()
    }

    pub fn num_arcs(&self) -> usize {
        self.arcs.iter().map(Vec::len).sum()
    }

    pub fn start(&self) -> StateId {
        self.start
    }

    pub fn is_accepting(&self, q: StateId) -> bool {
        self.accepting[q as usize]
    }

    pub fn accepting_states(&self) -> impl Iterator<Item = StateId> + '_ {
        (0..self.num_states() as StateId).filter(|&q| self.is_accepting(q))
    }

    pub fn arcs(&self, q: StateId) -> &[Transition] {
        &self.arcs[q as usize]
    }

    pub fn tag(&self, id: TagId) -> &TagSpec {
        &self.tags[id as usize]
    }

    /// The tag table; arcs refer into it by index.
    pub fn tags(&self) -> &[TagSpec] {
        &self.tags
    }

    /// Tags that label at least one arc.
    pub fn tags_in_use(&self) -> Vec<&TagSpec> {
        let mut used = vec![false; self.tags.len()];
        for t in self.arcs.iter().flatten() {
            if let Some(id) = t.tag {
                used[id as usize] = true;
            }
        }
        self.tags
            .iter()
            .zip(used)
            .filter_map(|(t, u)| u.then_some(t))
            .collect()
    }

    /// Whether the automaton accepts no string at all.
    pub fn is_empty_language(&self) -> bool {
        !self
            .reachable()
            .iter()
            .zip(&self.accepting)
            .any(|(&r, &a)| r && a)
    }

    fn reachable(&self) -> Vec<bool> {
        let mut seen = vec![false; self.num_states()];
        let mut queue = VecDeque::from([self.start]);
        seen[self.start as usize] = true;
        while let Some(q) = queue.pop_front() {
            for t in self.arcs(q) {
                if !std::mem::replace(&mut seen[t.to as usize], true) {
                    queue.push_back(t.to);
                }
            }
        }
        seen
    }

    /// For every state, the fewest characters needed to reach an accepting
    /// state (`u32::MAX` if none).
    pub fn distance_to_accept(&self) -> Vec<u32> {
        let n = self.num_states();
        let mut reverse: Vec<Vec<StateId>> = vec![Vec::new(); n];
        for (q, out) in self.arcs.iter().enumerate() {
            for t in out {
                reverse[t.to as usize].push(q as StateId);
            }
        }
        let mut dist = vec![u32::MAX; n];
        let mut queue = VecDeque::new();
        for q in self.accepting_states() {
            dist[q as usize] = 0;
            queue.push_back(q);
        }
        while let Some(q) = queue.pop_front() {
            let d = dist[q as usize] + 1;
            for &p in &reverse[q as usize] {
                if dist[p as usize] == u32::MAX {
                    dist[p as usize] = d;
                    queue.push_back(p);
                }
            }
        }
        dist
    }

    /// Removes states that are unreachable from the start or cannot reach an
    /// accepting state. The start state is always kept.
    pub fn trim(self) -> Self {
        let reach = self.reachable();
        let coreach: Vec<bool> = self
            .distance_to_accept()
            .iter()
            .map(|&d| d != u32::MAX)
            .collect();
        let keep: Vec<bool> = (0..self.num_states())
            .map(|q| q == self.start as usize || (reach[q] && coreach[q]))
            .collect();
        let mut remap = vec![StateId::MAX; self.num_states()];
        let mut next = 0;
        for (q, &k) in keep.iter().enumerate() {
            if k {
                remap[q] = next;
                next += 1;
            }
        }
        let mut arcs = Vec::with_capacity(next as usize);
        let mut accepting = Vec::with_capacity(next as usize);
        for (q, out) in self.arcs.into_iter().enumerate() {
            if !keep[q] {
                continue;
            }
            arcs.push(
                out.into_iter()
                    .filter(|t| keep[t.to as usize] && coreach[t.to as usize])
                    .map(|t| Transition {
                        to: remap[t.to as usize],
                        ..t
                    })
                    .collect(),
            );
            accepting.push(self.accepting[q]);
        }
        Self::from_parts(
            self.alphabet,
            arcs,
            remap[self.start as usize],
            accepting,
            self.tags,
        )
    }

    /// Best accepting path for `s`. Ties go to the path through smaller
    /// state ids.
    pub fn accepts(&self, s: &str) -> Acceptance {
        let rejected = Acceptance {
            accepted: false,
            weight: f64::NEG_INFINITY,
            tags: Vec::new(),
        };
        let Ok(labels) = self.alphabet.encode(s) else {
            return rejected;
        };
        let n = self.num_states();
        let mut best = vec![f64::NEG_INFINITY; n];
        best[self.start as usize] = 0.0;
        // back[i][q] = (previous state, arc index) of the best path ending in
        // q after i + 1 characters
        let mut back: Vec<Vec<(StateId, u32)>> = Vec::with_capacity(labels.len());
        for &label in &labels {
            let mut next = vec![f64::NEG_INFINITY; n];
            let mut bp = vec![(StateId::MAX, u32::MAX); n];
            for (q, &score) in best.iter().enumerate() {
                if score == f64::NEG_INFINITY {
                    continue;
                }
                for (i, t) in self.arcs[q].iter().enumerate() {
                    if t.label != label {
                        continue;
                    }
                    let w = score + t.weight;
                    if w > next[t.to as usize] {
                        next[t.to as usize] = w;
                        bp[t.to as usize] = (q as StateId, i as u32);
                    }
                }
            }
            best = next;
            back.push(bp);
        }
        let mut end = None;
        for q in 0..n {
            if self.accepting[q] && best[q] > f64::NEG_INFINITY {
                match end {
                    Some(e) if best[e] >= best[q] => {}
                    _ => end = Some(q),
                }
            }
        }
        let Some(mut q) = end else {
            return rejected;
        };
        let weight = best[q];
        let mut tags = vec![None; labels.len()];
        for i in (0..labels.len()).rev() {
            let (p, arc) = back[i][q];
            tags[i] = self.arcs[p as usize][arc as usize]
                .tag
                .map(|id| self.tags[id as usize].clone());
            q = p as usize;
        }
        Acceptance {
            accepted: true,
            weight,
            tags,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ab() -> Arc<Alphabet> {
        Arc::new(Alphabet::new(&['a', 'b'], 0).unwrap())
    }

    fn arc(label: Label, weight: f64, to: StateId) -> Transition {
        Transition {
            label,
            weight,
            tag: None,
            to,
        }
    }

    #[test]
    fn empty_string_depends_on_start() {
        let a = Automaton::from_parts(ab(), vec![vec![]], 0, vec![false], vec![]);
        assert!(!a.accepts("").accepted);
        assert!(a.is_empty_language());
        let a = Automaton::from_parts(ab(), vec![vec![]], 0, vec![true], vec![]);
        assert_eq!(a.accepts("").weight, 0.0);
    }

    #[test]
    fn best_path_wins() {
        // two routes for "a": weights -2 and -1
        let a = Automaton::from_parts(
            ab(),
            vec![vec![arc(1, -2.0, 1), arc(1, -1.0, 2)], vec![], vec![]],
            0,
            vec![false, true, true],
            vec![],
        );
        let r = a.accepts("a");
        assert!(r.accepted);
        assert_eq!(r.weight, -1.0);
        assert!(!a.accepts("b").accepted);
        assert!(!a.accepts("c").accepted);
    }

    #[test]
    fn trim_drops_dead_states() {
        // 0 -a-> 1 (accepting), 0 -b-> 2 (dead end), 3 unreachable
        let a = Automaton::from_parts(
            ab(),
            vec![
                vec![arc(1, 0.0, 1), arc(2, 0.0, 2)],
                vec![],
                vec![],
                vec![arc(1, 0.0, 1)],
            ],
            0,
            vec![false, true, false, false],
            vec![],
        )
        .trim();
        assert_eq!(a.num_states(), 2);
        assert_eq!(a.num_arcs(), 1);
        assert!(a.accepts("a").accepted);
        assert_eq!(a.distance_to_accept(), vec![1, 0]);
    }
}
