//! A small marriage-license grammar shipped with the crate, and a generator
//! of synthetic records that it parses.
//!
//! A record reads
//! `dit dia rebere de <husband> fill de <his parents> ab <wife> filla de <her parents>`.
//! The coarse grammar finds the four regions from these keywords; the fine
//! grammars tag names, surnames, states, occupations and locations. The
//! parents grammar accepts one or more first names, at least one surname,
//! optional occupations and locations, then `y de` and the mother's name.
//! The keywords and lexicon contents are illustrative.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::alphabet::Alphabet;
use crate::automaton::Automaton;
use crate::compile::{compile, CompileError, PriorModel};
use crate::confmat::ConfMat;
use crate::eval::{Category, GoldRecord, Item, Person};
use crate::format::{grammar_source, parse_alphabet};
use crate::lexicon::Lexicon;
use crate::regex::parse_regex;
use crate::synth::{synth_confmat, SynthError};

pub const ALPHABET: &str = include_str!("../data/esposalles/alphabet.txt");
pub const COARSE_GRAMMAR: &str = include_str!("../data/esposalles/coarse.rx");

/// Fine grammars by region person.
pub const FINE_GRAMMARS: &[(&str, &str)] = &[
    (
        "husband",
        include_str!("../data/esposalles/fine/husband.rx"),
    ),
    (
        "husband_parents",
        include_str!("../data/esposalles/fine/husband_parents.rx"),
    ),
    ("wife", include_str!("../data/esposalles/fine/wife.rx")),
    (
        "wife_parents",
        include_str!("../data/esposalles/fine/wife_parents.rx"),
    ),
];

/// Lexicons by name, as `count<TAB>word` files.
pub const LEXICONS: &[(&str, &str)] = &[
    (
        "location",
        include_str!("../data/esposalles/lexicons/location.txt"),
    ),
    ("name", include_str!("../data/esposalles/lexicons/name.txt")),
    (
        "occupation",
        include_str!("../data/esposalles/lexicons/occupation.txt"),
    ),
    (
        "state",
        include_str!("../data/esposalles/lexicons/state.txt"),
    ),
    (
        "surname",
        include_str!("../data/esposalles/lexicons/surname.txt"),
    ),
];

/// Surnames missing from every lexicon; the generator uses them to exercise
/// the OOV escape.
pub const UNLISTED_SURNAMES: &[&str] = &["Rovira", "Xammar", "Galceran", "Bonet", "Ribes"];

/// Longest synthetic line, in characters.
const LINE_WIDTH: usize = 32;

pub fn alphabet() -> Arc<Alphabet> {
    Arc::new(parse_alphabet(ALPHABET).expect("shipped alphabet parses"))
}

pub fn lexicons() -> BTreeMap<String, Lexicon> {
    LEXICONS
        .iter()
        .map(|&(name, text)| {
            let lex = Lexicon::parse(name, text).expect("shipped lexicon parses");
            (name.to_string(), lex)
        })
        .collect()
}

/// The example grammars compiled under one prior model.
#[derive(Debug, Clone)]
pub struct ExampleModel {
    pub alphabet: Arc<Alphabet>,
    pub lexicons: BTreeMap<String, Lexicon>,
    pub coarse: Automaton,
    pub fine: BTreeMap<String, Automaton>,
}

impl ExampleModel {
    pub fn load(prior: &PriorModel) -> Result<Self, CompileError> {
        let alphabet = alphabet();
        let lexicons = lexicons();
        let build = |src: &str| {
            let ast = parse_regex(grammar_source(src)).expect("shipped grammar parses");
            compile(&ast, &lexicons, alphabet.clone(), prior)
        };
        let coarse = build(COARSE_GRAMMAR)?;
        let fine = FINE_GRAMMARS
            .iter()
            .map(|&(person, src)| Ok((person.to_string(), build(src)?)))
            .collect::<Result<_, CompileError>>()?;
        Ok(Self {
            alphabet,
            lexicons,
            coarse,
            fine,
        })
    }
}

/// A generated record: its transcript, split into lines, and the items a
/// perfect extraction returns.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthRecord {
    pub text: String,
    pub lines: Vec<String>,
    pub gold: GoldRecord,
}

impl SynthRecord {
    /// One synthetic ConfMat per line; line `i` uses a seed derived from
    /// `seed` and `i`.
    pub fn confmats(
        &self,
        alphabet: &Arc<Alphabet>,
        noise: f64,
        seed: u64,
        frames_per_char: usize,
    ) -> Result<Vec<ConfMat>, SynthError> {
        self.lines
            .iter()
            .enumerate()
            .map(|(i, line)| {
                let s = seed
                    .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                    .wrapping_add(i as u64);
                synth_confmat(line, alphabet, noise, s, frames_per_char)
            })
            .collect()
    }
}

struct Writer<'a, R> {
    rng: &'a mut R,
    lexicons: &'a BTreeMap<String, Lexicon>,
    words: Vec<String>,
    items: Vec<Item>,
}

impl<R: Rng> Writer<'_, R> {
    fn keyword(&mut self, text: &str) {
        self.words.extend(text.split(' ').map(str::to_string));
    }

    fn draw(&mut self, lexicon: &str) -> String {
        let entries = self.lexicons[lexicon].entries();
        let dist =
            WeightedIndex::new(entries.iter().map(|(_, f)| *f)).expect("positive frequencies");
        entries[dist.sample(self.rng)].0.clone()
    }

    fn item(&mut self, person: Person, category: Category, word: String) {
        self.words.push(word.clone());
        self.items.push(Item::new(person, category, word));
    }

    fn word(&mut self, person: Person, category: Category) {
        let w = self.draw(category.token());
        self.item(person, category, w);
    }

    fn maybe(&mut self, p: f64, person: Person, category: Category) {
        if self.rng.random_bool(p) {
            self.word(person, category);
        }
    }

    fn location(&mut self, p: f64, person: Person) {
        if self.rng.random_bool(p) {
            self.keyword("de");
            self.word(person, Category::Location);
        }
    }

    fn names(&mut self, person: Person) {
        let n = if self.rng.random_bool(0.3) { 2 } else { 1 };
        for _ in 0..n {
            self.word(person, Category::Name);
        }
    }

    fn spouse(&mut self, person: Person, state_p: f64, occupation_p: f64) {
        self.names(person);
        if self.rng.random_bool(0.1) {
            let s = UNLISTED_SURNAMES[self.rng.random_range(0..UNLISTED_SURNAMES.len())];
            self.item(person, Category::Surname, s.to_string());
        } else {
            self.word(person, Category::Surname);
        }
        self.maybe(state_p, person, Category::State);
        self.maybe(occupation_p, person, Category::Occupation);
        self.location(0.5, person);
    }

    fn parents(&mut self, father: Person, mother: Person) {
        self.names(father);
        self.word(father, Category::Surname);
        self.maybe(0.3, father, Category::Surname);
        self.maybe(0.4, father, Category::Occupation);
        self.location(0.3, father);
        self.keyword("y de");
        self.word(mother, Category::Name);
    }
}

/// Draws a record from the example grammar's language. Words are drawn by
/// lexicon frequency; one surname in ten is unlisted.
pub fn synth_record<R: Rng>(
    rng: &mut R,
    lexicons: &BTreeMap<String, Lexicon>,
    id: &str,
) -> SynthRecord {
    let mut w = Writer {
        rng,
        lexicons,
        words: Vec::new(),
        items: Vec::new(),
    };
    w.keyword("dit dia rebere de");
    w.spouse(Person::Husband, 0.15, 0.7);
    w.keyword("fill de");
    w.parents(Person::HusbandFather, Person::HusbandMother);
    w.keyword("ab");
    w.spouse(Person::Wife, 0.8, 0.0);
    w.keyword("filla de");
    w.parents(Person::WifeFather, Person::WifeMother);

    let mut lines: Vec<String> = Vec::new();
    for word in &w.words {
        match lines.last_mut() {
            Some(line) if line.chars().count() + 1 + word.chars().count() <= LINE_WIDTH => {
                line.push(' ');
                line.push_str(word);
            }
            _ => lines.push(word.clone()),
        }
    }
    SynthRecord {
        text: w.words.join(" "),
        lines,
        gold: GoldRecord {
            id: id.to_string(),
            items: w.items,
        },
    }
}
