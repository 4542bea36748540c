//! Random small instances shared by the integration tests.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use rxctc::alphabet::Alphabet;
use rxctc::compile::{compile, PriorModel};
use rxctc::lexicon::Lexicon;
use rxctc::oracle::{random_ast, random_lexicon};
use rxctc::Automaton;

/// An alphabet of at most three characters, two random lexicons, and a
/// compiled random regex of depth at most four.
pub struct Instance {
    pub alphabet: Arc<Alphabet>,
    pub automaton: Automaton,
    pub regex: String,
}

pub fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    let pools: [&[char]; 4] = [&['a'], &['a', 'b'], &['a', ' '], &['a', 'b', ' ']];
    let chars = pools[rng.random_range(0..pools.len())];
    let word_chars: Vec<char> = chars.iter().copied().filter(|&c| c != ' ').collect();
    let alphabet = Arc::new(Alphabet::new(chars, rng.random_range(0..=chars.len())).unwrap());
    let lexicons: BTreeMap<String, Lexicon> = ["D", "E"]
        .iter()
        .map(|n| (n.to_string(), random_lexicon(rng, n, &word_chars)))
        .collect();
    let names: Vec<String> = lexicons.keys().cloned().collect();
    loop {
        let ast = random_ast(rng, 4, chars, &names);
        if let Ok(automaton) = compile(&ast, &lexicons, alphabet.clone(), &PriorModel::default()) {
            return Instance {
                alphabet,
                automaton,
                regex: ast.to_string(),
            };
        }
    }
}
