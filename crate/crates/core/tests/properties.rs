//! Decoder, compiler and synthetic-data properties on random instances.

use std::collections::BTreeMap;
use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common;

use common::random_instance;
use rxctc::alphabet::Alphabet;
use rxctc::compile::{build_lexicon_automaton, compile, PriorModel};
use rxctc::confmat::{collapse, seq_log_probability};
use rxctc::decoder::{decode, Beam};
use rxctc::lexicon::Lexicon;
use rxctc::oracle::{random_confmat, random_lexicon, random_string};
use rxctc::synth::synth_confmat;
use rxctc::{ConfMat, Node, NodeKind};

fn literal(s: &str) -> Node {
    Node::new(NodeKind::Concat(
        s.chars().map(|c| Node::new(NodeKind::Literal(c))).collect(),
    ))
}

#[test]
fn rescaling_one_row_shifts_every_score_equally() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut checked = 0;
    for _ in 0..300 {
        let inst = random_instance(&mut rng);
        let frames = rng.random_range(1..=6);
        let cm = random_confmat(&mut rng, &inst.alphabet, frames);
        let Some(base) = decode(&cm, &inst.automaton, Beam::Unbounded).unwrap() else {
            continue;
        };
        let row = rng.random_range(0..frames);
        let gamma: f64 = rng.random_range(0.05..20.0);
        let rows = (0..frames)
            .map(|t| {
                let scale = if t == row { gamma } else { 1.0 };
                cm.row(t).iter().map(|v| v * scale).collect()
            })
            .collect();
        let scaled = ConfMat::with_unnormalized_rows(inst.alphabet.clone(), rows).unwrap();
        let d = decode(&scaled, &inst.automaton, Beam::Unbounded)
            .unwrap()
            .unwrap();
        assert_eq!(d.text, base.text, "/{}/", inst.regex);
        assert!((d.log_score - base.log_score - gamma.ln()).abs() < 1e-9);
        checked += 1;
    }
    assert!(checked > 100);
}

#[test]
fn score_decomposes_into_frames_and_arc_weights() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..500 {
        let inst = random_instance(&mut rng);
        let frames = rng.random_range(0..=8);
        let cm = random_confmat(&mut rng, &inst.alphabet, frames);
        let beam = if rng.random_bool(0.5) {
            Beam::Unbounded
        } else {
            Beam::Width(4)
        };
        let Some(d) = decode(&cm, &inst.automaton, beam).unwrap() else {
            continue;
        };
        let al = &inst.alphabet;
        let acc = inst.automaton.accepts(&d.text);
        assert!(acc.accepted, "/{}/ produced {:?}", inst.regex, d.text);
        assert!((acc.weight - d.path_weight).abs() < 1e-9);
        assert_eq!(d.labels.len(), frames);
        let text_labels = al.encode(&d.text).unwrap();
        assert_eq!(collapse(&d.labels, al.nac()), text_labels);
        let recomputed = seq_log_probability(&d.labels, &cm).unwrap() + d.path_weight;
        assert!(
            (recomputed - d.log_score).abs() < 1e-9,
            "/{}/ {beam:?}",
            inst.regex
        );
        for (i, &l) in text_labels.iter().enumerate() {
            assert_eq!(d.labels[d.alignment[i]], l);
            assert!(d.alignment[i] < d.run_ends[i]);
            assert!(d.labels[d.alignment[i]..d.run_ends[i]]
                .iter()
                .all(|&x| x == l));
            if i > 0 {
                assert!(d.run_ends[i - 1] <= d.alignment[i]);
            }
        }
        let tagged: usize = d.char_tags.iter().filter(|t| t.is_some()).count();
        assert_eq!(d.spans.iter().map(|s| s.chars.len()).sum::<usize>(), tagged);
    }
}

#[test]
fn noise_free_synthetic_confmats_decode_to_their_text() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let chars = ['a', 'b', 'c', ' '];
    let al = Arc::new(Alphabet::new(&chars, 0).unwrap());
    for i in 0..200 {
        let z = loop {
            let s = random_string(&mut rng, &chars, 12);
            if !s.is_empty() {
                break s;
            }
        };
        let mut branches = vec![literal(&z)];
        for _ in 0..3 {
            branches.push(literal(&random_string(&mut rng, &chars, 12)));
        }
        let ast = Node::new(NodeKind::Alternation(branches));
        let a = compile(&ast, &BTreeMap::new(), al.clone(), &PriorModel::default()).unwrap();
        let k = rng.random_range(1..=3);
        let cm = synth_confmat(&z, &al, 0.0, i, k).unwrap();
        let d = decode(&cm, &a, Beam::default()).unwrap().unwrap();
        assert_eq!(d.text, z);
        assert_eq!(d.log_score, 0.0);
    }
}

#[test]
fn lexicon_paths_carry_scaled_log_frequency() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let al = Arc::new(Alphabet::new(&['a', 'b'], 0).unwrap());
    for _ in 0..200 {
        let lex = random_lexicon(&mut rng, "D", &['a', 'b']);
        let scale = [0.0, 0.5, 1.0, 2.0][rng.random_range(0..4)];
        let a = build_lexicon_automaton(&lex, al.clone(), scale).unwrap();
        for (w, f) in lex.entries() {
            let acc = a.accepts(w);
            assert!(acc.accepted);
            assert!((acc.weight - scale * f.ln()).abs() < 1e-12);
        }
        for _ in 0..10 {
            let s = random_string(&mut rng, &['a', 'b'], 5);
            assert_eq!(a.accepts(&s).accepted, lex.frequency(&s).is_some(), "{s:?}");
        }
    }
}

#[test]
fn word_prior_can_be_switched_off() {
    let al = Arc::new(Alphabet::new(&['a', 'b'], 0).unwrap());
    let lex = Lexicon::new("D", vec![("ab".into(), 0.9), ("ba".into(), 0.1)]).unwrap();
    let lexicons = BTreeMap::from([("D".to_string(), lex)]);
    let ast = rxctc::parse_regex("${D}").unwrap();
    let off = PriorModel {
        mode: rxctc::PriorMode::Off,
        ..PriorModel::default()
    };
    let a = compile(&ast, &lexicons, al, &off).unwrap();
    assert_eq!(a.accepts("ba").weight, 0.0);
    assert_eq!(a.accepts("ab").weight, 0.0);
}

proptest! {
    #[test]
    fn collapse_invariances(
        seq in prop::collection::vec(0usize..4, 0..20),
        nac in 0usize..4,
        k in 1usize..4,
    ) {
        let z = collapse(&seq, nac);
        prop_assert!(!z.contains(&nac));
        // stretching every frame leaves the collapse unchanged
        let stretched: Vec<_> = seq.iter().flat_map(|&l| std::iter::repeat_n(l, k)).collect();
        prop_assert_eq!(collapse(&stretched, nac), z.clone());
        // so does a NaC between two different labels
        let mut padded = Vec::new();
        for (i, &l) in seq.iter().enumerate() {
            if i > 0 && seq[i - 1] != l {
                padded.push(nac);
            }
            padded.push(l);
        }
        prop_assert_eq!(collapse(&padded, nac), z.clone());
        // a NaC after every character is a canonical preimage of z
        let canonical: Vec<_> = z.iter().flat_map(|&l| [l, nac]).collect();
        prop_assert_eq!(collapse(&canonical, nac), z);
    }
}
