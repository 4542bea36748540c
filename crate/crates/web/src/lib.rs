//! WebAssembly entry points for the demo page in `www/`.
//!
//! Every export takes plain numbers or strings and returns a JSON document,
//! so the page needs no generated bindings beyond the function table. The
//! same functions run natively for the tests.

use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use wasm_bindgen::prelude::*;

use rxctc::compile::{compile, unresolved_refs};
use rxctc::eval::{levenshtein, score_corpus};
use rxctc::example::{synth_record, ExampleModel};
use rxctc::{
    decode, decode_record, greedy_best_path, parse_regex, Alphabet, Beam, ConfMat, Lexicon,
    PriorModel, SeparatorPolicy,
};

/// Frames per character in the demo's synthetic matrices.
const FRAMES_PER_CHAR: usize = 2;

fn model() -> &'static ExampleModel {
    static MODEL: OnceLock<ExampleModel> = OnceLock::new();
    MODEL.get_or_init(|| {
        ExampleModel::load(&PriorModel::default()).expect("shipped grammars compile")
    })
}

/// A ConfMat laid out for drawing: `probs[t * labels.len() + l]`.
#[derive(Debug, Serialize)]
pub struct Heatmap {
    pub labels: Vec<String>,
    pub frames: usize,
    pub probs: Vec<f32>,
}

impl Heatmap {
    fn new(cm: &ConfMat) -> Self {
        Self {
            labels: cm.alphabet().tokens(),
            frames: cm.frames(),
            probs: cm.rows().flatten().map(|&p| p as f32).collect(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct DemoSpan {
    pub person: String,
    pub category: String,
    pub text: String,
    pub frames: [usize; 2],
}

#[derive(Debug, Serialize)]
pub struct RecordDemo {
    /// Text the matrices were generated from.
    pub truth: String,
    pub greedy: String,
    pub greedy_errors: usize,
    /// Coarse decoding of the whole record; its regions match anything.
    pub coarse: String,
    /// Coarse decoding with each region replaced by its fine decoding,
    /// empty when the record did not parse.
    pub decoded: String,
    pub decoded_errors: usize,
    pub status: String,
    pub spans: Vec<DemoSpan>,
    /// Fixed-layout score table against the generating items.
    pub table: String,
    pub heatmap: Heatmap,
}

/// Draws record `seed`, blurs its matrices with `noise` and decodes it both
/// greedily and under the example grammars.
pub fn record_demo(seed: u64, noise: f64, beam: usize) -> Result<RecordDemo, String> {
    let m = model();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rec = synth_record(&mut rng, &m.lexicons, "demo");
    let lines = rec
        .confmats(&m.alphabet, noise, seed, FRAMES_PER_CHAR)
        .map_err(|e| e.to_string())?;
    let whole = ConfMat::concat(m.alphabet.clone(), &lines, SeparatorPolicy::InsertSpace)
        .map_err(|e| e.to_string())?;
    let (greedy, _) = greedy_best_path(&whole);
    let beam = if beam == 0 {
        Beam::Unbounded
    } else {
        Beam::Width(beam)
    };
    let result = decode_record(
        "demo",
        &lines,
        &m.coarse,
        &m.fine,
        beam,
        SeparatorPolicy::InsertSpace,
    )
    .map_err(|e| e.to_string())?;
    let coarse = result
        .record
        .as_ref()
        .map(|d| d.text.clone())
        .unwrap_or_default();
    let decoded = result.reading().unwrap_or_default();
    let spans = result
        .spans()
        .map(|s| DemoSpan {
            person: s.person.clone().unwrap_or_default(),
            category: s.category.clone(),
            text: s.text.clone(),
            frames: [s.frames.start, s.frames.end],
        })
        .collect();
    let table = score_corpus(&[result.prediction()], std::slice::from_ref(&rec.gold))
        .map_err(|e| e.to_string())?;
    Ok(RecordDemo {
        greedy_errors: levenshtein(&greedy, &rec.text),
        decoded_errors: levenshtein(&decoded, &rec.text),
        truth: rec.text,
        greedy,
        coarse,
        decoded,
        status: result.status.token().to_string(),
        spans,
        table: table.render(),
        heatmap: Heatmap::new(&whole),
    })
}

#[derive(Debug, Serialize)]
pub struct Candidate {
    pub word: String,
    pub frequency: f64,
    /// Best single path of the matrix spelling the word.
    pub visual: f64,
    /// `visual` plus the word's log frequency.
    pub total: f64,
}

#[derive(Debug, Serialize)]
pub struct PriorDemo {
    pub greedy: String,
    pub decoded: String,
    pub candidates: Vec<Candidate>,
    pub heatmap: Heatmap,
}

/// A five-frame matrix where the optical evidence slightly favours `Jua`
/// over `Anna`.
fn ambiguous_confmat() -> ConfMat {
    let al = Arc::new(Alphabet::new(&['A', 'n', 'a', 'J', 'u'], 0).expect("distinct characters"));
    let nac = al.nac();
    let anna = al.encode("Anna").expect("in alphabet");
    let jua = al.encode("Jua").expect("in alphabet");
    let seq_a = [anna[0], anna[1], nac, anna[2], anna[3]];
    let seq_j = [jua[0], jua[1], jua[2], jua[2], nac];
    let floor = 0.05 / al.len() as f64;
    let rows = (0..5)
        .map(|t| {
            let mut row = vec![floor; al.len()];
            row[seq_a[t]] += 0.95 * 0.48;
            row[seq_j[t]] += 0.95 * 0.52;
            row
        })
        .collect();
    ConfMat::new(al, rows).expect("rows sum to one")
}

/// Decodes the ambiguous matrix against a two-word lexicon in which `Anna`
/// has relative frequency `anna_share`.
pub fn prior_demo(anna_share: f64, prior_scale: f64) -> Result<PriorDemo, String> {
    if !(anna_share > 0.0 && anna_share < 1.0) {
        return Err(format!(
            "share {anna_share} must lie strictly between 0 and 1"
        ));
    }
    let cm = ambiguous_confmat();
    let al = cm.alphabet().clone();
    let prior = PriorModel {
        prior_scale,
        ..PriorModel::default()
    };
    let words = [("Anna", anna_share), ("Jua", 1.0 - anna_share)];
    let lex = Lexicon::new(
        "N",
        words.iter().map(|&(w, f)| (w.to_string(), f)).collect(),
    )
    .map_err(|e| e.to_string())?;
    let lexicons = BTreeMap::from([("N".to_string(), lex)]);
    let grammar = |src: &str| -> Result<_, String> {
        let ast = parse_regex(src).map_err(|e| e.to_string())?;
        compile(&ast, &lexicons, al.clone(), &prior).map_err(|e| e.to_string())
    };
    let best = |src: &str| -> Result<Option<rxctc::Decoding>, String> {
        decode(&cm, &grammar(src)?, Beam::Unbounded).map_err(|e| e.to_string())
    };
    let decoded = best("(?<name>${N})")?.map(|d| d.text).unwrap_or_default();
    let candidates = words
        .iter()
        .map(|&(w, f)| {
            let visual = best(w)?.map_or(f64::NEG_INFINITY, |d| d.log_score);
            Ok(Candidate {
                word: w.to_string(),
                frequency: f,
                visual,
                total: visual + prior_scale * f.ln(),
            })
        })
        .collect::<Result<_, String>>()?;
    Ok(PriorDemo {
        greedy: greedy_best_path(&cm).0,
        decoded,
        candidates,
        heatmap: Heatmap::new(&cm),
    })
}

#[derive(Debug, Default, Serialize)]
pub struct CheckReport {
    pub ok: bool,
    pub states: usize,
    pub arcs: usize,
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
}

/// Parses and compiles `source` against the example alphabet and lexicons.
pub fn check_grammar(source: &str) -> CheckReport {
    let m = model();
    let mut report = CheckReport::default();
    let ast = match parse_regex(source) {
        Ok(ast) => ast,
        Err(e) => {
            report.errors.push(e.to_string());
            return report;
        }
    };
    for (name, offset) in unresolved_refs(&ast, &m.lexicons) {
        report
            .errors
            .push(format!("unresolved reference ${{{name}}} at byte {offset}"));
    }
    if !report.errors.is_empty() {
        return report;
    }
    match compile(
        &ast,
        &m.lexicons,
        m.alphabet.clone(),
        &PriorModel::default(),
    ) {
        Err(e) => report.errors.push(e.to_string()),
        Ok(a) => {
            report.states = a.num_states();
            report.arcs = a.num_arcs();
            if a.is_empty_language() {
                report.warnings.push("grammar accepts no string".into());
            }
            let used = a.tags_in_use();
            for tag in a.tags().iter().filter(|t| !used.contains(t)) {
                report.warnings.push(format!("unreachable tag <{tag}>"));
            }
        }
    }
    report.ok = report.errors.is_empty() && report.warnings.is_empty();
    report
}

fn to_json<T: Serialize>(result: Result<T, String>) -> String {
    match result {
        Ok(v) => serde_json::to_string(&v),
        Err(e) => serde_json::to_string(&serde_json::json!({ "error": e })),
    }
    .expect("serializable")
}

/// JSON of [`record_demo`]; `beam` 0 means unbounded.
#[wasm_bindgen(js_name = recordDemo)]
pub fn record_demo_json(seed: u32, noise: f64, beam: u32) -> String {
    to_json(record_demo(u64::from(seed), noise, beam as usize))
}

/// JSON of [`prior_demo`].
#[wasm_bindgen(js_name = priorDemo)]
pub fn prior_demo_json(anna_share: f64, prior_scale: f64) -> String {
    to_json(prior_demo(anna_share, prior_scale))
}

/// JSON of [`check_grammar`].
#[wasm_bindgen(js_name = checkGrammar)]
pub fn check_grammar_json(source: &str) -> String {
    to_json(Ok(check_grammar(source)))
}

/// The shipped grammars, for the page's editor: `{"coarse": .., "husband": ..}`.
#[wasm_bindgen(js_name = exampleGrammars)]
pub fn example_grammars_json() -> String {
    let mut map = BTreeMap::from([(
        "coarse",
        rxctc::format::grammar_source(rxctc::example::COARSE_GRAMMAR),
    )]);
    for &(person, src) in rxctc::example::FINE_GRAMMARS {
        map.insert(person, rxctc::format::grammar_source(src));
    }
    serde_json::to_string(&map).expect("serializable")
}
