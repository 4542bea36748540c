//! `rxctc`: batch decoding of record ConfMats under tagged regexes, scoring
//! against gold annotations, and grammar checks.
//!
//! Exit codes: 0 ok, 1 usage, 2 I/O, 3 grammar, 4 data.

mod config;
mod error;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use rxctc::compile::{compile, unresolved_refs};
use rxctc::confmat::SeparatorPolicy;
use rxctc::decoder::Beam;
use rxctc::eval::{format_gold, parse_gold, score_corpus};
use rxctc::example::{synth_record, ExampleModel};
use rxctc::format::{grammar_source, parse_manifest, save_confmat};
use rxctc::record::{decode_record, decode_single, parse_predictions, write_result};
use rxctc::regex::parse_regex;

use crate::config::{
    load_alphabet, load_confmat, load_grammar_dir, load_lexicons, parse_beam, read_text, PriorArgs,
};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "rxctc",
    version,
    about = "Regex-constrained CTC decoding of handwritten records"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Decode every record of a manifest and print its tagged spans.
    Decode(DecodeArgs),
    /// Score span predictions against a gold file.
    Score(ScoreArgs),
    /// Parse and compile grammars and report problems.
    Check(CheckArgs),
    /// Write synthetic records of the example grammar: ConfMats, a manifest
    /// and the gold file.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct DecodeArgs {
    /// Single-pass grammar.
    #[arg(long, conflicts_with_all = ["coarse_grammar", "fine_grammar_dir"], required_unless_present = "coarse_grammar")]
    grammar: Option<PathBuf>,
    /// Grammar splitting a record into person regions.
    #[arg(long, requires = "fine_grammar_dir")]
    coarse_grammar: Option<PathBuf>,
    /// Directory of `<person>.rx` grammars for the regions.
    #[arg(long, requires = "coarse_grammar")]
    fine_grammar_dir: Option<PathBuf>,
    /// Directory of `<name>.txt` lexicons (`count<TAB>word` lines).
    #[arg(long)]
    lexicons: PathBuf,
    /// Alphabet file: label tokens, `<nac>`, `<sp>` and `<nl>` included.
    #[arg(long)]
    alphabet: PathBuf,
    /// Records to decode: ConfMat paths, blank lines between records.
    #[arg(long)]
    manifest: PathBuf,
    /// Beam width, or `unbounded`.
    #[arg(long, default_value = "256", value_parser = parse_beam)]
    beam: Beam,
    /// Frame inserted between the lines of a record: `insert-space` or `none`.
    #[arg(long, default_value = "insert-space")]
    separator: SeparatorPolicy,
    #[command(flatten)]
    prior: PriorArgs,
    /// Output file instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ScoreArgs {
    /// Span serialization written by `decode`.
    predictions: PathBuf,
    /// Gold file: `record_id<TAB>person<TAB>category<TAB>word` lines.
    gold: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CheckArgs {
    /// Grammar to check; may be repeated.
    #[arg(long, required = true)]
    grammar: Vec<PathBuf>,
    #[arg(long)]
    lexicons: PathBuf,
    #[arg(long)]
    alphabet: PathBuf,
    #[command(flatten)]
    prior: PriorArgs,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Directory to write into; created if missing.
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 10)]
    records: u64,
    /// Probability mass moved off the true label in every frame, in [0, 1).
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2)]
    frames_per_char: usize,
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| CliError::io(path, e)),
        None => {
            let mut stdout = io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|()| stdout.flush())
                .map_err(|e| CliError::io(Path::new("<stdout>"), e))
        }
    }
}

fn cmd_decode(args: DecodeArgs) -> Result<(), CliError> {
    let model = args.prior.model()?;
    let alphabet = load_alphabet(&args.alphabet)?;
    let lexicons = load_lexicons(&args.lexicons)?;
    let build = |path: &Path| -> Result<_, CliError> {
        let ast = parse_regex(grammar_source(&read_text(path)?))
            .map_err(|e| CliError::grammar(path, e))?;
        compile(&ast, &lexicons, alphabet.clone(), &model).map_err(|e| CliError::grammar(path, e))
    };
    enum Grammar {
        Single(rxctc::Automaton),
        TwoStep(
            rxctc::Automaton,
            std::collections::BTreeMap<String, rxctc::Automaton>,
        ),
    }
    let grammar = match (&args.grammar, &args.coarse_grammar, &args.fine_grammar_dir) {
        (Some(g), _, _) => Grammar::Single(build(g)?),
        (None, Some(c), Some(dir)) => {
            let coarse = build(c)?;
            let mut fine = std::collections::BTreeMap::new();
            for (person, path) in load_grammar_dir(dir)? {
                fine.insert(person, build(&path)?);
            }
            for tag in coarse.tags_in_use() {
                if let Some(p) = &tag.person {
                    if !fine.contains_key(p) {
                        return Err(CliError::Grammar(format!(
                            "{}: no {p}.rx in {} for person {p:?}",
                            c.display(),
                            dir.display()
                        )));
                    }
                }
            }
            Grammar::TwoStep(coarse, fine)
        }
        _ => {
            return Err(CliError::Usage(
                "give --grammar, or --coarse-grammar with --fine-grammar-dir".into(),
            ))
        }
    };

    let manifest_text = read_text(&args.manifest)?;
    let base = args.manifest.parent().unwrap_or(Path::new("."));
    let records = parse_manifest(&manifest_text, base);
    let outputs: Vec<Result<String, CliError>> = records
        .par_iter()
        .map(|rec| {
            let lines = rec
                .lines
                .iter()
                .map(|p| load_confmat(p, &alphabet))
                .collect::<Result<Vec<_>, _>>()?;
            let result = match &grammar {
                Grammar::Single(a) => decode_single(&rec.id, &lines, a, args.beam, args.separator),
                Grammar::TwoStep(c, f) => {
                    decode_record(&rec.id, &lines, c, f, args.beam, args.separator)
                }
            }
            .map_err(|e| CliError::Data(format!("record {}: {e}", rec.id)))?;
            Ok(write_result(&result))
        })
        .collect();
    let mut text = String::new();
    for out in outputs {
        text.push_str(&out?);
    }
    write_output(args.out.as_deref(), &text)
}

fn cmd_score(args: ScoreArgs) -> Result<(), CliError> {
    let preds = parse_predictions(&read_text(&args.predictions)?)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.predictions.display())))?;
    let gold = parse_gold(&read_text(&args.gold)?)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.gold.display())))?;
    let table = score_corpus(&preds, &gold).map_err(|e| CliError::Data(e.to_string()))?;
    write_output(args.out.as_deref(), &table.render())
}

/// Prints diagnostics for each grammar; fails unless all are clean.
fn cmd_check(args: CheckArgs) -> Result<(), CliError> {
    let model = args.prior.model()?;
    let alphabet = load_alphabet(&args.alphabet)?;
    let lexicons = load_lexicons(&args.lexicons)?;
    let mut problems = 0;
    let mut report = String::new();
    for path in &args.grammar {
        let name = path.display();
        let ast = match parse_regex(grammar_source(&read_text(path)?)) {
            Ok(ast) => ast,
            Err(e) => {
                report.push_str(&format!("{name}: error: {e}\n"));
                problems += 1;
                continue;
            }
        };
        let unresolved = unresolved_refs(&ast, &lexicons);
        for (r, offset) in &unresolved {
            report.push_str(&format!(
                "{name}: error: unresolved reference ${{{r}}} at byte {offset}\n"
            ));
        }
        problems += unresolved.len();
        if !unresolved.is_empty() {
            continue;
        }
        match compile(&ast, &lexicons, alphabet.clone(), &model) {
            Err(e) => {
                report.push_str(&format!("{name}: error: {e}\n"));
                problems += 1;
            }
            Ok(a) => {
                report.push_str(&format!(
                    "{name}: {} states, {} arcs\n",
                    a.num_states(),
                    a.num_arcs()
                ));
                if a.is_empty_language() {
                    report.push_str(&format!("{name}: warning: grammar accepts no string\n"));
                    problems += 1;
                }
                let used = a.tags_in_use();
                for tag in a.tags().iter().filter(|t| !used.contains(t)) {
                    report.push_str(&format!("{name}: warning: unreachable tag <{tag}>\n"));
                    problems += 1;
                }
            }
        }
    }
    write_output(None, &report)?;
    if problems == 0 {
        Ok(())
    } else {
        Err(CliError::Grammar(format!("{problems} problem(s)")))
    }
}

fn cmd_synth(args: SynthArgs) -> Result<(), CliError> {
    if !(0.0..1.0).contains(&args.noise) || args.frames_per_char == 0 {
        return Err(CliError::Usage(
            "--noise must be in [0, 1) and --frames-per-char at least 1".into(),
        ));
    }
    let model =
        ExampleModel::load(&Default::default()).map_err(|e| CliError::Grammar(e.to_string()))?;
    let dir = &args.out_dir;
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut manifest = String::new();
    let mut gold = Vec::new();
    for i in 0..args.records {
        let id = format!("r{i}");
        let rec = synth_record(&mut rng, &model.lexicons, &id);
        let cms = rec
            .confmats(
                &model.alphabet,
                args.noise,
                args.seed ^ i,
                args.frames_per_char,
            )
            .map_err(|e| CliError::Data(e.to_string()))?;
        manifest.push_str(&format!("# {id}\n"));
        for (j, cm) in cms.iter().enumerate() {
            let name = format!("{id}_{j}.confmat");
            let path = dir.join(&name);
            let mut buf = Vec::new();
            save_confmat(cm, &mut buf).map_err(|e| CliError::io(&path, e))?;
            fs::write(&path, buf).map_err(|e| CliError::io(&path, e))?;
            manifest.push_str(&name);
            manifest.push('\n');
        }
        manifest.push('\n');
        gold.push(rec.gold);
    }
    let write = |name: &str, text: &str| {
        let path = dir.join(name);
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))
    };
    write("manifest.txt", &manifest)?;
    write("gold.tsv", &format_gold(&gold))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Decode(a) => cmd_decode(a),
        Command::Score(a) => cmd_score(a),
        Command::Check(a) => cmd_check(a),
        Command::Synth(a) => cmd_synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rxctc: {e}");
            ExitCode::from(e.code())
        }
    }
}
