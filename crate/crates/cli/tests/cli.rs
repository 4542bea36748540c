//! End-to-end runs of the `rxctc` binary on temporary fixtures.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn data() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data/esposalles")
}

fn rxctc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rxctc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Writes synthetic records into `dir`.
fn synth(dir: &Path, records: &str, noise: &str) {
    let o = rxctc(&[
        "synth",
        "--out-dir",
        path(dir),
        "--records",
        records,
        "--noise",
        noise,
        "--seed",
        "9",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
}

fn decode(dir: &Path, extra: &[&str]) -> Output {
    let d = data();
    let mut args = vec![
        "decode".to_string(),
        "--coarse-grammar".into(),
        d.join("coarse.rx").display().to_string(),
        "--fine-grammar-dir".into(),
        d.join("fine").display().to_string(),
        "--lexicons".into(),
        d.join("lexicons").display().to_string(),
        "--alphabet".into(),
        d.join("alphabet.txt").display().to_string(),
        "--manifest".into(),
        dir.join("manifest.txt").display().to_string(),
    ];
    args.extend(extra.iter().map(|s| s.to_string()));
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    rxctc(&args)
}

fn check(grammar: &Path, lexicons: &Path) -> Output {
    rxctc(&[
        "check",
        "--grammar",
        path(grammar),
        "--lexicons",
        path(lexicons),
        "--alphabet",
        path(&data().join("alphabet.txt")),
    ])
}

#[test]
fn noise_free_records_decode_to_their_gold_spans() {
    let dir = TempDir::new().unwrap();
    synth(dir.path(), "12", "0");
    let pred = dir.path().join("pred.txt");
    let o = decode(dir.path(), &["--out", path(&pred)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = rxctc(&["score", path(&pred), path(&dir.path().join("gold.tsv"))]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = stdout(&o);
    assert!(table.lines().last().unwrap().ends_with("100.00"), "{table}");
    for line in table.lines().skip(1) {
        for cell in line.split_whitespace().filter(|c| c.contains('.')) {
            assert_eq!(cell, "100.00", "{table}");
        }
    }
}

#[test]
fn decoding_is_deterministic() {
    let dir = TempDir::new().unwrap();
    synth(dir.path(), "8", "0.3");
    let a = decode(dir.path(), &[]);
    let b = decode(dir.path(), &["--beam", "256"]);
    assert!(a.status.success(), "{}", stderr(&a));
    assert!(!a.stdout.is_empty());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn synth_is_deterministic() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    synth(a.path(), "3", "0.1");
    synth(b.path(), "3", "0.1");
    for name in ["manifest.txt", "gold.tsv", "r2_0.confmat"] {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap()
        );
    }
}

#[test]
fn missing_confmat_is_an_io_error_naming_the_path() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("manifest.txt"), "# r\nnowhere.confmat\n").unwrap();
    let o = decode(dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nowhere.confmat"), "{}", stderr(&o));
}

#[test]
fn confmat_with_other_labels_is_a_data_error() {
    let dir = TempDir::new().unwrap();
    fs::write(
        dir.path().join("a.confmat"),
        "CONFMAT 1\n1 2\n<nac> a\n0.5 0.5\n",
    )
    .unwrap();
    fs::write(dir.path().join("manifest.txt"), "a.confmat\n").unwrap();
    let o = decode(dir.path(), &[]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("a.confmat"), "{}", stderr(&o));
}

#[test]
fn malformed_grammar_is_a_grammar_error() {
    let dir = TempDir::new().unwrap();
    synth(dir.path(), "1", "0");
    let bad = dir.path().join("bad.rx");
    fs::write(&bad, "(?<name>ab").unwrap();
    let d = data();
    let o = rxctc(&[
        "decode",
        "--grammar",
        path(&bad),
        "--lexicons",
        path(&d.join("lexicons")),
        "--alphabet",
        path(&d.join("alphabet.txt")),
        "--manifest",
        path(&dir.path().join("manifest.txt")),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("bad.rx"), "{}", stderr(&o));
}

#[test]
fn no_parse_is_reported_in_band() {
    let dir = TempDir::new().unwrap();
    synth(dir.path(), "2", "0");
    let g = dir.path().join("g.rx");
    fs::write(&g, "zzz\n").unwrap();
    let d = data();
    let o = rxctc(&[
        "decode",
        "--grammar",
        path(&g),
        "--lexicons",
        path(&d.join("lexicons")),
        "--alphabet",
        path(&d.join("alphabet.txt")),
        "--manifest",
        path(&dir.path().join("manifest.txt")),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        stdout(&o).matches("status\tno-parse").count(),
        2,
        "{}",
        stdout(&o)
    );
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(rxctc(&["decode"]).status.code(), Some(1));
    assert_eq!(rxctc(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(
        rxctc(&["synth", "--out-dir", "x", "--noise", "1.5"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(rxctc(&["--help"]).status.code(), Some(0));
}

#[test]
fn score_of_empty_predictions_is_zero() {
    let dir = TempDir::new().unwrap();
    let gold = dir.path().join("gold.tsv");
    fs::write(&gold, "r\thusband\tname\tJoan\nr\twife\tsurname\tRiera\n").unwrap();
    let pred = dir.path().join("pred.txt");
    fs::write(&pred, "").unwrap();
    let o = rxctc(&["score", path(&pred), path(&gold)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let t = stdout(&o);
    assert!(
        t.lines()
            .any(|l| l.starts_with("husband ") && l.contains("0.00")),
        "{t}"
    );
    assert!(t.lines().last().unwrap().ends_with("0.00"), "{t}");
}

#[test]
fn score_parse_errors_carry_line_numbers() {
    let dir = TempDir::new().unwrap();
    let gold = dir.path().join("gold.tsv");
    fs::write(&gold, "r\thusband\tname\tJoan\nr\tnobody\tname\tX\n").unwrap();
    let pred = dir.path().join("pred.txt");
    fs::write(&pred, "").unwrap();
    let o = rxctc(&["score", path(&pred), path(&gold)]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn shipped_grammars_check_clean() {
    let d = data();
    for g in [
        "coarse.rx",
        "fine/husband.rx",
        "fine/husband_parents.rx",
        "fine/wife.rx",
        "fine/wife_parents.rx",
    ] {
        let o = check(&d.join(g), &d.join("lexicons"));
        assert!(o.status.success(), "{g}: {}", stdout(&o));
        assert!(stdout(&o).contains("states"));
        assert!(!stdout(&o).contains("warning"));
    }
}

#[test]
fn check_names_unresolved_references() {
    let dir = TempDir::new().unwrap();
    let g = dir.path().join("g.rx");
    fs::write(&g, "(?<name>${name})\\s${missing}\n").unwrap();
    let o = check(&g, &data().join("lexicons"));
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains("${missing}"), "{}", stdout(&o));
}

#[test]
fn check_warns_on_unreachable_tags() {
    let dir = TempDir::new().unwrap();
    let lex = dir.path().join("lex");
    fs::create_dir(&lex).unwrap();
    fs::write(lex.join("name.txt"), "1\tAnna\n").unwrap();
    // no character of the class is in the alphabet, so the second branch
    // never completes
    let g = dir.path().join("g.rx");
    fs::write(&g, "(?<name>${name})|(?<surname>Ann[\u{436}])").unwrap();
    let o = check(&g, &lex);
    let out = stdout(&o);
    assert_eq!(o.status.code(), Some(3), "{out}");
    assert!(out.contains("unreachable tag <surname>"), "{out}");
    assert!(!out.contains("<name>"), "{out}");
}
