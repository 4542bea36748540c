//! The demo's operations, run natively.

use rxctc_web::{check_grammar, example_grammars_json, prior_demo, record_demo, record_demo_json};

#[test]
fn clean_record_decodes_exactly() {
    let r = record_demo(4, 0.0, 256).unwrap();
    assert_eq!(r.status, "ok");
    assert_eq!(r.decoded, r.truth);
    assert_eq!(r.coarse, r.truth);
    assert_eq!(r.greedy, r.truth);
    assert_eq!(r.decoded_errors, 0);
    assert!(
        r.table.lines().last().unwrap().ends_with("100.00"),
        "{}",
        r.table
    );
    assert_eq!(
        r.heatmap.probs.len(),
        r.heatmap.frames * r.heatmap.labels.len()
    );
    assert!(r
        .spans
        .iter()
        .all(|s| s.frames[0] < s.frames[1] && s.frames[1] <= r.heatmap.frames));
}

#[test]
fn grammar_repairs_noisy_greedy_output() {
    let mut greedy = 0;
    let mut decoded = 0;
    for seed in 0..5 {
        let r = record_demo(seed, 0.93, 256).unwrap();
        assert_eq!(r.status, "ok");
        greedy += r.greedy_errors;
        decoded += r.decoded_errors;
    }
    // the coarse regions accept any text, so the fine step does the repair
    assert!(
        decoded * 10 < greedy,
        "decoded {decoded} vs greedy {greedy}"
    );
}

#[test]
fn bad_noise_is_reported_as_json_error() {
    let v: serde_json::Value = serde_json::from_str(&record_demo_json(1, 1.5, 16)).unwrap();
    assert!(v["error"].is_string());
}

#[test]
fn prior_flips_the_ambiguous_name() {
    let anna = prior_demo(0.7, 1.0).unwrap();
    assert_eq!(anna.decoded, "Anna");
    assert_eq!(anna.greedy, "Jua");
    let jua = prior_demo(0.01, 1.0).unwrap();
    assert_eq!(jua.decoded, "Jua");
    // the winner has the best total
    for d in [&anna, &jua] {
        let top = d
            .candidates
            .iter()
            .max_by(|a, b| a.total.total_cmp(&b.total))
            .unwrap();
        assert_eq!(top.word, d.decoded);
    }
    // without the prior the optical evidence decides
    assert_eq!(prior_demo(0.7, 0.0).unwrap().decoded, "Jua");
    assert!(prior_demo(1.0, 1.0).is_err());
}

#[test]
fn shipped_grammars_check_clean() {
    let grammars: std::collections::BTreeMap<String, String> =
        serde_json::from_str(&example_grammars_json()).unwrap();
    assert_eq!(grammars.len(), 5);
    for (name, src) in grammars {
        let r = check_grammar(&src);
        assert!(r.ok, "{name}: {r:?}");
        assert!(r.states > 0 && r.arcs > 0);
    }
}

#[test]
fn check_reports_problems() {
    let r = check_grammar("(?<name>${name})\\s${missing}");
    assert!(!r.ok);
    assert!(r.errors[0].contains("${missing}"), "{r:?}");
    let r = check_grammar("(?<name>${name})|(?<surname>Ann[\u{436}])");
    assert!(!r.ok);
    assert_eq!(r.warnings, ["unreachable tag <surname>"]);
    assert!(!check_grammar("(ab").ok);
}
