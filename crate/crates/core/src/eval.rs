//! Competition-style scoring of extracted (person, category, word) items.
//!
//! An item scores its character accuracy `max(0, 1 - lev(pred, gold) / |gold|)`
//! when the predicted person and category match the gold slot, and zero
//! otherwise.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("gold word is empty")]
    EmptyGoldWord,
    #[error("prediction for unknown record {0:?}")]
    UnknownRecord(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

macro_rules! closed_set {
    ($(#[$m:meta])* $name:ident { $($variant:ident => $token:literal, $label:literal;)* }) => {
        $(#[$m])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum $name { $($variant),* }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),*];

            /// Identifier used in tags and files.
            pub fn token(self) -> &'static str {
                match self { $($name::$variant => $token),* }
            }

            /// Human-readable name.
            pub fn label(self) -> &'static str {
                match self { $($name::$variant => $label),* }
            }
        }

        impl FromStr for $name {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                Self::ALL
                    .iter()
                    .copied()
                    .find(|v| v.token() == s || v.label() == s)
                    .ok_or_else(|| format!("unknown {} {s:?}", stringify!($name).to_lowercase()))
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.token())
            }
        }
    };
}

closed_set! {
    /// People a record talks about.
    Person {
        Husband => "husband", "husband";
        HusbandFather => "husband_father", "husband's father";
        HusbandMother => "husband_mother", "husband's mother";
        OtherPerson => "other", "other person";
        Wife => "wife", "wife";
        WifeFather => "wife_father", "wife's father";
        WifeMother => "wife_mother", "wife's mother";
    }
}

closed_set! {
    /// Kinds of information extracted per person.
    Category {
        Name => "name", "name";
        Surname => "surname", "surname";
        State => "state", "state";
        Location => "location", "location";
        Occupation => "occupation", "occupation";
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Item {
    pub person: Person,
    pub category: Category,
    pub word: String,
}

impl Item {
    pub fn new(person: Person, category: Category, word: impl Into<String>) -> Self {
        Self {
            person,
            category,
            word: word.into(),
        }
    }

    fn slot(&self) -> (Person, Category) {
        (self.person, self.category)
    }
}

/// Gold annotation of one record, items in reading order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldRecord {
    pub id: String,
    pub items: Vec<Item>,
}

/// Items extracted from one record, in reading order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prediction {
    pub id: String,
    pub items: Vec<Item>,
}

/// Edit distance over Unicode scalar values.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `max(0, 1 - lev(predicted, gold) / |gold|)`.
pub fn char_accuracy(predicted: &str, gold: &str) -> Result<f64, EvalError> {
    let n = gold.chars().count();
    if n == 0 {
        return Err(EvalError::EmptyGoldWord);
    }
    Ok((1.0 - levenshtein(predicted, gold) as f64 / n as f64).max(0.0))
}

/// Score of one gold item given the prediction matched to it, if any.
pub fn item_score(predicted: Option<&Item>, gold: &Item) -> Result<f64, EvalError> {
    if gold.word.is_empty() {
        return Err(EvalError::EmptyGoldWord);
    }
    match predicted {
        Some(p) if p.slot() == gold.slot() => char_accuracy(&p.word, &gold.word),
        _ => Ok(0.0),
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Cell {
    sum: f64,
    count: usize,
}

/// Mean item scores per (person, category), scaled to [0, 100].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreTable {
    cells: BTreeMap<(Person, Category), Cell>,
}

impl ScoreTable {
    /// Cell mean, `None` when the slot has no gold items.
    pub fn cell(&self, person: Person, category: Category) -> Option<f64> {
        self.cells
            .get(&(person, category))
            .map(|c| 100.0 * c.sum / c.count as f64)
    }

    pub fn populated(&self) -> impl Iterator<Item = ((Person, Category), f64)> + '_ {
        self.cells
            .iter()
            .map(|(&k, c)| (k, 100.0 * c.sum / c.count as f64))
    }

    pub fn gold_items(&self) -> usize {
        self.cells.values().map(|c| c.count).sum()
    }

    /// Mean over all gold items, `None` without any.
    pub fn overall(&self) -> Option<f64> {
        let n = self.gold_items();
        (n > 0).then(|| 100.0 * self.cells.values().map(|c| c.sum).sum::<f64>() / n as f64)
    }

    /// Fixed-layout text rendering: one row per person, one column per
    /// category, `-` for slots without gold items, then the overall mean.
    pub fn render(&self) -> String {
        let mut out = format!("{:<18}", "person");
        for c in Category::ALL {
            out.push_str(&format!("{:>12}", c.label()));
        }
        out.push('\n');
        for &p in Person::ALL {
            out.push_str(&format!("{:<18}", p.label()));
            for &c in Category::ALL {
                let v = self
                    .cell(p, c)
                    .map_or_else(|| "-".to_string(), |v| format!("{v:.2}"));
                out.push_str(&format!("{v:>12}"));
            }
            out.push('\n');
        }
        let overall = self
            .overall()
            .map_or_else(|| "-".to_string(), |v| format!("{v:.2}"));
        out.push_str(&format!("{:<18}{overall:>12}\n", "overall"));
        out
    }
}

/// Scores predictions against gold. Within a record, gold and predicted
/// items of the same slot are paired in reading order; unpaired gold items
/// score zero and surplus predictions are ignored.
pub fn score_corpus(
    predictions: &[Prediction],
    gold: &[GoldRecord],
) -> Result<ScoreTable, EvalError> {
    let mut by_id: BTreeMap<&str, Vec<&Prediction>> = BTreeMap::new();
    for p in predictions {
        if !gold.iter().any(|g| g.id == p.id) {
            return Err(EvalError::UnknownRecord(p.id.clone()));
        }
        by_id.entry(p.id.as_str()).or_default().push(p);
    }
    let mut table = ScoreTable::default();
    for g in gold {
        let mut predicted: BTreeMap<(Person, Category), Vec<&Item>> = BTreeMap::new();
        for p in by_id.get(g.id.as_str()).into_iter().flatten() {
            for item in &p.items {
                predicted.entry(item.slot()).or_default().push(item);
            }
        }
        let mut used: BTreeMap<(Person, Category), usize> = BTreeMap::new();
        for item in &g.items {
            let k = used.entry(item.slot()).or_insert(0);
            let matched = predicted.get(&item.slot()).and_then(|v| v.get(*k)).copied();
            *k += 1;
            let s = item_score(matched, item)?;
            let cell = table.cells.entry(item.slot()).or_default();
            cell.sum += s;
            cell.count += 1;
        }
    }
    Ok(table)
}

/// Parses `record_id\tperson\tcategory\tword` lines; blank lines and `#`
/// comments are skipped. Records keep their order of first appearance.
pub fn parse_gold(text: &str) -> Result<Vec<GoldRecord>, EvalError> {
    let mut records: Vec<GoldRecord> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| EvalError::Parse {
            line: i + 1,
            message,
        };
        let fields: Vec<&str> = line.split('\t').collect();
        let [id, person, category, word] = fields[..] else {
            return Err(err(format!(
                "expected 4 tab-separated fields, got {}",
                fields.len()
            )));
        };
        if word.is_empty() {
            return Err(err("empty word".into()));
        }
        let item = Item::new(
            person.parse().map_err(err)?,
            category.parse().map_err(err)?,
            word,
        );
        match records.iter_mut().find(|r| r.id == id) {
            Some(r) => r.items.push(item),
            None => records.push(GoldRecord {
                id: id.to_string(),
                items: vec![item],
            }),
        }
    }
    Ok(records)
}

/// Renders gold records in the gold file format.
pub fn format_gold(records: &[GoldRecord]) -> String {
    let mut out = String::new();
    for r in records {
        for item in &r.items {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\n",
                r.id, item.person, item.category, item.word
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn reference_levenshtein(a: &str, b: &str) -> usize {
        let a: Vec<char> = a.chars().collect();
        let b: Vec<char> = b.chars().collect();
        let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
        for (i, row) in d.iter_mut().enumerate() {
            row[0] = i;
        }
        for (j, cell) in d[0].iter_mut().enumerate() {
            *cell = j;
        }
        for i in 1..=a.len() {
            for j in 1..=b.len() {
                let cost = if a[i - 1] == b[j - 1] { 0 } else { 1 };
                d[i][j] = (d[i - 1][j] + 1)
                    .min(d[i][j - 1] + 1)
                    .min(d[i - 1][j - 1] + cost);
            }
        }
        d[a.len()][b.len()]
    }

    proptest! {
        #[test]
        fn levenshtein_matches_full_table(a in "[abcé]{0,10}", b in "[abcé]{0,10}") {
            prop_assert_eq!(levenshtein(&a, &b), reference_levenshtein(&a, &b));
        }

        #[test]
        fn item_score_in_unit_interval(a in "[ab]{0,8}", b in "[ab]{1,8}") {
            let gold = Item::new(Person::Wife, Category::Name, b);
            let pred = Item::new(Person::Wife, Category::Name, a);
            let s = item_score(Some(&pred), &gold).unwrap();
            prop_assert!((0.0..=1.0).contains(&s));
        }
    }

    #[test]
    fn scoring_rule() {
        let gold = Item::new(Person::Wife, Category::Name, "Anna");
        assert_eq!(item_score(Some(&gold.clone()), &gold).unwrap(), 1.0);
        let wrong_person = Item::new(Person::Husband, Category::Name, "Anna");
        assert_eq!(item_score(Some(&wrong_person), &gold).unwrap(), 0.0);
        assert_eq!(item_score(None, &gold).unwrap(), 0.0);
        let ana = Item::new(Person::Wife, Category::Name, "Ana");
        assert_eq!(reference_levenshtein("Ana", "Anna"), 1);
        assert_eq!(item_score(Some(&ana), &gold).unwrap(), 0.75);
        let far = Item::new(Person::Wife, Category::Name, "Bartomeu");
        assert_eq!(item_score(Some(&far), &gold).unwrap(), 0.0);
        let empty = Item::new(Person::Wife, Category::Name, "");
        assert_eq!(item_score(None, &empty), Err(EvalError::EmptyGoldWord));
    }

    fn record(id: &str, items: &[(Person, Category, &str)]) -> GoldRecord {
        GoldRecord {
            id: id.into(),
            items: items.iter().map(|&(p, c, w)| Item::new(p, c, w)).collect(),
        }
    }

    #[test]
    fn corpus_aggregation() {
        use Category::*;
        use Person::*;
        let gold = vec![record(
            "1",
            &[(Husband, Name, "Joan"), (Husband, Name, "Pere")],
        )];
        let perfect = vec![Prediction {
            id: "1".into(),
            items: gold[0].items.clone(),
        }];
        let t = score_corpus(&perfect, &gold).unwrap();
        assert_eq!(t.cell(Husband, Name), Some(100.0));
        assert_eq!(t.cell(Wife, Name), None);

        let t = score_corpus(&[], &gold).unwrap();
        assert_eq!(t.cell(Husband, Name), Some(0.0));

        let half = vec![Prediction {
            id: "1".into(),
            items: vec![
                Item::new(Husband, Name, "Joan"),
                Item::new(Wife, Name, "Pere"),
            ],
        }];
        let t = score_corpus(&half, &gold).unwrap();
        assert_eq!(t.cell(Husband, Name), Some(50.0));
        assert_eq!(t.overall(), Some(50.0));

        let stray = vec![Prediction {
            id: "9".into(),
            items: vec![],
        }];
        assert_eq!(
            score_corpus(&stray, &gold),
            Err(EvalError::UnknownRecord("9".into()))
        );
    }

    #[test]
    fn three_record_means() {
        use Category::*;
        use Person::*;
        let gold = vec![
            record("a", &[(Wife, Name, "Anna"), (Wife, Surname, "Ferrer")]),
            record("b", &[(Wife, Name, "Maria")]),
            record("c", &[(Wife, Name, "Joana"), (Husband, Surname, "Puig")]),
        ];
        let preds = vec![
            Prediction {
                id: "a".into(),
                items: vec![
                    Item::new(Wife, Name, "Ana"),
                    Item::new(Wife, Surname, "Ferrer"),
                ],
            },
            Prediction {
                id: "c".into(),
                items: vec![
                    Item::new(Wife, Name, "Joana"),
                    Item::new(Husband, Surname, "Pu"),
                ],
            },
        ];
        let t = score_corpus(&preds, &gold).unwrap();
        // wife/name: (0.75 + 0 + 1) / 3
        assert!((t.cell(Wife, Name).unwrap() - 175.0 / 3.0).abs() < 1e-9);
        assert_eq!(t.cell(Wife, Surname), Some(100.0));
        assert_eq!(t.cell(Husband, Surname), Some(50.0));
        assert!((t.overall().unwrap() - 100.0 * 3.25 / 5.0).abs() < 1e-9);
    }

    #[test]
    fn gold_file_round_trip() {
        let text =
            "1\thusband\tname\tJoan\n1\twife's father\tsurname\tPuig\n\n2\tother\tstate\tviuda\n";
        let recs = parse_gold(text).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].items[1].person, Person::WifeFather);
        assert_eq!(parse_gold(&format_gold(&recs)).unwrap(), recs);
        assert!(matches!(
            parse_gold("1\thusband\tname\n"),
            Err(EvalError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_gold("\n1\tpriest\tname\tX\n"),
            Err(EvalError::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn render_layout() {
        let gold = vec![record("1", &[(Person::Husband, Category::Name, "Joan")])];
        let t = score_corpus(&[], &gold).unwrap();
        let text = t.render();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2 + Person::ALL.len());
        assert!(lines[1].starts_with("husband"));
        assert!(lines[1].contains("0.00"));
        assert!(lines.last().unwrap().starts_with("overall"));
    }
}
