//! How often the subject and object phrases of a clause appear among a
//! detector's labels, split by whether the downstream prediction was right.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use super::EvalError;

/// Phrase → acceptable synonyms. A phrase always matches itself.
pub type Lexicon = HashMap<String, Vec<String>>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageCase {
    pub correct: bool,
    pub subject: String,
    pub object: String,
    pub detected_labels: BTreeSet<String>,
}

/// How many of the two phrases were detected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectionCount {
    Both = 0,
    One = 1,
    None = 2,
}

impl DetectionCount {
    fn from_hits(hits: usize) -> Self {
        match hits {
            2 => DetectionCount::Both,
            1 => DetectionCount::One,
            _ => DetectionCount::None,
        }
    }
}

/// Percentages for one (correctness, detection count) cell.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CoverageCell {
    pub exact_pct: f64,
    pub synonym_pct: f64,
}

/// Rows are indexed `[correct, incorrect]`, columns `[both, one, none]`.
/// Percentages are relative to the size of their correctness half; an empty
/// half is all zeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageBreakdown {
    pub cells: [[CoverageCell; 3]; 2],
    pub correct_cases: usize,
    pub incorrect_cases: usize,
}

impl CoverageBreakdown {
    pub fn cell(&self, correct: bool, detected: DetectionCount) -> CoverageCell {
        self.cells[usize::from(!correct)][detected as usize]
    }

    pub fn accuracy(&self) -> f64 {
        let total = self.correct_cases + self.incorrect_cases;
        if total == 0 {
            0.0
        } else {
            self.correct_cases as f64 / total as f64
        }
    }
}

fn norm(s: &str) -> String {
    s.trim().to_lowercase()
}

pub fn detector_coverage_analysis(cases: &[CoverageCase], lexicon: &Lexicon) -> CoverageBreakdown {
    let lexicon: HashMap<String, Vec<String>> = lexicon
        .iter()
        .map(|(k, v)| (norm(k), v.iter().map(|s| norm(s)).collect()))
        .collect();
    let mut exact = [[0usize; 3]; 2];
    let mut synonym = [[0usize; 3]; 2];
    let mut half_sizes = [0usize; 2];

    for case in cases {
        let detected: BTreeSet<String> = case.detected_labels.iter().map(|s| norm(s)).collect();
        let exact_hit = |p: &str| detected.contains(&norm(p));
        let synonym_hit = |p: &str| {
            exact_hit(p) || lexicon.get(&norm(p)).is_some_and(|syns| syns.iter().any(|s| detected.contains(s)))
        };
        let half = usize::from(!case.correct);
        half_sizes[half] += 1;
        let e = [&case.subject, &case.object].iter().filter(|p| exact_hit(p)).count();
        let s = [&case.subject, &case.object].iter().filter(|p| synonym_hit(p)).count();
        exact[half][DetectionCount::from_hits(e) as usize] += 1;
        synonym[half][DetectionCount::from_hits(s) as usize] += 1;
    }

    let mut cells = [[CoverageCell::default(); 3]; 2];
    for half in 0..2 {
        if half_sizes[half] == 0 {
            continue;
        }
        let n = half_sizes[half] as f64;
        for col in 0..3 {
            cells[half][col] = CoverageCell {
                exact_pct: 100.0 * exact[half][col] as f64 / n,
                synonym_pct: 100.0 * synonym[half][col] as f64 / n,
            };
        }
    }
    CoverageBreakdown { cells, correct_cases: half_sizes[0], incorrect_cases: half_sizes[1] }
}

/// Six numbered rows (correct/incorrect × both/one/none) as
/// `exact / synonym` percentages, with the accuracy rows between halves.
pub fn render_coverage_table(b: &CoverageBreakdown) -> String {
    let mark = |v: bool| if v { "yes" } else { "no" };
    let mut out = String::new();
    let _ = writeln!(out, "{:<6} {:>4} {:>4} {:>4}   Exact / Synonym", "Case", "S", "One", "Both");
    let _ = writeln!(out, "{:<6} {:>4} {:>4} {:>4}   {:.2}", "Acc.", "--", "--", "--", 100.0 * b.accuracy());
    let mut row = 1;
    for (half, correct) in [true, false].into_iter().enumerate() {
        if half == 1 {
            let _ = writeln!(out, "{:<6} {:>4} {:>4} {:>4}   {:.2}", "1-Acc", "--", "--", "--", 100.0 * (1.0 - b.accuracy()));
        }
        for (col, (one, both)) in [(true, true), (true, false), (false, false)].into_iter().enumerate() {
            let c = b.cells[half][col];
            let _ = writeln!(
                out,
                "{:<6} {:>4} {:>4} {:>4}   {:.2} / {:.2}",
                format!("{row}."),
                mark(correct),
                mark(one),
                mark(both),
                c.exact_pct,
                c.synonym_pct
            );
            row += 1;
        }
    }
    out
}

/// Reads one [`CoverageCase`] JSON object per line.
pub fn parse_coverage_cases<R: BufRead>(reader: R) -> Result<Vec<CoverageCase>, EvalError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| EvalError::Parse { line: i + 1, reason: e.to_string() })?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| EvalError::Parse { line: i + 1, reason: e.to_string() })?);
    }
    Ok(out)
}
