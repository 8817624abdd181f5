use std::fmt::Write as _;

use qslant_core::exprmap::parse_expr;
use serde::{Deserialize, Serialize};

use crate::analyze::analyze;
use crate::config::AnalysisConfig;
use crate::corpus::{CorpusEntry, Expectation};
use crate::error::CliResult;
use crate::report::{Report, SCHEMA_VERSION};

/// Expected and computed angles must agree to this many radians.
pub const EXPECTED_ANGLE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub check: String,
    pub expected: String,
    pub computed: String,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleOutcome {
    pub name: String,
    pub rows: Vec<Row>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<Report>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusOutcome {
    pub schema_version: u32,
    pub seed: u64,
    pub examples: Vec<ExampleOutcome>,
    pub passed: bool,
}

impl CorpusOutcome {
    pub fn failed_examples(&self) -> Vec<&str> {
        self.examples.iter().filter(|e| !e.passed).map(|e| e.name.as_str()).collect()
    }

    /// Plain-text pass/fail table.
    pub fn table(&self) -> String {
        let mut s = String::new();
        let rows = self.examples.iter().flat_map(|e| e.rows.iter().map(move |r| (e, r)));
        let width = |f: &dyn Fn(&Row) -> usize, min: usize| rows.clone().map(|(_, r)| f(r)).fold(min, usize::max);
        let w = self.examples.iter().map(|e| e.name.len()).fold(7, usize::max);
        let wc = width(&|r| r.check.len(), 5);
        let we = width(&|r| r.expected.len(), 8);
        let wg = width(&|r| r.computed.len(), 8);
        let _ = writeln!(s, "{:<w$}  {:<wc$}  {:<we$}  {:<wg$}  status", "example", "check", "expected", "computed");
        for e in &self.examples {
            for r in &e.rows {
                let _ = writeln!(
                    s,
                    "{:<w$}  {:<wc$}  {:<we$}  {:<wg$}  {}",
                    e.name,
                    r.check,
                    r.expected,
                    r.computed,
                    if r.passed { "PASS" } else { "FAIL" }
                );
            }
            if let Some(err) = &e.error {
                let _ = writeln!(s, "{:<w$}  error: {err}", e.name);
            }
            if let Some(rep) = &e.report {
                for f in &rep.failures {
                    let _ = writeln!(s, "{:<w$}  failure: {f}", e.name);
                }
            }
        }
        let failed = self.failed_examples();
        if failed.is_empty() {
            let _ = writeln!(s, "all {} examples pass", self.examples.len());
        } else {
            let _ = writeln!(s, "{} of {} examples FAIL: {}", failed.len(), self.examples.len(), failed.join(", "));
        }
        s
    }
}

/// Value of an expected-angle expression with the map's parameters bound;
/// `None` stands for the complex case.
fn expected_angle(text: &str, entry: &CorpusEntry) -> CliResult<Option<f64>> {
    if text.trim() == "complex" {
        return Ok(None);
    }
    let e = parse_expr(text)?.bind(&entry.spec.params)?;
    let v = e
        .eval(&[0.0f64])
        .map_err(|m| qslant_core::Error::Spec(format!("expected angle `{text}`: {m}")))?;
    Ok(Some(v))
}

fn row(check: impl Into<String>, expected: impl Into<String>, computed: impl Into<String>, passed: bool) -> Row {
    Row {
        check: check.into(),
        expected: expected.into(),
        computed: computed.into(),
        passed,
    }
}

fn compare(entry: &CorpusEntry, expect: &Expectation, rep: &Report) -> CliResult<Vec<Row>> {
    let cls = &rep.classification;
    let mut rows = Vec::new();
    if let Some(v) = &expect.verdict {
        rows.push(row("verdict", v, cls.verdict.as_str(), v == cls.verdict.as_str()));
    }
    if let Some(r) = expect.rank {
        rows.push(row("rank", r.to_string(), cls.rank.to_string(), r == cls.rank));
    }
    for (tag, text) in &expect.angles {
        let got = cls.angles.get(tag).copied().flatten();
        let display = cls.angle_display.get(tag).cloned().unwrap_or_else(|| "missing".into());
        let computed = match got {
            Some(t) if display.starts_with("pi") => format!("{display} ({t:.12})"),
            Some(t) => format!("{t:.12}"),
            None => display,
        };
        let (expected, ok) = match expected_angle(text, entry)? {
            None => {
                let complex = got.is_none()
                    && cls.d2_dims.get(tag) == Some(&0)
                    && cls.d1_dims.get(tag).is_some_and(|d| *d > 0);
                ("complex".to_string(), complex)
            }
            Some(want) => (
                format!("{text} ({want:.12})"),
                got.is_some_and(|g| (g - want).abs() <= EXPECTED_ANGLE_TOL),
            ),
        };
        rows.push(row(format!("theta_{tag}"), expected, computed, ok));
    }
    for (label, want, have) in [
        ("dim_D1", &expect.d1_dims, &cls.d1_dims),
        ("dim_D2", &expect.d2_dims, &cls.d2_dims),
    ] {
        for (tag, d) in want {
            let got = have.get(tag).copied();
            let computed = got.map_or("missing".into(), |g| g.to_string());
            rows.push(row(format!("{label}_{tag}"), d.to_string(), computed, got == Some(*d)));
        }
    }
    let n = rep.failures.len();
    rows.push(row(
        "checks",
        "0 failures",
        format!("{n} failure{}", if n == 1 { "" } else { "s" }),
        n == 0,
    ));
    Ok(rows)
}

pub fn verify_entry(entry: &CorpusEntry, config: &AnalysisConfig) -> ExampleOutcome {
    let name = entry.name().to_string();
    let result = analyze(&entry.spec, config).and_then(|rep| {
        let rows = compare(entry, &entry.expect, &rep)?;
        Ok((rows, rep))
    });
    match result {
        Ok((rows, report)) => ExampleOutcome {
            passed: rows.iter().all(|r| r.passed),
            name,
            rows,
            error: None,
            report: Some(report),
        },
        Err(e) => ExampleOutcome {
            name,
            rows: vec![row("analysis", "completes", e.code(), false)],
            error: Some(e.to_string()),
            report: None,
            passed: false,
        },
    }
}

/// Analyzes every entry and compares against its expectations. Entries are
/// processed in order, so the outcome is deterministic.
pub fn verify_corpus(entries: &[CorpusEntry], config: &AnalysisConfig) -> CorpusOutcome {
    let examples: Vec<ExampleOutcome> = entries.iter().map(|e| verify_entry(e, config)).collect();
    CorpusOutcome {
        schema_version: SCHEMA_VERSION,
        seed: config.seed,
        passed: examples.iter().all(|e| e.passed),
        examples,
    }
}
