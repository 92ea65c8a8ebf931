//! Deterministic JSON, CSV and Markdown renderings of every report type.
//!
//! Percentages are one-decimal, half-up, computed from the integer counts
//! that are always emitted alongside them. Undefined ratios are JSON `null`,
//! an empty CSV cell and `–` in Markdown. Every rendering embeds the
//! [`RunManifest`] it was produced under.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::chain_metrics::{ChainCell, ChainEvalReport};
use crate::corpus::{CorpusStats, GenderLabel, PosTag, WordClass};
use crate::iaa::IaaReport;
use crate::ooc::{OocKindReport, OocReport};
use crate::word_metrics::{CountCell, ReportDelta, WordEvalReport};

pub const TOOL_NAME: &str = "mge";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Markdown,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "markdown" | "md" => Ok(Format::Markdown),
            other => Err(format!("unknown format {other:?} (json, csv, markdown)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// Provenance attached to every report.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub inputs: Vec<InputDigest>,
    pub options: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        RunManifest {
            tool: TOOL_NAME.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            ..Default::default()
        }
    }

    pub fn input(mut self, path: &str, content: &[u8]) -> Self {
        self.inputs.push(InputDigest {
            path: path.into(),
            sha256: hex::encode(Sha256::digest(content)),
        });
        self
    }

    pub fn option(mut self, key: &str, value: impl ToString) -> Self {
        self.options.insert(key.into(), value.to_string());
        self
    }

    pub fn stamped_now(mut self) -> Self {
        self.timestamp = Some(chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true));
        self
    }

    fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("manifest serializes")
    }
}

pub enum Report<'a> {
    Words(&'a WordEvalReport),
    Chains(&'a ChainEvalReport),
    Delta(&'a ReportDelta),
    Ooc(&'a OocReport),
    Iaa(&'a IaaReport),
    Stats(&'a CorpusStats),
}

pub fn emit_report(report: &Report<'_>, manifest: &RunManifest, format: Format) -> String {
    match format {
        Format::Json => {
            let mut s = match report {
                Report::Words(r) => to_json(&word_json(r), manifest),
                Report::Chains(r) => to_json(&chain_json(r), manifest),
                Report::Delta(r) => to_json(&delta_json(r), manifest),
                Report::Ooc(r) => to_json(r, manifest),
                Report::Iaa(r) => to_json(r, manifest),
                Report::Stats(r) => to_json(&stats_json(r), manifest),
            };
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut out = format!("# manifest: {}\n", manifest.to_json_line());
            out.push_str(&match report {
                Report::Words(r) => word_csv(r),
                Report::Chains(r) => chain_csv(r),
                Report::Delta(r) => delta_csv(r),
                Report::Ooc(r) => ooc_csv(r),
                Report::Iaa(r) => iaa_csv(r),
                Report::Stats(r) => stats_csv(r),
            });
            out
        }
        Format::Markdown => {
            let mut out = match report {
                Report::Words(r) => word_markdown(r),
                Report::Chains(r) => chain_markdown(r),
                Report::Delta(r) => delta_markdown(r),
                Report::Ooc(r) => ooc_markdown(r),
                Report::Iaa(r) => iaa_markdown(r),
                Report::Stats(r) => stats_markdown(r),
            };
            let _ = writeln!(out, "\n<!-- manifest: {} -->", manifest.to_json_line());
            out
        }
    }
}

#[derive(Serialize)]
struct WithManifest<'a, T: Serialize> {
    #[serde(flatten)]
    body: &'a T,
    manifest: &'a RunManifest,
}

fn to_json<T: Serialize>(body: &T, manifest: &RunManifest) -> String {
    serde_json::to_string_pretty(&WithManifest { body, manifest }).expect("report serializes")
}

fn pct(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.1}")).unwrap_or_default()
}

fn md_pct(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.1}")).unwrap_or_else(|| "–".into())
}

// ---- word level ----

#[derive(Debug, Serialize, Deserialize)]
struct CellJson {
    total: u64,
    found_correct: u64,
    found_wrong: u64,
    coverage: Option<f64>,
    accuracy: Option<f64>,
}

impl From<&CountCell> for CellJson {
    fn from(c: &CountCell) -> Self {
        CellJson {
            total: c.total(),
            found_correct: c.found_correct,
            found_wrong: c.found_wrong,
            coverage: c.coverage_pct(),
            accuracy: c.accuracy_pct(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct WordJson {
    overall: CellJson,
    by_gender: BTreeMap<String, CellJson>,
    by_pos: BTreeMap<String, CellJson>,
    by_class: BTreeMap<String, CellJson>,
    by_gender_pos: BTreeMap<String, CellJson>,
    by_gender_class: BTreeMap<String, CellJson>,
}

fn cells<K, F: Fn(&K) -> String>(m: &BTreeMap<K, CountCell>, key: F) -> BTreeMap<String, CellJson> {
    m.iter().map(|(k, v)| (key(k), v.into())).collect()
}

fn word_json(r: &WordEvalReport) -> WordJson {
    WordJson {
        overall: (&r.overall).into(),
        by_gender: cells(&r.by_gender, |g| g.to_string()),
        by_pos: cells(&r.by_pos, |p| p.to_string()),
        by_class: cells(&r.by_class, |c| c.to_string()),
        by_gender_pos: cells(&r.by_gender_pos, |(g, p)| format!("{g}/{p}")),
        by_gender_class: cells(&r.by_gender_class, |(g, c)| format!("{g}/{c}")),
    }
}

#[derive(Debug, Error)]
pub enum ReportParseError {
    #[error("not a word-level report: {0}")]
    Json(#[from] serde_json::Error),
    #[error("bad slice key {0:?}")]
    BadKey(String),
    #[error("slice {0:?}: found counts exceed total")]
    BadCounts(String),
}

fn cell_from_json(key: &str, c: &CellJson) -> Result<CountCell, ReportParseError> {
    let found = c.found_correct + c.found_wrong;
    if found > c.total {
        return Err(ReportParseError::BadCounts(key.into()));
    }
    Ok(CountCell {
        found_correct: c.found_correct,
        found_wrong: c.found_wrong,
        not_found: c.total - found,
    })
}

fn parse_slice<K: Ord, F: Fn(&str) -> Option<K>>(
    m: &BTreeMap<String, CellJson>,
    parse: F,
) -> Result<BTreeMap<K, CountCell>, ReportParseError> {
    m.iter()
        .map(|(k, v)| {
            let key = parse(k).ok_or_else(|| ReportParseError::BadKey(k.clone()))?;
            Ok((key, cell_from_json(k, v)?))
        })
        .collect()
}

fn split_pair<A: FromStr, B: FromStr>(k: &str) -> Option<(A, B)> {
    let (a, b) = k.split_once('/')?;
    Some((a.parse().ok()?, b.parse().ok()?))
}

impl FromStr for WordClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        WordClass::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| s.to_owned())
    }
}

/// Reads back the counts of a word-level JSON report; percentages are
/// recomputed, never trusted.
pub fn parse_word_report_json(text: &str) -> Result<WordEvalReport, ReportParseError> {
    let j: WordJson = serde_json::from_str(text)?;
    Ok(WordEvalReport {
        overall: cell_from_json("overall", &j.overall)?,
        by_gender: parse_slice(&j.by_gender, |k| k.parse::<GenderLabel>().ok())?,
        by_pos: parse_slice(&j.by_pos, |k| k.parse::<PosTag>().ok())?,
        by_class: parse_slice(&j.by_class, |k| k.parse::<WordClass>().ok())?,
        by_gender_pos: parse_slice(&j.by_gender_pos, split_pair)?,
        by_gender_class: parse_slice(&j.by_gender_class, split_pair)?,
    })
}

fn word_csv(r: &WordEvalReport) -> String {
    let mut out = String::from("slice,total,found_correct,found_wrong,not_found,coverage,accuracy\n");
    for (label, c) in r.slices() {
        let _ = writeln!(
            out,
            "{label},{},{},{},{},{},{}",
            c.total(),
            c.found_correct,
            c.found_wrong,
            c.not_found,
            pct(c.coverage_pct()),
            pct(c.accuracy_pct())
        );
    }
    out
}

fn word_markdown(r: &WordEvalReport) -> String {
    let mut out = String::from("| Slice | Terms | Correct | Wrong | Not found | Cov (%) | Acc (%) |\n");
    out.push_str("|---|---:|---:|---:|---:|---:|---:|\n");
    for (label, c) in r.slices() {
        let _ = writeln!(
            out,
            "| {label} | {} | {} | {} | {} | {} | {} |",
            c.total(),
            c.found_correct,
            c.found_wrong,
            c.not_found,
            md_pct(c.coverage_pct()),
            md_pct(c.accuracy_pct())
        );
    }
    out
}

// ---- chains ----

#[derive(Serialize)]
struct ChainCellJson {
    total: u64,
    covered: u64,
    #[serde(rename = "C")]
    c: u64,
    #[serde(rename = "W")]
    w: u64,
    #[serde(rename = "NO")]
    no: u64,
    coverage: Option<f64>,
    #[serde(rename = "C_pct")]
    c_pct: Option<f64>,
    #[serde(rename = "W_pct")]
    w_pct: Option<f64>,
    #[serde(rename = "NO_pct")]
    no_pct: Option<f64>,
}

impl From<&ChainCell> for ChainCellJson {
    fn from(c: &ChainCell) -> Self {
        ChainCellJson {
            total: c.total_chains,
            covered: c.covered,
            c: c.c_count,
            w: c.w_count,
            no: c.no_count,
            coverage: c.coverage_pct(),
            c_pct: c.c_pct(),
            w_pct: c.w_pct(),
            no_pct: c.no_pct(),
        }
    }
}

#[derive(Serialize)]
struct ChainJson {
    all: ChainCellJson,
    #[serde(rename = "F")]
    f: ChainCellJson,
    #[serde(rename = "M")]
    m: ChainCellJson,
}

fn chain_json(r: &ChainEvalReport) -> ChainJson {
    let get = |g| r.by_gender.get(&g).copied().unwrap_or_default();
    ChainJson {
        all: (&r.all).into(),
        f: (&get(GenderLabel::F)).into(),
        m: (&get(GenderLabel::M)).into(),
    }
}

fn chain_csv(r: &ChainEvalReport) -> String {
    let mut out = String::from("group,total,covered,C,W,NO,coverage,C_pct,W_pct,NO_pct\n");
    for (label, c) in r.rows() {
        let _ = writeln!(
            out,
            "{label},{},{},{},{},{},{},{},{},{}",
            c.total_chains,
            c.covered,
            c.c_count,
            c.w_count,
            c.no_count,
            pct(c.coverage_pct()),
            pct(c.c_pct()),
            pct(c.w_pct()),
            pct(c.no_pct())
        );
    }
    out
}

fn chain_markdown(r: &ChainEvalReport) -> String {
    let mut out = String::from("| | Chains | Covered | Cov (%) | C | W | NO | C (%) | W (%) | NO (%) |\n");
    out.push_str("|---|---:|---:|---:|---:|---:|---:|---:|---:|---:|\n");
    for (label, c) in r.rows() {
        let _ = writeln!(
            out,
            "| {label} | {} | {} | {} | {} | {} | {} | {} | {} | {} |",
            c.total_chains,
            c.covered,
            md_pct(c.coverage_pct()),
            c.c_count,
            c.w_count,
            c.no_count,
            md_pct(c.c_pct()),
            md_pct(c.w_pct()),
            md_pct(c.no_pct())
        );
    }
    out
}

// ---- deltas ----

#[derive(Serialize)]
struct DeltaJson {
    coverage_pp: Option<f64>,
    accuracy_pp: Option<f64>,
}

#[derive(Serialize)]
struct ReportDeltaJson {
    delta: BTreeMap<String, DeltaJson>,
}

fn delta_json(r: &ReportDelta) -> ReportDeltaJson {
    ReportDeltaJson {
        delta: r
            .slices
            .iter()
            .map(|(label, d)| {
                (
                    label.clone(),
                    DeltaJson {
                        coverage_pp: d.coverage_pp(),
                        accuracy_pp: d.accuracy_pp(),
                    },
                )
            })
            .collect(),
    }
}

fn signed(v: Option<f64>, none: &str) -> String {
    match v {
        Some(x) if x > 0.0 => format!("+{x:.1}"),
        Some(x) => format!("{x:.1}"),
        None => none.into(),
    }
}

fn delta_csv(r: &ReportDelta) -> String {
    let mut out = String::from("slice,coverage_pp,accuracy_pp\n");
    for (label, d) in &r.slices {
        let _ = writeln!(out, "{label},{},{}", signed(d.coverage_pp(), ""), signed(d.accuracy_pp(), ""));
    }
    out
}

fn delta_markdown(r: &ReportDelta) -> String {
    let mut out = String::from("| Slice | Δ Cov (pp) | Δ Acc (pp) |\n|---|---:|---:|\n");
    for (label, d) in &r.slices {
        let _ = writeln!(
            out,
            "| {label} | {} | {} |",
            signed(d.coverage_pp(), "–"),
            signed(d.accuracy_pp(), "–")
        );
    }
    out
}

// ---- OOC ----

fn ooc_groups(k: &OocKindReport) -> Vec<(&'static str, &crate::ooc::LabelTally)> {
    let mut rows = vec![("All", &k.all)];
    rows.extend(k.by_gender.iter().map(|(g, t)| (g.as_str(), t)));
    rows
}

fn ooc_kinds(r: &OocReport) -> Vec<(&'static str, &OocKindReport)> {
    let mut kinds = Vec::new();
    if let Some(w) = &r.word {
        kinds.push(("WORD", w));
    }
    if let Some(c) = &r.chain {
        kinds.push(("CHAIN", c));
    }
    kinds
}

fn ooc_csv(r: &OocReport) -> String {
    let mut out = String::from("kind,group,label,count,pct\n");
    for (kind, k) in ooc_kinds(r) {
        for (group, tally) in ooc_groups(k) {
            for (label, count) in &tally.counts {
                let p = (tally.total > 0).then(|| tally.percentages[label]);
                let _ = writeln!(out, "{kind},{group},{label},{count},{}", pct(p));
            }
        }
        if let Some(by_pos) = &k.alt_n_by_pos {
            for (pos, n) in by_pos {
                let _ = writeln!(out, "{kind},ALT_N/{pos},ALT_N,{n},");
            }
        }
    }
    out
}

fn ooc_markdown(r: &OocReport) -> String {
    let mut out = String::new();
    for (kind, k) in ooc_kinds(r) {
        let labels: Vec<&str> = k.all.counts.keys().copied().collect();
        let _ = writeln!(out, "### {kind}\n");
        let _ = writeln!(out, "| | Total | {} |", labels.join(" | "));
        let _ = writeln!(out, "|---|---:|{}", "---:|".repeat(labels.len()));
        for (group, tally) in ooc_groups(k) {
            let cells: Vec<String> = labels
                .iter()
                .map(|l| {
                    let p = (tally.total > 0).then(|| tally.percentages[l]);
                    format!("{} ({})", md_pct(p), tally.counts[l])
                })
                .collect();
            let _ = writeln!(out, "| {group} | {} | {} |", tally.total, cells.join(" | "));
        }
        if let Some(by_pos) = &k.alt_n_by_pos {
            let _ = writeln!(out, "\nALT_N by POS: {}", by_pos.iter().map(|(p, n)| format!("{p} {n}")).collect::<Vec<_>>().join(", "));
        }
        out.push('\n');
    }
    out
}

// ---- IAA ----

fn iaa_csv(r: &IaaReport) -> String {
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
    format!(
        "metric,value\nitems,{}\nobserved_agreement,{:.6}\nexpected_agreement,{:.6}\nscott_pi,{}\nchains_a,{}\nchains_b,{}\nchains_shared,{}\ndice,{}\n",
        r.items,
        r.observed_agreement,
        r.expected_agreement,
        opt(r.scott_pi),
        r.chains_a,
        r.chains_b,
        r.chains_shared,
        opt(r.dice)
    )
}

fn iaa_markdown(r: &IaaReport) -> String {
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "–".into());
    format!(
        "| Measure | Value |\n|---|---:|\n| Terms compared | {} |\n| Scott's pi (POS) | {} |\n| Chains (A / B / shared) | {} / {} / {} |\n| Dice (chains) | {} |\n",
        r.items,
        opt(r.scott_pi),
        r.chains_a,
        r.chains_b,
        r.chains_shared,
        opt(r.dice)
    )
}

// ---- stats ----

#[derive(Serialize)]
struct StatsJson {
    sentences: usize,
    terms: usize,
    pos: BTreeMap<String, usize>,
    terms_by_gender: BTreeMap<String, usize>,
    chains: usize,
    chain_members: usize,
}

fn stats_json(s: &CorpusStats) -> StatsJson {
    StatsJson {
        sentences: s.sentences,
        terms: s.terms,
        pos: s.by_pos.iter().map(|(p, n)| (p.to_string(), *n)).collect(),
        terms_by_gender: s.by_gender.iter().map(|(g, n)| (g.to_string(), *n)).collect(),
        chains: s.chains,
        chain_members: s.chain_members,
    }
}

fn stats_csv(s: &CorpusStats) -> String {
    let mut out = String::from("row,count\n");
    let _ = writeln!(out, "sentences,{}", s.sentences);
    let _ = writeln!(out, "POS (tot),{}", s.terms);
    for (p, n) in &s.by_pos {
        let _ = writeln!(out, "{p},{n}");
    }
    let _ = writeln!(out, "AGR-CHAINS,{}", s.chains);
    out
}

fn stats_markdown(s: &CorpusStats) -> String {
    let mut out = String::from("| | Count |\n|---|---:|\n");
    let _ = writeln!(out, "| Sentences | {} |", s.sentences);
    let _ = writeln!(out, "| **POS** (tot) | {} |", s.terms);
    for (p, n) in &s.by_pos {
        let _ = writeln!(out, "| {p} | {n} |");
    }
    let _ = writeln!(out, "| **AGR-CHAINS** | {} |", s.chains);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::word_metrics::diff_reports;

    fn manifest() -> RunManifest {
        RunManifest::new("test").input("c.tsv", b"abc").option("format", "json")
    }

    fn sample_words() -> WordEvalReport {
        let mut r = WordEvalReport::default();
        let cell = CountCell { found_correct: 2, found_wrong: 1, not_found: 1 };
        r.overall = cell;
        r.by_gender.insert(GenderLabel::F, cell);
        r.by_pos.insert(PosTag::Noun, cell);
        r.by_class.insert(WordClass::Open, cell);
        r.by_gender_pos.insert((GenderLabel::F, PosTag::Noun), cell);
        r.by_gender_class.insert((GenderLabel::F, WordClass::Open), cell);
        r
    }

    #[test]
    fn json_has_stable_keys_and_nulls() {
        let out = emit_report(&Report::Words(&sample_words()), &manifest(), Format::Json);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["overall"]["total"], 4);
        assert_eq!(v["overall"]["coverage"], 75.0);
        assert_eq!(v["overall"]["accuracy"], 66.7);
        assert!(v["by_pos"]["PRON"]["accuracy"].is_null());
        assert_eq!(v["by_gender_pos"]["F/NOUN"]["found_wrong"], 1);
        assert_eq!(v["manifest"]["inputs"][0]["sha256"], hex::encode(Sha256::digest(b"abc")));
        assert!(v["manifest"].get("timestamp").is_none());
    }

    #[test]
    fn word_json_reads_back() {
        let r = sample_words();
        let out = emit_report(&Report::Words(&r), &manifest(), Format::Json);
        assert_eq!(parse_word_report_json(&out).unwrap(), r);
        assert!(parse_word_report_json("{}").is_err());
    }

    #[test]
    fn rendering_is_deterministic() {
        let r = sample_words();
        for f in [Format::Json, Format::Csv, Format::Markdown] {
            assert_eq!(
                emit_report(&Report::Words(&r), &manifest(), f),
                emit_report(&Report::Words(&r), &manifest(), f)
            );
        }
    }

    #[test]
    fn markdown_marks_undefined() {
        let out = emit_report(&Report::Words(&sample_words()), &manifest(), Format::Markdown);
        assert!(out.contains("| pos:PRON | 0 | 0 | 0 | 0 | – | – |"));
        assert!(out.contains("| overall | 4 | 2 | 1 | 1 | 75.0 | 66.7 |"));
        assert!(out.contains("<!-- manifest: {"));
    }

    #[test]
    fn chain_markdown_has_all_f_m_rows() {
        let mut r = ChainEvalReport::default();
        r.all = ChainCell { total_chains: 4, covered: 3, c_count: 2, w_count: 1, no_count: 0 };
        r.by_gender.insert(GenderLabel::F, r.all);
        let md = emit_report(&Report::Chains(&r), &manifest(), Format::Markdown);
        let rows: Vec<&str> = md.lines().filter(|l| l.starts_with("| ") && !l.starts_with("| |")).collect();
        assert_eq!(rows.len(), 3);
        assert!(rows[0].starts_with("| All | 4 | 3 | 75.0 | 2 | 1 | 0 | 66.7 | 33.3 | 0.0 |"));
        assert!(rows[1].starts_with("| F "));
        assert!(rows[2].starts_with("| M | 0 | 0 | – |"));
        let json = emit_report(&Report::Chains(&r), &manifest(), Format::Json);
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["all"]["C_pct"], 66.7);
        assert!(v["M"]["coverage"].is_null());
    }

    #[test]
    fn delta_rendering_signs() {
        let mut a = WordEvalReport::default();
        let mut b = WordEvalReport::default();
        a.overall = CountCell { found_correct: 673, found_wrong: 327, not_found: 0 };
        b.overall = CountCell { found_correct: 641, found_wrong: 359, not_found: 0 };
        let d = diff_reports(&a, &b).unwrap();
        let csv = emit_report(&Report::Delta(&d), &manifest(), Format::Csv);
        assert!(csv.contains("\noverall,0.0,+3.2\n"));
        assert!(csv.contains("\npos:ART,,\n"));
    }

    #[test]
    fn format_names() {
        assert_eq!("md".parse::<Format>(), Ok(Format::Markdown));
        assert!("xml".parse::<Format>().is_err());
    }
}
