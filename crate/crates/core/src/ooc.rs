//! Out-of-coverage (OOC) analysis loop: export the words or chains the
//! automatic evaluation could not judge, read back human labels, tally them.
//!
//! The tool never assigns labels itself.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::chain_metrics::{sentence_chains, ChainOutcome};
use crate::corpus::{Corpus, GenderLabel, HypothesisSet, LengthMismatch, PosTag};
use crate::evaluate::Evaluation;
use crate::matcher::MatchOutcome;

pub const OOC_HEADER: [&str; 9] = [
    "SENTENCE_ID",
    "KIND",
    "TARGET",
    "SRC",
    "REF",
    "HYP",
    "EXPECTED",
    "LABEL",
    "ANNOTATOR",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum OocKind {
    #[serde(rename = "WORD")]
    Word,
    #[serde(rename = "CHAIN")]
    Chain,
}

impl OocKind {
    pub fn as_str(self) -> &'static str {
        match self {
            OocKind::Word => "WORD",
            OocKind::Chain => "CHAIN",
        }
    }
}

impl fmt::Display for OocKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OocKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "WORD" => Ok(OocKind::Word),
            "CHAIN" => Ok(OocKind::Chain),
            _ => Err(s.to_owned()),
        }
    }
}

/// Why an OOC word is missing: a translation error, an acceptable omission,
/// or a rewording that is correctly gendered, wrongly gendered or neutral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum OocWordLabel {
    Err,
    AltO,
    AltC,
    AltW,
    AltN,
}

/// Chain counterpart: error, a rewording without a chain to judge, or an
/// alternative chain that is correct, wrong or internally disagreeing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum OocChainLabel {
    Err,
    NoChain,
    C,
    W,
    No,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum OocLabel {
    Word(OocWordLabel),
    Chain(OocChainLabel),
}

impl OocWordLabel {
    pub const ALL: [OocWordLabel; 5] = [
        OocWordLabel::Err,
        OocWordLabel::AltO,
        OocWordLabel::AltC,
        OocWordLabel::AltW,
        OocWordLabel::AltN,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            OocWordLabel::Err => "ERR",
            OocWordLabel::AltO => "ALT_O",
            OocWordLabel::AltC => "ALT_C",
            OocWordLabel::AltW => "ALT_W",
            OocWordLabel::AltN => "ALT_N",
        }
    }
}

impl OocChainLabel {
    pub const ALL: [OocChainLabel; 5] = [
        OocChainLabel::Err,
        OocChainLabel::NoChain,
        OocChainLabel::C,
        OocChainLabel::W,
        OocChainLabel::No,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            OocChainLabel::Err => "ERR",
            OocChainLabel::NoChain => "NO_CHAIN",
            OocChainLabel::C => "C",
            OocChainLabel::W => "W",
            OocChainLabel::No => "NO",
        }
    }
}

/// Canonical key for label lookup: `Alt-O`, `alt_o` and `ALT_O` are the same.
fn label_key(s: &str) -> String {
    s.trim().to_ascii_uppercase().replace('-', "_")
}

impl FromStr for OocWordLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let key = label_key(s);
        OocWordLabel::ALL
            .into_iter()
            .find(|l| l.as_str() == key)
            .ok_or_else(|| s.to_owned())
    }
}

impl FromStr for OocChainLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let key = label_key(s);
        OocChainLabel::ALL
            .into_iter()
            .find(|l| l.as_str() == key)
            .ok_or_else(|| s.to_owned())
    }
}

impl OocLabel {
    pub fn parse(kind: OocKind, s: &str) -> Result<Self, String> {
        match kind {
            OocKind::Word => s.parse().map(OocLabel::Word),
            OocKind::Chain => s.parse().map(OocLabel::Chain),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            OocLabel::Word(l) => l.as_str(),
            OocLabel::Chain(l) => l.as_str(),
        }
    }
}

/// One exported OOC item. `target` is the term index (WORD) or the chain id
/// (CHAIN). `gender` and `pos` are carried for aggregation and are not part
/// of the TSV.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OocRecord {
    pub sentence_id: String,
    pub kind: OocKind,
    pub target: u32,
    pub src: String,
    pub reference: String,
    pub hypothesis: String,
    /// `correct>wrong>POS` per item, `;`-separated for chains.
    pub expected: String,
    pub gender: GenderLabel,
    pub pos: Option<PosTag>,
    pub label: Option<OocLabel>,
    pub annotator: String,
}

impl OocRecord {
    pub fn identity(&self) -> (&str, OocKind, u32) {
        (&self.sentence_id, self.kind, self.target)
    }
}

fn one_line(s: &str) -> String {
    s.replace(['\t', '\n', '\r'], " ")
}

pub fn extract_ooc(corpus: &Corpus, hypotheses: &HypothesisSet, kind: OocKind) -> Result<Vec<OocRecord>, LengthMismatch> {
    Ok(extract_from(&Evaluation::run(corpus, hypotheses, 1)?, hypotheses, kind))
}

/// Unlabeled records for every NotFound term or uncovered chain, corpus order.
pub fn extract_from(eval: &Evaluation<'_>, hypotheses: &HypothesisSet, kind: OocKind) -> Vec<OocRecord> {
    let mut out = Vec::new();
    for (m, hyp) in eval.matches.iter().zip(&hypotheses.lines) {
        let e = m.entry;
        let record = |target: u32, expected: String, pos: Option<PosTag>| OocRecord {
            sentence_id: e.id.clone(),
            kind,
            target,
            src: e.src.clone(),
            reference: e.reference.clone(),
            hypothesis: one_line(hyp),
            expected,
            gender: e.gender,
            pos,
            label: None,
            annotator: String::new(),
        };
        let describe = |i: usize| {
            let t = &e.terms[i];
            format!("{}>{}>{}", t.correct_form, t.wrong_form, t.pos)
        };
        match kind {
            OocKind::Word => {
                for (i, outcome) in m.outcomes.iter().enumerate() {
                    if *outcome == MatchOutcome::NotFound {
                        out.push(record(i as u32, describe(i), Some(e.terms[i].pos)));
                    }
                }
            }
            OocKind::Chain => {
                for (chain, outcome) in sentence_chains(m) {
                    if outcome == ChainOutcome::OutOfCoverage {
                        let expected = chain.members.iter().map(|&i| describe(i)).collect::<Vec<_>>().join(";");
                        out.push(record(chain.chain_id, expected, None));
                    }
                }
            }
        }
    }
    out
}

pub fn write_ooc_tsv<W: Write>(records: &[OocRecord], mut out: W) -> io::Result<()> {
    writeln!(out, "{}", OOC_HEADER.join("\t"))?;
    for r in records {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.sentence_id,
            r.kind,
            r.target,
            r.src,
            r.reference,
            r.hypothesis,
            r.expected,
            r.label.map(OocLabel::as_str).unwrap_or(""),
            one_line(&r.annotator),
        )?;
    }
    Ok(())
}

/// A row read back from an OOC TSV, label still unparsed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OocRow {
    pub line: usize,
    pub sentence_id: String,
    pub kind: OocKind,
    pub target: u32,
    pub label: String,
    pub annotator: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OocError {
    #[error("line {line}: {message}")]
    Schema { line: usize, message: String },
    #[error("line {line}: unknown label {label:?}")]
    UnknownLabel { line: usize, label: String },
    #[error("line {line}: missing label")]
    MissingLabel { line: usize },
    #[error("line {line}: record {id}/{kind}/{target} is not in the export")]
    UnknownRecord { line: usize, id: String, kind: OocKind, target: u32 },
    #[error("line {line}: record {id}/{kind}/{target} labeled twice by annotator {annotator:?}")]
    DuplicateRecord {
        line: usize,
        id: String,
        kind: OocKind,
        target: u32,
        annotator: String,
    },
    #[error("no labeled records")]
    EmptySet,
}

/// Reads an OOC TSV. Trailing empty LABEL/ANNOTATOR cells may be omitted.
pub fn read_ooc_tsv(text: &str) -> Result<Vec<OocRow>, OocError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end_matches('\r').split('\t').eq(OOC_HEADER.iter().copied()) => {}
        _ => {
            return Err(OocError::Schema {
                line: 1,
                message: format!("expected header {:?}", OOC_HEADER.join("\t")),
            })
        }
    }
    let mut rows = Vec::new();
    for (i, raw) in lines {
        let line = i + 1;
        let raw = raw.trim_end_matches('\r');
        if raw.is_empty() {
            continue;
        }
        let cols: Vec<&str> = raw.split('\t').collect();
        if !(7..=9).contains(&cols.len()) {
            return Err(OocError::Schema {
                line,
                message: format!("expected {} columns, found {}", OOC_HEADER.len(), cols.len()),
            });
        }
        let schema = |message: String| OocError::Schema { line, message };
        let kind = cols[1].parse().map_err(|k| schema(format!("bad KIND {k:?}")))?;
        let target = cols[2].parse().map_err(|_| schema(format!("bad TARGET {:?}", cols[2])))?;
        rows.push(OocRow {
            line,
            sentence_id: cols[0].to_owned(),
            kind,
            target,
            label: cols.get(7).copied().unwrap_or("").trim().to_owned(),
            annotator: cols.get(8).copied().unwrap_or("").trim().to_owned(),
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledOocSet {
    /// Labeled records in export order.
    pub records: Vec<OocRecord>,
}

impl LabeledOocSet {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Validates labeled rows against the export they were produced from.
pub fn ingest_labels(rows: &[OocRow], export: &[OocRecord]) -> Result<LabeledOocSet, OocError> {
    let index: HashMap<(&str, OocKind, u32), usize> =
        export.iter().enumerate().map(|(i, r)| (r.identity(), i)).collect();
    let mut seen = HashSet::new();
    let mut labeled: Vec<(usize, OocRecord)> = Vec::with_capacity(rows.len());
    for row in rows {
        let key = (row.sentence_id.as_str(), row.kind, row.target);
        let &pos = index.get(&key).ok_or_else(|| OocError::UnknownRecord {
            line: row.line,
            id: row.sentence_id.clone(),
            kind: row.kind,
            target: row.target,
        })?;
        if row.label.is_empty() {
            return Err(OocError::MissingLabel { line: row.line });
        }
        let label = OocLabel::parse(row.kind, &row.label).map_err(|label| OocError::UnknownLabel { line: row.line, label })?;
        if !seen.insert((key, row.annotator.as_str())) {
            return Err(OocError::DuplicateRecord {
                line: row.line,
                id: row.sentence_id.clone(),
                kind: row.kind,
                target: row.target,
                annotator: row.annotator.clone(),
            });
        }
        let mut record = export[pos].clone();
        record.label = Some(label);
        record.annotator = row.annotator.clone();
        labeled.push((pos, record));
    }
    labeled.sort_by(|(a, ra), (b, rb)| a.cmp(b).then_with(|| ra.annotator.cmp(&rb.annotator)));
    Ok(LabeledOocSet {
        records: labeled.into_iter().map(|(_, r)| r).collect(),
    })
}

/// Counts per label, with one-decimal percentages that always sum to 100.0
/// (largest-remainder apportionment of the tenths).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabelTally {
    pub total: u64,
    pub counts: BTreeMap<&'static str, u64>,
    pub percentages: BTreeMap<&'static str, f64>,
}

impl LabelTally {
    fn new(labels: &[&'static str], counts: &BTreeMap<&'static str, u64>) -> Self {
        let values: Vec<u64> = labels.iter().map(|l| counts.get(l).copied().unwrap_or(0)).collect();
        let total = values.iter().sum();
        let tenths = apportion_tenths(&values);
        LabelTally {
            total,
            counts: labels.iter().copied().zip(values.iter().copied()).collect(),
            percentages: labels
                .iter()
                .copied()
                .zip(tenths.iter().map(|&t| t as f64 / 10.0))
                .collect(),
        }
    }
}

/// Splits 1000 tenths of a percent proportionally to `counts`; remainders go
/// to the largest fractional parts, earlier entries first on ties.
pub fn apportion_tenths(counts: &[u64]) -> Vec<u64> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return vec![0; counts.len()];
    }
    let mut tenths: Vec<u64> = counts.iter().map(|&c| c * 1000 / total).collect();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(counts[i] * 1000 % total));
    let missing = 1000 - tenths.iter().sum::<u64>();
    for &i in order.iter().take(missing as usize) {
        tenths[i] += 1;
    }
    tenths
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OocKindReport {
    pub all: LabelTally,
    pub by_gender: BTreeMap<GenderLabel, LabelTally>,
    /// Neutral rewordings per POS of the missed word (WORD only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alt_n_by_pos: Option<BTreeMap<PosTag, u64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OocReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub word: Option<OocKindReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chain: Option<OocKindReport>,
}

fn kind_report(records: &[&OocRecord], kind: OocKind) -> Option<OocKindReport> {
    if records.is_empty() {
        return None;
    }
    let labels: Vec<&'static str> = match kind {
        OocKind::Word => OocWordLabel::ALL.iter().map(|l| l.as_str()).collect(),
        OocKind::Chain => OocChainLabel::ALL.iter().map(|l| l.as_str()).collect(),
    };
    let tally = |filter: &dyn Fn(&OocRecord) -> bool| {
        let mut counts = BTreeMap::new();
        for r in records.iter().filter(|r| filter(r)) {
            let label = r.label.expect("labeled set").as_str();
            *counts.entry(label).or_insert(0) += 1;
        }
        LabelTally::new(&labels, &counts)
    };
    let alt_n_by_pos = (kind == OocKind::Word).then(|| {
        let mut by_pos: BTreeMap<PosTag, u64> = PosTag::ALL.iter().map(|&p| (p, 0)).collect();
        for r in records {
            if let (Some(OocLabel::Word(OocWordLabel::AltN)), Some(pos)) = (r.label, r.pos) {
                *by_pos.get_mut(&pos).unwrap() += 1;
            }
        }
        by_pos
    });
    Some(OocKindReport {
        all: tally(&|_| true),
        by_gender: GenderLabel::ALL.iter().map(|&g| (g, tally(&|r| r.gender == g))).collect(),
        alt_n_by_pos,
    })
}

pub fn aggregate_ooc(labels: &LabeledOocSet) -> Result<OocReport, OocError> {
    if labels.is_empty() {
        return Err(OocError::EmptySet);
    }
    let of_kind = |k: OocKind| labels.records.iter().filter(|r| r.kind == k).collect::<Vec<_>>();
    Ok(OocReport {
        word: kind_report(&of_kind(OocKind::Word), OocKind::Word),
        chain: kind_report(&of_kind(OocKind::Chain), OocKind::Chain),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{parse_corpus_str, ParseOptions};

    fn corpus() -> Corpus {
        let text = "ID\tSRC\tREF\tGENDER\tCATEGORY\tGENDERTERMS\n\
            1\tShe is new.\tLa nuova amica è arrivata.\tF\t1F\tla>il>ART>1;nuova>nuovo>ADJ-DES>1;amica>amico>NOUN>1;arrivata>arrivato>VERB>\n\
            2\tHe left.\tLui è andato.\tM\t1M\tandato>andata>VERB>\n";
        parse_corpus_str(text, &ParseOptions::default()).unwrap()
    }

    fn tsv(records: &[OocRecord]) -> String {
        let mut buf = Vec::new();
        write_ooc_tsv(records, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn references_export_nothing() {
        let c = corpus();
        assert!(extract_ooc(&c, &c.references(), OocKind::Word).unwrap().is_empty());
        assert!(extract_ooc(&c, &c.references(), OocKind::Chain).unwrap().is_empty());
    }

    #[test]
    fn empty_hypotheses_export_every_term() {
        let c = corpus();
        let h = HypothesisSet::from_lines(["", ""]);
        let words = extract_ooc(&c, &h, OocKind::Word).unwrap();
        assert_eq!(words.len(), 5);
        assert_eq!(words[0].expected, "la>il>ART");
        assert_eq!(words[4].sentence_id, "2");
        assert!(words.iter().all(|r| r.label.is_none()));
    }

    #[test]
    fn one_missing_member_exports_one_chain() {
        let c = corpus();
        let h = HypothesisSet::from_lines(["la nuova collega è arrivata", "lui è andato"]);
        let chains = extract_ooc(&c, &h, OocKind::Chain).unwrap();
        assert_eq!(chains.len(), 1);
        assert_eq!(chains[0].target, 1);
        assert_eq!(chains[0].expected, "la>il>ART;nuova>nuovo>ADJ-DES;amica>amico>NOUN");
    }

    #[test]
    fn hypothesis_tabs_do_not_break_columns() {
        let c = corpus();
        let h = HypothesisSet::from_lines(["x\ty", ""]);
        let rows = read_ooc_tsv(&tsv(&extract_ooc(&c, &h, OocKind::Word).unwrap())).unwrap();
        assert_eq!(rows.len(), 5);
    }

    fn labeled(export: &[OocRecord], labels: &[&str]) -> String {
        let mut text = String::new();
        for (r, l) in export.iter().zip(labels) {
            text.push_str(&format!("{}\t{}\t{}\ts\tr\th\te\t{}\tann1\n", r.sentence_id, r.kind, r.target, l));
        }
        format!("{}\n{text}", OOC_HEADER.join("\t"))
    }

    #[test]
    fn ingest_and_aggregate() {
        let c = corpus();
        let export = extract_ooc(&c, &HypothesisSet::from_lines(["", ""]), OocKind::Word).unwrap();
        let rows = read_ooc_tsv(&labeled(&export, &["Err", "ALT_N", "alt-n", "ERR", "Alt-C"])).unwrap();
        let set = ingest_labels(&rows, &export).unwrap();
        assert_eq!(set.len(), 5);
        let report = aggregate_ooc(&set).unwrap();
        assert!(report.chain.is_none());
        let w = report.word.unwrap();
        assert_eq!(w.all.counts["ERR"], 2);
        assert_eq!(w.all.percentages["ERR"], 40.0);
        assert_eq!(w.all.percentages["ALT_N"], 40.0);
        assert_eq!(w.by_gender[&GenderLabel::M].counts["ALT_C"], 1);
        let alt_n = w.alt_n_by_pos.unwrap();
        assert_eq!(alt_n[&PosTag::AdjDes], 1);
        assert_eq!(alt_n[&PosTag::Noun], 1);
    }

    #[test]
    fn ingest_errors() {
        let c = corpus();
        let export = extract_ooc(&c, &HypothesisSet::from_lines(["", ""]), OocKind::Word).unwrap();
        let rows = read_ooc_tsv(&labeled(&export[..1], &["Alt-Z"])).unwrap();
        assert!(matches!(ingest_labels(&rows, &export), Err(OocError::UnknownLabel { line: 2, .. })));

        let rows = read_ooc_tsv(&labeled(&export[..1], &[""])).unwrap();
        assert!(matches!(ingest_labels(&rows, &export), Err(OocError::MissingLabel { .. })));

        let twice = [export[0].clone(), export[0].clone()];
        let rows = read_ooc_tsv(&labeled(&twice, &["ERR", "ALT_O"])).unwrap();
        assert!(matches!(ingest_labels(&rows, &export), Err(OocError::DuplicateRecord { line: 3, .. })));

        let mut other = export[0].clone();
        other.target = 99;
        let rows = read_ooc_tsv(&labeled(&[other], &["ERR"])).unwrap();
        assert!(matches!(ingest_labels(&rows, &export), Err(OocError::UnknownRecord { .. })));

        // chain labels are not valid for words
        let rows = read_ooc_tsv(&labeled(&export[..1], &["NO_CHAIN"])).unwrap();
        assert!(matches!(ingest_labels(&rows, &export), Err(OocError::UnknownLabel { .. })));
    }

    #[test]
    fn aggregation_needs_labels() {
        let empty = LabeledOocSet { records: vec![] };
        assert_eq!(aggregate_ooc(&empty), Err(OocError::EmptySet));
    }

    #[test]
    fn tally_examples() {
        assert_eq!(apportion_tenths(&[2, 0, 0, 0, 2]), [500, 0, 0, 0, 500]);
        assert_eq!(apportion_tenths(&[3, 0]), [1000, 0]);
        assert_eq!(apportion_tenths(&[1, 1, 1]), [334, 333, 333]);
        assert_eq!(apportion_tenths(&[0, 0]), [0, 0]);
    }

    #[test]
    fn chain_labels_parse() {
        assert_eq!("NO-chain".parse::<OocChainLabel>(), Ok(OocChainLabel::NoChain));
        assert_eq!("no".parse::<OocChainLabel>(), Ok(OocChainLabel::No));
        assert!("ALT_N".parse::<OocChainLabel>().is_err());
    }

    proptest::proptest! {
        #[test]
        fn apportioned_tenths_sum_to_1000(counts in proptest::collection::vec(0u64..500, 1..6)) {
            let t = apportion_tenths(&counts);
            let total: u64 = counts.iter().sum();
            proptest::prop_assert_eq!(t.iter().sum::<u64>(), if total == 0 { 0 } else { 1000 });
            for (c, x) in counts.iter().zip(&t) {
                if total > 0 {
                    // each share is within one tenth of its exact value
                    let exact = *c as f64 * 1000.0 / total as f64;
                    proptest::prop_assert!((*x as f64 - exact).abs() < 1.0);
                }
            }
        }
    }
}
