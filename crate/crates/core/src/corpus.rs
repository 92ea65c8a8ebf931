//! Annotated corpus model, TSV reader/writer and hypothesis loading.
//!
//! File layout (UTF-8, LF):
//!
//! ```text
//! # lang: en-it                       optional, any number of `#` lines
//! ID	SRC	REF	GENDER	CATEGORY	GENDERTERMS
//! 12	I left.	La ragazza è andata via.	F	1F	la>il>ART>1;ragazza>ragazzo>NOUN>1;andata>andato>VERB>
//! ```
//!
//! `GENDERTERMS` is a `;`-separated list of `correct>wrong>POS>chain_id`
//! quadruples; an empty `chain_id` means the term is not part of a chain.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::{self, Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

use crate::textnorm::{normalize, normalized_tokens, to_multiset, tokenize};

pub const HEADER: [&str; 6] = ["ID", "SRC", "REF", "GENDER", "CATEGORY", "GENDERTERMS"];
const LANG_PREFIX: &str = "lang: ";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PosTag {
    #[serde(rename = "ART")]
    Art,
    #[serde(rename = "PRON")]
    Pron,
    #[serde(rename = "ADJ-DET")]
    AdjDet,
    #[serde(rename = "ADJ-DES")]
    AdjDes,
    #[serde(rename = "NOUN")]
    Noun,
    #[serde(rename = "VERB")]
    Verb,
}

impl PosTag {
    pub const ALL: [PosTag; 6] = [
        PosTag::Art,
        PosTag::Pron,
        PosTag::AdjDet,
        PosTag::AdjDes,
        PosTag::Noun,
        PosTag::Verb,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PosTag::Art => "ART",
            PosTag::Pron => "PRON",
            PosTag::AdjDet => "ADJ-DET",
            PosTag::AdjDes => "ADJ-DES",
            PosTag::Noun => "NOUN",
            PosTag::Verb => "VERB",
        }
    }

    /// Function-word POS are closed class; content-word POS are open.
    pub fn class(self) -> WordClass {
        match self {
            PosTag::Art | PosTag::Pron | PosTag::AdjDet => WordClass::Closed,
            PosTag::AdjDes | PosTag::Noun | PosTag::Verb => WordClass::Open,
        }
    }
}

impl fmt::Display for PosTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PosTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PosTag::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| s.to_owned())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum WordClass {
    #[serde(rename = "CLOSED")]
    Closed,
    #[serde(rename = "OPEN")]
    Open,
}

impl WordClass {
    pub const ALL: [WordClass; 2] = [WordClass::Closed, WordClass::Open];

    pub fn as_str(self) -> &'static str {
        match self {
            WordClass::Closed => "CLOSED",
            WordClass::Open => "OPEN",
        }
    }
}

impl fmt::Display for WordClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum GenderLabel {
    F,
    M,
}

impl GenderLabel {
    pub const ALL: [GenderLabel; 2] = [GenderLabel::F, GenderLabel::M];

    pub fn as_str(self) -> &'static str {
        match self {
            GenderLabel::F => "F",
            GenderLabel::M => "M",
        }
    }
}

impl fmt::Display for GenderLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GenderLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "F" => Ok(GenderLabel::F),
            "M" => Ok(GenderLabel::M),
            other => Err(other.to_owned()),
        }
    }
}

/// One gender-marked word of a reference, with its opposite-gender form.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TermAnnotation {
    pub correct_form: String,
    pub wrong_form: String,
    pub pos: PosTag,
    pub chain_id: Option<u32>,
}

impl TermAnnotation {
    pub fn new(correct: &str, wrong: &str, pos: PosTag, chain_id: Option<u32>) -> Self {
        TermAnnotation {
            correct_form: normalize(correct),
            wrong_form: normalize(wrong),
            pos,
            chain_id,
        }
    }

    fn encode(&self) -> String {
        let chain = self.chain_id.map(|c| c.to_string()).unwrap_or_default();
        format!("{}>{}>{}>{}", self.correct_form, self.wrong_form, self.pos, chain)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceEntry {
    pub id: String,
    pub src: String,
    pub reference: String,
    pub gender: GenderLabel,
    pub category: String,
    pub terms: Vec<TermAnnotation>,
}

impl SentenceEntry {
    /// Groups chained terms; one [`Chain`] per distinct chain id, ordered by id.
    pub fn chains(&self) -> Vec<Chain> {
        let mut groups: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for (i, term) in self.terms.iter().enumerate() {
            if let Some(id) = term.chain_id {
                groups.entry(id).or_default().push(i);
            }
        }
        groups
            .into_iter()
            .map(|(chain_id, members)| Chain {
                sentence_id: self.id.clone(),
                chain_id,
                members,
            })
            .collect()
    }

    /// Reference tokens with the first unused occurrence of every term's
    /// correct form swapped for its wrong form, joined by single spaces.
    pub fn wrong_substituted(&self) -> String {
        let mut tokens = normalized_tokens(&self.reference);
        let mut used = vec![false; tokens.len()];
        for term in &self.terms {
            if let Some(i) = (0..tokens.len()).find(|&i| !used[i] && tokens[i] == term.correct_form) {
                used[i] = true;
                tokens[i] = term.wrong_form.clone();
            }
        }
        tokens.join(" ")
    }

    fn encode_terms(&self) -> String {
        self.terms
            .iter()
            .map(TermAnnotation::encode)
            .collect::<Vec<_>>()
            .join(";")
    }
}

pub fn chains_of(entry: &SentenceEntry) -> Vec<Chain> {
    entry.chains()
}

/// An agreement chain: indices into `SentenceEntry::terms`, annotation order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Chain {
    pub sentence_id: String,
    pub chain_id: u32,
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Corpus {
    pub language_pair: Option<String>,
    /// Free-form `#` comment lines preceding the header.
    pub notes: Vec<String>,
    pub entries: Vec<SentenceEntry>,
}

#[derive(Debug, Clone)]
pub struct ParseOptions {
    /// Require every correct form to occur in the tokenized reference,
    /// counting repeated forms.
    pub check_reference_forms: bool,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            check_reference_forms: true,
        }
    }
}

/// Where a corpus error was detected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Line(usize),
    Entry(usize),
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Line(n) => write!(f, "line {n}"),
            Location::Entry(n) => write!(f, "entry {n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValueErrorKind {
    #[error("empty value")]
    Empty,
    #[error("no annotated terms")]
    EmptyTerms,
    #[error("unknown POS tag {0:?}")]
    BadPos(String),
    #[error("unknown gender label {0:?}")]
    BadGender(String),
    #[error("malformed term {0:?} (expected correct>wrong>POS>chain_id)")]
    MalformedTerm(String),
    #[error("bad chain id {0:?}")]
    BadChainId(String),
    #[error("correct and wrong form are identical ({0:?})")]
    SameForms(String),
    #[error("form {0:?} is not a single token")]
    MultiToken(String),
    #[error("chain {0} has a single member")]
    SingletonChain(u32),
    #[error("duplicate id {0:?}")]
    DuplicateId(String),
    #[error("correct form {0:?} does not occur in the reference")]
    FormNotInReference(String),
    #[error("tab or line break inside field")]
    ControlChar,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: input is not valid UTF-8")]
    Decode { line: usize },
    #[error("line {line}: {message}")]
    Schema { line: usize, message: String },
    #[error("{location}, column {column}: {kind}")]
    Value {
        location: Location,
        column: &'static str,
        kind: ValueErrorKind,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl CorpusError {
    pub fn value_kind(&self) -> Option<&ValueErrorKind> {
        match self {
            CorpusError::Value { kind, .. } => Some(kind),
            _ => None,
        }
    }
}

fn decode(bytes: Vec<u8>) -> Result<String, CorpusError> {
    String::from_utf8(bytes).map_err(|e| {
        let valid = e.utf8_error().valid_up_to();
        let line = e.as_bytes()[..valid].iter().filter(|&&b| b == b'\n').count() + 1;
        CorpusError::Decode { line }
    })
}

/// Splits on LF, tolerating CRLF, and drops the empty piece after a final newline.
fn split_lines(text: &str) -> Vec<&str> {
    let mut lines: Vec<&str> = text
        .split('\n')
        .map(|l| l.strip_suffix('\r').unwrap_or(l))
        .collect();
    if text.is_empty() || text.ends_with('\n') {
        lines.pop();
    }
    lines
}

fn nfc(s: &str) -> String {
    s.nfc().collect()
}

fn parse_terms(field: &str) -> Result<Vec<TermAnnotation>, ValueErrorKind> {
    if field.trim().is_empty() {
        return Err(ValueErrorKind::EmptyTerms);
    }
    field
        .split(';')
        .map(|raw| {
            let raw = raw.trim();
            let parts: Vec<&str> = raw.split('>').collect();
            if parts.len() != 4 {
                return Err(ValueErrorKind::MalformedTerm(raw.to_owned()));
            }
            let pos = parts[2].trim().parse::<PosTag>().map_err(ValueErrorKind::BadPos)?;
            let chain = parts[3].trim();
            let chain_id = if chain.is_empty() {
                None
            } else {
                Some(chain.parse::<u32>().map_err(|_| ValueErrorKind::BadChainId(chain.to_owned()))?)
            };
            Ok(TermAnnotation::new(parts[0].trim(), parts[1].trim(), pos, chain_id))
        })
        .collect()
}

fn check_form(form: &str) -> Result<(), ValueErrorKind> {
    if form.is_empty() {
        return Err(ValueErrorKind::Empty);
    }
    let toks = tokenize(form);
    if toks.len() != 1 || toks[0] != form {
        return Err(ValueErrorKind::MultiToken(form.to_owned()));
    }
    Ok(())
}

/// Checks the per-entry invariants, returning the offending column.
fn validate_entry(entry: &SentenceEntry, options: &ParseOptions) -> Result<(), (&'static str, ValueErrorKind)> {
    let text_fields = [
        ("ID", &entry.id),
        ("SRC", &entry.src),
        ("REF", &entry.reference),
        ("CATEGORY", &entry.category),
    ];
    for (column, value) in text_fields {
        if value.contains(['\t', '\n', '\r']) {
            return Err((column, ValueErrorKind::ControlChar));
        }
    }
    if entry.id.is_empty() {
        return Err(("ID", ValueErrorKind::Empty));
    }
    const TERMS: &str = "GENDERTERMS";
    if entry.terms.is_empty() {
        return Err((TERMS, ValueErrorKind::EmptyTerms));
    }
    for term in &entry.terms {
        check_form(&term.correct_form).map_err(|k| (TERMS, k))?;
        check_form(&term.wrong_form).map_err(|k| (TERMS, k))?;
        if term.correct_form == term.wrong_form {
            return Err((TERMS, ValueErrorKind::SameForms(term.correct_form.clone())));
        }
    }
    for chain in entry.chains() {
        if chain.members.len() < 2 {
            return Err((TERMS, ValueErrorKind::SingletonChain(chain.chain_id)));
        }
    }
    if options.check_reference_forms {
        let mut available = to_multiset(&normalized_tokens(&entry.reference));
        for term in &entry.terms {
            if !available.take(&term.correct_form) {
                return Err(("REF", ValueErrorKind::FormNotInReference(term.correct_form.clone())));
            }
        }
    }
    Ok(())
}

impl Corpus {
    /// Builds a corpus from in-memory entries, enforcing the same invariants
    /// as the parser.
    pub fn new(
        language_pair: Option<String>,
        entries: Vec<SentenceEntry>,
        options: &ParseOptions,
    ) -> Result<Corpus, CorpusError> {
        let mut seen = HashSet::new();
        for (i, entry) in entries.iter().enumerate() {
            let location = Location::Entry(i);
            validate_entry(entry, options).map_err(|(column, kind)| CorpusError::Value { location, column, kind })?;
            if !seen.insert(entry.id.as_str()) {
                return Err(CorpusError::Value {
                    location,
                    column: "ID",
                    kind: ValueErrorKind::DuplicateId(entry.id.clone()),
                });
            }
        }
        Ok(Corpus {
            language_pair,
            notes: Vec::new(),
            entries,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn chains(&self) -> impl Iterator<Item = Chain> + '_ {
        self.entries.iter().flat_map(SentenceEntry::chains)
    }

    pub fn get(&self, id: &str) -> Option<&SentenceEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    /// Keeps the entries (and their aligned hypotheses) matching `keep`.
    pub fn select<F>(&self, hyps: &HypothesisSet, keep: F) -> Result<(Corpus, HypothesisSet), LengthMismatch>
    where
        F: Fn(&SentenceEntry) -> bool,
    {
        hyps.check_aligned(self)?;
        let (entries, lines): (Vec<_>, Vec<_>) = self
            .entries
            .iter()
            .zip(&hyps.lines)
            .filter(|(e, _)| keep(e))
            .map(|(e, h)| (e.clone(), h.clone()))
            .unzip();
        let corpus = Corpus {
            language_pair: self.language_pair.clone(),
            notes: self.notes.clone(),
            entries,
        };
        Ok((corpus, HypothesisSet { lines }))
    }

    /// References, one per entry, usable as an ideal hypothesis set.
    pub fn references(&self) -> HypothesisSet {
        HypothesisSet {
            lines: self.entries.iter().map(|e| e.reference.clone()).collect(),
        }
    }

    /// References with every annotated form swapped to the opposite gender.
    pub fn wrong_substituted(&self) -> HypothesisSet {
        HypothesisSet {
            lines: self.entries.iter().map(SentenceEntry::wrong_substituted).collect(),
        }
    }
}

pub fn parse_corpus<R: Read>(mut input: R, options: &ParseOptions) -> Result<Corpus, CorpusError> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    parse_corpus_str(&decode(bytes)?, options)
}

pub fn parse_corpus_str(text: &str, options: &ParseOptions) -> Result<Corpus, CorpusError> {
    let lines = split_lines(text);
    let mut corpus = Corpus::default();
    let mut idx = 0;
    while idx < lines.len() && lines[idx].starts_with('#') {
        let comment = lines[idx].trim_start_matches('#').trim_start();
        match comment.strip_prefix(LANG_PREFIX) {
            Some(lang) => corpus.language_pair = Some(lang.trim().to_owned()),
            None => corpus.notes.push(comment.to_owned()),
        }
        idx += 1;
    }
    let header_line = idx + 1;
    match lines.get(idx) {
        Some(h) if h.split('\t').eq(HEADER.iter().copied()) => {}
        Some(h) => {
            return Err(CorpusError::Schema {
                line: header_line,
                message: format!("expected header {:?}, found {:?}", HEADER.join("\t"), h),
            })
        }
        None => {
            return Err(CorpusError::Schema {
                line: header_line,
                message: "missing header".into(),
            })
        }
    }

    let mut seen = HashSet::new();
    for (offset, line) in lines[idx + 1..].iter().enumerate() {
        let line_no = header_line + 1 + offset;
        let location = Location::Line(line_no);
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != HEADER.len() {
            return Err(CorpusError::Schema {
                line: line_no,
                message: format!("expected {} columns, found {}", HEADER.len(), cols.len()),
            });
        }
        let value_err = |column: &'static str, kind| CorpusError::Value { location, column, kind };
        let gender = cols[3].parse().map_err(|g| value_err("GENDER", ValueErrorKind::BadGender(g)))?;
        let terms = parse_terms(cols[5]).map_err(|k| value_err("GENDERTERMS", k))?;
        let entry = SentenceEntry {
            id: nfc(cols[0]),
            src: nfc(cols[1]),
            reference: nfc(cols[2]),
            gender,
            category: nfc(cols[4]),
            terms,
        };
        validate_entry(&entry, options).map_err(|(column, kind)| value_err(column, kind))?;
        if !seen.insert(entry.id.clone()) {
            return Err(value_err("ID", ValueErrorKind::DuplicateId(entry.id)));
        }
        corpus.entries.push(entry);
    }
    Ok(corpus)
}

pub fn write_corpus<W: Write>(corpus: &Corpus, mut out: W) -> io::Result<()> {
    if let Some(lang) = &corpus.language_pair {
        writeln!(out, "# {LANG_PREFIX}{lang}")?;
    }
    for note in &corpus.notes {
        writeln!(out, "# {note}")?;
    }
    writeln!(out, "{}", HEADER.join("\t"))?;
    for e in &corpus.entries {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            e.id,
            e.src,
            e.reference,
            e.gender,
            e.category,
            e.encode_terms()
        )?;
    }
    Ok(())
}

pub fn write_corpus_string(corpus: &Corpus) -> String {
    let mut buf = Vec::new();
    write_corpus(corpus, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("corpus fields are UTF-8")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("{hypotheses} hypothesis lines for {entries} corpus entries")]
pub struct LengthMismatch {
    pub hypotheses: usize,
    pub entries: usize,
}

#[derive(Debug, Error)]
pub enum HypothesisError {
    #[error(transparent)]
    LengthMismatch(#[from] LengthMismatch),
    #[error("line {line}: hypothesis file is not valid UTF-8")]
    Decode { line: usize },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// System outputs, line `i` aligned with corpus entry `i`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct HypothesisSet {
    pub lines: Vec<String>,
}

impl HypothesisSet {
    pub fn from_lines<I, S>(lines: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        HypothesisSet {
            lines: lines.into_iter().map(Into::into).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    pub fn check_aligned(&self, corpus: &Corpus) -> Result<(), LengthMismatch> {
        if self.lines.len() == corpus.entries.len() {
            Ok(())
        } else {
            Err(LengthMismatch {
                hypotheses: self.lines.len(),
                entries: corpus.entries.len(),
            })
        }
    }

    pub fn pairs<'a>(&'a self, corpus: &'a Corpus) -> Result<Vec<(&'a SentenceEntry, &'a str)>, LengthMismatch> {
        self.check_aligned(corpus)?;
        Ok(corpus.entries.iter().zip(self.lines.iter().map(String::as_str)).collect())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for line in &self.lines {
            s.push_str(line);
            s.push('\n');
        }
        s
    }
}

pub fn load_hypotheses<R: Read>(mut input: R, corpus: &Corpus) -> Result<HypothesisSet, HypothesisError> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    let text = decode(bytes).map_err(|e| match e {
        CorpusError::Decode { line } => HypothesisError::Decode { line },
        _ => unreachable!("decode only yields Decode errors"),
    })?;
    let set = HypothesisSet::from_lines(split_lines(&text));
    set.check_aligned(corpus)?;
    Ok(set)
}

/// Table-shaped annotation summary: term counts per POS and chain count.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct CorpusStats {
    pub sentences: usize,
    pub terms: usize,
    pub by_pos: BTreeMap<PosTag, usize>,
    pub by_gender: BTreeMap<GenderLabel, usize>,
    pub chains: usize,
    pub chain_members: usize,
}

pub fn stats(corpus: &Corpus) -> CorpusStats {
    let mut s = CorpusStats {
        by_pos: PosTag::ALL.iter().map(|&p| (p, 0)).collect(),
        by_gender: GenderLabel::ALL.iter().map(|&g| (g, 0)).collect(),
        ..Default::default()
    };
    for entry in &corpus.entries {
        s.sentences += 1;
        s.terms += entry.terms.len();
        *s.by_gender.get_mut(&entry.gender).unwrap() += entry.terms.len();
        for term in &entry.terms {
            *s.by_pos.get_mut(&term.pos).unwrap() += 1;
        }
        for chain in entry.chains() {
            s.chains += 1;
            s.chain_members += chain.members.len();
        }
    }
    s
}
