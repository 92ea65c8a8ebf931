//! Word-level coverage and gender accuracy, overall and per slice.

use std::collections::BTreeMap;
use std::ops::{Add, AddAssign};

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, GenderLabel, HypothesisSet, LengthMismatch, PosTag, WordClass};
use crate::evaluate::Evaluation;
use crate::matcher::{MatchOutcome, SentenceMatch};
use crate::scalar::{percent_one_decimal, Exact, Scalar};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CountCell {
    pub found_correct: u64,
    pub found_wrong: u64,
    pub not_found: u64,
}

/// Derived ratios of a [`CountCell`]; `None` where the denominator is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Rates<T> {
    pub coverage: Option<T>,
    pub accuracy: Option<T>,
}

impl CountCell {
    pub fn record(&mut self, outcome: MatchOutcome) {
        match outcome {
            MatchOutcome::CorrectForm => self.found_correct += 1,
            MatchOutcome::WrongForm => self.found_wrong += 1,
            MatchOutcome::NotFound => self.not_found += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.found_correct + self.found_wrong + self.not_found
    }

    /// Terms realized in either gender form ("measurable").
    pub fn found(&self) -> u64 {
        self.found_correct + self.found_wrong
    }

    pub fn coverage<T: Scalar>(&self) -> Option<T> {
        T::ratio(self.found(), self.total())
    }

    pub fn accuracy<T: Scalar>(&self) -> Option<T> {
        T::ratio(self.found_correct, self.found())
    }

    pub fn rates<T: Scalar>(&self) -> Rates<T> {
        Rates {
            coverage: self.coverage(),
            accuracy: self.accuracy(),
        }
    }

    /// Coverage in percent, one decimal, half-up.
    pub fn coverage_pct(&self) -> Option<f64> {
        percent_one_decimal(self.found(), self.total())
    }

    pub fn accuracy_pct(&self) -> Option<f64> {
        percent_one_decimal(self.found_correct, self.found())
    }
}

impl Add for CountCell {
    type Output = CountCell;

    fn add(self, rhs: CountCell) -> CountCell {
        CountCell {
            found_correct: self.found_correct + rhs.found_correct,
            found_wrong: self.found_wrong + rhs.found_wrong,
            not_found: self.not_found + rhs.not_found,
        }
    }
}

impl AddAssign for CountCell {
    fn add_assign(&mut self, rhs: CountCell) {
        *self = *self + rhs;
    }
}

impl std::iter::Sum for CountCell {
    fn sum<I: Iterator<Item = CountCell>>(iter: I) -> CountCell {
        iter.fold(CountCell::default(), Add::add)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordEvalReport {
    pub overall: CountCell,
    pub by_gender: BTreeMap<GenderLabel, CountCell>,
    pub by_pos: BTreeMap<PosTag, CountCell>,
    pub by_class: BTreeMap<WordClass, CountCell>,
    pub by_gender_pos: BTreeMap<(GenderLabel, PosTag), CountCell>,
    pub by_gender_class: BTreeMap<(GenderLabel, WordClass), CountCell>,
}

impl Default for WordEvalReport {
    /// Every slice key is present from the start so absent POS show up as
    /// empty cells rather than missing rows.
    fn default() -> Self {
        let g = GenderLabel::ALL;
        WordEvalReport {
            overall: CountCell::default(),
            by_gender: g.iter().map(|&k| (k, CountCell::default())).collect(),
            by_pos: PosTag::ALL.iter().map(|&k| (k, CountCell::default())).collect(),
            by_class: WordClass::ALL.iter().map(|&k| (k, CountCell::default())).collect(),
            by_gender_pos: g
                .iter()
                .flat_map(|&a| PosTag::ALL.iter().map(move |&b| ((a, b), CountCell::default())))
                .collect(),
            by_gender_class: g
                .iter()
                .flat_map(|&a| WordClass::ALL.iter().map(move |&b| ((a, b), CountCell::default())))
                .collect(),
        }
    }
}

fn merge_into<K: Ord + Copy>(dst: &mut BTreeMap<K, CountCell>, src: &BTreeMap<K, CountCell>) {
    for (k, v) in src {
        *dst.entry(*k).or_default() += *v;
    }
}

impl WordEvalReport {
    pub fn add_sentence(&mut self, m: &SentenceMatch<'_>) {
        let gender = m.entry.gender;
        for (term, &outcome) in m.entry.terms.iter().zip(&m.outcomes) {
            let class = term.pos.class();
            self.overall.record(outcome);
            self.by_gender.entry(gender).or_default().record(outcome);
            self.by_pos.entry(term.pos).or_default().record(outcome);
            self.by_class.entry(class).or_default().record(outcome);
            self.by_gender_pos.entry((gender, term.pos)).or_default().record(outcome);
            self.by_gender_class.entry((gender, class)).or_default().record(outcome);
        }
    }

    pub fn merge(&mut self, other: &WordEvalReport) {
        self.overall += other.overall;
        merge_into(&mut self.by_gender, &other.by_gender);
        merge_into(&mut self.by_pos, &other.by_pos);
        merge_into(&mut self.by_class, &other.by_class);
        merge_into(&mut self.by_gender_pos, &other.by_gender_pos);
        merge_into(&mut self.by_gender_class, &other.by_gender_class);
    }

    pub fn from_matches<'a, I>(matches: I) -> Self
    where
        I: IntoIterator<Item = &'a SentenceMatch<'a>>,
    {
        let mut report = WordEvalReport::default();
        for m in matches {
            report.add_sentence(m);
        }
        report
    }

    /// Every named slice as `(label, cell)`, in rendering order.
    pub fn slices(&self) -> Vec<(String, CountCell)> {
        let mut rows = vec![("overall".to_owned(), self.overall)];
        rows.extend(self.by_gender.iter().map(|(k, v)| (format!("gender:{k}"), *v)));
        rows.extend(self.by_pos.iter().map(|(k, v)| (format!("pos:{k}"), *v)));
        rows.extend(self.by_class.iter().map(|(k, v)| (format!("class:{k}"), *v)));
        rows.extend(self.by_gender_pos.iter().map(|((g, p), v)| (format!("gender_pos:{g}/{p}"), *v)));
        rows.extend(self.by_gender_class.iter().map(|((g, c), v)| (format!("gender_class:{g}/{c}"), *v)));
        rows
    }
}

pub fn evaluate_words(corpus: &Corpus, hypotheses: &HypothesisSet) -> Result<WordEvalReport, LengthMismatch> {
    Ok(Evaluation::run(corpus, hypotheses, 1)?.words())
}

/// Signed difference `a - b`, in percentage points.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceDelta {
    pub coverage: Option<Exact>,
    pub accuracy: Option<Exact>,
}

impl SliceDelta {
    fn between(a: &CountCell, b: &CountCell) -> Self {
        let pp = |x: Option<Exact>, y: Option<Exact>| match (x, y) {
            (Some(x), Some(y)) => Some((x - y) * Exact::from_integer(100)),
            _ => None,
        };
        SliceDelta {
            coverage: pp(a.coverage(), b.coverage()),
            accuracy: pp(a.accuracy(), b.accuracy()),
        }
    }

    pub fn coverage_pp(&self) -> Option<f64> {
        self.coverage.map(round_signed_one_decimal)
    }

    pub fn accuracy_pp(&self) -> Option<f64> {
        self.accuracy.map(round_signed_one_decimal)
    }

    pub fn is_zero(&self) -> bool {
        self.coverage.is_none_or(|d| d.is_zero()) && self.accuracy.is_none_or(|d| d.is_zero())
    }
}

/// Rounds half away from zero to one decimal.
pub fn round_signed_one_decimal(value: Exact) -> f64 {
    let scaled = value * Exact::from_integer(10);
    let (n, d) = (*scaled.numer() as i128, *scaled.denom() as i128);
    let tenths = (2 * n.abs() + d) / (2 * d);
    let tenths = if n < 0 { -tenths } else { tenths };
    tenths as f64 / 10.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportDelta {
    /// `(slice label, delta)` in the order of [`WordEvalReport::slices`].
    pub slices: Vec<(String, SliceDelta)>,
}

impl ReportDelta {
    pub fn get(&self, label: &str) -> Option<&SliceDelta> {
        self.slices.iter().find(|(l, _)| l == label).map(|(_, d)| d)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("reports cover different term sets (slice {slice}: {a} vs {b} terms)")]
pub struct SliceMismatch {
    pub slice: String,
    pub a: u64,
    pub b: u64,
}

/// Per-slice `a - b`. Both reports must be over the same corpus, which is
/// checked through the per-slice term totals.
pub fn diff_reports(a: &WordEvalReport, b: &WordEvalReport) -> Result<ReportDelta, SliceMismatch> {
    let (sa, sb) = (a.slices(), b.slices());
    if sa.len() != sb.len() {
        return Err(SliceMismatch {
            slice: "layout".into(),
            a: sa.len() as u64,
            b: sb.len() as u64,
        });
    }
    let mut slices = Vec::with_capacity(sa.len());
    for ((la, ca), (lb, cb)) in sa.iter().zip(&sb) {
        if la != lb || ca.total() != cb.total() {
            return Err(SliceMismatch {
                slice: la.clone(),
                a: ca.total(),
                b: cb.total(),
            });
        }
        slices.push((la.clone(), SliceDelta::between(ca, cb)));
    }
    Ok(ReportDelta { slices })
}
