//! Agreement-chain evaluation.
//!
//! A chain is covered when every member is realized in some gender form.
//! Covered chains are then classed as `C` (all members correct), `W` (all
//! members wrong, agreement kept) or `NO` (mixed forms, agreement broken).
//! Copula and semi-copula chains are treated like any other chain, so part of
//! their `NO` count may be grammatical.

use std::collections::BTreeMap;
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

use crate::corpus::{Chain, Corpus, GenderLabel, HypothesisSet, LengthMismatch};
use crate::evaluate::Evaluation;
use crate::matcher::{MatchOutcome, SentenceMatch};
use crate::scalar::{percent_one_decimal, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChainOutcome {
    C,
    W,
    NO,
    OutOfCoverage,
}

/// Classifies a chain from its members' word-level outcomes.
pub fn classify(members: impl IntoIterator<Item = MatchOutcome>) -> ChainOutcome {
    let (mut correct, mut wrong) = (0usize, 0usize);
    for outcome in members {
        match outcome {
            MatchOutcome::NotFound => return ChainOutcome::OutOfCoverage,
            MatchOutcome::CorrectForm => correct += 1,
            MatchOutcome::WrongForm => wrong += 1,
        }
    }
    match (correct, wrong) {
        (_, 0) => ChainOutcome::C,
        (0, _) => ChainOutcome::W,
        _ => ChainOutcome::NO,
    }
}

/// Classifies every chain of an evaluated sentence, ordered by chain id.
pub fn sentence_chains(m: &SentenceMatch<'_>) -> Vec<(Chain, ChainOutcome)> {
    m.entry
        .chains()
        .into_iter()
        .map(|chain| {
            let outcome = classify(chain.members.iter().map(|&i| m.outcomes[i]));
            (chain, outcome)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainCell {
    pub total_chains: u64,
    pub covered: u64,
    pub c_count: u64,
    pub w_count: u64,
    pub no_count: u64,
}

impl ChainCell {
    pub fn record(&mut self, outcome: ChainOutcome) {
        self.total_chains += 1;
        match outcome {
            ChainOutcome::OutOfCoverage => return,
            ChainOutcome::C => self.c_count += 1,
            ChainOutcome::W => self.w_count += 1,
            ChainOutcome::NO => self.no_count += 1,
        }
        self.covered += 1;
    }

    pub fn uncovered(&self) -> u64 {
        self.total_chains - self.covered
    }

    pub fn coverage<T: Scalar>(&self) -> Option<T> {
        T::ratio(self.covered, self.total_chains)
    }

    pub fn c_share<T: Scalar>(&self) -> Option<T> {
        T::ratio(self.c_count, self.covered)
    }

    pub fn w_share<T: Scalar>(&self) -> Option<T> {
        T::ratio(self.w_count, self.covered)
    }

    pub fn no_share<T: Scalar>(&self) -> Option<T> {
        T::ratio(self.no_count, self.covered)
    }

    pub fn coverage_pct(&self) -> Option<f64> {
        percent_one_decimal(self.covered, self.total_chains)
    }

    pub fn c_pct(&self) -> Option<f64> {
        percent_one_decimal(self.c_count, self.covered)
    }

    pub fn w_pct(&self) -> Option<f64> {
        percent_one_decimal(self.w_count, self.covered)
    }

    pub fn no_pct(&self) -> Option<f64> {
        percent_one_decimal(self.no_count, self.covered)
    }
}

impl Add for ChainCell {
    type Output = ChainCell;

    fn add(self, o: ChainCell) -> ChainCell {
        ChainCell {
            total_chains: self.total_chains + o.total_chains,
            covered: self.covered + o.covered,
            c_count: self.c_count + o.c_count,
            w_count: self.w_count + o.w_count,
            no_count: self.no_count + o.no_count,
        }
    }
}

impl AddAssign for ChainCell {
    fn add_assign(&mut self, o: ChainCell) {
        *self = *self + o;
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainEvalReport {
    pub all: ChainCell,
    pub by_gender: BTreeMap<GenderLabel, ChainCell>,
}

impl Default for ChainEvalReport {
    fn default() -> Self {
        ChainEvalReport {
            all: ChainCell::default(),
            by_gender: GenderLabel::ALL.iter().map(|&g| (g, ChainCell::default())).collect(),
        }
    }
}

impl ChainEvalReport {
    pub fn add_sentence(&mut self, m: &SentenceMatch<'_>) {
        for (_, outcome) in sentence_chains(m) {
            self.all.record(outcome);
            self.by_gender.entry(m.entry.gender).or_default().record(outcome);
        }
    }

    pub fn merge(&mut self, other: &ChainEvalReport) {
        self.all += other.all;
        for (g, cell) in &other.by_gender {
            *self.by_gender.entry(*g).or_default() += *cell;
        }
    }

    pub fn from_matches<'a, I>(matches: I) -> Self
    where
        I: IntoIterator<Item = &'a SentenceMatch<'a>>,
    {
        let mut report = ChainEvalReport::default();
        for m in matches {
            report.add_sentence(m);
        }
        report
    }

    /// `All`, `F`, `M` rows.
    pub fn rows(&self) -> Vec<(&'static str, ChainCell)> {
        let mut rows = vec![("All", self.all)];
        rows.extend(self.by_gender.iter().map(|(g, c)| (g.as_str(), *c)));
        rows
    }
}

pub fn evaluate_chains(corpus: &Corpus, hypotheses: &HypothesisSet) -> Result<ChainEvalReport, LengthMismatch> {
    Ok(Evaluation::run(corpus, hypotheses, 1)?.chains())
}
