//! One matching pass over a corpus, shared by word and chain metrics.

use rayon::prelude::*;

use crate::chain_metrics::ChainEvalReport;
use crate::corpus::{Corpus, HypothesisSet, LengthMismatch};
use crate::matcher::{match_sentence, SentenceMatch};
use crate::word_metrics::WordEvalReport;

#[derive(Debug, Clone)]
pub struct Evaluation<'a> {
    pub matches: Vec<SentenceMatch<'a>>,
}

impl<'a> Evaluation<'a> {
    /// Matches every (entry, hypothesis) pair on `jobs` worker threads.
    /// Output order is corpus order regardless of `jobs`.
    pub fn run(corpus: &'a Corpus, hypotheses: &'a HypothesisSet, jobs: usize) -> Result<Self, LengthMismatch> {
        let pairs = hypotheses.pairs(corpus)?;
        let matches = if jobs <= 1 {
            pairs.iter().map(|(e, h)| match_sentence(e, h)).collect()
        } else {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build()
                .expect("failed to start worker threads");
            pool.install(|| pairs.par_iter().map(|(e, h)| match_sentence(e, h)).collect())
        };
        Ok(Evaluation { matches })
    }

    pub fn words(&self) -> WordEvalReport {
        WordEvalReport::from_matches(&self.matches)
    }

    pub fn chains(&self) -> ChainEvalReport {
        ChainEvalReport::from_matches(&self.matches)
    }
}
