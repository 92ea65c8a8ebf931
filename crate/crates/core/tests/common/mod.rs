#![allow(dead_code)]

use mge_core::corpus::{PosTag, TermAnnotation};
use mge_core::matcher::MatchOutcome;
use mge_core::synthgen::{gen_corpus, gen_hypotheses, HypothesisProfile, SynthSpec};
use mge_core::textnorm::TokenMultiset;
use mge_core::{Corpus, HypothesisSet};
use rand::seq::SliceRandom;
use rand::Rng;

/// Tiny alphabet so that forms collide across terms all the time.
pub const COLLIDING: [&str; 5] = ["a", "b", "c", "d", "e"];

pub struct Instance {
    pub terms: Vec<TermAnnotation>,
    pub tokens: Vec<String>,
}

impl Instance {
    pub fn bag(&self) -> TokenMultiset {
        self.tokens.iter().cloned().collect()
    }
}

pub fn random_instance<R: Rng>(rng: &mut R) -> Instance {
    let n_terms = rng.gen_range(1..=6);
    let terms = (0..n_terms)
        .map(|_| {
            let mut pair = COLLIDING.choose_multiple(rng, 2);
            let correct = pair.next().unwrap();
            let wrong = pair.next().unwrap();
            TermAnnotation::new(correct, wrong, *PosTag::ALL.choose(rng).unwrap(), None)
        })
        .collect();
    let n_tokens = rng.gen_range(0..=12);
    let tokens = (0..n_tokens)
        .map(|_| {
            if rng.gen_bool(0.15) {
                "z".to_owned()
            } else {
                COLLIDING.choose(rng).unwrap().to_string()
            }
        })
        .collect();
    Instance { terms, tokens }
}

pub struct OracleResult {
    pub coverage: usize,
    pub correct: usize,
    /// First optimal assignment when options are tried CorrectForm, WrongForm, NotFound.
    pub first: Vec<MatchOutcome>,
}

/// Exhaustive search over injective term-to-token-position assignments.
/// Positions holding the same token are interchangeable, so only the first
/// free one per distinct token is tried.
pub fn brute_force(terms: &[TermAnnotation], tokens: &[String]) -> OracleResult {
    struct Search<'a> {
        terms: &'a [TermAnnotation],
        tokens: &'a [String],
        used: Vec<bool>,
        current: Vec<MatchOutcome>,
        best: Option<(usize, usize, Vec<MatchOutcome>)>,
    }

    impl Search<'_> {
        fn free_position(&self, form: &str) -> Option<usize> {
            (0..self.tokens.len()).find(|&j| !self.used[j] && self.tokens[j] == form)
        }

        fn go(&mut self, i: usize) {
            if i == self.terms.len() {
                let cov = self.current.iter().filter(|o| o.is_found()).count();
                let cor = self.current.iter().filter(|o| **o == MatchOutcome::CorrectForm).count();
                let better = match &self.best {
                    None => true,
                    Some((c, k, _)) => (cov, cor) > (*c, *k),
                };
                if better {
                    self.best = Some((cov, cor, self.current.clone()));
                }
                return;
            }
            let term = &self.terms[i];
            for (form, outcome) in [
                (Some(term.correct_form.as_str()), MatchOutcome::CorrectForm),
                (Some(term.wrong_form.as_str()), MatchOutcome::WrongForm),
                (None, MatchOutcome::NotFound),
            ] {
                let slot = match form {
                    Some(f) => match self.free_position(f) {
                        Some(j) => Some(j),
                        None => continue,
                    },
                    None => None,
                };
                if let Some(j) = slot {
                    self.used[j] = true;
                }
                self.current.push(outcome);
                self.go(i + 1);
                self.current.pop();
                if let Some(j) = slot {
                    self.used[j] = false;
                }
            }
        }
    }

    let mut s = Search {
        terms,
        tokens,
        used: vec![false; tokens.len()],
        current: Vec::new(),
        best: None,
    };
    s.go(0);
    let (coverage, correct, first) = s.best.expect("at least the all-NotFound assignment");
    OracleResult { coverage, correct, first }
}

/// Generated corpus with en-it proportions and hypotheses drawn from a profile.
pub fn generated(seed: u64, sentences: usize, profile: (f64, f64, f64)) -> (Corpus, HypothesisSet) {
    let corpus = gen_corpus(&SynthSpec::scaled_en_it(seed, sentences)).expect("feasible spec");
    let p = HypothesisProfile::new(profile.0, profile.1, profile.2).expect("valid profile");
    let hyps = gen_hypotheses(&corpus, &p, seed ^ 0x5eed);
    (corpus, hyps)
}

pub fn count_found(outcomes: &[MatchOutcome]) -> usize {
    outcomes.iter().filter(|o| o.is_found()).count()
}
