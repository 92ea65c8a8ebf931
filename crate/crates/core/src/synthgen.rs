//! Seeded synthetic corpora and system outputs.
//!
//! Sentences are assembled from a small Italian-like lexicon of
//! (feminine, masculine) form pairs. Feminine forms, masculine forms and
//! filler words are three disjoint sets, so within one sentence no correct
//! form can be produced by anything other than its own term.
//!
//! The generator is ChaCha8 seeded with `seed`; the algorithm identifier
//! [`GENERATOR_ID`] is written as a comment in every generated corpus.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::corpus::{Corpus, GenderLabel, HypothesisSet, PosTag, SentenceEntry, TermAnnotation};
use crate::textnorm::normalized_tokens;

pub const GENERATOR_ID: &str = "mge-synth-chacha8-v1";

/// `(feminine, masculine, english gloss)`
type FormPair = (&'static str, &'static str, &'static str);

const ARTICLES: &[FormPair] = &[
    ("la", "il", "the"),
    ("una", "un", "a"),
    ("le", "i", "the"),
    ("della", "del", "of the"),
    ("alla", "al", "to the"),
    ("nella", "nel", "in the"),
    ("delle", "dei", "of the"),
    ("sulla", "sul", "on the"),
];
const PRONOUNS: &[FormPair] = &[
    ("lei", "lui", "she"),
    ("essa", "esso", "it"),
    ("costei", "costui", "this person"),
    ("tutte", "tutti", "all"),
    ("ella", "egli", "she"),
    ("nessuna", "nessuno", "nobody"),
];
const LIMITING_ADJECTIVES: &[FormPair] = &[
    ("questa", "questo", "this"),
    ("mia", "mio", "my"),
    ("sua", "suo", "their"),
    ("nostra", "nostro", "our"),
    ("alcune", "alcuni", "some"),
    ("stessa", "stesso", "same"),
    ("prima", "primo", "first"),
    ("tanta", "tanto", "much"),
];
const DESCRIPTIVE_ADJECTIVES: &[FormPair] = &[
    ("stanca", "stanco", "tired"),
    ("sicura", "sicuro", "sure"),
    ("contenta", "contento", "glad"),
    ("nuova", "nuovo", "new"),
    ("brava", "bravo", "good"),
    ("pronta", "pronto", "ready"),
    ("sola", "solo", "alone"),
    ("orgogliosa", "orgoglioso", "proud"),
    ("curiosa", "curioso", "curious"),
];
const NOUNS: &[FormPair] = &[
    ("ragazza", "ragazzo", "kid"),
    ("amica", "amico", "friend"),
    ("senatrice", "senatore", "senator"),
    ("inventrice", "inventore", "inventor"),
    ("direttrice", "direttore", "director"),
    ("maestra", "maestro", "teacher"),
    ("figlia", "figlio", "child"),
    ("cugina", "cugino", "cousin"),
    ("scrittrice", "scrittore", "writer"),
    ("pittrice", "pittore", "painter"),
];
const VERBS: &[FormPair] = &[
    ("andata", "andato", "gone"),
    ("nata", "nato", "born"),
    ("stata", "stato", "been"),
    ("venuta", "venuto", "come"),
    ("partita", "partito", "left"),
    ("sentita", "sentito", "felt"),
    ("arrivata", "arrivato", "arrived"),
    ("cresciuta", "cresciuto", "grown"),
    ("rimasta", "rimasto", "stayed"),
    ("tornata", "tornato", "returned"),
];
const FILLERS: &[(&str, &str)] = &[
    ("e", "and"),
    ("che", "that"),
    ("non", "not"),
    ("poi", "then"),
    ("ieri", "yesterday"),
    ("sempre", "always"),
    ("molto", "very"),
    ("qui", "here"),
    ("davvero", "really"),
    ("ma", "but"),
    ("oggi", "today"),
    ("anche", "also"),
    ("così", "so"),
    ("forse", "maybe"),
];

pub fn lexicon(pos: PosTag) -> &'static [FormPair] {
    match pos {
        PosTag::Art => ARTICLES,
        PosTag::Pron => PRONOUNS,
        PosTag::AdjDet => LIMITING_ADJECTIVES,
        PosTag::AdjDes => DESCRIPTIVE_ADJECTIVES,
        PosTag::Noun => NOUNS,
        PosTag::Verb => VERBS,
    }
}

pub fn filler_words() -> impl Iterator<Item = &'static str> {
    FILLERS.iter().map(|(w, _)| *w)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SynthError {
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("infeasible spec: {0}")]
    InfeasibleSpec(String),
    #[error("invalid hypothesis profile: {0}")]
    InvalidProfile(String),
}

/// Per-term probabilities of emitting the correct form, the wrong form, or
/// dropping the word.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HypothesisProfile {
    p_correct: f64,
    p_wrong: f64,
    p_drop: f64,
}

impl HypothesisProfile {
    pub fn new(p_correct: f64, p_wrong: f64, p_drop: f64) -> Result<Self, SynthError> {
        let ps = [p_correct, p_wrong, p_drop];
        if ps.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(SynthError::InvalidProfile(format!("negative or non-finite probability in {ps:?}")));
        }
        if (ps.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(SynthError::InvalidProfile(format!("probabilities {ps:?} do not sum to 1")));
        }
        Ok(HypothesisProfile { p_correct, p_wrong, p_drop })
    }

    pub fn p_correct(&self) -> f64 {
        self.p_correct
    }

    pub fn p_wrong(&self) -> f64 {
        self.p_wrong
    }

    pub fn p_drop(&self) -> f64 {
        self.p_drop
    }

    pub fn expected_coverage(&self) -> f64 {
        self.p_correct + self.p_wrong
    }

    pub fn expected_accuracy(&self) -> Option<f64> {
        let found = self.p_correct + self.p_wrong;
        (found > 0.0).then(|| self.p_correct / found)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub seed: u64,
    pub n_sentences: usize,
    pub pos_distribution: BTreeMap<PosTag, usize>,
    /// chain size → number of chains of that size
    pub chain_sizes: BTreeMap<usize, usize>,
    pub max_terms_per_sentence: usize,
    /// Share of sentences labeled F.
    pub feminine_ratio: f64,
    pub language_pair: Option<String>,
}

/// Term counts per POS and chain count of the en-it annotation layer.
pub const EN_IT_POS: [(PosTag, usize); 6] = [
    (PosTag::Art, 413),
    (PosTag::Pron, 48),
    (PosTag::AdjDet, 149),
    (PosTag::AdjDes, 448),
    (PosTag::Noun, 346),
    (PosTag::Verb, 622),
];
pub const EN_IT_CHAINS: usize = 421;

impl SynthSpec {
    /// en-it sized corpus: exact POS and chain totals, 1000 sentences.
    pub fn en_it(seed: u64) -> Self {
        SynthSpec {
            seed,
            n_sentences: 1000,
            pos_distribution: EN_IT_POS.into_iter().collect(),
            // 300*2 + 100*3 + 21*4 = 984 chained terms
            chain_sizes: [(2, 300), (3, 100), (4, 21)].into_iter().collect(),
            max_terms_per_sentence: 8,
            feminine_ratio: 0.5,
            language_pair: Some("en-it".into()),
        }
    }

    /// The en-it proportions scaled to `n_sentences` sentences.
    pub fn scaled_en_it(seed: u64, n_sentences: usize) -> Self {
        let base = SynthSpec::en_it(seed);
        let scale = |x: usize| ((x * n_sentences + 500) / 1000).max(1);
        SynthSpec {
            n_sentences: n_sentences.max(1),
            pos_distribution: base.pos_distribution.iter().map(|(&p, &c)| (p, scale(c))).collect(),
            // rare chain sizes vanish at small scale rather than starving sentences of terms
            chain_sizes: base
                .chain_sizes
                .iter()
                .map(|(&s, &c)| (s, (c * n_sentences + 500) / 1000))
                .filter(|&(_, c)| c > 0)
                .collect(),
            ..base
        }
    }

    pub fn total_terms(&self) -> usize {
        self.pos_distribution.values().sum()
    }

    pub fn total_chains(&self) -> usize {
        self.chain_sizes.values().sum()
    }

    fn check(&self) -> Result<(), SynthError> {
        let terms = self.total_terms();
        let chained: usize = self.chain_sizes.iter().map(|(s, c)| s * c).sum();
        if self.n_sentences == 0 {
            return Err(SynthError::InvalidSpec("n_sentences must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.feminine_ratio) {
            return Err(SynthError::InvalidSpec(format!("feminine_ratio {} outside [0, 1]", self.feminine_ratio)));
        }
        if let Some((&size, _)) = self.chain_sizes.iter().find(|(&s, &c)| s < 2 && c > 0) {
            return Err(SynthError::InvalidSpec(format!("chain size {size} is below 2")));
        }
        if let Some((&size, _)) = self
            .chain_sizes
            .iter()
            .find(|(&s, &c)| s > self.max_terms_per_sentence && c > 0)
        {
            return Err(SynthError::InfeasibleSpec(format!(
                "a {size}-word chain does not fit in a {}-term sentence",
                self.max_terms_per_sentence
            )));
        }
        if chained > terms {
            return Err(SynthError::InfeasibleSpec(format!("{chained} chained terms but only {terms} terms")));
        }
        let units = self.total_chains() + terms - chained;
        if units < self.n_sentences {
            return Err(SynthError::InfeasibleSpec(format!(
                "{} sentences need at least as many chains or free terms, got {units}",
                self.n_sentences
            )));
        }
        if terms > self.n_sentences * self.max_terms_per_sentence {
            return Err(SynthError::InfeasibleSpec(format!(
                "{terms} terms exceed {} sentences x {} terms",
                self.n_sentences, self.max_terms_per_sentence
            )));
        }
        Ok(())
    }
}

/// A chain (several POS) or a single free term.
type Unit = Vec<PosTag>;

/// Packs units into sentences, largest first, each into the sentence with
/// the most room left (random tie-break). Every sentence gets at least one
/// unit because an empty sentence always has the most room.
fn pack(mut units: Vec<Unit>, spec: &SynthSpec, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<Unit>>, SynthError> {
    units.shuffle(rng);
    units.sort_by_key(|u| Reverse(u.len()));
    let mut sentences: Vec<Vec<Unit>> = vec![Vec::new(); spec.n_sentences];
    let mut heap: BinaryHeap<(usize, u64, usize)> = (0..spec.n_sentences)
        .map(|i| (spec.max_terms_per_sentence, rng.gen(), i))
        .collect();
    for unit in units {
        let (room, _, i) = heap.pop().expect("at least one sentence");
        if unit.len() > room {
            return Err(SynthError::InfeasibleSpec(format!(
                "could not place a {}-term unit (largest remaining room {room})",
                unit.len()
            )));
        }
        sentences[i].push(unit);
        let room = room - sentences[i].last().unwrap().len();
        heap.push((room, rng.gen(), i));
    }
    for s in sentences.iter_mut() {
        s.shuffle(rng);
    }
    Ok(sentences)
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

pub fn gen_corpus(spec: &SynthSpec) -> Result<Corpus, SynthError> {
    spec.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut slots: Vec<PosTag> = spec
        .pos_distribution
        .iter()
        .flat_map(|(&pos, &n)| std::iter::repeat_n(pos, n))
        .collect();
    slots.shuffle(&mut rng);
    let mut units: Vec<Unit> = Vec::new();
    let mut rest = slots.as_slice();
    for (&size, &count) in spec.chain_sizes.iter().rev() {
        for _ in 0..count {
            let (chain, tail) = rest.split_at(size);
            let mut chain = chain.to_vec();
            // determiners before modifiers before nouns before verbs
            chain.sort();
            units.push(chain);
            rest = tail;
        }
    }
    units.extend(rest.iter().map(|&p| vec![p]));
    let sentences = pack(units, spec, &mut rng)?;

    let n_fem = (spec.n_sentences as f64 * spec.feminine_ratio).round() as usize;
    let mut genders: Vec<GenderLabel> = (0..spec.n_sentences)
        .map(|i| if i < n_fem { GenderLabel::F } else { GenderLabel::M })
        .collect();
    genders.shuffle(&mut rng);

    let mut entries = Vec::with_capacity(spec.n_sentences);
    for (i, (units, gender)) in sentences.into_iter().zip(genders).enumerate() {
        let mut terms = Vec::new();
        let mut target_words: Vec<String> = Vec::new();
        let mut source_words: Vec<&str> = Vec::new();
        let mut next_chain = 1;
        for unit in units {
            if rng.gen_bool(0.5) {
                let (it, en) = FILLERS[rng.gen_range(0..FILLERS.len())];
                target_words.push(it.to_owned());
                source_words.push(en);
            }
            let chain_id = (unit.len() > 1).then(|| {
                next_chain += 1;
                next_chain - 1
            });
            for pos in unit {
                let (fem, masc, gloss) = lexicon(pos)[rng.gen_range(0..lexicon(pos).len())];
                let (correct, wrong) = match gender {
                    GenderLabel::F => (fem, masc),
                    GenderLabel::M => (masc, fem),
                };
                terms.push(TermAnnotation::new(correct, wrong, pos, chain_id));
                target_words.push(correct.to_owned());
                source_words.push(gloss);
            }
        }
        let (it, en) = FILLERS[rng.gen_range(0..FILLERS.len())];
        target_words.push(it.to_owned());
        source_words.push(en);
        let category = format!("{}{}", rng.gen_range(1..=2), gender);
        entries.push(SentenceEntry {
            id: format!("syn-{:05}", i + 1),
            src: format!("{}.", capitalize(&source_words.join(" "))),
            reference: format!("{}.", capitalize(&target_words.join(" "))),
            gender,
            category,
            terms,
        });
    }
    Ok(Corpus {
        language_pair: spec.language_pair.clone(),
        notes: vec![format!("generator: {GENERATOR_ID} seed={}", spec.seed)],
        entries,
    })
}

/// Perturbs each reference: every annotated word independently stays,
/// flips to its wrong form, or is dropped according to `profile`.
pub fn gen_hypotheses(corpus: &Corpus, profile: &HypothesisProfile, seed: u64) -> HypothesisSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lines = corpus
        .entries
        .iter()
        .map(|entry| {
            let mut tokens: Vec<Option<String>> = normalized_tokens(&entry.reference).into_iter().map(Some).collect();
            let mut used = vec![false; tokens.len()];
            for term in &entry.terms {
                let draw: f64 = rng.gen();
                let slot = (0..tokens.len()).find(|&i| !used[i] && tokens[i].as_deref() == Some(term.correct_form.as_str()));
                let Some(i) = slot else { continue };
                used[i] = true;
                if draw < profile.p_correct {
                    continue;
                } else if draw < profile.p_correct + profile.p_wrong {
                    tokens[i] = Some(term.wrong_form.clone());
                } else {
                    tokens[i] = None;
                }
            }
            tokens.into_iter().flatten().collect::<Vec<_>>().join(" ")
        })
        .collect::<Vec<_>>();
    HypothesisSet { lines }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{parse_corpus_str, stats, write_corpus_string, ParseOptions};
    use std::collections::HashSet;

    #[test]
    fn lexicon_sets_are_disjoint_single_tokens() {
        let mut fem = HashSet::new();
        let mut masc = HashSet::new();
        for pos in PosTag::ALL {
            for (f, m, _) in lexicon(pos) {
                assert_eq!(normalized_tokens(f), [*f]);
                assert_eq!(normalized_tokens(m), [*m]);
                fem.insert(*f);
                masc.insert(*m);
            }
        }
        let fillers: HashSet<&str> = filler_words().collect();
        assert!(fem.is_disjoint(&masc));
        assert!(fillers.is_disjoint(&fem));
        assert!(fillers.is_disjoint(&masc));
    }

    #[test]
    fn en_it_spec_hits_counts() {
        let corpus = gen_corpus(&SynthSpec::en_it(7)).unwrap();
        let s = stats(&corpus);
        for (pos, n) in EN_IT_POS {
            assert_eq!(s.by_pos[&pos], n, "{pos}");
        }
        assert_eq!(s.chains, EN_IT_CHAINS);
        assert_eq!(s.sentences, 1000);
    }

    #[test]
    fn generated_corpus_round_trips() {
        let corpus = gen_corpus(&SynthSpec::scaled_en_it(3, 50)).unwrap();
        let text = write_corpus_string(&corpus);
        let parsed = parse_corpus_str(&text, &ParseOptions::default()).unwrap();
        assert_eq!(parsed, corpus);
        assert!(text.starts_with("# lang: en-it\n# generator: mge-synth-chacha8-v1 seed=3\n"));
    }

    #[test]
    fn same_seed_same_bytes() {
        let a = write_corpus_string(&gen_corpus(&SynthSpec::scaled_en_it(11, 80)).unwrap());
        let b = write_corpus_string(&gen_corpus(&SynthSpec::scaled_en_it(11, 80)).unwrap());
        let c = write_corpus_string(&gen_corpus(&SynthSpec::scaled_en_it(12, 80)).unwrap());
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn chain_longer_than_sentence_is_infeasible() {
        let spec = SynthSpec {
            seed: 1,
            n_sentences: 2,
            pos_distribution: [(PosTag::Noun, 6)].into_iter().collect(),
            chain_sizes: [(5, 1)].into_iter().collect(),
            max_terms_per_sentence: 3,
            feminine_ratio: 0.5,
            language_pair: None,
        };
        assert!(matches!(gen_corpus(&spec), Err(SynthError::InfeasibleSpec(_))));
    }

    #[test]
    fn other_invalid_specs() {
        let base = SynthSpec::scaled_en_it(1, 10);
        let too_many_sentences = SynthSpec { n_sentences: 10_000, ..base.clone() };
        assert!(matches!(gen_corpus(&too_many_sentences), Err(SynthError::InfeasibleSpec(_))));
        let singleton_chains = SynthSpec {
            chain_sizes: [(1, 3)].into_iter().collect(),
            ..base.clone()
        };
        assert!(matches!(gen_corpus(&singleton_chains), Err(SynthError::InvalidSpec(_))));
        let bad_ratio = SynthSpec { feminine_ratio: 1.5, ..base };
        assert!(matches!(gen_corpus(&bad_ratio), Err(SynthError::InvalidSpec(_))));
    }

    #[test]
    fn gender_balance() {
        let corpus = gen_corpus(&SynthSpec::scaled_en_it(5, 100)).unwrap();
        let fem = corpus.entries.iter().filter(|e| e.gender == GenderLabel::F).count();
        assert_eq!(fem, 50);
    }

    #[test]
    fn profile_validation() {
        assert!(HypothesisProfile::new(0.5, 0.3, 0.2).is_ok());
        assert!(HypothesisProfile::new(0.5, 0.3, 0.3).is_err());
        assert!(HypothesisProfile::new(1.2, -0.2, 0.0).is_err());
        let p = HypothesisProfile::new(0.5, 0.3, 0.2).unwrap();
        assert!((p.expected_coverage() - 0.8).abs() < 1e-12);
        assert!((p.expected_accuracy().unwrap() - 0.625).abs() < 1e-12);
    }

    #[test]
    fn extreme_profiles_match_references() {
        let corpus = gen_corpus(&SynthSpec::scaled_en_it(9, 40)).unwrap();
        let all_correct = gen_hypotheses(&corpus, &HypothesisProfile::new(1.0, 0.0, 0.0).unwrap(), 1);
        let all_wrong = gen_hypotheses(&corpus, &HypothesisProfile::new(0.0, 1.0, 0.0).unwrap(), 1);
        for (i, e) in corpus.entries.iter().enumerate() {
            assert_eq!(all_correct.lines[i], normalized_tokens(&e.reference).join(" "));
            assert_eq!(all_wrong.lines[i], e.wrong_substituted());
        }
    }

    #[test]
    fn small_scaled_specs_are_feasible() {
        for n in 1..=60 {
            let c = gen_corpus(&SynthSpec::scaled_en_it(9, n)).unwrap();
            assert_eq!(c.len(), n);
        }
    }
}
