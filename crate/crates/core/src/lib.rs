//! Gender translation evaluation against a morphosyntactically annotated
//! reference corpus: word-level coverage and accuracy sliced by gender, POS
//! and word class, agreement-chain classification, an out-of-coverage
//! labeling workflow, and inter-annotator agreement.
//!
//! ```
//! use mge_core::corpus::{parse_corpus_str, HypothesisSet, ParseOptions};
//! use mge_core::evaluate_words;
//!
//! let tsv = "ID\tSRC\tREF\tGENDER\tCATEGORY\tGENDERTERMS\n\
//!            1\tThe girl went.\tLa ragazza è andata.\tF\t1F\tla>il>ART>;andata>andato>VERB>\n";
//! let corpus = parse_corpus_str(tsv, &ParseOptions::default()).unwrap();
//! let hyps = HypothesisSet::from_lines(["la ragazza è andata"]);
//! let report = evaluate_words(&corpus, &hyps).unwrap();
//! assert_eq!(report.overall.coverage_pct(), Some(100.0));
//! ```

pub mod chain_metrics;
pub mod corpus;
pub mod evaluate;
pub mod iaa;
pub mod matcher;
pub mod ooc;
pub mod report;
pub mod scalar;
pub mod synthgen;
pub mod textnorm;
pub mod word_metrics;

pub use chain_metrics::{evaluate_chains, ChainCell, ChainEvalReport, ChainOutcome};
pub use corpus::{
    load_hypotheses, parse_corpus, parse_corpus_str, stats, write_corpus, Corpus, CorpusError, GenderLabel,
    HypothesisSet, ParseOptions, PosTag, SentenceEntry, TermAnnotation, WordClass,
};
pub use evaluate::Evaluation;
pub use iaa::{compare_annotations, dice_chains, scott_pi, IaaReport};
pub use matcher::{match_sentence, MatchOutcome};
pub use report::{emit_report, Format, Report, RunManifest};
pub use scalar::{Exact, Scalar};
pub use synthgen::{gen_corpus, gen_hypotheses, HypothesisProfile, SynthSpec};
pub use word_metrics::{diff_reports, evaluate_words, CountCell, Rates, WordEvalReport};

/// Word-level rates as `f64`.
pub type Rates64 = Rates<f64>;
/// Word-level rates as `f32`.
pub type Rates32 = Rates<f32>;
/// Word-level rates as exact rationals.
pub type ExactRates = Rates<Exact>;
