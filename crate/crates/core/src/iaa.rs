//! Inter-annotator agreement: Scott's pi over term POS labels and the Dice
//! coefficient over exactly matching chain annotations.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;
use thiserror::Error;

use crate::corpus::{Corpus, PosTag};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IaaError {
    #[error("label sequences differ in length ({a} vs {b})")]
    LengthMismatch { a: usize, b: usize },
    #[error("no items to compare")]
    Empty,
    #[error("expected agreement is 1: both annotators used a single identical label, pi is undefined")]
    DegenerateDistribution,
    #[error("both chain sets are empty")]
    EmptySets,
    #[error("sentence {0:?} is present in only one annotation")]
    UnpairedId(String),
    #[error("sentence {id:?}: annotations disagree on the annotated words ({detail})")]
    TermMismatch { id: String, detail: String },
}

/// Two annotators' labels over the same ordered items.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSequencePair<L> {
    a: Vec<L>,
    b: Vec<L>,
}

impl<L> LabelSequencePair<L> {
    pub fn new(a: Vec<L>, b: Vec<L>) -> Result<Self, IaaError> {
        if a.len() != b.len() {
            return Err(IaaError::LengthMismatch { a: a.len(), b: b.len() });
        }
        if a.is_empty() {
            return Err(IaaError::Empty);
        }
        Ok(LabelSequencePair { a, b })
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn a(&self) -> &[L] {
        &self.a
    }

    pub fn b(&self) -> &[L] {
        &self.b
    }
}

/// Integer form of the agreement quantities, all over `4n^2`:
/// `Ao = observed / denom`, `Ae = expected / denom`.
struct AgreementCounts {
    observed: u64,
    expected: u64,
    denom: u64,
}

fn agreement_counts<L: Ord>(pair: &LabelSequencePair<L>) -> AgreementCounts {
    let n = pair.len() as u64;
    let agree = pair.a.iter().zip(&pair.b).filter(|(x, y)| x == y).count() as u64;
    // pooled marginals: p_k = (count_a(k) + count_b(k)) / 2n
    let mut pooled: BTreeMap<&L, u64> = BTreeMap::new();
    for label in pair.a.iter().chain(&pair.b) {
        *pooled.entry(label).or_insert(0) += 1;
    }
    AgreementCounts {
        observed: 4 * n * agree,
        expected: pooled.values().map(|c| c * c).sum(),
        denom: 4 * n * n,
    }
}

/// Observed and chance agreement `(Ao, Ae)`.
pub fn agreement_components<T: Scalar, L: Ord>(pair: &LabelSequencePair<L>) -> (T, T) {
    let c = agreement_counts(pair);
    (
        T::ratio(c.observed, c.denom).expect("non-empty pair"),
        T::ratio(c.expected, c.denom).expect("non-empty pair"),
    )
}

/// Scott's pi, `(Ao - Ae) / (1 - Ae)` with `Ae` from the labels pooled over
/// both annotators.
pub fn scott_pi<T: Scalar, L: Ord>(pair: &LabelSequencePair<L>) -> Result<T, IaaError> {
    let c = agreement_counts(pair);
    if c.expected == c.denom {
        return Err(IaaError::DegenerateDistribution);
    }
    let den = c.denom - c.expected;
    let value = if c.observed >= c.expected {
        T::ratio(c.observed - c.expected, den)
    } else {
        T::ratio(c.expected - c.observed, den).map(|v| T::zero() - v)
    };
    Ok(value.expect("denominator checked above"))
}

/// A chain as annotated: sentence id plus ordered member term indices.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct ChainIdentity {
    pub sentence_id: String,
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ChainSetPair {
    pub a: BTreeSet<ChainIdentity>,
    pub b: BTreeSet<ChainIdentity>,
}

/// `2|A ∩ B| / (|A| + |B|)` over exactly matching chains.
pub fn dice_chains<T: Scalar>(pair: &ChainSetPair) -> Result<T, IaaError> {
    let sizes = (pair.a.len() + pair.b.len()) as u64;
    let shared = pair.a.intersection(&pair.b).count() as u64;
    T::ratio(2 * shared, sizes).ok_or(IaaError::EmptySets)
}

fn chain_set(corpus: &Corpus) -> BTreeSet<ChainIdentity> {
    corpus
        .chains()
        .map(|c| ChainIdentity {
            sentence_id: c.sentence_id,
            members: c.members,
        })
        .collect()
}

/// Pairs two annotations of the same corpus by sentence id. Terms are paired
/// by position and must name the same correct form.
pub fn pair_annotations(a: &Corpus, b: &Corpus) -> Result<(LabelSequencePair<PosTag>, ChainSetPair), IaaError> {
    let b_by_id: HashMap<&str, _> = b.entries.iter().map(|e| (e.id.as_str(), e)).collect();
    if let Some(extra) = b.entries.iter().find(|e| a.get(&e.id).is_none()) {
        return Err(IaaError::UnpairedId(extra.id.clone()));
    }
    let (mut labels_a, mut labels_b) = (Vec::new(), Vec::new());
    for ea in &a.entries {
        let eb = b_by_id
            .get(ea.id.as_str())
            .ok_or_else(|| IaaError::UnpairedId(ea.id.clone()))?;
        if ea.terms.len() != eb.terms.len() {
            return Err(IaaError::TermMismatch {
                id: ea.id.clone(),
                detail: format!("{} vs {} terms", ea.terms.len(), eb.terms.len()),
            });
        }
        for (i, (ta, tb)) in ea.terms.iter().zip(&eb.terms).enumerate() {
            if ta.correct_form != tb.correct_form {
                return Err(IaaError::TermMismatch {
                    id: ea.id.clone(),
                    detail: format!("term {i}: {:?} vs {:?}", ta.correct_form, tb.correct_form),
                });
            }
            labels_a.push(ta.pos);
            labels_b.push(tb.pos);
        }
    }
    let labels = LabelSequencePair::new(labels_a, labels_b)?;
    let chains = ChainSetPair {
        a: chain_set(a),
        b: chain_set(b),
    };
    Ok((labels, chains))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IaaReport {
    pub items: usize,
    pub observed_agreement: f64,
    pub expected_agreement: f64,
    /// `None` when the label distribution is degenerate.
    pub scott_pi: Option<f64>,
    pub chains_a: usize,
    pub chains_b: usize,
    pub chains_shared: usize,
    /// `None` when neither annotation has chains.
    pub dice: Option<f64>,
}

pub fn compare_annotations(a: &Corpus, b: &Corpus) -> Result<IaaReport, IaaError> {
    let (labels, chains) = pair_annotations(a, b)?;
    let (ao, ae): (f64, f64) = agreement_components(&labels);
    Ok(IaaReport {
        items: labels.len(),
        observed_agreement: ao,
        expected_agreement: ae,
        scott_pi: scott_pi(&labels).ok(),
        chains_a: chains.a.len(),
        chains_b: chains.b.len(),
        chains_shared: chains.a.intersection(&chains.b).count(),
        dice: dice_chains(&chains).ok(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{parse_corpus_str, ParseOptions};
    use crate::scalar::Exact;
    use proptest::prelude::*;
    use PosTag::*;

    fn pair(a: &[PosTag], b: &[PosTag]) -> LabelSequencePair<PosTag> {
        LabelSequencePair::new(a.to_vec(), b.to_vec()).unwrap()
    }

    #[test]
    fn hand_computed_pi() {
        let p = pair(&[Noun, Verb, Noun, Art], &[Noun, Verb, Verb, Art]);
        let (ao, ae): (Exact, Exact) = agreement_components(&p);
        assert_eq!(ao, Exact::new(3, 4));
        assert_eq!(ae, Exact::new(22, 64));
        assert_eq!(scott_pi::<Exact, _>(&p).unwrap(), Exact::new(13, 21));
        let approx: f64 = scott_pi(&p).unwrap();
        assert!((approx - 0.619047619047619).abs() < 1e-12);
    }

    #[test]
    fn full_disagreement_is_minus_one() {
        let p = pair(&[Noun, Verb], &[Verb, Noun]);
        assert_eq!(scott_pi::<Exact, _>(&p).unwrap(), Exact::from_integer(-1));
    }

    #[test]
    fn identical_annotations() {
        let p = pair(&[Noun, Verb, Art], &[Noun, Verb, Art]);
        assert_eq!(scott_pi::<f64, _>(&p).unwrap(), 1.0);
    }

    #[test]
    fn single_shared_label_is_degenerate() {
        let p = pair(&[Noun, Noun], &[Noun, Noun]);
        assert_eq!(scott_pi::<f64, _>(&p), Err(IaaError::DegenerateDistribution));
    }

    #[test]
    fn invalid_pairs() {
        assert_eq!(
            LabelSequencePair::new(vec![Noun], vec![]),
            Err(IaaError::LengthMismatch { a: 1, b: 0 })
        );
        assert_eq!(LabelSequencePair::<PosTag>::new(vec![], vec![]), Err(IaaError::Empty));
    }

    fn ident(id: &str, members: &[usize]) -> ChainIdentity {
        ChainIdentity {
            sentence_id: id.into(),
            members: members.to_vec(),
        }
    }

    #[test]
    fn dice_fixtures() {
        let a: BTreeSet<_> = [ident("1", &[0, 1]), ident("2", &[1, 2])].into();
        let b: BTreeSet<_> = [ident("1", &[0, 1])].into();
        let p = ChainSetPair { a: a.clone(), b };
        assert_eq!(dice_chains::<Exact>(&p).unwrap(), Exact::new(2, 3));
        let same = ChainSetPair { a: a.clone(), b: a };
        assert_eq!(dice_chains::<f64>(&same).unwrap(), 1.0);
        let disjoint = ChainSetPair {
            a: [ident("1", &[0, 1])].into(),
            b: [ident("1", &[0, 2])].into(),
        };
        assert_eq!(dice_chains::<f64>(&disjoint).unwrap(), 0.0);
        assert_eq!(dice_chains::<f64>(&ChainSetPair::default()), Err(IaaError::EmptySets));
    }

    fn annotation(terms: &str) -> Corpus {
        let text = format!("ID\tSRC\tREF\tGENDER\tCATEGORY\tGENDERTERMS\n1\ts\tla nuova amica\tF\t1F\t{terms}\n");
        parse_corpus_str(&text, &ParseOptions::default()).unwrap()
    }

    #[test]
    fn compares_two_annotation_files() {
        let a = annotation("la>il>ART>1;nuova>nuovo>ADJ-DES>1;amica>amico>NOUN>1");
        let b = annotation("la>il>ART>1;nuova>nuovo>ADJ-DET>;amica>amico>NOUN>1");
        let r = compare_annotations(&a, &b).unwrap();
        assert_eq!(r.items, 3);
        assert_eq!(r.chains_shared, 0);
        assert_eq!(r.dice, Some(0.0));
        assert!(r.scott_pi.unwrap() < 1.0);
        let r = compare_annotations(&a, &a).unwrap();
        assert_eq!(r.scott_pi, Some(1.0));
        assert_eq!(r.dice, Some(1.0));
    }

    #[test]
    fn unpaired_and_mismatched_terms() {
        let a = annotation("la>il>ART>");
        let b = annotation("amica>amico>NOUN>");
        assert!(matches!(compare_annotations(&a, &b), Err(IaaError::TermMismatch { .. })));
        let mut c = a.clone();
        c.entries[0].id = "2".into();
        assert_eq!(compare_annotations(&a, &c), Err(IaaError::UnpairedId("2".into())));
    }

    fn labels() -> impl Strategy<Value = (Vec<PosTag>, Vec<PosTag>)> {
        (1usize..20).prop_flat_map(|n| {
            let tag = proptest::sample::select(PosTag::ALL.to_vec());
            (
                proptest::collection::vec(tag.clone(), n),
                proptest::collection::vec(tag, n),
            )
        })
    }

    proptest! {
        #[test]
        fn pi_symmetric_bounded_permutation_invariant((a, b) in labels(), seed in any::<u64>()) {
            let p = pair(&a, &b);
            let q = pair(&b, &a);
            match scott_pi::<Exact, _>(&p) {
                Ok(pi) => {
                    prop_assert_eq!(scott_pi::<Exact, _>(&q).unwrap(), pi);
                    prop_assert!(pi >= Exact::from_integer(-1) && pi <= Exact::from_integer(1));
                    // rotate both sequences by the same amount
                    let k = (seed as usize) % a.len();
                    let mut ra = a.clone();
                    let mut rb = b.clone();
                    ra.rotate_left(k);
                    rb.rotate_left(k);
                    prop_assert_eq!(scott_pi::<Exact, _>(&pair(&ra, &rb)).unwrap(), pi);
                }
                Err(e) => prop_assert_eq!(e, IaaError::DegenerateDistribution),
            }
        }

        #[test]
        fn dice_symmetric_bounded(
            a in proptest::collection::btree_set((0u8..4, 0usize..3), 0..6),
            b in proptest::collection::btree_set((0u8..4, 0usize..3), 1..6),
        ) {
            let to_set = |s: &BTreeSet<(u8, usize)>| -> BTreeSet<ChainIdentity> {
                s.iter().map(|(id, m)| ident(&id.to_string(), &[*m, m + 1])).collect()
            };
            let p = ChainSetPair { a: to_set(&a), b: to_set(&b) };
            let q = ChainSetPair { a: p.b.clone(), b: p.a.clone() };
            let d: Exact = dice_chains(&p).unwrap();
            prop_assert_eq!(dice_chains::<Exact>(&q).unwrap(), d);
            prop_assert!(d >= Exact::from_integer(0) && d <= Exact::from_integer(1));
        }
    }
}
