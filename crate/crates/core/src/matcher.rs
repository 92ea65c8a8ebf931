//! Per-term matching of annotated gender forms against a system output.
//!
//! The hypothesis is treated as a bag of normalized tokens. Each annotated
//! term claims at most one token occurrence, either its correct form or its
//! wrong form, and each occurrence satisfies at most one claim.
//!
//! Among all such assignments the matcher returns one that maximizes the
//! number of covered terms, then the number of correct-form matches. Ties are
//! broken by scanning terms in annotation order and preferring
//! `CorrectForm`, then `WrongForm`, then `NotFound` for each. When the plain
//! greedy scan (correct form first, then wrong form, consuming tokens as it
//! goes) is already optimal, the result is exactly the greedy one. The two
//! differ only when forms collide across terms, e.g. terms `(a, b)` and
//! `(a, c)` against `"a b"`: greedy gives the `a` to the first term and
//! leaves the second uncovered, while the optimum covers both.

use serde::{Deserialize, Serialize};

use crate::corpus::{SentenceEntry, TermAnnotation};
use crate::textnorm::{normalized_tokens, TokenMultiset};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MatchOutcome {
    CorrectForm,
    WrongForm,
    NotFound,
}

impl MatchOutcome {
    pub fn is_found(self) -> bool {
        !matches!(self, MatchOutcome::NotFound)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceMatch<'a> {
    pub entry: &'a SentenceEntry,
    /// Aligned 1:1 with `entry.terms`.
    pub outcomes: Vec<MatchOutcome>,
}

pub fn match_sentence<'a>(entry: &'a SentenceEntry, hypothesis: &str) -> SentenceMatch<'a> {
    let bag: TokenMultiset = normalized_tokens(hypothesis).into_iter().collect();
    SentenceMatch {
        entry,
        outcomes: match_terms(&entry.terms, &bag),
    }
}

/// Correct-first greedy scan in annotation order, consuming from `bag`.
pub fn greedy_outcomes(terms: &[TermAnnotation], bag: &TokenMultiset) -> Vec<MatchOutcome> {
    let mut bag = bag.clone();
    terms
        .iter()
        .map(|t| {
            if bag.take(&t.correct_form) {
                MatchOutcome::CorrectForm
            } else if bag.take(&t.wrong_form) {
                MatchOutcome::WrongForm
            } else {
                MatchOutcome::NotFound
            }
        })
        .collect()
}

pub fn match_terms(terms: &[TermAnnotation], bag: &TokenMultiset) -> Vec<MatchOutcome> {
    let problem = Problem::new(terms, bag);
    let greedy = greedy_outcomes(terms, bag);
    let best = problem.optimum(0, &problem.caps);
    if problem.value(&greedy) == best {
        return greedy;
    }
    problem.lexicographic_optimum(best)
}

/// Terms reduced to indices into the distinct forms they mention.
struct Problem {
    correct: Vec<usize>,
    wrong: Vec<usize>,
    caps: Vec<i64>,
    cover_weight: i64,
}

impl Problem {
    fn new<'t>(terms: &'t [TermAnnotation], bag: &TokenMultiset) -> Self {
        let mut forms: Vec<&'t str> = Vec::new();
        let mut index_of = |form: &'t str| -> usize {
            forms.iter().position(|f| *f == form).unwrap_or_else(|| {
                forms.push(form);
                forms.len() - 1
            })
        };
        let mut correct = Vec::with_capacity(terms.len());
        let mut wrong = Vec::with_capacity(terms.len());
        for t in terms {
            correct.push(index_of(&t.correct_form));
            wrong.push(index_of(&t.wrong_form));
        }
        let caps = forms.iter().map(|f| bag.count(f) as i64).collect();
        Problem {
            correct,
            wrong,
            caps,
            // covering one more term always beats any number of extra correct matches
            cover_weight: terms.len() as i64 + 1,
        }
    }

    fn weight(&self, outcome: MatchOutcome) -> i64 {
        match outcome {
            MatchOutcome::CorrectForm => self.cover_weight + 1,
            MatchOutcome::WrongForm => self.cover_weight,
            MatchOutcome::NotFound => 0,
        }
    }

    fn value(&self, outcomes: &[MatchOutcome]) -> i64 {
        outcomes.iter().map(|&o| self.weight(o)).sum()
    }

    /// Best attainable value for terms `from..` given remaining capacities.
    fn optimum(&self, from: usize, caps: &[i64]) -> i64 {
        let n_terms = self.correct.len() - from;
        if n_terms == 0 {
            return 0;
        }
        let source = 0;
        let sink = 1;
        let term_node = |i: usize| 2 + i;
        let form_node = |f: usize| 2 + n_terms + f;
        let mut flow = MinCostFlow::new(2 + n_terms + caps.len());
        for i in 0..n_terms {
            let t = from + i;
            flow.add_edge(source, term_node(i), 1, 0);
            flow.add_edge(term_node(i), form_node(self.correct[t]), 1, -self.weight(MatchOutcome::CorrectForm));
            flow.add_edge(term_node(i), form_node(self.wrong[t]), 1, -self.weight(MatchOutcome::WrongForm));
        }
        for (f, &cap) in caps.iter().enumerate() {
            if cap > 0 {
                flow.add_edge(form_node(f), sink, cap, 0);
            }
        }
        -flow.min_cost(source, sink)
    }

    fn lexicographic_optimum(&self, best: i64) -> Vec<MatchOutcome> {
        let mut caps = self.caps.clone();
        let mut prefix = 0;
        let mut outcomes = Vec::with_capacity(self.correct.len());
        for t in 0..self.correct.len() {
            let options = [
                (MatchOutcome::CorrectForm, Some(self.correct[t])),
                (MatchOutcome::WrongForm, Some(self.wrong[t])),
                (MatchOutcome::NotFound, None),
            ];
            for (outcome, form) in options {
                if let Some(f) = form {
                    if caps[f] == 0 {
                        continue;
                    }
                    caps[f] -= 1;
                }
                let total = prefix + self.weight(outcome) + self.optimum(t + 1, &caps);
                if total == best {
                    prefix += self.weight(outcome);
                    outcomes.push(outcome);
                    break;
                }
                if let Some(f) = form {
                    caps[f] += 1;
                }
            }
            debug_assert_eq!(outcomes.len(), t + 1, "NotFound keeps the optimum attainable");
        }
        outcomes
    }
}

#[derive(Clone, Copy)]
struct Edge {
    to: usize,
    cap: i64,
    cost: i64,
}

/// Successive shortest paths; stops once no path has negative cost, so the
/// result is the minimum cost over all flow values.
struct MinCostFlow {
    edges: Vec<Edge>,
    adj: Vec<Vec<usize>>,
}

impl MinCostFlow {
    fn new(nodes: usize) -> Self {
        MinCostFlow {
            edges: Vec::new(),
            adj: vec![Vec::new(); nodes],
        }
    }

    fn add_edge(&mut self, from: usize, to: usize, cap: i64, cost: i64) {
        self.adj[from].push(self.edges.len());
        self.edges.push(Edge { to, cap, cost });
        self.adj[to].push(self.edges.len());
        self.edges.push(Edge { to: from, cap: 0, cost: -cost });
    }

    fn min_cost(&mut self, source: usize, sink: usize) -> i64 {
        let n = self.adj.len();
        let mut total = 0;
        loop {
            // Bellman-Ford: residual graphs here have negative edges.
            let mut dist = vec![i64::MAX; n];
            let mut via = vec![usize::MAX; n];
            dist[source] = 0;
            for _ in 0..n {
                let mut changed = false;
                for u in 0..n {
                    if dist[u] == i64::MAX {
                        continue;
                    }
                    for &e in &self.adj[u] {
                        let edge = self.edges[e];
                        if edge.cap > 0 && dist[u] + edge.cost < dist[edge.to] {
                            dist[edge.to] = dist[u] + edge.cost;
                            via[edge.to] = e;
                            changed = true;
                        }
                    }
                }
                if !changed {
                    break;
                }
            }
            if dist[sink] == i64::MAX || dist[sink] >= 0 {
                return total;
            }
            let mut push = i64::MAX;
            let mut v = sink;
            while v != source {
                let e = via[v];
                push = push.min(self.edges[e].cap);
                v = self.edges[e ^ 1].to;
            }
            let mut v = sink;
            while v != source {
                let e = via[v];
                self.edges[e].cap -= push;
                self.edges[e ^ 1].cap += push;
                v = self.edges[e ^ 1].to;
            }
            total += push * dist[sink];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{GenderLabel, PosTag};
    use MatchOutcome::*;

    fn entry(terms: &[(&str, &str)]) -> SentenceEntry {
        SentenceEntry {
            id: "t".into(),
            src: String::new(),
            reference: String::new(),
            gender: GenderLabel::F,
            category: String::new(),
            terms: terms
                .iter()
                .map(|(c, w)| TermAnnotation::new(c, w, PosTag::Noun, None))
                .collect(),
        }
    }

    #[test]
    fn ragazza_example_is_fully_correct() {
        let e = entry(&[("la", "il"), ("andata", "andato")]);
        assert_eq!(match_sentence(&e, "La ragazza è andata via").outcomes, [CorrectForm, CorrectForm]);
    }

    #[test]
    fn empty_hypothesis_finds_nothing() {
        let e = entry(&[("la", "il"), ("andata", "andato")]);
        assert_eq!(match_sentence(&e, "").outcomes, [NotFound, NotFound]);
    }

    #[test]
    fn repeated_form_consumed_once() {
        let e = entry(&[("la", "il"), ("la", "il")]);
        assert_eq!(match_sentence(&e, "la il x").outcomes, [CorrectForm, WrongForm]);
        assert_eq!(match_sentence(&e, "la x").outcomes, [CorrectForm, NotFound]);
    }

    #[test]
    fn correct_preferred_when_both_forms_present() {
        let e = entry(&[("andata", "andato")]);
        assert_eq!(match_sentence(&e, "andato andata").outcomes, [CorrectForm]);
    }

    #[test]
    fn collision_resolved_for_coverage() {
        let e = entry(&[("a", "b"), ("a", "c")]);
        let bag: TokenMultiset = ["a", "b"].into_iter().collect();
        assert_eq!(greedy_outcomes(&e.terms, &bag), [CorrectForm, NotFound]);
        assert_eq!(match_sentence(&e, "a b").outcomes, [WrongForm, CorrectForm]);
    }

    #[test]
    fn collision_resolved_for_correctness() {
        // equal coverage either way: the earlier term keeps its correct form
        let e = entry(&[("x", "z"), ("x", "w")]);
        assert_eq!(match_sentence(&e, "x z w").outcomes, [CorrectForm, WrongForm]);
        let e = entry(&[("x", "y"), ("y", "x")]);
        assert_eq!(match_sentence(&e, "y x").outcomes, [CorrectForm, CorrectForm]);
        // equal coverage, but giving q to the second term yields a correct match
        let e = entry(&[("p", "q"), ("q", "r")]);
        assert_eq!(match_sentence(&e, "q").outcomes, [NotFound, CorrectForm]);
    }

    #[test]
    fn outcomes_align_with_terms() {
        let e = entry(&[("a", "b"), ("c", "d"), ("e", "f")]);
        assert_eq!(match_sentence(&e, "d").outcomes.len(), 3);
    }
}
