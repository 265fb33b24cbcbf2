//! Multi-pass batch EM over a whole corpus for the p(r|w) model.
//!
//! The E-step spreads one unit of expected count per (pair, scene referent)
//! over the pair's words in proportion to θ(r|w); the M-step renormalizes
//! each word's counts into a distribution over referents. The incremental
//! learners approximate this by accumulating alignments as pairs arrive, so
//! the two should agree on each word's best referent on easy corpora.

use std::collections::BTreeMap;
use std::io::Write;

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::lexicon::{Referent, Word};

/// Dense p(r|w) over the corpus vocabularies.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchModel {
    words: Vec<Word>,
    referents: Vec<Referent>,
    // row-major words × referents
    theta: Vec<f64>,
}

/// Expected co-occurrence counts from one E-step.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedCounts {
    words: Vec<Word>,
    referents: Vec<Referent>,
    counts: Vec<f64>,
}

impl ExpectedCounts {
    pub fn from_map(counts: &BTreeMap<(Word, Referent), f64>) -> Self {
        let words: Vec<Word> = {
            let mut v: Vec<_> = counts.keys().map(|(w, _)| w.clone()).collect();
            v.dedup();
            v
        };
        let referents: Vec<Referent> = {
            let mut v: Vec<_> = counts.keys().map(|(_, r)| r.clone()).collect();
            v.sort();
            v.dedup();
            v
        };
        let mut dense = vec![0.0; words.len() * referents.len()];
        for ((w, r), &c) in counts {
            let i = words.binary_search(w).expect("collected");
            let j = referents.binary_search(r).expect("collected");
            dense[i * referents.len() + j] = c;
        }
        Self {
            words,
            referents,
            counts: dense,
        }
    }

    pub fn get(&self, w: &Word, r: &Referent) -> f64 {
        match (self.words.binary_search(w), self.referents.binary_search(r)) {
            (Ok(i), Ok(j)) => self.counts[i * self.referents.len() + j],
            _ => 0.0,
        }
    }
}

fn vocabularies(corpus: &Corpus) -> (Vec<Word>, Vec<Referent>) {
    let mut words: Vec<Word> = corpus.word_counts().into_keys().collect();
    let mut refs: Vec<Referent> = corpus.referent_counts().into_keys().collect();
    words.sort();
    refs.sort();
    (words, refs)
}

impl BatchModel {
    /// θ(r|w) = 1 / |referent vocabulary| for every cell.
    pub fn uniform(corpus: &Corpus) -> Self {
        let (words, referents) = vocabularies(corpus);
        let p = 1.0 / referents.len().max(1) as f64;
        Self {
            theta: vec![p; words.len() * referents.len()],
            words,
            referents,
        }
    }

    pub fn words(&self) -> &[Word] {
        &self.words
    }

    pub fn referents(&self) -> &[Referent] {
        &self.referents
    }

    fn idx(&self, w: &Word, r: &Referent) -> Option<usize> {
        let i = self.words.binary_search(w).ok()?;
        let j = self.referents.binary_search(r).ok()?;
        Some(i * self.referents.len() + j)
    }

    /// p(r|w); zero for symbols outside the vocabularies.
    pub fn prob(&self, w: &Word, r: &Referent) -> f64 {
        self.idx(w, r).map_or(0.0, |k| self.theta[k])
    }

    pub fn row(&self, w: &Word) -> Option<&[f64]> {
        let i = self.words.binary_search(w).ok()?;
        let n = self.referents.len();
        Some(&self.theta[i * n..(i + 1) * n])
    }

    /// Most probable referent for `w`; ties go to the smaller symbol.
    pub fn best_referent(&self, w: &Word) -> Option<&Referent> {
        let row = self.row(w)?;
        let mut best = 0;
        for (j, &v) in row.iter().enumerate() {
            if v > row[best] {
                best = j;
            }
        }
        self.referents.get(best)
    }

    /// Σ over pairs and scene referents of log Σ_{w∈u} θ(r|w).
    pub fn log_likelihood(&self, corpus: &Corpus) -> f64 {
        let mut ll = 0.0;
        for pair in corpus {
            for r in &pair.scene {
                let z: f64 = pair.utterance.iter().map(|w| self.prob(w, r)).sum();
                ll += z.ln();
            }
        }
        ll
    }

    /// `word,referent,probability` rows, sorted lexicographically.
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "word,referent,probability")?;
        for (i, w) in self.words.iter().enumerate() {
            for (j, r) in self.referents.iter().enumerate() {
                let p = self.theta[i * self.referents.len() + j];
                writeln!(out, "{w},{r},{p}")?;
            }
        }
        Ok(())
    }
}

/// Expected counts under `model`, accumulated in corpus order.
pub fn batch_e_step(model: &BatchModel, corpus: &Corpus) -> ExpectedCounts {
    let mut counts = vec![0.0; model.theta.len()];
    for pair in corpus {
        for r in &pair.scene {
            let cells: Vec<(Option<usize>, f64)> = pair
                .utterance
                .iter()
                .map(|w| {
                    let k = model.idx(w, r);
                    (k, k.map_or(0.0, |k| model.theta[k]))
                })
                .collect();
            let z: f64 = cells.iter().map(|&(_, v)| v).sum();
            if z <= 0.0 {
                continue;
            }
            for (k, v) in cells {
                if let Some(k) = k {
                    counts[k] += v / z;
                }
            }
        }
    }
    ExpectedCounts {
        words: model.words.clone(),
        referents: model.referents.clone(),
        counts,
    }
}

/// Row-normalizes expected counts into p(r|w).
pub fn batch_m_step(counts: &ExpectedCounts) -> Result<BatchModel> {
    let n = counts.referents.len();
    let mut theta = counts.counts.clone();
    for (i, row) in theta.chunks_mut(n.max(1)).enumerate() {
        let total: f64 = row.iter().sum();
        if total.is_nan() || total <= 0.0 {
            return Err(Error::ZeroRow(counts.words[i].to_string()));
        }
        for v in row {
            *v /= total;
        }
    }
    Ok(BatchModel {
        words: counts.words.clone(),
        referents: counts.referents.clone(),
        theta,
    })
}

/// `iterations` rounds of E then M from the uniform model.
pub fn batch_em(corpus: &Corpus, iterations: usize) -> Result<BatchModel> {
    Ok(batch_em_trace(corpus, iterations)?.0)
}

/// Like [`batch_em`], also returning the log-likelihood before the first
/// iteration and after each one.
pub fn batch_em_trace(corpus: &Corpus, iterations: usize) -> Result<(BatchModel, Vec<f64>)> {
    if iterations == 0 {
        return Err(Error::InvalidConfig(
            "batch EM needs at least one iteration".into(),
        ));
    }
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut model = BatchModel::uniform(corpus);
    let mut ll = vec![model.log_likelihood(corpus)];
    for _ in 0..iterations {
        model = batch_m_step(&batch_e_step(&model, corpus))?;
        ll.push(model.log_likelihood(corpus));
    }
    Ok((model, ll))
}
