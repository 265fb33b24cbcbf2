//! Seeded synthetic corpora: Zipf-distributed utterances over a ranked
//! vocabulary, with scenes derived from a one-to-one gold lexicon.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, InputPair, Provenance};
use crate::error::{Error, Result};
use crate::lexicon::{GoldLexicon, Word};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LengthSpec {
    pub min: usize,
    pub max: usize,
    /// Informational; lengths are drawn uniformly from `min..=max`.
    pub mean: f64,
}

/// Parameters of the synthetic corpus generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub n_pairs: usize,
    pub word_vocab: usize,
    pub utterance_len: LengthSpec,
    pub zipf_exponent: f64,
    pub seed: u64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        Self {
            n_pairs: 18_000,
            word_vocab: 8_000,
            utterance_len: LengthSpec {
                min: 2,
                max: 6,
                mean: 4.0,
            },
            zipf_exponent: 0.75,
            seed: 1,
        }
    }
}

impl CorpusSpec {
    pub fn validate(&self) -> Result<()> {
        let l = &self.utterance_len;
        let bad = |m: String| Err(Error::InvalidSpec(m));
        if self.n_pairs == 0 {
            return bad("n_pairs must be positive".into());
        }
        if l.min == 0 {
            return bad("utterance length minimum must be at least 1".into());
        }
        if !(l.min as f64 <= l.mean && l.mean <= l.max as f64) {
            return bad(format!(
                "utterance length needs min <= mean <= max, got {} / {} / {}",
                l.min, l.mean, l.max
            ));
        }
        if self.word_vocab < l.max {
            return bad(format!(
                "vocabulary of {} words cannot fill utterances of length {}",
                self.word_vocab, l.max
            ));
        }
        if !(self.zipf_exponent.is_finite() && self.zipf_exponent > 0.0) {
            return bad(format!(
                "zipf exponent must be > 0, got {}",
                self.zipf_exponent
            ));
        }
        Ok(())
    }

    /// Token of the word at 1-based frequency `rank`.
    pub fn word_at_rank(&self, rank: usize) -> Word {
        let width = self.word_vocab.to_string().len();
        Word::new(format!("w{rank:0width$}")).expect("generated token is well-formed")
    }
}

/// Generates a corpus and the lexicon that produced its scenes. A pure
/// function of `spec`.
pub fn generate_synthetic_corpus(spec: &CorpusSpec) -> Result<(Corpus, GoldLexicon)> {
    spec.validate()?;
    let vocab: Vec<Word> = (1..=spec.word_vocab)
        .map(|k| spec.word_at_rank(k))
        .collect();
    let lexicon = GoldLexicon::upper_case_identity(&vocab)?;

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let zipf = Zipf::new(spec.word_vocab as f64, spec.zipf_exponent)
        .map_err(|e| Error::InvalidSpec(e.to_string()))?;
    let (lo, hi) = (spec.utterance_len.min, spec.utterance_len.max);

    let mut pairs = Vec::with_capacity(spec.n_pairs);
    for _ in 0..spec.n_pairs {
        let len = rng.random_range(lo..=hi);
        // ranks drawn without replacement within one utterance
        let mut drawn = BTreeSet::new();
        let mut order = Vec::with_capacity(len);
        while order.len() < len {
            let rank = zipf.sample(&mut rng) as usize;
            if drawn.insert(rank) {
                order.push(rank);
            }
        }
        let utterance: Vec<Word> = order.iter().map(|&k| vocab[k - 1].clone()).collect();
        let scene = utterance
            .iter()
            .map(|w| {
                lexicon
                    .get(w)
                    .expect("vocabulary word is in lexicon")
                    .iter()
                    .next()
                    .cloned()
            })
            .map(|r| r.expect("one referent per word"));
        pairs.push(InputPair::new(utterance.clone(), scene)?);
    }
    Ok((Corpus::new(pairs, Provenance::Synthetic), lexicon))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> CorpusSpec {
        CorpusSpec {
            n_pairs: 200,
            word_vocab: 50,
            utterance_len: LengthSpec {
                min: 1,
                max: 4,
                mean: 2.5,
            },
            zipf_exponent: 1.0,
            seed: 7,
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let (a, la) = generate_synthetic_corpus(&small()).unwrap();
        let (b, lb) = generate_synthetic_corpus(&small()).unwrap();
        let mut ba = Vec::new();
        let mut bb = Vec::new();
        a.save(&mut ba, crate::corpus::Format::Jsonl).unwrap();
        b.save(&mut bb, crate::corpus::Format::Jsonl).unwrap();
        assert_eq!(ba, bb);
        assert_eq!(la, lb);

        let other = CorpusSpec { seed: 8, ..small() };
        assert_ne!(generate_synthetic_corpus(&other).unwrap().0, a);
    }

    #[test]
    fn lengths_and_scenes() {
        let spec = small();
        let (c, lex) = generate_synthetic_corpus(&spec).unwrap();
        assert_eq!(c.len(), 200);
        assert_eq!(c.provenance(), Provenance::Synthetic);
        for p in &c {
            let n = p.utterance.len();
            assert!((1..=4).contains(&n));
            assert_eq!(p.scene.len(), n);
            let derived = lex.derive_scene(&p.utterance).unwrap();
            assert_eq!(p.scene.iter().cloned().collect::<BTreeSet<_>>(), derived);
        }
    }

    #[test]
    fn six_thousand_pairs() {
        let spec = CorpusSpec {
            n_pairs: 6000,
            ..small()
        };
        let (c, _) = generate_synthetic_corpus(&spec).unwrap();
        assert_eq!(c.len(), 6000);
        assert_eq!(c.pairs()[5999].index, 6000);
    }

    #[test]
    fn rejects_infeasible_specs() {
        let mut s = small();
        s.word_vocab = 3;
        assert!(matches!(
            generate_synthetic_corpus(&s),
            Err(Error::InvalidSpec(_))
        ));
        let mut s = small();
        s.utterance_len.mean = 9.0;
        assert!(s.validate().is_err());
        let mut s = small();
        s.zipf_exponent = 0.0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn tokens_sort_by_rank() {
        let s = CorpusSpec::default();
        assert_eq!(s.word_at_rank(7).as_str(), "w0007");
        assert!(s.word_at_rank(7) < s.word_at_rank(12));
    }
}
