//! Pseudo-homonym and pseudo-synonym probe trials.
//!
//! A probe trial is an ordinary input pair: a held-out context pair with a
//! probe word added to the utterance and a probe referent added to the
//! scene. Every trial of a run reuses the same context pair so that the new
//! meaning is always met in the same situation.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Corpus, InputPair};
use crate::error::{Error, Result};
use crate::eval::Band;
use crate::lexicon::{GoldLexicon, Referent, Word};

/// Where the trials come from: pairs before `cutoff` are training input,
/// pairs after it are candidate contexts.
#[derive(Debug, Clone, Copy)]
pub struct TrialSource<'a> {
    pub corpus: &'a Corpus,
    pub cutoff: usize,
    /// Picks the context among the candidates.
    pub context_seed: u64,
}

impl TrialSource<'_> {
    fn training(&self) -> impl Iterator<Item = &InputPair> {
        self.corpus.iter().take(self.cutoff)
    }

    fn held_out(&self) -> impl Iterator<Item = &InputPair> {
        self.corpus.iter().skip(self.cutoff)
    }

    fn pick<'p>(&self, candidates: &[&'p InputPair]) -> &'p InputPair {
        let mut rng = ChaCha8Rng::seed_from_u64(self.context_seed);
        candidates[rng.random_range(0..candidates.len())]
    }
}

fn repeat_trial(
    context: &InputPair,
    word: &Word,
    referent: &Referent,
    n_trials: usize,
) -> Result<Vec<InputPair>> {
    let mut trial = context.clone();
    trial.utterance.insert(word.clone());
    trial.scene.insert(referent.clone());
    Ok((0..n_trials)
        .map(|i| InputPair {
            index: i + 1,
            ..trial.clone()
        })
        .collect())
}

/// Trials pairing the familiar `probe_word` with `novel_referent`. The
/// context pair contains neither the probe word nor any of its gold
/// referents.
pub fn build_homonym_trials(
    source: TrialSource<'_>,
    probe_word: &Word,
    novel_referent: &Referent,
    n_trials: usize,
    gold: &GoldLexicon,
) -> Result<Vec<InputPair>> {
    if n_trials == 0 {
        return Err(Error::Trials("n_trials must be at least 1".into()));
    }
    if !source.training().any(|p| p.utterance.contains(probe_word)) {
        return Err(Error::Trials(format!(
            "probe word `{probe_word}` does not occur in the first {} pairs",
            source.cutoff
        )));
    }
    if source
        .corpus
        .iter()
        .any(|p| p.scene.contains(novel_referent))
    {
        return Err(Error::Trials(format!(
            "referent `{novel_referent}` already occurs in the corpus"
        )));
    }
    let first_meanings = gold
        .get(probe_word)
        .ok_or_else(|| Error::MissingEntry(probe_word.to_string()))?;
    let candidates: Vec<&InputPair> = source
        .held_out()
        .filter(|p| !p.utterance.contains(probe_word))
        .filter(|p| !first_meanings.iter().any(|r| p.scene.contains(r)))
        .collect();
    if candidates.is_empty() {
        return Err(Error::Trials(format!(
            "found 0 held-out context pairs without `{probe_word}` or its referents"
        )));
    }
    repeat_trial(
        source.pick(&candidates),
        probe_word,
        novel_referent,
        n_trials,
    )
}

/// Trials pairing `novel_word` with the familiar `target_referent`. The
/// context pair contains neither the referent nor any of its gold labels.
pub fn build_synonym_trials(
    source: TrialSource<'_>,
    novel_word: &Word,
    target_referent: &Referent,
    n_trials: usize,
    gold: &GoldLexicon,
) -> Result<Vec<InputPair>> {
    if n_trials == 0 {
        return Err(Error::Trials("n_trials must be at least 1".into()));
    }
    if source
        .corpus
        .iter()
        .any(|p| p.utterance.contains(novel_word))
    {
        return Err(Error::Trials(format!(
            "word `{novel_word}` already occurs in the corpus"
        )));
    }
    if !source.training().any(|p| p.scene.contains(target_referent)) {
        return Err(Error::Trials(format!(
            "target referent `{target_referent}` does not occur in the first {} pairs",
            source.cutoff
        )));
    }
    let labels = gold.labels_of(target_referent);
    let candidates: Vec<&InputPair> = source
        .held_out()
        .filter(|p| !p.scene.contains(target_referent))
        .filter(|p| !labels.iter().any(|w| p.utterance.contains(w)))
        .collect();
    if candidates.is_empty() {
        return Err(Error::Trials(format!(
            "found 0 held-out context pairs without `{target_referent}` or its labels"
        )));
    }
    repeat_trial(
        source.pick(&candidates),
        novel_word,
        target_referent,
        n_trials,
    )
}

/// Up to `per_band` words from each band, spread evenly over the band's
/// words ordered by (count, word). Words with zero count are never chosen.
pub fn select_by_frequency(
    counts: &BTreeMap<Word, usize>,
    bands: &[Band],
    per_band: usize,
) -> BTreeMap<String, Vec<Word>> {
    bands
        .iter()
        .map(|band| {
            let mut members: Vec<(usize, &Word)> = counts
                .iter()
                .filter(|(_, &c)| c > 0 && band.contains(c))
                .map(|(w, &c)| (c, w))
                .collect();
            members.sort();
            let n = members.len();
            let k = per_band.min(n);
            let chosen = (0..k)
                .map(|i| members[(2 * i + 1) * n / (2 * k)].1.clone())
                .collect();
            (band.label.clone(), chosen)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Provenance;

    fn w(s: &str) -> Word {
        Word::new(s).unwrap()
    }
    fn r(s: &str) -> Referent {
        Referent::new(s).unwrap()
    }
    fn pair(u: &[&str]) -> InputPair {
        InputPair::new(
            u.iter().map(|x| w(x)),
            u.iter().map(|x| r(&x.to_uppercase())),
        )
        .unwrap()
    }

    fn setup() -> (Corpus, GoldLexicon) {
        let pairs = vec![
            pair(&["ball", "red"]),
            pair(&["ball", "big"]),
            pair(&["dog", "red"]),
            // held out from here
            pair(&["ball", "cat"]),
            pair(&["cat", "sat"]),
        ];
        let c = Corpus::new(pairs, Provenance::File);
        let lex = GoldLexicon::upper_case_identity(c.word_counts().keys()).unwrap();
        (c, lex)
    }

    #[test]
    fn homonym_trials_share_one_clean_context() {
        let (c, lex) = setup();
        let dax = Referent::novel("DAX").unwrap();
        let src = TrialSource {
            corpus: &c,
            cutoff: 3,
            context_seed: 0,
        };
        let trials = build_homonym_trials(src, &w("ball"), &dax, 10, &lex).unwrap();
        assert_eq!(trials.len(), 10);
        for t in &trials {
            assert!(t.utterance.contains(&w("ball")));
            assert!(t.scene.contains(&dax));
            // only "cat sat" avoids both `ball` and BALL
            assert!(t.utterance.contains(&w("sat")));
            assert!(!t.scene.contains(&r("BALL")));
            assert_eq!(
                (&t.utterance, &t.scene),
                (&trials[0].utterance, &trials[0].scene)
            );
        }
    }

    #[test]
    fn homonym_errors() {
        let (c, lex) = setup();
        let dax = Referent::novel("DAX").unwrap();
        let src = TrialSource {
            corpus: &c,
            cutoff: 3,
            context_seed: 0,
        };
        assert!(build_homonym_trials(src, &w("sat"), &dax, 10, &lex).is_err());
        assert!(build_homonym_trials(src, &w("ball"), &dax, 0, &lex).is_err());
        assert!(build_homonym_trials(src, &w("ball"), &r("CAT"), 10, &lex).is_err());
        let tight = TrialSource {
            corpus: &c,
            cutoff: 4,
            context_seed: 0,
        };
        let err = build_homonym_trials(tight, &w("cat"), &dax, 10, &lex);
        assert!(err.is_err(), "cat is in every held-out pair");
    }

    #[test]
    fn synonym_trials_avoid_existing_label() {
        let (c, lex) = setup();
        let dax = Word::novel("dax").unwrap();
        let src = TrialSource {
            corpus: &c,
            cutoff: 3,
            context_seed: 5,
        };
        let trials = build_synonym_trials(src, &dax, &r("BALL"), 10, &lex).unwrap();
        assert_eq!(trials.len(), 10);
        for t in &trials {
            assert!(t.utterance.contains(&dax));
            assert!(t.scene.contains(&r("BALL")));
            assert!(!t.utterance.contains(&w("ball")));
        }
        assert!(build_synonym_trials(src, &w("cat"), &r("BALL"), 10, &lex).is_err());
        assert!(build_synonym_trials(src, &dax, &r("SAT"), 10, &lex).is_err());
    }

    #[test]
    fn frequency_selection_is_even_and_bounded() {
        let counts: BTreeMap<Word, usize> = (1..=30).map(|i| (w(&format!("x{i:02}")), i)).collect();
        let bands = [
            Band::new("low", 0, Some(4)),
            Band::new("mid", 5, Some(20)),
            Band::new("high", 21, None),
        ];
        let sel = select_by_frequency(&counts, &bands, 4);
        assert_eq!(sel["low"], [w("x01"), w("x02"), w("x03"), w("x04")]);
        assert_eq!(sel["mid"].len(), 4);
        assert_eq!(sel["high"].len(), 4);
        for word in &sel["mid"] {
            assert!((5..=20).contains(&counts[word]));
        }
        let few = select_by_frequency(&counts, &[Band::new("top", 29, None)], 4);
        assert_eq!(few["top"].len(), 2);
    }
}
