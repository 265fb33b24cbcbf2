//! Comprehension scoring against a gold lexicon.
//!
//! A word's learned meaning is compared to its gold meaning with cosine
//! similarity. The learned vector spans β referent slots: every observed or
//! gold referent carries its θ value and the remaining slots carry the row's
//! default θ, so a learner that has seen nothing scores 1/√β on a
//! single-meaning word.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::corpus::Provenance;
use crate::error::{Error, Result};
use crate::learner::{Checkpoint, LearnerState};
use crate::lexicon::{GoldLexicon, Referent, Word};
use crate::model::ModelId;

/// Cosine between `learned` and the indicator vector of `gold`, over the
/// union of both key sets. Missing learned entries count as zero.
pub fn cosine_to_indicator(learned: &BTreeMap<Referent, f64>, gold: &BTreeSet<Referent>) -> f64 {
    let m = learned.values().fold(0.0_f64, |a, &v| a.max(v.abs()));
    if m == 0.0 || gold.is_empty() {
        return 0.0;
    }
    let norm = learned
        .values()
        .map(|v| (v / m) * (v / m))
        .sum::<f64>()
        .sqrt();
    let dot: f64 = gold
        .iter()
        .filter_map(|g| learned.get(g))
        .map(|v| v / m)
        .sum();
    (dot / (norm * (gold.len() as f64).sqrt())).clamp(0.0, 1.0)
}

/// Comprehension of `w` with respect to an explicit set of target referents.
pub fn comprehension_against(state: &LearnerState, w: &Word, targets: &BTreeSet<Referent>) -> f64 {
    let default = state.default_theta(w);
    let observed = state.observed_referents();
    let row = state.assoc().row(w);

    // values present in the row, then the default-valued remainder
    let cell_values: Vec<f64> = row
        .map(|row| row.cells().map(|(r, _)| state.theta(w, r)).collect())
        .unwrap_or_default();
    let unobserved_targets = targets.iter().filter(|g| !observed.contains(*g)).count();
    let materialized = observed.len() + unobserved_targets;
    let slots = materialized.max(state.config().beta as usize);
    let n_default = slots - cell_values.len();

    let m = cell_values.iter().copied().fold(default, f64::max);
    let norm2: f64 = cell_values.iter().map(|v| (v / m) * (v / m)).sum::<f64>()
        + n_default as f64 * (default / m) * (default / m);
    let dot: f64 = targets.iter().map(|g| state.theta(w, g) / m).sum();
    (dot / (norm2.sqrt() * (targets.len() as f64).sqrt())).clamp(0.0, 1.0)
}

/// Cosine similarity of the learned meaning of `w` and its gold indicator.
pub fn comprehension_score(state: &LearnerState, w: &Word, gold: &GoldLexicon) -> Result<f64> {
    let targets = gold
        .get(w)
        .ok_or_else(|| Error::MissingEntry(w.to_string()))?;
    Ok(comprehension_against(state, w, targets))
}

/// Per-word scores for every observed word that has a gold entry.
pub fn per_word_scores(state: &LearnerState, gold: &GoldLexicon) -> BTreeMap<Word, f64> {
    state
        .observed_words()
        .iter()
        .filter_map(|w| {
            gold.get(w)
                .map(|t| (w.clone(), comprehension_against(state, w, t)))
        })
        .collect()
}

/// Unweighted mean of comprehension over observed word types.
pub fn average_comprehension(state: &LearnerState, gold: &GoldLexicon) -> Result<f64> {
    let scores = per_word_scores(state, gold);
    if scores.is_empty() {
        return Err(Error::EmptyEvaluation);
    }
    Ok(mean(scores.values().copied()))
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComprehensionReport {
    pub per_word: BTreeMap<Word, f64>,
    pub average: f64,
    pub step: usize,
    pub model: ModelId,
}

impl ComprehensionReport {
    pub fn new(state: &LearnerState, gold: &GoldLexicon) -> Result<Self> {
        let per_word = per_word_scores(state, gold);
        if per_word.is_empty() {
            return Err(Error::EmptyEvaluation);
        }
        Ok(Self {
            average: mean(per_word.values().copied()),
            per_word,
            step: state.step(),
            model: state.config().id(),
        })
    }
}

/// An inclusive occurrence-count range; `max: None` is unbounded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Band {
    pub label: String,
    pub min: usize,
    pub max: Option<usize>,
}

impl Band {
    pub fn new(label: &str, min: usize, max: Option<usize>) -> Self {
        Self {
            label: label.to_string(),
            min,
            max,
        }
    }

    pub fn contains(&self, count: usize) -> bool {
        count >= self.min && self.max.is_none_or(|m| count <= m)
    }
}

/// Ordered bands that partition all counts `0..`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Band>", into = "Vec<Band>")]
pub struct FrequencyBands {
    bands: Vec<Band>,
}

impl FrequencyBands {
    pub fn new(bands: Vec<Band>) -> Result<Self> {
        let bad = |m: &str| Err(Error::InvalidConfig(format!("frequency bands: {m}")));
        if bands.is_empty() {
            return bad("at least one band is required");
        }
        if bands[0].min != 0 {
            return bad("first band must start at 0");
        }
        for pair in bands.windows(2) {
            match pair[0].max {
                Some(m) if m + 1 == pair[1].min => {}
                _ => return bad("bands must be contiguous and ordered"),
            }
        }
        if bands.last().expect("non-empty").max.is_some() {
            return bad("last band must be unbounded");
        }
        let labels: BTreeSet<_> = bands.iter().map(|b| &b.label).collect();
        if labels.len() != bands.len() {
            return bad("labels must be distinct");
        }
        Ok(Self { bands })
    }

    pub fn bands(&self) -> &[Band] {
        &self.bands
    }

    pub fn band_of(&self, count: usize) -> &Band {
        self.bands
            .iter()
            .find(|b| b.contains(count))
            .expect("bands partition all counts")
    }
}

impl Default for FrequencyBands {
    /// low: fewer than 5 occurrences, mid: 5–10, high: more than 10.
    fn default() -> Self {
        Self::new(vec![
            Band::new("low", 0, Some(4)),
            Band::new("mid", 5, Some(10)),
            Band::new("high", 11, None),
        ])
        .expect("default bands are valid")
    }
}

impl TryFrom<Vec<Band>> for FrequencyBands {
    type Error = Error;
    fn try_from(b: Vec<Band>) -> Result<Self> {
        Self::new(b)
    }
}

impl From<FrequencyBands> for Vec<Band> {
    fn from(b: FrequencyBands) -> Self {
        b.bands
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandScore {
    pub label: String,
    pub average: f64,
    pub words: usize,
}

/// Mean comprehension per frequency band, in band order. Bands with no
/// observed words are omitted.
pub fn frequency_split_report(
    state: &LearnerState,
    gold: &GoldLexicon,
    bands: &FrequencyBands,
    counts: &BTreeMap<Word, usize>,
) -> Vec<BandScore> {
    let scores = per_word_scores(state, gold);
    bands
        .bands()
        .iter()
        .filter_map(|band| {
            let in_band: Vec<f64> = scores
                .iter()
                .filter(|(w, _)| band.contains(counts.get(*w).copied().unwrap_or(0)))
                .map(|(_, &s)| s)
                .collect();
            (!in_band.is_empty()).then(|| BandScore {
                label: band.label.clone(),
                average: mean(in_band.iter().copied()),
                words: in_band.len(),
            })
        })
        .collect()
}

/// Average comprehension over training time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningCurve {
    pub model: ModelId,
    pub provenance: Provenance,
    pub points: Vec<(usize, f64)>,
}

impl LearningCurve {
    /// One point per checkpoint; checkpoints must come from one run.
    pub fn from_checkpoints(
        model: ModelId,
        provenance: Provenance,
        checkpoints: &[Checkpoint<f64>],
    ) -> Self {
        debug_assert!(checkpoints.windows(2).all(|c| c[0].step < c[1].step));
        Self {
            model,
            provenance,
            points: checkpoints.iter().map(|c| (c.step, c.payload)).collect(),
        }
    }

    pub fn last(&self) -> Option<f64> {
        self.points.last().map(|&(_, v)| v)
    }
}

/// Checkpoint hook computing average comprehension; NaN if nothing is
/// observed yet.
pub fn curve_hook(gold: &GoldLexicon) -> impl FnMut(&LearnerState) -> f64 + '_ {
    move |state| average_comprehension(state, gold).unwrap_or(f64::NAN)
}

/// One line of a comprehension report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub model: ModelId,
    pub corpus: Provenance,
    pub seed: u64,
    pub step: usize,
    /// Band label, word, or `all`.
    pub key: String,
    pub score: f64,
}

/// Column order of [`write_report_csv`].
pub const REPORT_COLUMNS: [&str; 6] = ["model", "corpus", "seed", "step", "key", "score"];

/// Writes rows ordered by (model, corpus, seed, step, key).
pub fn write_report_csv(rows: &[ReportRow], out: impl Write) -> Result<()> {
    let mut rows: Vec<&ReportRow> = rows.iter().collect();
    rows.sort_by(|a, b| {
        (a.model.ordinal(), a.corpus, a.seed, a.step, &a.key).cmp(&(
            b.model.ordinal(),
            b.corpus,
            b.seed,
            b.step,
            &b.key,
        ))
    });
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(REPORT_COLUMNS).map_err(csv_err)?;
    for r in rows {
        wtr.write_record([
            r.model.slug().to_string(),
            r.corpus.to_string(),
            r.seed.to_string(),
            r.step.to_string(),
            r.key.clone(),
            r.score.to_string(),
        ])
        .map_err(csv_err)?;
    }
    wtr.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}
