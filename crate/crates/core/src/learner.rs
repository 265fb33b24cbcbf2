//! Incremental learner state: the association table, the observed symbol
//! registries, and the per-pair align/update step.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, InputPair};
use crate::error::{Error, Result};
use crate::lexicon::{Referent, Word};
use crate::model::{AlignmentTable, ModelConfig};

/// Association scores of one word.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AssocRow {
    cells: BTreeMap<Referent, f64>,
    sum: f64,
}

impl AssocRow {
    pub fn get(&self, r: &Referent) -> f64 {
        self.cells.get(r).copied().unwrap_or(0.0)
    }

    /// Cached Σ of the row's cells.
    pub fn sum(&self) -> f64 {
        self.sum
    }

    pub fn cells(&self) -> impl Iterator<Item = (&Referent, f64)> {
        self.cells.iter().map(|(r, &v)| (r, v))
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

/// Sparse, non-negative word × referent association scores. Absent cells
/// are zero.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AssocTable {
    rows: BTreeMap<Word, AssocRow>,
}

impl AssocTable {
    pub fn get(&self, w: &Word, r: &Referent) -> f64 {
        self.rows.get(w).map_or(0.0, |row| row.get(r))
    }

    pub fn row(&self, w: &Word) -> Option<&AssocRow> {
        self.rows.get(w)
    }

    pub fn row_sum(&self, w: &Word) -> f64 {
        self.rows.get(w).map_or(0.0, AssocRow::sum)
    }

    /// `(word, referent, score)` sorted by word, then referent.
    pub fn triples(&self) -> impl Iterator<Item = (&Word, &Referent, f64)> {
        self.rows
            .iter()
            .flat_map(|(w, row)| row.cells.iter().map(move |(r, &v)| (w, r, v)))
    }

    pub fn rows(&self) -> impl Iterator<Item = (&Word, &AssocRow)> {
        self.rows.iter()
    }

    fn add(&mut self, w: &Word, r: &Referent, delta: f64) -> f64 {
        let row = self.rows.entry(w.clone()).or_default();
        let cell = row.cells.entry(r.clone()).or_insert(0.0);
        *cell += delta;
        row.sum += delta;
        *cell
    }
}

/// Summary emitted by [`LearnerState::train`] at each checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint<P> {
    pub step: usize,
    pub observed_words: usize,
    pub observed_referents: usize,
    pub payload: P,
}

/// Everything an incremental learner knows after `step` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerState {
    config: ModelConfig,
    assoc: AssocTable,
    observed_words: BTreeSet<Word>,
    observed_referents: BTreeSet<Referent>,
    step: usize,
}

impl LearnerState {
    pub fn new(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            assoc: AssocTable::default(),
            observed_words: BTreeSet::new(),
            observed_referents: BTreeSet::new(),
            step: 0,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn assoc(&self) -> &AssocTable {
        &self.assoc
    }

    pub fn observed_words(&self) -> &BTreeSet<Word> {
        &self.observed_words
    }

    pub fn observed_referents(&self) -> &BTreeSet<Referent> {
        &self.observed_referents
    }

    pub fn step(&self) -> usize {
        self.step
    }

    /// Current meaning value θ(w, r). Defined for unseen symbols too.
    pub fn theta(&self, w: &Word, r: &Referent) -> f64 {
        let s = self.config.smoothing();
        let rep = self.config.meaning_representation();
        match self.assoc.row(w) {
            Some(row) => rep.theta(row.get(r), row.sum(), &s),
            None => rep.theta(0.0, 0.0, &s),
        }
    }

    /// θ of any referent without an association cell in `w`'s row.
    pub fn default_theta(&self, w: &Word) -> f64 {
        let s = self.config.smoothing();
        self.config
            .meaning_representation()
            .theta(0.0, self.assoc.row_sum(w), &s)
    }

    pub fn align(&self, pair: &InputPair) -> AlignmentTable {
        self.config
            .alignment_rule()
            .align(&|w, r| self.theta(w, r), pair)
    }

    /// Adds the pair's alignments (computed from the state before the
    /// update) to the association table. On error the state is unchanged.
    pub fn update(&mut self, pair: &InputPair) -> Result<()> {
        let new_refs = pair
            .scene
            .iter()
            .filter(|r| !self.observed_referents.contains(*r))
            .count();
        let total = self.observed_referents.len() + new_refs;
        if total > self.config.beta as usize {
            let first_new = pair
                .scene
                .iter()
                .find(|r| !self.observed_referents.contains(*r))
                .expect("some referent is new");
            return Err(Error::ReferentOverflow {
                referent: first_new.to_string(),
                observed: total,
                beta: self.config.beta,
            });
        }

        let table = self.align(pair);
        if let Some((w, r, _)) = table
            .iter()
            .find(|&(w, r, v)| !(self.assoc.get(w, r) + v).is_finite())
        {
            return Err(Error::AssocOverflow {
                word: w.to_string(),
                referent: r.to_string(),
            });
        }
        for (w, r, v) in table.iter() {
            self.assoc.add(w, r, v);
        }
        self.observed_words.extend(pair.utterance.iter().cloned());
        self.observed_referents.extend(pair.scene.iter().cloned());
        self.step += 1;
        Ok(())
    }

    /// Folds [`update`](Self::update) over `corpus`, calling `hook` every
    /// `checkpoint_every` pairs and after the last one.
    pub fn train<P>(
        &mut self,
        corpus: &Corpus,
        checkpoint_every: usize,
        mut hook: impl FnMut(&LearnerState) -> P,
    ) -> Result<Vec<Checkpoint<P>>> {
        if checkpoint_every == 0 {
            return Err(Error::InvalidConfig("checkpoint_every must be >= 1".into()));
        }
        let mut checkpoints = Vec::new();
        let mut since = 0;
        for pair in corpus {
            self.update(pair).map_err(|e| Error::AtPair {
                index: pair.index,
                source: Box::new(e),
            })?;
            since += 1;
            if since == checkpoint_every {
                since = 0;
                checkpoints.push(self.checkpoint(&mut hook));
            }
        }
        if since > 0 {
            checkpoints.push(self.checkpoint(&mut hook));
        }
        Ok(checkpoints)
    }

    /// Trains without emitting checkpoints.
    pub fn train_all(&mut self, corpus: &Corpus) -> Result<()> {
        self.train(corpus, usize::MAX, |_| ()).map(|_| ())
    }

    fn checkpoint<P>(&self, hook: &mut impl FnMut(&LearnerState) -> P) -> Checkpoint<P> {
        Checkpoint {
            step: self.step,
            observed_words: self.observed_words.len(),
            observed_referents: self.observed_referents.len(),
            payload: hook(self),
        }
    }

    /// θ(w, r) for every observed referent.
    pub fn meaning_vector(&self, w: &Word) -> BTreeMap<Referent, f64> {
        self.observed_referents
            .iter()
            .map(|r| (r.clone(), self.theta(w, r)))
            .collect()
    }

    /// θ(w, r) on a probability scale. Identical to θ under p(r|w); under
    /// p(w,r) the row is divided by its total over all β referent slots.
    pub fn meaning_probability(&self, w: &Word, r: &Referent) -> f64 {
        let s = self.config.smoothing();
        let norm = self
            .config
            .meaning_representation()
            .reporting_normalizer(self.assoc.row_sum(w), &s);
        self.theta(w, r) / norm
    }

    /// Highest-θ observed referent for `w`; ties go to the smaller symbol.
    pub fn best_referent(&self, w: &Word) -> Option<Referent> {
        let mut best: Option<(&Referent, f64)> = None;
        for r in &self.observed_referents {
            let v = self.theta(w, r);
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((r, v));
            }
        }
        best.map(|(r, _)| r.clone())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&Snapshot::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str::<Snapshot>(text)?.try_into()
    }

    pub fn save(&self, mut out: impl Write) -> Result<()> {
        out.write_all(self.to_json()?.as_bytes())?;
        Ok(())
    }

    pub fn load(mut input: impl Read) -> Result<Self> {
        let mut text = String::new();
        input.read_to_string(&mut text)?;
        Self::from_json(&text)
    }
}

const SNAPSHOT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Snapshot {
    version: u32,
    config: ModelConfig,
    step: usize,
    observed_words: Vec<Word>,
    observed_referents: Vec<Referent>,
    assoc: Vec<(Word, Referent, f64)>,
    row_sums: Vec<(Word, f64)>,
}

impl From<&LearnerState> for Snapshot {
    fn from(s: &LearnerState) -> Self {
        Snapshot {
            version: SNAPSHOT_VERSION,
            config: s.config,
            step: s.step,
            observed_words: s.observed_words.iter().cloned().collect(),
            observed_referents: s.observed_referents.iter().cloned().collect(),
            assoc: s
                .assoc
                .triples()
                .map(|(w, r, v)| (w.clone(), r.clone(), v))
                .collect(),
            row_sums: s
                .assoc
                .rows()
                .map(|(w, row)| (w.clone(), row.sum))
                .collect(),
        }
    }
}

impl TryFrom<Snapshot> for LearnerState {
    type Error = Error;

    fn try_from(snap: Snapshot) -> Result<Self> {
        if snap.version != SNAPSHOT_VERSION {
            return Err(Error::InvalidConfig(format!(
                "unsupported learner snapshot version {}",
                snap.version
            )));
        }
        let mut state = LearnerState::new(snap.config)?;
        state.step = snap.step;
        state.observed_words = snap.observed_words.into_iter().collect();
        state.observed_referents = snap.observed_referents.into_iter().collect();
        if state.observed_referents.len() > state.config.beta as usize {
            return Err(Error::InvalidConfig(
                "snapshot has more referents than beta".into(),
            ));
        }
        for (w, r, v) in snap.assoc {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "bad score {v} for ({w}, {r})"
                )));
            }
            if !state.observed_words.contains(&w) || !state.observed_referents.contains(&r) {
                return Err(Error::InvalidConfig(format!(
                    "cell ({w}, {r}) is outside the registries"
                )));
            }
            state.assoc.rows.entry(w).or_default().cells.insert(r, v);
        }
        for (w, sum) in snap.row_sums {
            match state.assoc.rows.get_mut(&w) {
                Some(row) => row.sum = sum,
                None => return Err(Error::InvalidConfig(format!("row sum for empty row `{w}`"))),
            }
        }
        Ok(state)
    }
}
