//! The interchangeable pieces of a learner.
//!
//! A learner is one in-the-moment [`AlignmentRule`] (how a single
//! utterance–scene pair distributes credit) combined with one
//! [`MeaningRepresentation`] (how accumulated association scores become
//! word meanings). Three rules times two representations give six models,
//! all registered in [`ModelRegistry::global`] and selectable by name.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::InputPair;
use crate::error::{Error, Result};
use crate::lexicon::{Referent, Word};

/// Additive smoothing that realizes a uniform prior over referents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Smoothing {
    pub lambda: f64,
    /// Upper bound on the number of distinct referents a learner may see.
    pub beta: u32,
}

impl Default for Smoothing {
    fn default() -> Self {
        Self {
            lambda: 0.01,
            beta: 100,
        }
    }
}

impl Smoothing {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "lambda must be > 0, got {}",
                self.lambda
            )));
        }
        if self.beta == 0 {
            return Err(Error::InvalidConfig("beta must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlignmentKind {
    /// a(w,r): each alignment is the raw meaning value; nothing competes.
    Joint,
    /// a(w|r): words in the utterance compete for each referent.
    WordCompetition,
    /// a(r|w): referents in the scene compete for each word.
    ReferentCompetition,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepresentationKind {
    /// p(w,r): the association score itself.
    Joint,
    /// p(r|w): association scores normalized over every observed referent.
    ReferentConditional,
}

/// Alignment values for the cells of one pair's utterance × scene.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentTable {
    words: Vec<Word>,
    referents: Vec<Referent>,
    // row-major: words × referents
    values: Vec<f64>,
}

impl AlignmentTable {
    fn with_values(pair: &InputPair, mut f: impl FnMut(&Word, &Referent) -> f64) -> Self {
        let words: Vec<Word> = pair.utterance.iter().cloned().collect();
        let referents: Vec<Referent> = pair.scene.iter().cloned().collect();
        let mut values = Vec::with_capacity(words.len() * referents.len());
        for w in &words {
            for r in &referents {
                values.push(f(w, r));
            }
        }
        Self {
            words,
            referents,
            values,
        }
    }

    pub fn words(&self) -> &[Word] {
        &self.words
    }

    pub fn referents(&self) -> &[Referent] {
        &self.referents
    }

    pub fn get(&self, w: &Word, r: &Referent) -> Option<f64> {
        let i = self.words.iter().position(|x| x == w)?;
        let j = self.referents.iter().position(|x| x == r)?;
        Some(self.values[i * self.referents.len() + j])
    }

    /// `(word, referent, value)` for every cell, words outermost.
    pub fn iter(&self) -> impl Iterator<Item = (&Word, &Referent, f64)> + '_ {
        let n = self.referents.len();
        self.values
            .iter()
            .enumerate()
            .map(move |(k, &v)| (&self.words[k / n], &self.referents[k % n], v))
    }

    /// Σ over words of the cells in column `r`.
    pub fn column_sum(&self, r: &Referent) -> Option<f64> {
        let j = self.referents.iter().position(|x| x == r)?;
        let n = self.referents.len();
        Some((0..self.words.len()).map(|i| self.values[i * n + j]).sum())
    }

    /// Σ over referents of the cells in row `w`.
    pub fn row_sum(&self, w: &Word) -> Option<f64> {
        let i = self.words.iter().position(|x| x == w)?;
        let n = self.referents.len();
        Some(self.values[i * n..(i + 1) * n].iter().sum())
    }
}

/// The current meaning value θ(w, r) as seen by an alignment rule.
pub type ThetaFn<'a> = dyn Fn(&Word, &Referent) -> f64 + 'a;

/// How one input pair distributes credit among its word–referent cells.
pub trait AlignmentRule: Send + Sync {
    fn kind(&self) -> AlignmentKind;

    /// Short notation, e.g. `a(w|r)`.
    fn notation(&self) -> &'static str;

    fn align(&self, theta: &ThetaFn<'_>, pair: &InputPair) -> AlignmentTable;
}

/// How accumulated association scores turn into meaning values.
pub trait MeaningRepresentation: Send + Sync {
    fn kind(&self) -> RepresentationKind;

    /// Short notation, e.g. `p(r|w)`.
    fn notation(&self) -> &'static str;

    /// θ for a cell holding `assoc`, in a row whose scores sum to `row_sum`.
    fn theta(&self, assoc: f64, row_sum: f64, smoothing: &Smoothing) -> f64;

    /// Divisor that puts θ on a probability scale for reporting.
    fn reporting_normalizer(&self, row_sum: f64, smoothing: &Smoothing) -> f64;
}

pub struct NoBiasAlignment;
pub struct WordCompetition;
pub struct ReferentCompetition;

impl AlignmentRule for NoBiasAlignment {
    fn kind(&self) -> AlignmentKind {
        AlignmentKind::Joint
    }
    fn notation(&self) -> &'static str {
        "a(w,r)"
    }
    fn align(&self, theta: &ThetaFn<'_>, pair: &InputPair) -> AlignmentTable {
        AlignmentTable::with_values(pair, theta)
    }
}

impl AlignmentRule for WordCompetition {
    fn kind(&self) -> AlignmentKind {
        AlignmentKind::WordCompetition
    }
    fn notation(&self) -> &'static str {
        "a(w|r)"
    }
    fn align(&self, theta: &ThetaFn<'_>, pair: &InputPair) -> AlignmentTable {
        let mut table = AlignmentTable::with_values(pair, theta);
        let n = table.referents.len();
        for j in 0..n {
            let total: f64 = (0..table.words.len())
                .map(|i| table.values[i * n + j])
                .sum();
            for i in 0..table.words.len() {
                table.values[i * n + j] /= total;
            }
        }
        table
    }
}

impl AlignmentRule for ReferentCompetition {
    fn kind(&self) -> AlignmentKind {
        AlignmentKind::ReferentCompetition
    }
    fn notation(&self) -> &'static str {
        "a(r|w)"
    }
    fn align(&self, theta: &ThetaFn<'_>, pair: &InputPair) -> AlignmentTable {
        let mut table = AlignmentTable::with_values(pair, theta);
        for row in table.values.chunks_mut(pair.scene.len()) {
            let total: f64 = row.iter().sum();
            for v in row {
                *v /= total;
            }
        }
        table
    }
}

pub struct JointRepresentation;
pub struct ReferentConditional;

impl MeaningRepresentation for JointRepresentation {
    fn kind(&self) -> RepresentationKind {
        RepresentationKind::Joint
    }
    fn notation(&self) -> &'static str {
        "p(w,r)"
    }
    fn theta(&self, assoc: f64, _row_sum: f64, s: &Smoothing) -> f64 {
        assoc + s.lambda / s.beta as f64
    }
    fn reporting_normalizer(&self, row_sum: f64, s: &Smoothing) -> f64 {
        // Σ over all β referent slots of (assoc + λ/β)
        row_sum + s.lambda
    }
}

impl MeaningRepresentation for ReferentConditional {
    fn kind(&self) -> RepresentationKind {
        RepresentationKind::ReferentConditional
    }
    fn notation(&self) -> &'static str {
        "p(r|w)"
    }
    fn theta(&self, assoc: f64, row_sum: f64, s: &Smoothing) -> f64 {
        (assoc + s.lambda) / (row_sum + s.beta as f64 * s.lambda)
    }
    fn reporting_normalizer(&self, _row_sum: f64, _s: &Smoothing) -> f64 {
        1.0
    }
}

static NO_BIAS: NoBiasAlignment = NoBiasAlignment;
static WORD_COMPETITION: WordCompetition = WordCompetition;
static REFERENT_COMPETITION: ReferentCompetition = ReferentCompetition;
static JOINT: JointRepresentation = JointRepresentation;
static CONDITIONAL: ReferentConditional = ReferentConditional;

impl AlignmentKind {
    pub fn rule(self) -> &'static dyn AlignmentRule {
        match self {
            AlignmentKind::Joint => &NO_BIAS,
            AlignmentKind::WordCompetition => &WORD_COMPETITION,
            AlignmentKind::ReferentCompetition => &REFERENT_COMPETITION,
        }
    }
}

impl RepresentationKind {
    pub fn representation(self) -> &'static dyn MeaningRepresentation {
        match self {
            RepresentationKind::Joint => &JOINT,
            RepresentationKind::ReferentConditional => &CONDITIONAL,
        }
    }
}

/// Stable identifier of one of the six models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ModelId {
    pub alignment: AlignmentKind,
    pub representation: RepresentationKind,
}

impl ModelId {
    pub const fn new(alignment: AlignmentKind, representation: RepresentationKind) -> Self {
        Self {
            alignment,
            representation,
        }
    }

    /// Identifier used in files and on the command line, e.g. `awgr_prgw`.
    pub fn slug(&self) -> &'static str {
        ModelRegistry::global().entry(*self).slug
    }

    /// Notation such as `a(w|r)p(r|w)`.
    pub fn notation(&self) -> &'static str {
        ModelRegistry::global().entry(*self).notation
    }

    /// 1-based row in the canonical model table.
    pub fn ordinal(&self) -> usize {
        ModelRegistry::global().position(*self) + 1
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

impl FromStr for ModelId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ModelRegistry::global().lookup(s)
    }
}

impl TryFrom<String> for ModelId {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ModelId> for String {
    fn from(m: ModelId) -> String {
        m.slug().to_string()
    }
}

pub struct ModelEntry {
    pub id: ModelId,
    pub slug: &'static str,
    pub notation: &'static str,
    pub alignment: &'static dyn AlignmentRule,
    pub representation: &'static dyn MeaningRepresentation,
}

/// Name-addressable table of every alignment × representation combination.
pub struct ModelRegistry {
    entries: Vec<ModelEntry>,
}

impl ModelRegistry {
    pub fn global() -> &'static ModelRegistry {
        static REGISTRY: std::sync::OnceLock<ModelRegistry> = std::sync::OnceLock::new();
        REGISTRY.get_or_init(|| {
            use AlignmentKind as A;
            use RepresentationKind as R;
            let rows: [(A, R, &'static str, &'static str); 6] = [
                (A::Joint, R::Joint, "awr_pwr", "a(w,r)p(w,r)"),
                (A::WordCompetition, R::Joint, "awgr_pwr", "a(w|r)p(w,r)"),
                (A::ReferentCompetition, R::Joint, "argw_pwr", "a(r|w)p(w,r)"),
                (A::Joint, R::ReferentConditional, "awr_prgw", "a(w,r)p(r|w)"),
                (
                    A::WordCompetition,
                    R::ReferentConditional,
                    "awgr_prgw",
                    "a(w|r)p(r|w)",
                ),
                (
                    A::ReferentCompetition,
                    R::ReferentConditional,
                    "argw_prgw",
                    "a(r|w)p(r|w)",
                ),
            ];
            let entries = rows
                .into_iter()
                .map(|(a, r, slug, notation)| ModelEntry {
                    id: ModelId::new(a, r),
                    slug,
                    notation,
                    alignment: a.rule(),
                    representation: r.representation(),
                })
                .collect();
            ModelRegistry { entries }
        })
    }

    pub fn entries(&self) -> &[ModelEntry] {
        &self.entries
    }

    pub fn ids(&self) -> impl Iterator<Item = ModelId> + '_ {
        self.entries.iter().map(|e| e.id)
    }

    fn position(&self, id: ModelId) -> usize {
        self.entries
            .iter()
            .position(|e| e.id == id)
            .expect("every alignment × representation pair is registered")
    }

    pub fn entry(&self, id: ModelId) -> &ModelEntry {
        &self.entries[self.position(id)]
    }

    /// Finds a model by slug, by notation, or by its 1-based table row.
    pub fn lookup(&self, name: &str) -> Result<ModelId> {
        let name = name.trim();
        if let Ok(n) = name.parse::<usize>() {
            if (1..=self.entries.len()).contains(&n) {
                return Ok(self.entries[n - 1].id);
            }
        }
        self.entries
            .iter()
            .find(|e| e.slug == name || e.notation == name)
            .map(|e| e.id)
            .ok_or_else(|| Error::UnknownModel(name.to_string()))
    }
}

/// A model plus its smoothing parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub alignment: AlignmentKind,
    pub representation: RepresentationKind,
    pub lambda: f64,
    pub beta: u32,
}

impl ModelConfig {
    pub fn new(id: ModelId, smoothing: Smoothing) -> Self {
        Self {
            alignment: id.alignment,
            representation: id.representation,
            lambda: smoothing.lambda,
            beta: smoothing.beta,
        }
    }

    pub fn id(&self) -> ModelId {
        ModelId::new(self.alignment, self.representation)
    }

    pub fn smoothing(&self) -> Smoothing {
        Smoothing {
            lambda: self.lambda,
            beta: self.beta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.smoothing().validate()
    }

    pub fn alignment_rule(&self) -> &'static dyn AlignmentRule {
        self.alignment.rule()
    }

    pub fn meaning_representation(&self) -> &'static dyn MeaningRepresentation {
        self.representation.representation()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(u: &[&str], s: &[&str]) -> InputPair {
        InputPair::new(
            u.iter().map(|x| Word::new(*x).unwrap()),
            s.iter().map(|x| Referent::new(*x).unwrap()),
        )
        .unwrap()
    }

    #[test]
    fn registry_enumerates_six_models_in_table_order() {
        let reg = ModelRegistry::global();
        let notations: Vec<_> = reg.entries().iter().map(|e| e.notation).collect();
        assert_eq!(
            notations,
            [
                "a(w,r)p(w,r)",
                "a(w|r)p(w,r)",
                "a(r|w)p(w,r)",
                "a(w,r)p(r|w)",
                "a(w|r)p(r|w)",
                "a(r|w)p(r|w)"
            ]
        );
        for e in reg.entries() {
            assert_eq!(
                format!("{}{}", e.alignment.notation(), e.representation.notation()),
                e.notation
            );
            assert_eq!(reg.lookup(e.slug).unwrap(), e.id);
            assert_eq!(reg.lookup(e.notation).unwrap(), e.id);
        }
        assert_eq!(reg.lookup("5").unwrap().slug(), "awgr_prgw");
        assert!(matches!(reg.lookup("7"), Err(Error::UnknownModel(_))));
        assert!(reg.lookup("fas").is_err());
    }

    #[test]
    fn model_id_serializes_as_slug() {
        let id = ModelId::new(AlignmentKind::WordCompetition, RepresentationKind::Joint);
        assert_eq!(serde_json::to_string(&id).unwrap(), "\"awgr_pwr\"");
        let back: ModelId = serde_json::from_str("\"a(w|r)p(w,r)\"").unwrap();
        assert_eq!(back, id);
    }

    #[test]
    fn smoothing_must_be_positive() {
        assert!(Smoothing {
            lambda: 0.0,
            beta: 10
        }
        .validate()
        .is_err());
        assert!(Smoothing {
            lambda: 0.1,
            beta: 0
        }
        .validate()
        .is_err());
        assert!(Smoothing::default().validate().is_ok());
    }

    #[test]
    fn competition_rules_normalize() {
        let p = pair(&["a", "b", "c"], &["A", "B"]);
        let theta = |w: &Word, r: &Referent| {
            (w.as_str().len() + r.as_str().as_bytes()[0] as usize) as f64 * 0.1
        };
        let wc = WordCompetition.align(&theta, &p);
        for r in wc.referents() {
            assert!((wc.column_sum(r).unwrap() - 1.0).abs() < 1e-12);
        }
        let rc = ReferentCompetition.align(&theta, &p);
        for w in rc.words() {
            assert!((rc.row_sum(w).unwrap() - 1.0).abs() < 1e-12);
        }
        let nb = NoBiasAlignment.align(&theta, &p);
        for (w, r, v) in nb.iter() {
            assert_eq!(v, theta(w, r));
        }
    }

    #[test]
    fn uniform_prior_under_both_representations() {
        let s = Smoothing::default();
        assert!((ReferentConditional.theta(0.0, 0.0, &s) - 0.01).abs() < 1e-15);
        assert!((JointRepresentation.theta(0.0, 0.0, &s) - 1e-4).abs() < 1e-18);
        let j = JointRepresentation;
        assert!((j.theta(0.0, 0.0, &s) / j.reporting_normalizer(0.0, &s) - 0.01).abs() < 1e-15);
    }
}
