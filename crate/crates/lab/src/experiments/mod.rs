//! The experiment protocols. Each run fans out over independent
//! (model, seed) cells and merges their rows in (model, seed) order, so
//! serial and parallel execution give identical tables.

mod corpora;
mod oracle;
mod probes;

use rayon::prelude::*;
use xsl_core::{Checkpoint, Corpus, LearnerState, ModelConfig, ModelId, Smoothing};

use crate::error::LabResult;
use crate::table::Table;

pub use corpora::{run_curve, run_frequency, run_uncertainty};
pub use oracle::{run_oracle_check, OracleReport, OracleSeed};
pub use probes::{run_homonym, run_synonym};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    #[default]
    Parallel,
    Serial,
}

impl Exec {
    /// `f` over `items`; results keep the order of `items`.
    pub fn map<T, U, F>(self, items: &[T], f: F) -> LabResult<Vec<U>>
    where
        T: Sync,
        U: Send,
        F: Fn(&T) -> LabResult<U> + Sync + Send,
    {
        match self {
            Exec::Parallel => items.par_iter().map(f).collect(),
            Exec::Serial => items.iter().map(f).collect(),
        }
    }
}

/// Every (model, seed) combination, model-major.
fn cells(models: &[ModelId], seeds: &[u64]) -> Vec<(ModelId, usize)> {
    models
        .iter()
        .flat_map(|&m| (0..seeds.len()).map(move |s| (m, s)))
        .collect()
}

fn train(id: ModelId, smoothing: Smoothing, corpus: &Corpus) -> LabResult<LearnerState> {
    let mut s = LearnerState::new(ModelConfig::new(id, smoothing))?;
    s.train_all(corpus)?;
    Ok(s)
}

fn train_with<P>(
    id: ModelId,
    smoothing: Smoothing,
    corpus: &Corpus,
    every: usize,
    hook: impl FnMut(&LearnerState) -> P,
) -> LabResult<(LearnerState, Vec<Checkpoint<P>>)> {
    let mut s = LearnerState::new(ModelConfig::new(id, smoothing))?;
    let cps = s.train(corpus, every, hook)?;
    Ok((s, cps))
}

fn concat(parts: Vec<Table>, columns: &[&str]) -> Table {
    let mut all = Table::new(columns);
    for t in parts {
        all.extend(t);
    }
    all
}
