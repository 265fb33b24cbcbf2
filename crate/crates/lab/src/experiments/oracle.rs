use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use xsl_core::oracle::batch_em_trace;
use xsl_core::synth::{generate_synthetic_corpus, CorpusSpec};
use xsl_core::{AlignmentKind, Corpus, GoldLexicon, ModelId, RepresentationKind};

use super::{train, Exec};
use crate::config::ExperimentConfig;
use crate::error::{LabError, LabResult};
use crate::table::Table;

pub const AGREEMENT_COLUMNS: [&str; 10] = [
    "model",
    "corpus",
    "seed",
    "corpus_seed",
    "word",
    "occurrences",
    "oracle",
    "learner",
    "agree",
    "counted",
];

pub const LIKELIHOOD_COLUMNS: [&str; 3] = ["seed", "iteration", "log_likelihood"];

/// Agreement summary for one seeded corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSeed {
    pub seed: u64,
    /// Generator seed of the corpus actually used.
    pub corpus_seed: u64,
    pub compared: usize,
    pub agreed: usize,
    /// False when the lexicon maps some word to several referents; the
    /// oracle only models p(r|w), so disagreement there is expected.
    pub one_to_one: bool,
    /// Largest drop in log-likelihood between consecutive iterations.
    pub worst_ll_drop: f64,
}

impl OracleSeed {
    pub fn agreement(&self) -> f64 {
        if self.compared == 0 {
            1.0
        } else {
            self.agreed as f64 / self.compared as f64
        }
    }

    /// No word reached the occurrence threshold.
    pub fn low_evidence(&self) -> bool {
        self.compared == 0
    }

    pub fn passed(&self) -> bool {
        self.worst_ll_drop <= 1e-9 && (!self.one_to_one || self.agreed == self.compared)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub agreement: Table,
    pub likelihood: Table,
    pub seeds: Vec<OracleSeed>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.seeds.iter().all(OracleSeed::passed)
    }
}

/// Draws before giving up on finding an unambiguous corpus.
pub const MAX_DRAWS: usize = 1000;

/// The first unambiguous corpus among generator seeds `seed`, then a
/// ChaCha stream seeded by `seed`.
fn unambiguous_corpus(
    spec: &CorpusSpec,
    seed: u64,
    min_occurrences: usize,
) -> LabResult<(u64, Corpus, GoldLexicon)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = seed;
    for _ in 0..MAX_DRAWS {
        let (corpus, gold) = generate_synthetic_corpus(&CorpusSpec {
            seed: draw,
            ..spec.clone()
        })?;
        if corpus.is_unambiguous(min_occurrences) {
            return Ok((draw, corpus, gold));
        }
        draw = rng.next_u64();
    }
    Err(LabError::Config(format!(
        "oracle: no unambiguous corpus in {MAX_DRAWS} draws for seed {seed}"
    )))
}

/// Compares the batch EM argmax with the incremental word-competition,
/// referent-conditional learner on small seeded corpora in which every
/// compared word has a single cross-situational candidate referent.
pub fn run_oracle_check(config: &ExperimentConfig, exec: Exec) -> LabResult<OracleReport> {
    let o = &config.oracle;
    let id = ModelId::new(
        AlignmentKind::WordCompetition,
        RepresentationKind::ReferentConditional,
    );
    let per_seed = exec.map(&config.seeds, |&seed| {
        let (corpus_seed, corpus, gold) = unambiguous_corpus(&o.corpus, seed, o.min_occurrences)?;
        let (batch, ll) = batch_em_trace(&corpus, o.iterations)?;
        let state = train(id, config.smoothing, &corpus)?;

        let mut agreement = Table::new(&AGREEMENT_COLUMNS);
        let (mut compared, mut agreed) = (0, 0);
        for (word, &n) in &corpus.word_counts() {
            let ours = batch.best_referent(word).cloned();
            let theirs = state.best_referent(word);
            let agree = ours == theirs;
            let counted = n >= o.min_occurrences;
            if counted {
                compared += 1;
                agreed += usize::from(agree);
            }
            let show = |r: Option<xsl_core::Referent>| r.map(|r| r.to_string()).unwrap_or_default();
            agreement.push(vec![
                id.slug().into(),
                corpus.provenance().as_str().into(),
                seed.into(),
                corpus_seed.into(),
                word.as_str().into(),
                n.into(),
                show(ours).into(),
                show(theirs).into(),
                agree.into(),
                counted.into(),
            ]);
        }
        let mut likelihood = Table::new(&LIKELIHOOD_COLUMNS);
        for (i, v) in ll.iter().enumerate() {
            likelihood.push(vec![seed.into(), i.into(), (*v).into()]);
        }
        let worst_ll_drop = ll
            .windows(2)
            .map(|w| w[0] - w[1])
            .fold(f64::NEG_INFINITY, f64::max);
        let summary = OracleSeed {
            seed,
            corpus_seed,
            compared,
            agreed,
            one_to_one: gold.iter().all(|(_, refs)| refs.len() == 1),
            worst_ll_drop,
        };
        Ok((agreement, likelihood, summary))
    })?;

    let mut report = OracleReport {
        agreement: Table::new(&AGREEMENT_COLUMNS),
        likelihood: Table::new(&LIKELIHOOD_COLUMNS),
        seeds: Vec::new(),
    };
    for (a, l, s) in per_seed {
        report.agreement.extend(a);
        report.likelihood.extend(l);
        report.seeds.push(s);
    }
    Ok(report)
}
