//! Experiment configuration, read from a versioned JSON document.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use xsl_core::eval::{Band, FrequencyBands};
use xsl_core::synth::{generate_synthetic_corpus, CorpusSpec, LengthSpec};
use xsl_core::{Corpus, Format, GoldLexicon, ModelId, ModelRegistry, Smoothing};

use crate::error::{LabError, LabResult};

pub const SCHEMA_VERSION: u32 = 1;

/// Where the source corpus comes from. Experiments train on the base
/// subsample (every third pair) unless they say otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorpusSource {
    /// Generated per run seed, which replaces the seed field here.
    Synthetic(CorpusSpec),
    File {
        path: PathBuf,
        format: FileFormat,
        lexicon: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FileFormat {
    Pairs,
    Jsonl,
}

impl From<FileFormat> for Format {
    fn from(f: FileFormat) -> Self {
        match f {
            FileFormat::Pairs => Format::PairsText,
            FileFormat::Jsonl => Format::Jsonl,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HomonymConfig {
    pub training_cutoff: usize,
    pub n_trials: usize,
    /// Bands over occurrence counts in the training prefix.
    pub bands: Vec<Band>,
    pub words_per_band: usize,
    /// Explicit probe words; replaces the per-band selection.
    pub words: Option<Vec<String>>,
}

impl Default for HomonymConfig {
    fn default() -> Self {
        Self {
            training_cutoff: 1000,
            n_trials: 10,
            bands: vec![
                Band::new("low", 0, Some(4)),
                Band::new("mid", 5, Some(20)),
                Band::new("high", 21, None),
            ],
            words_per_band: 4,
            words: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynonymConfig {
    pub training_cutoff: usize,
    pub n_trials: usize,
    pub simulations: usize,
    /// The target referent is the gold meaning of the median word, by
    /// training-prefix count, among words in this range.
    pub target_band: Band,
    /// Explicit target referent; replaces the band selection.
    pub target: Option<String>,
}

impl Default for SynonymConfig {
    fn default() -> Self {
        Self {
            training_cutoff: 1000,
            n_trials: 10,
            simulations: 20,
            target_band: Band::new("high", 21, None),
            target: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleConfig {
    pub corpus: CorpusSpec,
    pub iterations: usize,
    /// Words seen fewer times are reported but not counted.
    pub min_occurrences: usize,
}

pub const ORACLE_MAX_PAIRS: usize = 100;

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            corpus: CorpusSpec {
                n_pairs: 20,
                word_vocab: 8,
                utterance_len: LengthSpec {
                    min: 1,
                    max: 3,
                    mean: 2.0,
                },
                zipf_exponent: 0.75,
                seed: 1,
            },
            iterations: 3,
            min_occurrences: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    #[serde(default = "default_corpus")]
    pub corpus: CorpusSource,
    #[serde(default = "all_models")]
    pub models: Vec<ModelId>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_checkpoint")]
    pub checkpoint_every: usize,
    #[serde(default = "default_smoothing")]
    pub smoothing: Smoothing,
    #[serde(default)]
    pub bands: FrequencyBands,
    #[serde(default)]
    pub homonym: HomonymConfig,
    #[serde(default)]
    pub synonym: SynonymConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
}

fn default_corpus() -> CorpusSource {
    CorpusSource::Synthetic(CorpusSpec::default())
}
fn all_models() -> Vec<ModelId> {
    ModelRegistry::global().ids().collect()
}
fn default_seeds() -> Vec<u64> {
    vec![1, 2, 3, 4, 5]
}
fn default_checkpoint() -> usize {
    100
}
/// β must cover the 8000-referent default vocabulary; a small λ keeps the
/// prior from swamping the few observations of rare words.
fn default_smoothing() -> Smoothing {
    Smoothing {
        lambda: 1e-4,
        beta: 10_000,
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            version: SCHEMA_VERSION,
            corpus: default_corpus(),
            models: all_models(),
            seeds: default_seeds(),
            checkpoint_every: default_checkpoint(),
            smoothing: default_smoothing(),
            bands: FrequencyBands::default(),
            homonym: HomonymConfig::default(),
            synonym: SynonymConfig::default(),
            oracle: OracleConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> LabResult<Self> {
        let file =
            File::open(path).map_err(|e| LabError::Config(format!("{}: {e}", path.display())))?;
        let config: Self = serde_json::from_reader(BufReader::new(file))
            .map_err(|e| LabError::Config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> LabResult<()> {
        let bad = |m: String| Err(LabError::Config(m));
        if self.version != SCHEMA_VERSION {
            return bad(format!(
                "schema version {} is not supported (expected {SCHEMA_VERSION})",
                self.version
            ));
        }
        if self.models.is_empty() {
            return bad("at least one model is required".into());
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required".into());
        }
        if self.checkpoint_every == 0 {
            return bad("checkpoint_every must be at least 1".into());
        }
        self.smoothing
            .validate()
            .map_err(|e| LabError::Config(e.to_string()))?;
        if let CorpusSource::Synthetic(spec) = &self.corpus {
            spec.validate()
                .map_err(|e| LabError::Config(e.to_string()))?;
            if spec.word_vocab > self.smoothing.beta as usize {
                return bad(format!(
                    "beta = {} is below the synthetic vocabulary of {} referents",
                    self.smoothing.beta, spec.word_vocab
                ));
            }
        }
        FrequencyBands::new(self.homonym.bands.clone())
            .map_err(|e| LabError::Config(format!("homonym: {e}")))?;
        for (name, cutoff, trials) in [
            (
                "homonym",
                self.homonym.training_cutoff,
                self.homonym.n_trials,
            ),
            (
                "synonym",
                self.synonym.training_cutoff,
                self.synonym.n_trials,
            ),
        ] {
            if cutoff == 0 || trials == 0 {
                return bad(format!(
                    "{name}: training_cutoff and n_trials must be at least 1"
                ));
            }
        }
        if self.synonym.simulations == 0 {
            return bad("synonym: simulations must be at least 1".into());
        }
        let o = &self.oracle;
        if o.corpus.n_pairs > ORACLE_MAX_PAIRS {
            return bad(format!(
                "oracle: corpus has {} pairs; the batch check is limited to {ORACLE_MAX_PAIRS}",
                o.corpus.n_pairs
            ));
        }
        o.corpus
            .validate()
            .map_err(|e| LabError::Config(format!("oracle: {e}")))?;
        if o.iterations == 0 {
            return bad("oracle: iterations must be at least 1".into());
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&bytes)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    /// Source corpus and lexicon for `seed`.
    pub fn source(&self, seed: u64) -> LabResult<(Corpus, GoldLexicon)> {
        match &self.corpus {
            CorpusSource::Synthetic(spec) => {
                let spec = CorpusSpec {
                    seed,
                    ..spec.clone()
                };
                Ok(generate_synthetic_corpus(&spec)?)
            }
            CorpusSource::File {
                path,
                format,
                lexicon,
            } => {
                let open = |p: &Path| {
                    File::open(p)
                        .map(BufReader::new)
                        .map_err(|e| LabError::Config(format!("{}: {e}", p.display())))
                };
                let corpus = Corpus::load(open(path)?, (*format).into())?;
                let gold = GoldLexicon::read(open(lexicon)?)?;
                Ok((corpus, gold))
            }
        }
    }

    /// Base subsample of the source corpus for `seed`.
    pub fn base(&self, seed: u64) -> LabResult<(Corpus, GoldLexicon)> {
        let (source, gold) = self.source(seed)?;
        Ok((source.subsample_every_third()?, gold))
    }

    pub fn homonym_bands(&self) -> FrequencyBands {
        FrequencyBands::new(self.homonym.bands.clone()).expect("validated")
    }
}
