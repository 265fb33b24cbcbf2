//! Incremental cross-situational word learning.
//!
//! Six learners are assembled from three in-the-moment alignment rules and
//! two meaning representations (see [`model`]). They consume corpora of
//! utterance–scene pairs ([`corpus`], [`synth`]), are scored against a gold
//! lexicon ([`eval`]), and can be checked against a batch EM reference
//! ([`oracle`]).

pub mod corpus;
pub mod error;
pub mod eval;
pub mod learner;
pub mod lexicon;
pub mod model;
pub mod oracle;
pub mod probe;
pub mod synth;

pub use corpus::{Corpus, Format, InputPair, Provenance, SymbolSet};
pub use error::{Error, Result};
pub use learner::{AssocTable, Checkpoint, LearnerState};
pub use lexicon::{GoldLexicon, Referent, Word};
pub use model::{
    AlignmentKind, AlignmentRule, AlignmentTable, MeaningRepresentation, ModelConfig, ModelId,
    ModelRegistry, RepresentationKind, Smoothing,
};
