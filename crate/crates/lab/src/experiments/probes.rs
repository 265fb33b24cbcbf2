use std::collections::BTreeSet;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use xsl_core::eval::comprehension_against;
use xsl_core::probe::{
    build_homonym_trials, build_synonym_trials, select_by_frequency, TrialSource,
};
use xsl_core::{Corpus, GoldLexicon, LearnerState, Referent, Word};

use super::{cells, concat, train, Exec};
use crate::config::ExperimentConfig;
use crate::error::{LabError, LabResult};
use crate::table::Table;

pub const HOMONYM_COLUMNS: [&str; 9] = [
    "model",
    "corpus",
    "seed",
    "band",
    "word",
    "trial",
    "meaning",
    "probability",
    "comprehension",
];

pub const SYNONYM_COLUMNS: [&str; 7] = [
    "model",
    "corpus",
    "seed",
    "simulations",
    "trial",
    "label",
    "probability",
];

struct Probe {
    band: String,
    word: Word,
    first: BTreeSet<Referent>,
    second: Referent,
    trials: Vec<xsl_core::InputPair>,
}

fn probability_of(state: &LearnerState, w: &Word, meaning: &BTreeSet<Referent>) -> f64 {
    meaning
        .iter()
        .map(|r| state.meaning_probability(w, r))
        .sum()
}

fn homonym_probes(config: &ExperimentConfig, seed: u64) -> LabResult<(Corpus, Vec<Probe>)> {
    let h = &config.homonym;
    let (base, gold) = config.base(seed)?;
    let counts = base.prefix(h.training_cutoff).word_counts();
    let bands = config.homonym_bands();
    let chosen: Vec<(String, Word)> = match &h.words {
        Some(words) => words
            .iter()
            .map(|s| {
                let w = Word::plain(s.as_str())?;
                let c = counts.get(&w).copied().unwrap_or(0);
                Ok((bands.band_of(c).label.clone(), w))
            })
            .collect::<LabResult<_>>()?,
        None => {
            let picked = select_by_frequency(&counts, bands.bands(), h.words_per_band);
            bands
                .bands()
                .iter()
                .flat_map(|b| {
                    picked[&b.label]
                        .iter()
                        .map(|w| (b.label.clone(), w.clone()))
                })
                .collect()
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let source = |context_seed| TrialSource {
        corpus: &base,
        cutoff: h.training_cutoff,
        context_seed,
    };
    let probes = chosen
        .into_iter()
        .map(|(band, word)| {
            let second = Referent::novel(&format!("{}-2", word.as_str().to_uppercase()))?;
            let trials =
                build_homonym_trials(source(rng.next_u64()), &word, &second, h.n_trials, &gold)?;
            let first = gold
                .get(&word)
                .cloned()
                .ok_or_else(|| xsl_core::Error::MissingEntry(word.to_string()))?;
            Ok(Probe {
                band,
                word,
                first,
                second,
                trials,
            })
        })
        .collect::<LabResult<Vec<_>>>()?;
    Ok((base.prefix(h.training_cutoff), probes))
}

/// Trains each model on the first `training_cutoff` base pairs, then feeds
/// each probe word's trials as ordinary input, recording the probability
/// and comprehension of the word's first and new meaning after each trial.
pub fn run_homonym(config: &ExperimentConfig, exec: Exec) -> LabResult<Table> {
    let data = exec.map(&config.seeds, |&seed| homonym_probes(config, seed))?;
    let parts = exec.map(&cells(&config.models, &config.seeds), |&(id, si)| {
        let (training, probes) = &data[si];
        let trained = train(id, config.smoothing, training)?;
        let mut t = Table::new(&HOMONYM_COLUMNS);
        for p in probes {
            let mut state = trained.clone();
            let second = BTreeSet::from([p.second.clone()]);
            for trial in 0..=p.trials.len() {
                if trial > 0 {
                    state.update(&p.trials[trial - 1])?;
                }
                for (name, meaning) in [("first", &p.first), ("second", &second)] {
                    t.push(vec![
                        id.slug().into(),
                        training.provenance().as_str().into(),
                        config.seeds[si].into(),
                        p.band.as_str().into(),
                        p.word.as_str().into(),
                        trial.into(),
                        name.into(),
                        probability_of(&state, &p.word, meaning).into(),
                        comprehension_against(&state, &p.word, meaning).into(),
                    ]);
                }
            }
        }
        Ok(t)
    })?;
    Ok(concat(parts, &HOMONYM_COLUMNS))
}

struct Simulation {
    training: Corpus,
    first_label: Word,
    target: Referent,
    trials: Vec<xsl_core::InputPair>,
}

fn synonym_target(
    config: &ExperimentConfig,
    training: &Corpus,
    gold: &GoldLexicon,
) -> LabResult<Referent> {
    let s = &config.synonym;
    if let Some(t) = &s.target {
        return Ok(Referent::plain(t.as_str())?);
    }
    let counts = training.word_counts();
    let mut members: Vec<(usize, &Word)> = counts
        .iter()
        .filter(|(_, &c)| c > 0 && s.target_band.contains(c))
        .map(|(w, &c)| (c, w))
        .collect();
    members.sort();
    let (_, word) = members.get(members.len() / 2).ok_or_else(|| {
        LabError::Config(format!(
            "synonym: no word in the first {} pairs falls in band `{}`",
            s.training_cutoff, s.target_band.label
        ))
    })?;
    let refs = gold
        .get(word)
        .ok_or_else(|| xsl_core::Error::MissingEntry(word.to_string()))?;
    Ok(refs
        .iter()
        .next()
        .expect("gold entries are non-empty")
        .clone())
}

fn simulation(config: &ExperimentConfig, sim_seed: u64) -> LabResult<Simulation> {
    let s = &config.synonym;
    let (base, gold) = config.base(sim_seed)?;
    let training = base.prefix(s.training_cutoff);
    let target = synonym_target(config, &training, &gold)?;
    let first_label = gold
        .labels_of(&target)
        .first()
        .map(|w| (*w).clone())
        .ok_or_else(|| {
            LabError::Config(format!("synonym: referent `{target}` has no gold label"))
        })?;
    let novel = Word::novel("dax")?;
    let source = TrialSource {
        corpus: &base,
        cutoff: s.training_cutoff,
        context_seed: sim_seed,
    };
    let trials = build_synonym_trials(source, &novel, &target, s.n_trials, &gold)?;
    Ok(Simulation {
        training,
        first_label,
        target,
        trials,
    })
}

/// Mean probability of the target referent under its existing label and a
/// new label, per trial, over `simulations` runs with consecutive seeds
/// starting at the first configured seed.
pub fn run_synonym(config: &ExperimentConfig, exec: Exec) -> LabResult<Table> {
    let s = &config.synonym;
    let first_seed = config.seeds[0];
    let sim_seeds: Vec<u64> = (0..s.simulations as u64)
        .map(|k| first_seed.wrapping_add(k))
        .collect();
    let sims = exec.map(&sim_seeds, |&seed| simulation(config, seed))?;
    let novel = Word::novel("dax")?;

    // per cell: (first, second) probability at each trial index
    let runs = exec.map(&cells(&config.models, &sim_seeds), |&(id, k)| {
        let sim = &sims[k];
        let mut state = train(id, config.smoothing, &sim.training)?;
        let mut curve = Vec::with_capacity(sim.trials.len() + 1);
        for trial in 0..=sim.trials.len() {
            if trial > 0 {
                state.update(&sim.trials[trial - 1])?;
            }
            curve.push((
                state.meaning_probability(&sim.first_label, &sim.target),
                state.meaning_probability(&novel, &sim.target),
            ));
        }
        Ok(curve)
    })?;

    let mut t = Table::new(&SYNONYM_COLUMNS);
    let n = sim_seeds.len();
    let provenance = sims[0].training.provenance();
    for (mi, id) in config.models.iter().enumerate() {
        let model_runs = &runs[mi * n..(mi + 1) * n];
        for trial in 0..=s.n_trials {
            let first = model_runs.iter().map(|c| c[trial].0).sum::<f64>() / n as f64;
            let second = model_runs.iter().map(|c| c[trial].1).sum::<f64>() / n as f64;
            for (label, p) in [("first", first), ("second", second)] {
                t.push(vec![
                    id.slug().into(),
                    provenance.as_str().into(),
                    first_seed.into(),
                    n.into(),
                    trial.into(),
                    label.into(),
                    p.into(),
                ]);
            }
        }
    }
    Ok(t)
}
