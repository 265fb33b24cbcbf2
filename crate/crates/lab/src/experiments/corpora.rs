use xsl_core::eval::{average_comprehension, curve_hook, frequency_split_report, REPORT_COLUMNS};
use xsl_core::{Corpus, GoldLexicon, Provenance};

use super::{cells, concat, train, train_with, Exec};
use crate::config::ExperimentConfig;
use crate::error::LabResult;
use crate::table::Table;

/// Average comprehension at every checkpoint of a run over the base corpus.
pub fn run_curve(config: &ExperimentConfig, exec: Exec) -> LabResult<Table> {
    let data = exec.map(&config.seeds, |&seed| config.base(seed))?;
    let parts = exec.map(&cells(&config.models, &config.seeds), |&(id, si)| {
        let (corpus, gold) = &data[si];
        let (_, cps) = train_with(
            id,
            config.smoothing,
            corpus,
            config.checkpoint_every,
            curve_hook(gold),
        )?;
        let mut t = Table::new(&REPORT_COLUMNS);
        for cp in cps {
            t.push(vec![
                id.slug().into(),
                corpus.provenance().as_str().into(),
                config.seeds[si].into(),
                cp.step.into(),
                "average".into(),
                cp.payload.into(),
            ]);
        }
        Ok(t)
    })?;
    Ok(concat(parts, &REPORT_COLUMNS))
}

/// The base, RU+ and LU+ corpora built from one source sequence.
fn variants(config: &ExperimentConfig, seed: u64) -> LabResult<(Vec<Corpus>, GoldLexicon)> {
    let (source, gold) = config.source(seed)?;
    Ok((
        vec![
            source.subsample_every_third()?,
            source.make_ru_plus()?,
            source.make_lu_plus()?,
        ],
        gold,
    ))
}

/// Final average comprehension on each corpus variant, with the relative
/// drop `(base - variant) / base` for RU+ and LU+.
pub fn run_uncertainty(config: &ExperimentConfig, exec: Exec) -> LabResult<Table> {
    let data = exec.map(&config.seeds, |&seed| variants(config, seed))?;
    let parts = exec.map(&cells(&config.models, &config.seeds), |&(id, si)| {
        let (corpora, gold) = &data[si];
        let mut t = Table::new(&REPORT_COLUMNS);
        let mut base = f64::NAN;
        for corpus in corpora {
            let state = train(id, config.smoothing, corpus)?;
            let avg = average_comprehension(&state, gold)?;
            let row = |key: &str, score: f64| {
                vec![
                    id.slug().into(),
                    corpus.provenance().as_str().into(),
                    config.seeds[si].into(),
                    state.step().into(),
                    key.into(),
                    score.into(),
                ]
            };
            t.push(row("average", avg));
            if corpus.provenance() == Provenance::Base {
                base = avg;
            } else {
                t.push(row("degradation", (base - avg) / base));
            }
        }
        Ok(t)
    })?;
    Ok(concat(parts, &REPORT_COLUMNS))
}

/// Band averages per model and corpus variant. Band membership counts
/// occurrences in the corpus the learner was trained on.
pub fn run_frequency(config: &ExperimentConfig, exec: Exec) -> LabResult<Table> {
    let data = exec.map(&config.seeds, |&seed| variants(config, seed))?;
    let parts = exec.map(&cells(&config.models, &config.seeds), |&(id, si)| {
        let (corpora, gold) = &data[si];
        let mut t = Table::new(&REPORT_COLUMNS);
        for corpus in corpora {
            let state = train(id, config.smoothing, corpus)?;
            for band in frequency_split_report(&state, gold, &config.bands, &corpus.word_counts()) {
                t.push(vec![
                    id.slug().into(),
                    corpus.provenance().as_str().into(),
                    config.seeds[si].into(),
                    state.step().into(),
                    band.label.into(),
                    band.average.into(),
                ]);
            }
        }
        Ok(t)
    })?;
    Ok(concat(parts, &REPORT_COLUMNS))
}
