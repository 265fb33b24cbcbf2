//! End-to-end acceptance checks on the default configuration. Each check
//! prints one PASS/FAIL line to stderr.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::OnceLock;

use tempfile::TempDir;
use xsl_core::{
    AlignmentKind, InputPair, LearnerState, ModelConfig, ModelRegistry, Referent,
    RepresentationKind, Smoothing, Word,
};
use xsl_lab::experiments::OracleReport;
use xsl_lab::{run_battery, Exec, ExperimentConfig, OutputFormat, Table};

const BEST: [&str; 2] = ["awgr_pwr", "awgr_prgw"];
const JOINT_ALIGNMENT: [&str; 2] = ["awr_pwr", "awr_prgw"];

struct Battery {
    dir: TempDir,
    oracle: OracleReport,
}

fn battery() -> &'static Battery {
    static RUN: OnceLock<Battery> = OnceLock::new();
    RUN.get_or_init(|| {
        let dir = TempDir::new().unwrap();
        let (_, oracle) = run_battery(
            &ExperimentConfig::default(),
            Exec::Parallel,
            dir.path(),
            OutputFormat::Csv,
        )
        .unwrap();
        Battery { dir, oracle }
    })
}

fn table(name: &str) -> Table {
    let bytes = fs::read(battery().dir.path().join(format!("{name}.csv"))).unwrap();
    Table::read(bytes.as_slice(), OutputFormat::Csv).unwrap()
}

fn report(n: u32, what: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    writeln!(
        std::io::stderr().lock(),
        "\n{verdict} criterion {n} ({what}): {detail}"
    )
    .unwrap();
    assert!(pass, "criterion {n} ({what}): {detail}");
}

fn seeds() -> Vec<u64> {
    ExperimentConfig::default().seeds
}

fn w(s: &str) -> Word {
    Word::new(s).unwrap()
}
fn r(s: &str) -> Referent {
    Referent::new(s).unwrap()
}
fn pair(u: &[&str], s: &[&str]) -> InputPair {
    InputPair::new(u.iter().map(|x| w(x)), s.iter().map(|x| r(x))).unwrap()
}

#[test]
fn criterion_1_hand_trace() {
    let (lambda, beta) = (0.01, 100.0);
    let id = ModelRegistry::global().lookup("awgr_prgw").unwrap();
    let mut s = LearnerState::new(ModelConfig::new(id, Smoothing { lambda, beta: 100 })).unwrap();
    s.update(&pair(&["w1", "w2"], &["r1", "r2"])).unwrap();
    let got_theta = s.theta(&w("w1"), &r("r1"));
    s.update(&pair(&["w1", "w3"], &["r1", "r3"])).unwrap();

    // first pair: two words share each referent evenly
    let first = 0.5;
    let theta_11 = (first + lambda) / (1.0 + beta * lambda);
    let theta_31 = 1.0 / beta;
    let a = theta_11 / (theta_11 + theta_31);
    let assoc = first + a;

    let got_first = s.assoc().get(&w("w2"), &r("r1"));
    let got_assoc = s.assoc().get(&w("w1"), &r("r1"));
    // learner against the derivation to 1e-9; the derivation against the
    // five-decimal published values to 1e-5
    let exact = [
        (got_first, first),
        (got_theta, theta_11),
        (got_assoc, assoc),
    ];
    let published = [(theta_11, 0.255), (a, 0.96226), (assoc, 1.46226)];
    let pass = exact.iter().all(|(x, y)| (x - y).abs() <= 1e-9)
        && published.iter().all(|(x, y)| (x - y).abs() <= 1e-5);
    report(
        1,
        "hand trace",
        pass,
        &format!("assoc(w2,r1)={got_first} theta(w1,r1)={got_theta} a={a:.5} assoc(w1,r1)={got_assoc:.5}"),
    );
}

#[test]
fn criterion_2_normalization() {
    let config = ExperimentConfig::default();
    let (corpus, _) = config.base(config.seeds[0]).unwrap();
    assert_eq!(corpus.len(), 6000);
    let sm = config.smoothing;
    let beta = sm.beta as f64;
    let mut worst: f64 = 0.0;
    for id in ModelRegistry::global().ids() {
        let mut s = LearnerState::new(ModelConfig::new(id, sm)).unwrap();
        for p in &corpus {
            let table = s.align(p);
            match id.alignment {
                AlignmentKind::WordCompetition => {
                    for y in &p.scene {
                        worst = worst.max((table.column_sum(y).unwrap() - 1.0).abs());
                    }
                }
                AlignmentKind::ReferentCompetition => {
                    for x in &p.utterance {
                        worst = worst.max((table.row_sum(x).unwrap() - 1.0).abs());
                    }
                }
                AlignmentKind::Joint => {}
            }
            s.update(p).unwrap();
            if id.representation != RepresentationKind::ReferentConditional {
                continue;
            }
            // only the rows of words in this pair changed
            let m = s.observed_referents().len() as f64;
            for x in &p.utterance {
                let row = s.assoc().row(x).unwrap();
                let z = row.sum() + beta * sm.lambda;
                let seen: f64 = row.cells().map(|(_, a)| (a + sm.lambda) / z).sum();
                let seen_empty = (m - row.len() as f64) * sm.lambda / z;
                let unseen = (beta - m) * sm.lambda / z;
                worst = worst.max((seen + seen_empty + unseen - 1.0).abs());
            }
        }
    }
    report(
        2,
        "normalization",
        worst <= 1e-9,
        &format!("6000 updates x 6 models, largest deviation {worst:.3e}"),
    );
}

/// Final score per (model, seed) from rows with the given key and corpus.
fn finals(t: &Table, corpus: &str, key: &str) -> BTreeMap<(String, u64), f64> {
    let mut out = BTreeMap::new();
    let mut last: BTreeMap<(String, u64), f64> = BTreeMap::new();
    for rec in t.records() {
        if rec.text("corpus") != corpus || rec.text("key") != key {
            continue;
        }
        let k = (rec.text("model"), rec.number("seed") as u64);
        let step = rec.number("step");
        if last.get(&k).is_none_or(|&s| step >= s) {
            last.insert(k.clone(), step);
            out.insert(k, rec.number("score"));
        }
    }
    out
}

#[test]
fn criterion_3_ranking() {
    let scores = finals(&table("curve"), "base", "average");
    let models: Vec<&str> = ModelRegistry::global().ids().map(|m| m.slug()).collect();
    let mut held = 0;
    let mut notes = Vec::new();
    for seed in seeds() {
        let s = |m: &str| scores[&(m.to_string(), seed)];
        let others: Vec<&str> = models
            .iter()
            .copied()
            .filter(|m| !BEST.contains(m))
            .collect();
        let best_wins = BEST.iter().all(|b| others.iter().all(|o| s(b) > s(o)));
        let mut ranked = models.clone();
        ranked.sort_by(|a, b| s(a).total_cmp(&s(b)));
        let bottom_two = JOINT_ALIGNMENT.iter().all(|j| ranked[..2].contains(j));
        held += usize::from(best_wins && bottom_two);
        notes.push(format!(
            "seed {seed}: {}",
            ranked.iter().rev().copied().collect::<Vec<_>>().join(">")
        ));
    }
    report(
        3,
        "model ranking",
        held == 5,
        &format!("{held}/5 seeds; {}", notes.join("; ")),
    );
}

#[test]
fn criterion_4_uncertainty() {
    let t = table("uncertainty");
    let base = finals(&t, "base", "average");
    let ru = finals(&t, "ru_plus", "average");
    let lu = finals(&t, "lu_plus", "average");
    let all_drop = base.iter().all(|(k, &b)| ru[k] < b && lu[k] < b);
    let drop = |m: &str, seed: u64| {
        let k = (m.to_string(), seed);
        (base[&k] - ru[&k]) / base[&k]
    };
    let mut ordered = 0;
    let mut notes = Vec::new();
    for seed in seeds() {
        let (joint, cond) = (drop(BEST[0], seed), drop(BEST[1], seed));
        ordered += usize::from(joint < cond);
        notes.push(format!("{:.1}%<{:.1}%", 100.0 * joint, 100.0 * cond));
    }
    report(
        4,
        "uncertainty",
        all_drop && ordered >= 4,
        &format!(
            "all scores drop under RU+/LU+: {all_drop}; RU+ drop a(w|r)p(w,r) < a(w|r)p(r|w) on {ordered}/5 seeds ({})",
            notes.join(", ")
        ),
    );
}

#[test]
fn criterion_5_frequency() {
    let t = table("frequency");
    let high = finals(&t, "base", "high");
    let low = finals(&t, "base", "low");
    let high_min = high.values().copied().fold(f64::INFINITY, f64::min);
    let mut gaps = Vec::new();
    for seed in seeds() {
        let s = |m: &str| low[&(m.to_string(), seed)];
        let best = BEST.iter().map(|m| s(m)).fold(f64::INFINITY, f64::min);
        let rest = ModelRegistry::global()
            .ids()
            .map(|m| m.slug())
            .filter(|m| !BEST.contains(m))
            .map(s)
            .fold(f64::NEG_INFINITY, f64::max);
        gaps.push(best - rest);
    }
    let gap_min = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    report(
        5,
        "frequency",
        high_min >= 0.9 && gap_min >= 0.1,
        &format!(
            "lowest high-band score {high_min:.3}; smallest low-band gap {gap_min:.3} over 5 seeds"
        ),
    );
}

/// Mean over probe words and seeds per trial index.
fn trial_means(t: &Table, model: &str, filter: (&str, &str), value: &str) -> Vec<f64> {
    let mut sums: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for rec in t.records() {
        if rec.text("model") != model || rec.text(filter.0) != filter.1 {
            continue;
        }
        let e = sums.entry(rec.number("trial") as usize).or_default();
        e.0 += rec.number(value);
        e.1 += 1;
    }
    sums.values().map(|&(s, n)| s / n as f64).collect()
}

fn non_increases(v: &[f64]) -> usize {
    v.windows(2).filter(|p| p[1] <= p[0]).count()
}

fn max_relative_change(v: &[f64]) -> f64 {
    v.iter()
        .map(|x| (x - v[0]).abs() / v[0])
        .fold(0.0, f64::max)
}

fn fmt(v: &[f64]) -> String {
    v.iter()
        .map(|x| format!("{x:.3}"))
        .collect::<Vec<_>>()
        .join(" ")
}

#[test]
fn criterion_6_homonym() {
    let t = table("homonym");
    let second = trial_means(&t, BEST[0], ("meaning", "second"), "probability");
    let first_comp = trial_means(&t, BEST[0], ("meaning", "first"), "comprehension");
    let fas_first = trial_means(&t, BEST[1], ("meaning", "first"), "probability");
    assert_eq!(second.len(), 11);

    let rising = non_increases(&second) <= 1;
    let change = max_relative_change(&first_comp);
    let stable = change <= 0.1;
    let fas_falls = fas_first[10] < fas_first[0];

    let mut by_band = Vec::new();
    for band in ["low", "mid", "high"] {
        let rows: Vec<_> = t
            .records()
            .filter(|r| {
                r.text("model") == BEST[0] && r.text("meaning") == "first" && r.text("band") == band
            })
            .filter(|r| matches!(r.number("trial") as usize, 0 | 10))
            .collect();
        let mean = |trial: f64| {
            let v: Vec<f64> = rows
                .iter()
                .filter(|r| r.number("trial") == trial)
                .map(|r| r.number("comprehension"))
                .collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        by_band.push(format!("{band} {:.3}->{:.3}", mean(0.0), mean(10.0)));
    }
    report(
        6,
        "homonym",
        rising && stable && fas_falls,
        &format!(
            "a(w|r)p(w,r) second-meaning probability [{}] non-increases {}; first-meaning comprehension [{}] max change {:.1}% (by band: {}); a(w|r)p(r|w) first-meaning probability {:.3} -> {:.3}",
            fmt(&second),
            non_increases(&second),
            fmt(&first_comp),
            100.0 * change,
            by_band.join(", "),
            fas_first[0],
            fas_first[10],
        ),
    );
}

#[test]
fn criterion_7_synonym() {
    let t = table("synonym");
    assert!(t.records().all(|r| r.number("simulations") == 20.0));
    let mut rising = true;
    let mut worst_change: f64 = 0.0;
    let mut notes = Vec::new();
    for id in ModelRegistry::global().ids() {
        let m = id.slug();
        let second = trial_means(&t, m, ("label", "second"), "probability");
        let first = trial_means(&t, m, ("label", "first"), "probability");
        if m != "awr_pwr" {
            rising &= second[10] > second[0];
        }
        worst_change = worst_change.max(max_relative_change(&first));
        notes.push(format!("{m} {:.3}->{:.3}", second[0], second[10]));
    }
    report(
        7,
        "synonym",
        rising && worst_change <= 0.1,
        &format!(
            "second-label probability {}; largest first-label change {:.2}%",
            notes.join(", "),
            100.0 * worst_change
        ),
    );
}

#[test]
fn criterion_8_oracle() {
    let o = &battery().oracle;
    let seeds_ok = o.seeds.len() == 5
        && o.seeds
            .iter()
            .all(|s| s.one_to_one && s.compared > 0 && s.agreed == s.compared);
    let ll_ok = o.seeds.iter().all(|s| s.worst_ll_drop <= 1e-9);
    let detail = o
        .seeds
        .iter()
        .map(|s| format!("seed {} {}/{}", s.seed, s.agreed, s.compared))
        .collect::<Vec<_>>()
        .join(", ");
    let worst = o
        .seeds
        .iter()
        .map(|s| s.worst_ll_drop)
        .fold(f64::NEG_INFINITY, f64::max);
    report(
        8,
        "oracle",
        seeds_ok && ll_ok && o.passed(),
        &format!("{detail}; largest log-likelihood drop {worst:.3e}"),
    );
}

fn outputs(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("csv" | "svg")))
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect()
}

#[test]
fn criterion_9_determinism() {
    let first = outputs(battery().dir.path());
    let again = TempDir::new().unwrap();
    run_battery(
        &ExperimentConfig::default(),
        Exec::Serial,
        again.path(),
        OutputFormat::Csv,
    )
    .unwrap();
    let second = outputs(again.path());
    let differing: Vec<&String> = first
        .keys()
        .filter(|k| first.get(*k) != second.get(*k))
        .collect();
    let pass = first.len() == 12 && first.keys().eq(second.keys()) && differing.is_empty();
    report(
        9,
        "determinism",
        pass,
        &format!(
            "{} files compared between parallel and serial runs, {} differ {:?}",
            first.len(),
            differing.len(),
            differing
        ),
    );
}
