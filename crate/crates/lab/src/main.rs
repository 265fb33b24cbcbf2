use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use xsl_core::eval::{write_report_csv, ReportRow};
use xsl_core::{Corpus, Format, GoldLexicon, LearnerState, ModelConfig, ModelRegistry};
use xsl_lab::config::CorpusSource;
use xsl_lab::experiments::{self, OracleReport};
use xsl_lab::{
    render_file, run_battery, write_manifest, write_table, write_with_figure, Exec,
    ExperimentConfig, LabError, LabResult, OutputFormat, RunManifest, Table,
};

#[derive(Parser)]
#[command(
    name = "xsl-lab",
    version,
    about = "Run cross-situational word learning experiments"
)]
struct Cli {
    /// Experiment configuration (JSON). Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, env = "XSL_LAB_OUT", default_value = "out")]
    out: PathBuf,

    /// Use this single seed instead of the configured list.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Table format for outputs.
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,

    /// Run cells one after another instead of in parallel.
    #[arg(long, global = true)]
    serial: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum CorpusFormat {
    Pairs,
    Jsonl,
}

impl From<CorpusFormat> for Format {
    fn from(f: CorpusFormat) -> Self {
        match f {
            CorpusFormat::Pairs => Format::PairsText,
            CorpusFormat::Jsonl => Format::Jsonl,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Transform {
    Base,
    RuPlus,
    LuPlus,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the configured synthetic corpus and its lexicon.
    Generate {
        #[arg(long, value_enum, default_value = "pairs")]
        corpus_format: CorpusFormat,
    },
    /// Build the base, RU+ or LU+ corpus from a source corpus file.
    Transform {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        kind: Transform,
        #[arg(long, value_enum, default_value = "pairs")]
        corpus_format: CorpusFormat,
    },
    /// Train one model and save its state.
    Train {
        #[arg(long)]
        model: String,
        /// Corpus file to train on; defaults to the configured base corpus.
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "pairs")]
        corpus_format: CorpusFormat,
    },
    /// Score a saved state against a gold lexicon.
    Eval {
        #[arg(long)]
        state: PathBuf,
        /// Gold lexicon; defaults to the configured corpus's lexicon.
        #[arg(long)]
        lexicon: Option<PathBuf>,
    },
    /// Learning curves over the base corpus.
    Curve,
    /// Final scores on base, RU+ and LU+ corpora.
    Uncertainty,
    /// Scores split by word frequency.
    Frequency,
    /// Familiar words paired with new meanings.
    Homonym,
    /// New words paired with familiar meanings.
    Synonym,
    /// Compare the incremental learner with batch EM on small corpora.
    OracleCheck,
    /// Render the figure for a result table.
    Plot {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run every experiment.
    Battery,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn load_config(cli: &Cli) -> LabResult<ExperimentConfig> {
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seeds = vec![seed];
    }
    config.validate()?;
    Ok(config)
}

fn open(path: &Path) -> LabResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| LabError::Config(format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> LabResult<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn corpus_ext(f: CorpusFormat) -> &'static str {
    match f {
        CorpusFormat::Pairs => "txt",
        CorpusFormat::Jsonl => "jsonl",
    }
}

fn finish(
    cli: &Cli,
    config: &ExperimentConfig,
    outputs: Vec<PathBuf>,
    start: Instant,
) -> LabResult<()> {
    let mut manifest = RunManifest::new(config.hash());
    manifest.outputs = outputs;
    manifest.wall_clock_seconds = start.elapsed().as_secs_f64();
    write_manifest(&manifest, &cli.out)?;
    for p in &manifest.outputs {
        println!("{}", p.display());
    }
    Ok(())
}

fn oracle_verdict(report: &OracleReport) -> ExitCode {
    for s in &report.seeds {
        let note = if s.low_evidence() {
            " (low evidence)"
        } else if !s.one_to_one {
            " (lexicon has homonyms; disagreement allowed)"
        } else {
            ""
        };
        eprintln!(
            "seed {}: {}/{} words agree, worst log-likelihood drop {:.3e}{note}",
            s.seed, s.agreed, s.compared, s.worst_ll_drop
        );
    }
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        eprintln!("oracle check failed");
        ExitCode::from(2)
    }
}

fn run(cli: Cli) -> LabResult<ExitCode> {
    let start = Instant::now();
    let exec = if cli.serial {
        Exec::Serial
    } else {
        Exec::Parallel
    };
    let format = cli.format;

    if let Command::Plot { input, output } = &cli.command {
        let in_format = match input.extension().and_then(|e| e.to_str()) {
            Some("jsonl") => OutputFormat::Jsonl,
            _ => OutputFormat::Csv,
        };
        let svg = render_file(input, in_format)?;
        let path = output
            .clone()
            .unwrap_or_else(|| input.with_extension("svg"));
        fs::write(&path, svg)?;
        println!("{}", path.display());
        return Ok(ExitCode::SUCCESS);
    }

    let config = load_config(&cli)?;
    let seed = config.seeds[0];
    let outputs = match &cli.command {
        Command::Generate { corpus_format } => {
            if !matches!(config.corpus, CorpusSource::Synthetic(_)) {
                return Err(LabError::Config(
                    "generate needs a synthetic corpus source".into(),
                ));
            }
            let (corpus, gold) = config.source(seed)?;
            let cpath = cli
                .out
                .join(format!("corpus-{seed}.{}", corpus_ext(*corpus_format)));
            let lpath = cli.out.join(format!("lexicon-{seed}.txt"));
            let mut w = create(&cpath)?;
            corpus.save(&mut w, (*corpus_format).into())?;
            w.flush()?;
            let mut w = create(&lpath)?;
            gold.write(&mut w)?;
            w.flush()?;
            vec![cpath, lpath]
        }
        Command::Transform {
            input,
            kind,
            corpus_format,
        } => {
            let source = Corpus::load(open(input)?, (*corpus_format).into())?;
            let (result, name) = match kind {
                Transform::Base => (source.subsample_every_third()?, "base"),
                Transform::RuPlus => (source.make_ru_plus()?, "ru_plus"),
                Transform::LuPlus => (source.make_lu_plus()?, "lu_plus"),
            };
            let stem = input
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("corpus");
            let path = cli
                .out
                .join(format!("{stem}-{name}.{}", corpus_ext(*corpus_format)));
            let mut w = create(&path)?;
            result.save(&mut w, (*corpus_format).into())?;
            w.flush()?;
            vec![path]
        }
        Command::Train {
            model,
            corpus,
            corpus_format,
        } => {
            let id = ModelRegistry::global().lookup(model)?;
            let corpus = match corpus {
                Some(p) => Corpus::load(open(p)?, (*corpus_format).into())?,
                None => config.base(seed)?.0,
            };
            let mut state = LearnerState::new(ModelConfig::new(id, config.smoothing))?;
            state.train_all(&corpus)?;
            let path = cli.out.join(format!("state-{}-{seed}.json", id.slug()));
            let mut w = create(&path)?;
            state.save(&mut w)?;
            w.flush()?;
            vec![path]
        }
        Command::Eval { state, lexicon } => {
            let state = LearnerState::load(open(state)?)?;
            let gold = match lexicon {
                Some(p) => GoldLexicon::read(open(p)?)?,
                None => config.source(seed)?.1,
            };
            let report = xsl_core::eval::ComprehensionReport::new(&state, &gold)?;
            let row = |key: String, score: f64| ReportRow {
                model: report.model,
                corpus: xsl_core::Provenance::File,
                seed,
                step: report.step,
                key,
                score,
            };
            let mut rows: Vec<ReportRow> = report
                .per_word
                .iter()
                .map(|(w, &s)| row(w.to_string(), s))
                .collect();
            rows.push(row("all".into(), report.average));
            let path = match format {
                OutputFormat::Csv => {
                    let path = cli.out.join("eval.csv");
                    let mut w = create(&path)?;
                    write_report_csv(&rows, &mut w)?;
                    w.flush()?;
                    path
                }
                OutputFormat::Jsonl => {
                    let mut buf = Vec::new();
                    write_report_csv(&rows, &mut buf)?;
                    let table = Table::read(buf.as_slice(), OutputFormat::Csv)?;
                    write_table(&table, &cli.out, "eval", format)?
                }
            };
            println!(
                "average comprehension {:.6} over {} words",
                report.average,
                report.per_word.len()
            );
            vec![path]
        }
        Command::Curve => write_with_figure(
            &experiments::run_curve(&config, exec)?,
            &cli.out,
            "curve",
            format,
        )?,
        Command::Uncertainty => write_with_figure(
            &experiments::run_uncertainty(&config, exec)?,
            &cli.out,
            "uncertainty",
            format,
        )?,
        Command::Frequency => write_with_figure(
            &experiments::run_frequency(&config, exec)?,
            &cli.out,
            "frequency",
            format,
        )?,
        Command::Homonym => write_with_figure(
            &experiments::run_homonym(&config, exec)?,
            &cli.out,
            "homonym",
            format,
        )?,
        Command::Synonym => write_with_figure(
            &experiments::run_synonym(&config, exec)?,
            &cli.out,
            "synonym",
            format,
        )?,
        Command::OracleCheck => {
            let report = experiments::run_oracle_check(&config, exec)?;
            let outputs = vec![
                write_table(&report.agreement, &cli.out, "oracle", format)?,
                write_table(&report.likelihood, &cli.out, "oracle_loglik", format)?,
            ];
            finish(&cli, &config, outputs, start)?;
            return Ok(oracle_verdict(&report));
        }
        Command::Battery => {
            let (manifest, report) = run_battery(&config, exec, &cli.out, format)?;
            for p in &manifest.outputs {
                println!("{}", p.display());
            }
            return Ok(oracle_verdict(&report));
        }
        Command::Plot { .. } => unreachable!("handled above"),
    };
    finish(&cli, &config, outputs, start)?;
    Ok(ExitCode::SUCCESS)
}
