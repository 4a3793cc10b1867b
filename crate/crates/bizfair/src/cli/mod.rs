//! Subcommand front-end: prepare, train, predict, evaluate, bias, runs.

mod config;

pub use config::{parse_k_list, Settings, SEED_ENV};

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::classifier::{train, Hyperparams, Model, TrainMode};
use crate::error::{Error, Result};
use crate::evalbias::{
    aggregate_runs, bias_audit, evaluate, per_class_pr, precision_recall_at_k, report, AuditConfig,
    BiasReport, EvalReport, Predictor, ProbeSource, RunStats,
};
use crate::ingest::{
    build_dataset, read_labels_tsv, read_licence_csv, read_records_tsv, split, write_labels_tsv,
    write_records_tsv, IngestStats, LabelSpace, Record, SplitSpec,
};
use crate::nametext::{gender_swap_augment, mask_names, EvalLists, MaskPolicy, NameLexicon};

#[derive(Parser)]
#[command(
    name = "bizfair",
    version,
    about = "Train business-type classifiers on business names and audit their name bias"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Turn a business-licence CSV into train/test TSV files
    Prepare(PrepareArgs),
    /// Train a model on a prepared TSV
    Train(TrainArgs),
    /// Rank labels for a single text
    Predict(PredictArgs),
    /// Score a model on a test TSV
    Evaluate(EvaluateArgs),
    /// Compare predictions across paired name substitutions
    Bias(BiasArgs),
    /// Repeated train/test cycles with aggregated reports
    Runs(RunsArgs),
}

#[derive(Args)]
struct PrepareArgs {
    /// Config file of `key = value` lines; explicit flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Business-licence CSV
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Fraction of records held out for testing
    #[arg(long)]
    test_frac: Option<f64>,
    /// Drop labels with fewer deduplicated records than this
    #[arg(long)]
    min_samples: Option<usize>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Training TSV (`label<TAB>name` lines)
    #[arg(long)]
    input: Option<PathBuf>,
    /// Model file to write
    #[arg(long)]
    out: Option<PathBuf>,
    /// raw, mask, or augment
    #[arg(long)]
    mode: Option<String>,
    /// Census-format male given-name file (needed for mask/augment)
    #[arg(long)]
    names_male: Option<PathBuf>,
    /// Census-format female given-name file (needed for mask/augment)
    #[arg(long)]
    names_female: Option<PathBuf>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    window: Option<usize>,
    /// Minimum token frequency for the vocabulary
    #[arg(long)]
    vocab_min_count: Option<u64>,
    /// Give unknown tokens hashed embedding rows (0 disables)
    #[arg(long)]
    hash_buckets: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Model file
    #[arg(long)]
    model: Option<PathBuf>,
    /// Text to classify
    #[arg(value_name = "TEXT")]
    text: Option<String>,
    /// How many labels to print
    #[arg(short, long)]
    k: Option<usize>,
    #[arg(long)]
    names_male: Option<PathBuf>,
    #[arg(long)]
    names_female: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model: Option<PathBuf>,
    /// Test TSV (`label<TAB>name` lines)
    #[arg(long)]
    input: Option<PathBuf>,
    /// Comma-separated cutoffs, e.g. "1,2"
    #[arg(long)]
    k: Option<String>,
    /// Also report one-vs-rest metrics per high-level class
    #[arg(long)]
    high_level: bool,
    /// labels.tsv giving each label's high-level class
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    names_male: Option<PathBuf>,
    #[arg(long)]
    names_female: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct BiasArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory of .bin model files (same training mode)
    #[arg(long)]
    models: Option<PathBuf>,
    /// 1 = random dictionary words, 2 = test-set texts
    #[arg(long)]
    approach: Option<u8>,
    /// Probe pairs per list pair (approach 1)
    #[arg(long = "n")]
    n_probes: Option<usize>,
    /// Ignore per-label count differences below this
    #[arg(long)]
    min_count: Option<usize>,
    /// Word list, one word per line (approach 1)
    #[arg(long)]
    dict: Option<PathBuf>,
    /// Test TSV supplying probe texts (approach 2)
    #[arg(long)]
    input: Option<PathBuf>,
    /// TSV overriding the built-in evaluation name lists
    #[arg(long)]
    lists: Option<PathBuf>,
    #[arg(long)]
    names_male: Option<PathBuf>,
    #[arg(long)]
    names_female: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct RunsArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Full prepared dataset TSV; each run re-splits it
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output directory for reports
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of independent train/test cycles
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    test_frac: Option<f64>,
    #[arg(long)]
    names_male: Option<PathBuf>,
    #[arg(long)]
    names_female: Option<PathBuf>,
    /// Word list for the bias audit (approach 1)
    #[arg(long)]
    dict: Option<PathBuf>,
    #[arg(long)]
    approach: Option<u8>,
    #[arg(long = "n")]
    n_probes: Option<usize>,
    #[arg(long)]
    min_count: Option<usize>,
    /// labels.tsv giving each label's high-level class
    #[arg(long)]
    labels: Option<PathBuf>,
    /// TSV overriding the built-in evaluation name lists
    #[arg(long)]
    lists: Option<PathBuf>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    vocab_min_count: Option<u64>,
    #[arg(long)]
    hash_buckets: Option<usize>,
    #[arg(long)]
    json: bool,
}

/// Write to stdout, exiting quietly when the reading end has gone away
/// (stdout is ignored-SIGPIPE territory, so EPIPE surfaces here).
fn emit(text: &str) {
    use std::io::{ErrorKind, Write};
    let mut out = std::io::stdout().lock();
    if let Err(e) = out.write_all(text.as_bytes()) {
        if e.kind() == ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        eprintln!("error: cannot write to stdout: {e}");
        std::process::exit(1);
    }
}

macro_rules! outln {
    () => { emit("\n") };
    ($($arg:tt)*) => { emit(&format!("{}\n", format_args!($($arg)*))) };
}

macro_rules! out {
    ($($arg:tt)*) => { emit(&format!($($arg)*)) };
}

/// Parse arguments and run. Returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Prepare(args) => cmd_prepare(args),
        Command::Train(args) => cmd_train(args),
        Command::Predict(args) => cmd_predict(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Bias(args) => cmd_bias(args),
        Command::Runs(args) => cmd_runs(args),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn load_base(config: &Option<PathBuf>, command: &str) -> Result<Settings> {
    let mut settings = Settings::base();
    if let Some(path) = config {
        if let Some(recorded) = settings.apply_config_file(path)? {
            if recorded != command {
                eprintln!(
                    "note: config {} was recorded by `{recorded}`, applying to `{command}`",
                    path.display()
                );
            }
        }
    }
    Ok(settings)
}

macro_rules! override_from {
    ($settings:expr, $args:expr, $($field:ident),+) => {
        $(
            if let Some(value) = $args.$field.clone() {
                $settings.$field = value.into();
            }
        )+
    };
}

/// Apply the training-mode transform to a record set: identity for raw,
/// given-name masking for mask, gender-swapped copies for augment.
pub fn transform_records(
    mode: TrainMode,
    records: &[Record],
    lexicon: &NameLexicon,
    seed: u64,
) -> Vec<Record> {
    match mode {
        TrainMode::Raw => records.to_vec(),
        TrainMode::Mask => {
            let policy = MaskPolicy::default();
            records
                .iter()
                .map(|r| Record::new(mask_names(&r.name, lexicon, &policy), r.label.clone()))
                .collect()
        }
        TrainMode::Augment => gender_swap_augment(records, lexicon, seed),
    }
}

/// Census-name lexicon plus optional evaluation-list override. When
/// `names_required` is false and no name files are given, the lexicon has
/// empty name sets but still carries the evaluation lists.
fn load_lexicon(settings: &Settings, names_required: bool) -> Result<NameLexicon> {
    let mut lexicon = match (&settings.names_male, &settings.names_female) {
        (Some(male), Some(female)) => NameLexicon::load_census_names(male, female)?,
        (None, None) if !names_required => {
            NameLexicon::from_sets(Vec::<String>::new(), Vec::<String>::new())
        }
        _ => {
            return Err(Error::Config(
                "this operation needs both --names-male and --names-female".into(),
            ))
        }
    };
    if let Some(lists) = &settings.lists {
        lexicon = lexicon.with_eval_lists(EvalLists::from_tsv_file(lists)?);
    }
    Ok(lexicon)
}

fn read_word_list(path: &Path) -> Result<Vec<String>> {
    let content = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read word list {}: {e}", path.display())))?;
    let words: Vec<String> = content
        .lines()
        .map(str::trim)
        .filter(|w| !w.is_empty())
        .map(String::from)
        .collect();
    if words.is_empty() {
        return Err(Error::Config(format!(
            "word list {} contains no words",
            path.display()
        )));
    }
    Ok(words)
}

fn label_space(settings: &Settings) -> Result<LabelSpace> {
    match &settings.labels {
        Some(path) => read_labels_tsv(path),
        None => Ok(LabelSpace::builtin()),
    }
}

fn write_text(path: &Path, content: &str) -> Result<()> {
    fs::write(path, content)?;
    Ok(())
}

fn cmd_prepare(args: PrepareArgs) -> Result<()> {
    let mut settings = load_base(&args.config, "prepare")?;
    override_from!(settings, args, input, out, seed, test_frac, min_samples);

    let input = settings.require(&settings.input, "input")?;
    let out_dir = settings.require(&settings.out, "out")?;
    fs::create_dir_all(&out_dir)?;

    let mut stats = IngestStats::default();
    let rows = read_licence_csv(&input, &mut stats)?;
    let (records, space) = build_dataset(
        &rows,
        LabelSpace::builtin(),
        settings.min_samples,
        &mut stats,
    )?;
    let spec = SplitSpec {
        test_fraction: settings.test_frac,
        seed: settings.seed,
    };
    let (train_recs, test_recs) = split(&records, &spec)?;

    write_records_tsv(&out_dir.join("dataset.tsv"), &records)?;
    write_records_tsv(&out_dir.join("train.tsv"), &train_recs)?;
    write_records_tsv(&out_dir.join("test.tsv"), &test_recs)?;
    write_labels_tsv(&out_dir.join("labels.tsv"), &space)?;
    write_text(&out_dir.join("config.txt"), &settings.echo("prepare"))?;

    eprintln!("{stats}");
    eprintln!(
        "kept {} records over {} labels ({} train / {} test)",
        records.len(),
        space.labels().len(),
        train_recs.len(),
        test_recs.len()
    );
    Ok(())
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let mut settings = load_base(&args.config, "train")?;
    override_from!(
        settings,
        args,
        input,
        out,
        names_male,
        names_female,
        dim,
        lr,
        epochs,
        window,
        vocab_min_count,
        hash_buckets,
        seed
    );
    if let Some(mode) = &args.mode {
        settings.mode = TrainMode::parse(mode)?;
    }

    let input = settings.require(&settings.input, "input")?;
    let out = settings.require(&settings.out, "out")?;
    let records = read_records_tsv(&input)?;
    let mode = settings.mode;

    let records = match mode {
        TrainMode::Raw => records,
        TrainMode::Mask | TrainMode::Augment => {
            let lexicon = load_lexicon(&settings, true)?;
            transform_records(mode, &records, &lexicon, settings.seed)
        }
    };

    let hp = settings.hyperparams();
    let (model, report) = train(&records, &hp, mode)?;
    for (epoch, loss) in report.epoch_losses.iter().enumerate() {
        eprintln!("epoch {}/{}: mean loss {loss:.4}", epoch + 1, hp.epochs);
    }
    if report.skipped_oov > 0 {
        eprintln!(
            "{} of {} records had no in-vocabulary token and were skipped",
            report.skipped_oov, report.records
        );
    }
    model.save(&out)?;
    let mut config_path = out.clone().into_os_string();
    config_path.push(".config");
    write_text(Path::new(&config_path), &settings.echo("train"))?;
    eprintln!(
        "saved {} ({} labels, {} vocabulary tokens, mode {})",
        out.display(),
        model.labels().len(),
        model.vocab().len(),
        mode
    );
    Ok(())
}

#[derive(Serialize)]
struct PredictOut<'a> {
    label: &'a str,
    probability: f64,
}

fn cmd_predict(args: PredictArgs) -> Result<()> {
    let mut settings = load_base(&args.config, "predict")?;
    override_from!(settings, args, model, names_male, names_female);
    if let Some(text) = args.text {
        settings.text = Some(text);
    }
    if let Some(k) = args.k {
        settings.k = vec![k];
    }
    if args.json {
        settings.json = true;
    }

    let model_path = settings.require(&settings.model, "model")?;
    let model = Model::load(&model_path)?;
    let text = settings
        .text
        .clone()
        .ok_or_else(|| Error::Config("missing TEXT argument".into()))?;
    let k = *settings
        .k
        .first()
        .ok_or_else(|| Error::Config("empty k list".into()))?;
    if k < 1 || k > model.labels().len() {
        return Err(Error::Config(format!(
            "k must be between 1 and {} (got {k})",
            model.labels().len()
        )));
    }

    let lexicon = load_lexicon(&settings, model.mode() == TrainMode::Mask)?;
    let predictor = Predictor::new(&model, &lexicon);
    let prediction = predictor.forward(&text);
    let top: Vec<PredictOut> = prediction
        .ranked()
        .iter()
        .take(k)
        .map(|&(id, p)| PredictOut {
            label: model.label(id),
            probability: p,
        })
        .collect();

    if settings.json {
        outln!("{}", report::to_json(&top)?);
    } else {
        for entry in &top {
            outln!("{}\t{:.4}", entry.label, entry.probability);
        }
    }
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<()> {
    let mut settings = load_base(&args.config, "evaluate")?;
    override_from!(
        settings,
        args,
        model,
        input,
        labels,
        names_male,
        names_female
    );
    if let Some(k) = &args.k {
        settings.k = parse_k_list(k)?;
    }
    if args.high_level {
        settings.high_level = true;
    }
    if args.json {
        settings.json = true;
    }

    let model = Model::load(&settings.require(&settings.model, "model")?)?;
    let records = read_records_tsv(&settings.require(&settings.input, "input")?)?;
    let space = label_space(&settings)?;
    let lexicon = load_lexicon(&settings, model.mode() == TrainMode::Mask)?;
    let predictor = Predictor::new(&model, &lexicon);

    if settings.json {
        let full: EvalReport = evaluate(&predictor, &records, &space)?;
        outln!("{}", report::to_json(&full)?);
        return Ok(());
    }

    outln!("mode\t{}", model.mode());
    outln!("n_test\t{}", records.len());
    for &k in &settings.k {
        let pr = precision_recall_at_k(&predictor, &records, k)?;
        outln!("P@{k}\t{:.1}", pr.precision);
        outln!("R@{k}\t{:.1}", pr.recall);
    }
    if settings.high_level {
        let per_class = per_class_pr(&predictor, &records, &space)?;
        outln!("class\tprecision\trecall\tsupport");
        for (class, pr) in &per_class {
            let fmt = |v: Option<f64>| match v {
                Some(v) => format!("{v:.1}"),
                None => "n/a".to_string(),
            };
            outln!(
                "{class}\t{}\t{}\t{}",
                fmt(pr.precision),
                fmt(pr.recall),
                pr.support
            );
        }
    }
    Ok(())
}

/// The .bin files of a directory, sorted by file name.
fn model_paths(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| {
        Error::Config(format!(
            "cannot read model directory {}: {e}",
            dir.display()
        ))
    })?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().map(|ext| ext == "bin").unwrap_or(false))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Config(format!(
            "no .bin model files in {}",
            dir.display()
        )));
    }
    Ok(paths)
}

fn probe_source(settings: &Settings) -> Result<ProbeSource> {
    match settings.approach {
        1 => Ok(ProbeSource::RandomWords {
            words: read_word_list(&settings.require(&settings.dict, "dict")?)?,
            n: settings.n_probes,
        }),
        2 => {
            let records = read_records_tsv(&settings.require(&settings.input, "input")?)?;
            Ok(ProbeSource::TestTexts(
                records.into_iter().map(|r| r.name).collect(),
            ))
        }
        other => Err(Error::Config(format!(
            "approach must be 1 or 2 (got {other})"
        ))),
    }
}

fn cmd_bias(args: BiasArgs) -> Result<()> {
    let mut settings = load_base(&args.config, "bias")?;
    override_from!(
        settings,
        args,
        models,
        approach,
        n_probes,
        min_count,
        dict,
        input,
        lists,
        names_male,
        names_female,
        seed
    );
    if args.json {
        settings.json = true;
    }

    let dir = settings.require(&settings.models, "models")?;
    let models: Vec<Model> = model_paths(&dir)?
        .iter()
        .map(|p| Model::load(p))
        .collect::<Result<_>>()?;
    let mode = models[0].mode();
    if models.iter().any(|m| m.mode() != mode) {
        return Err(Error::Config(format!(
            "models in {} have mixed training modes",
            dir.display()
        )));
    }

    let lexicon = load_lexicon(&settings, mode == TrainMode::Mask)?;
    let predictors: Vec<Predictor> = models.iter().map(|m| Predictor::new(m, &lexicon)).collect();
    let source = probe_source(&settings)?;
    let audit = AuditConfig {
        min_count: settings.min_count,
        seed: settings.seed,
    };
    let result = bias_audit(&predictors, &lexicon, &source, &audit)?;

    if settings.json {
        outln!("{}", report::to_json(&result)?);
    } else {
        out!("{}", report::bias_text(std::slice::from_ref(&result)));
    }
    Ok(())
}

fn cmd_runs(args: RunsArgs) -> Result<()> {
    let mut settings = load_base(&args.config, "runs")?;
    override_from!(
        settings,
        args,
        input,
        out,
        runs,
        seed,
        test_frac,
        names_male,
        names_female,
        dict,
        approach,
        n_probes,
        min_count,
        labels,
        lists,
        dim,
        lr,
        epochs,
        window,
        vocab_min_count,
        hash_buckets
    );
    if args.json {
        settings.json = true;
    }

    if settings.runs < 1 {
        return Err(Error::Config("--runs must be >= 1".into()));
    }
    let input = settings.require(&settings.input, "input")?;
    let out_dir = settings.require(&settings.out, "out")?;
    fs::create_dir_all(&out_dir)?;

    let records = read_records_tsv(&input)?;
    let space = label_space(&settings)?;
    let lexicon = load_lexicon(&settings, true)?;
    let hp_base = settings.hyperparams();
    let modes = [TrainMode::Raw, TrainMode::Mask, TrainMode::Augment];

    let mut eval_reports: Vec<Vec<EvalReport>> = vec![Vec::new(); modes.len()];
    let mut models: Vec<Vec<Model>> = vec![Vec::new(); modes.len()];
    let mut first_test_texts: Option<Vec<String>> = None;

    for run in 0..settings.runs {
        let run_seed = settings.seed.wrapping_add(run as u64);
        let spec = SplitSpec {
            test_fraction: settings.test_frac,
            seed: run_seed,
        };
        let (train_recs, test_recs) = split(&records, &spec)?;
        if first_test_texts.is_none() {
            first_test_texts = Some(test_recs.iter().map(|r| r.name.clone()).collect());
        }
        for (mi, &mode) in modes.iter().enumerate() {
            let train_input = transform_records(mode, &train_recs, &lexicon, run_seed);
            let hp = Hyperparams {
                seed: run_seed,
                ..hp_base.clone()
            };
            let (model, train_report) = train(&train_input, &hp, mode)?;
            eprintln!(
                "run {}/{} mode {mode}: final epoch loss {:.4}",
                run + 1,
                settings.runs,
                train_report.epoch_losses.last().unwrap()
            );
            let predictor = Predictor::new(&model, &lexicon);
            eval_reports[mi].push(evaluate(&predictor, &test_recs, &space)?);
            models[mi].push(model);
        }
    }

    let stats: Vec<(String, RunStats)> = modes
        .iter()
        .zip(&eval_reports)
        .map(|(mode, reports)| Ok((mode.as_str().to_string(), aggregate_runs(reports)?)))
        .collect::<Result<_>>()?;

    // The probe set is built once (approach 2 uses the first run's test
    // texts) so every mode and model answers the same probes.
    let source = match settings.approach {
        1 => ProbeSource::RandomWords {
            words: read_word_list(&settings.require(&settings.dict, "dict")?)?,
            n: settings.n_probes,
        },
        2 => ProbeSource::TestTexts(first_test_texts.expect("runs >= 1")),
        other => {
            return Err(Error::Config(format!(
                "approach must be 1 or 2 (got {other})"
            )))
        }
    };
    let audit = AuditConfig {
        min_count: settings.min_count,
        seed: settings.seed,
    };
    let bias_reports: Vec<BiasReport> = models
        .iter()
        .map(|mode_models| {
            let predictors: Vec<Predictor> = mode_models
                .iter()
                .map(|m| Predictor::new(m, &lexicon))
                .collect();
            bias_audit(&predictors, &lexicon, &source, &audit)
        })
        .collect::<Result<_>>()?;

    let eval_text = report::runs_text(&stats);
    let eval_tsv = report::runs_tsv(&stats);
    let bias_text = report::bias_text(&bias_reports);
    let bias_tsv = report::bias_tsv(&bias_reports);
    write_text(&out_dir.join("eval_report.txt"), &eval_text)?;
    write_text(&out_dir.join("eval_report.tsv"), &eval_tsv)?;
    write_text(&out_dir.join("bias_report.txt"), &bias_text)?;
    write_text(&out_dir.join("bias_report.tsv"), &bias_tsv)?;
    if settings.json {
        write_text(&out_dir.join("eval_report.json"), &report::to_json(&stats)?)?;
        write_text(
            &out_dir.join("bias_report.json"),
            &report::to_json(&bias_reports)?,
        )?;
    }
    write_text(&out_dir.join("config.txt"), &settings.echo("runs"))?;

    out!("{eval_text}");
    outln!();
    out!("{bias_text}");
    Ok(())
}
