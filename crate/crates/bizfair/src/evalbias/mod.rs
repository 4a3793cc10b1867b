//! Evaluation: precision/recall at k, per-class breakdowns, aggregation
//! over repeated runs, and the paired-probe imbalance audit.

pub mod report;

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classifier::{Model, TrainMode};
use crate::error::{Error, Result};
use crate::ingest::{LabelSpace, Record};
use crate::nametext::{mask_names, tokenize, MaskPolicy, NameLexicon};

/// A model plus the input transform inference must apply. Models trained on
/// masked text get their inputs masked here; other modes pass through.
pub struct Predictor<'a> {
    model: &'a Model,
    masking: Option<(&'a NameLexicon, MaskPolicy)>,
}

impl<'a> Predictor<'a> {
    pub fn new(model: &'a Model, lexicon: &'a NameLexicon) -> Predictor<'a> {
        let masking = match model.mode() {
            TrainMode::Mask => Some((lexicon, MaskPolicy::default())),
            TrainMode::Raw | TrainMode::Augment => None,
        };
        Predictor { model, masking }
    }

    pub fn model(&self) -> &Model {
        self.model
    }

    /// Tokenize and, when the model calls for it, mask the text.
    pub fn prepare(&self, text: &str) -> crate::nametext::TokenSeq {
        match &self.masking {
            Some((lexicon, policy)) => tokenize(&mask_names(text, lexicon, policy)),
            None => tokenize(text),
        }
    }

    pub fn forward(&self, text: &str) -> crate::classifier::Prediction {
        self.model.forward(&self.prepare(text))
    }

    pub fn top_label(&self, text: &str) -> usize {
        self.forward(text).top_label()
    }
}

/// Precision and recall at a cutoff, in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrAtK {
    pub precision: f64,
    pub recall: f64,
}

/// Micro-averaged precision/recall at k over single-label test records.
/// hits = records whose true label appears in the top k; precision divides
/// by k*n (k slots per record), recall by n.
pub fn precision_recall_at_k(predictor: &Predictor, test: &[Record], k: usize) -> Result<PrAtK> {
    if test.is_empty() {
        return Err(Error::Data("evaluation set is empty".into()));
    }
    let model = predictor.model();
    if k < 1 || k > model.labels().len() {
        return Err(Error::Config(format!(
            "k must be between 1 and {} (got {k})",
            model.labels().len()
        )));
    }
    let mut hits = 0usize;
    for record in test {
        let label = match model.label_id(&record.label) {
            Some(id) => id,
            None => continue, // unseen label can never be predicted; counts in n
        };
        if predictor.forward(&record.name).hit_within(label, k) {
            hits += 1;
        }
    }
    let n = test.len() as f64;
    Ok(PrAtK {
        precision: 100.0 * hits as f64 / (k as f64 * n),
        recall: 100.0 * hits as f64 / n,
    })
}

/// One-vs-rest precision/recall for a single high-level class. `None` when
/// undefined (no prediction in the class for precision, no truth in the
/// class for recall).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassPr {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub support: usize,
}

/// Top-1 one-vs-rest precision/recall per high-level class, in percent.
pub fn per_class_pr(
    predictor: &Predictor,
    test: &[Record],
    space: &LabelSpace,
) -> Result<BTreeMap<String, ClassPr>> {
    if test.is_empty() {
        return Err(Error::Data("evaluation set is empty".into()));
    }
    let model = predictor.model();
    let classes = crate::ingest::HighLevelClass::ALL;
    let mut tp: BTreeMap<&str, usize> = BTreeMap::new();
    let mut pred_n: BTreeMap<&str, usize> = BTreeMap::new();
    let mut true_n: BTreeMap<&str, usize> = BTreeMap::new();
    for class in classes {
        tp.insert(class.as_str(), 0);
        pred_n.insert(class.as_str(), 0);
        true_n.insert(class.as_str(), 0);
    }

    for record in test {
        let true_class = space.high_level(&record.label)?.as_str();
        let predicted_label = model.label(predictor.top_label(&record.name));
        let pred_class = space.high_level(predicted_label)?.as_str();
        *true_n.get_mut(true_class).unwrap() += 1;
        *pred_n.get_mut(pred_class).unwrap() += 1;
        if true_class == pred_class {
            *tp.get_mut(true_class).unwrap() += 1;
        }
    }

    let mut out = BTreeMap::new();
    for class in classes {
        let name = class.as_str();
        let hits = tp[name] as f64;
        let precision = match pred_n[name] {
            0 => None,
            n => Some(100.0 * hits / n as f64),
        };
        let recall = match true_n[name] {
            0 => None,
            n => Some(100.0 * hits / n as f64),
        };
        out.insert(
            name.to_string(),
            ClassPr {
                precision,
                recall,
                support: true_n[name],
            },
        );
    }
    Ok(out)
}

/// Full evaluation of one model on one test set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mode: String,
    pub n_test: usize,
    pub at_1: PrAtK,
    pub at_2: PrAtK,
    pub per_class: BTreeMap<String, ClassPr>,
}

pub fn evaluate(predictor: &Predictor, test: &[Record], space: &LabelSpace) -> Result<EvalReport> {
    let at_1 = precision_recall_at_k(predictor, test, 1)?;
    let k2 = 2.min(predictor.model().labels().len());
    let at_2 = precision_recall_at_k(predictor, test, k2)?;
    let per_class = per_class_pr(predictor, test, space)?;
    Ok(EvalReport {
        mode: predictor.model().mode().as_str().to_string(),
        n_test: test.len(),
        at_1,
        at_2,
        per_class,
    })
}

/// Mean and sample standard deviation (n-1 denominator; 0 for n=1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
}

pub fn mean_sd(values: &[f64]) -> Result<MeanSd> {
    if values.is_empty() {
        return Err(Error::Data("mean of an empty sample".into()));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    Ok(MeanSd { mean, sd })
}

/// Aggregate of the evaluation metrics across runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub at_1: MeanSd,
    pub at_2_precision: MeanSd,
    pub at_2_recall: MeanSd,
    pub per_class_recall: BTreeMap<String, Option<MeanSd>>,
    pub per_class_precision: BTreeMap<String, Option<MeanSd>>,
    pub runs: usize,
}

/// Mean and spread of the evaluation metrics over repeated runs of the same
/// configuration. Per-class entries stay `None` when undefined in any run.
pub fn aggregate_runs(reports: &[EvalReport]) -> Result<RunStats> {
    if reports.is_empty() {
        return Err(Error::Data("no run reports to aggregate".into()));
    }
    let at_1 = mean_sd(&reports.iter().map(|r| r.at_1.recall).collect::<Vec<_>>())?;
    let at_2_precision = mean_sd(&reports.iter().map(|r| r.at_2.precision).collect::<Vec<_>>())?;
    let at_2_recall = mean_sd(&reports.iter().map(|r| r.at_2.recall).collect::<Vec<_>>())?;

    let mut per_class_recall = BTreeMap::new();
    let mut per_class_precision = BTreeMap::new();
    for class in reports[0].per_class.keys() {
        let recalls: Option<Vec<f64>> = reports
            .iter()
            .map(|r| r.per_class.get(class).and_then(|c| c.recall))
            .collect();
        let precisions: Option<Vec<f64>> = reports
            .iter()
            .map(|r| r.per_class.get(class).and_then(|c| c.precision))
            .collect();
        per_class_recall.insert(
            class.clone(),
            match recalls {
                Some(v) => Some(mean_sd(&v)?),
                None => None,
            },
        );
        per_class_precision.insert(
            class.clone(),
            match precisions {
                Some(v) => Some(mean_sd(&v)?),
                None => None,
            },
        );
    }
    Ok(RunStats {
        at_1,
        at_2_precision,
        at_2_recall,
        per_class_recall,
        per_class_precision,
        runs: reports.len(),
    })
}

/// Paired-sample imbalance: per-label absolute count difference between the
/// two probe sides, differences under `min_count` zeroed, summed and scaled
/// by 100/n. Both sides must contain exactly `n` predictions.
pub fn bias_imbalance(
    counts_a: &BTreeMap<usize, usize>,
    counts_b: &BTreeMap<usize, usize>,
    n: usize,
    min_count: usize,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::Data("imbalance over zero probes".into()));
    }
    let total = |m: &BTreeMap<usize, usize>| m.values().sum::<usize>();
    if total(counts_a) != n || total(counts_b) != n {
        return Err(Error::Config(format!(
            "probe counts do not sum to n={n} (got {} and {})",
            total(counts_a),
            total(counts_b)
        )));
    }
    let mut labels: Vec<usize> = counts_a.keys().chain(counts_b.keys()).copied().collect();
    labels.sort_unstable();
    labels.dedup();
    let mut sum = 0usize;
    for label in labels {
        let a = counts_a.get(&label).copied().unwrap_or(0);
        let b = counts_b.get(&label).copied().unwrap_or(0);
        let d = a.abs_diff(b);
        if d >= min_count {
            sum += d;
        }
    }
    Ok(100.0 * sum as f64 / n as f64)
}

/// Probe pair: the same text carrying a name from side a and side b.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbePair {
    pub a: String,
    pub b: String,
}

/// Possessive probes over random dictionary words: `<Name>'s <Word>` with
/// the word lowercased then first-letter-capitalized; the word is shared
/// within a pair, names are drawn uniformly and independently per side.
pub fn gen_probes_words(
    names_a: &[String],
    names_b: &[String],
    words: &[String],
    n: usize,
    seed: u64,
) -> Result<Vec<ProbePair>> {
    if names_a.is_empty() || names_b.is_empty() {
        return Err(Error::Data("probe name list is empty".into()));
    }
    if words.is_empty() {
        return Err(Error::Data("probe word list is empty".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let word = capitalize(&words[rng.gen_range(0..words.len())].to_lowercase());
        let a = &names_a[rng.gen_range(0..names_a.len())];
        let b = &names_b[rng.gen_range(0..names_b.len())];
        out.push(ProbePair {
            a: format!("{a}'s {word}"),
            b: format!("{b}'s {word}"),
        });
    }
    Ok(out)
}

/// Possessive probes over existing texts: one pair per text,
/// `<Name>'s <text>`, the names drawn uniformly per side.
pub fn gen_probes_texts(
    names_a: &[String],
    names_b: &[String],
    texts: &[String],
    seed: u64,
) -> Result<Vec<ProbePair>> {
    if names_a.is_empty() || names_b.is_empty() {
        return Err(Error::Data("probe name list is empty".into()));
    }
    if texts.is_empty() {
        return Err(Error::Data("probe text list is empty".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(texts.len());
    for text in texts {
        let a = &names_a[rng.gen_range(0..names_a.len())];
        let b = &names_b[rng.gen_range(0..names_b.len())];
        out.push(ProbePair {
            a: format!("{a}'s {text}"),
            b: format!("{b}'s {text}"),
        });
    }
    Ok(out)
}

fn capitalize(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Predict every probe side and compare label distributions.
pub fn imbalance_for_pairs(
    predictor: &Predictor,
    pairs: &[ProbePair],
    min_count: usize,
) -> Result<f64> {
    let mut counts_a: BTreeMap<usize, usize> = BTreeMap::new();
    let mut counts_b: BTreeMap<usize, usize> = BTreeMap::new();
    for pair in pairs {
        *counts_a.entry(predictor.top_label(&pair.a)).or_insert(0) += 1;
        *counts_b.entry(predictor.top_label(&pair.b)).or_insert(0) += 1;
    }
    bias_imbalance(&counts_a, &counts_b, pairs.len(), min_count)
}

/// Where probe remainders come from: random dictionary words (approach 1)
/// or the test-set texts (approach 2).
#[derive(Debug, Clone, PartialEq)]
pub enum ProbeSource {
    RandomWords { words: Vec<String>, n: usize },
    TestTexts(Vec<String>),
}

impl ProbeSource {
    pub fn approach(&self) -> u8 {
        match self {
            ProbeSource::RandomWords { .. } => 1,
            ProbeSource::TestTexts(_) => 2,
        }
    }

    fn pairs_per_side(&self) -> usize {
        match self {
            ProbeSource::RandomWords { n, .. } => *n,
            ProbeSource::TestTexts(texts) => texts.len(),
        }
    }
}

/// Audit settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditConfig {
    pub min_count: usize,
    pub seed: u64,
}

impl Default for AuditConfig {
    fn default() -> Self {
        AuditConfig {
            min_count: 5,
            seed: 42,
        }
    }
}

/// One audit row: a name-list pair with per-model imbalances and their
/// mean/spread across models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasRow {
    pub pair: String,
    pub per_model: Vec<f64>,
    pub mean: f64,
    pub sd: f64,
}

/// Audit result over the six standard list pairs plus the across-pairs
/// average row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    pub mode: String,
    pub approach: u8,
    pub n_per_side: usize,
    pub min_count: usize,
    pub rows: Vec<BiasRow>,
    pub average: BiasRow,
}

/// Stable per-pair seed derivation so each list pair gets its own probe
/// stream while the whole audit stays reproducible from one seed.
fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Run the audit: every standard list pair against every model. The probe
/// set for a pair is shared by all models, so the spread column reflects
/// model variance only. Mask-mode models see masked probes via their
/// predictors, which is what drives their rows to zero when every probe
/// name is lexicon-covered.
pub fn bias_audit(
    predictors: &[Predictor],
    lexicon: &NameLexicon,
    source: &ProbeSource,
    config: &AuditConfig,
) -> Result<BiasReport> {
    if predictors.is_empty() {
        return Err(Error::Data("bias audit needs at least one model".into()));
    }
    if source.pairs_per_side() == 0 {
        return Err(Error::Config("probe count must be >= 1".into()));
    }
    let mode = predictors[0].model().mode();
    let pairs = crate::nametext::ListPair::standard();
    let mut rows = Vec::with_capacity(pairs.len());
    for (pair_index, pair) in pairs.iter().enumerate() {
        let names_a = lexicon.eval_lists().get(pair.a);
        let names_b = lexicon.eval_lists().get(pair.b);
        let pair_seed = derive_seed(config.seed, pair_index as u64);
        let probes = match source {
            ProbeSource::RandomWords { words, n } => {
                gen_probes_words(names_a, names_b, words, *n, pair_seed)?
            }
            ProbeSource::TestTexts(texts) => gen_probes_texts(names_a, names_b, texts, pair_seed)?,
        };
        let per_model: Vec<f64> = predictors
            .iter()
            .map(|p| imbalance_for_pairs(p, &probes, config.min_count))
            .collect::<Result<_>>()?;
        let stats = mean_sd(&per_model)?;
        rows.push(BiasRow {
            pair: pair.label(),
            per_model,
            mean: stats.mean,
            sd: stats.sd,
        });
    }

    // Average row: each model's across-pairs mean, then spread over models.
    let per_model_avg: Vec<f64> = (0..predictors.len())
        .map(|m| rows.iter().map(|r| r.per_model[m]).sum::<f64>() / rows.len() as f64)
        .collect();
    let stats = mean_sd(&per_model_avg)?;
    let average = BiasRow {
        pair: "Average".into(),
        per_model: per_model_avg,
        mean: stats.mean,
        sd: stats.sd,
    };

    Ok(BiasReport {
        mode: mode.as_str().to_string(),
        approach: source.approach(),
        n_per_side: source.pairs_per_side(),
        min_count: config.min_count,
        rows,
        average,
    })
}
