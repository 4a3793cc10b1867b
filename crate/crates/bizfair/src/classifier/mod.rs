//! Linear bag-of-tokens classifier: averaged token embeddings scored
//! against per-label weight vectors through a softmax, trained by SGD with
//! a linearly decaying learning rate.

mod gradcheck;
mod io;

pub use gradcheck::gradient_check;

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Record;
use crate::nametext::{tokenize, TokenSeq};

/// Which input transform the model was trained with. Stored in the model
/// file so inference applies the same transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrainMode {
    Raw,
    Mask,
    Augment,
}

impl TrainMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            TrainMode::Raw => "raw",
            TrainMode::Mask => "mask",
            TrainMode::Augment => "augment",
        }
    }

    pub fn parse(s: &str) -> Result<TrainMode> {
        match s {
            "raw" => Ok(TrainMode::Raw),
            "mask" => Ok(TrainMode::Mask),
            "augment" => Ok(TrainMode::Augment),
            other => Err(Error::Config(format!(
                "unknown mode {other:?} (expected raw, mask, or augment)"
            ))),
        }
    }
}

impl std::fmt::Display for TrainMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Training hyperparameters. `window` is recorded for compatibility but has
/// no effect in supervised training; hash buckets give out-of-vocabulary
/// tokens an embedding row and default off.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub dim: usize,
    pub lr: f64,
    pub epochs: usize,
    pub window: usize,
    pub min_count: u64,
    pub bucket_count: usize,
    pub use_hash_buckets: bool,
    pub seed: u64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            dim: 100,
            lr: 0.2,
            epochs: 6,
            window: 5,
            min_count: 1,
            bucket_count: 2_000_000,
            use_hash_buckets: false,
            seed: 42,
        }
    }
}

impl Hyperparams {
    fn validate(&self) -> Result<()> {
        if self.dim < 1 {
            return Err(Error::Config("dim must be >= 1".into()));
        }
        if !self.lr.is_finite() || self.lr <= 0.0 {
            return Err(Error::Config("learning rate must be > 0".into()));
        }
        if self.epochs < 1 {
            return Err(Error::Config("epochs must be >= 1".into()));
        }
        if self.use_hash_buckets && self.bucket_count < 1 {
            return Err(Error::Config("bucket count must be >= 1".into()));
        }
        Ok(())
    }
}

/// Token vocabulary: dense ids in first-seen order, with frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocab {
    tokens: Vec<String>,
    freqs: Vec<u64>,
    index: HashMap<String, usize>,
}

impl Vocab {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: usize) -> &str {
        &self.tokens[id]
    }

    pub fn freq(&self, id: usize) -> u64 {
        self.freqs[id]
    }

    pub(crate) fn from_parts(tokens: Vec<String>, freqs: Vec<u64>) -> Vocab {
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Vocab {
            tokens,
            freqs,
            index,
        }
    }
}

/// Count tokens over the training records and keep those seen at least
/// `min_count` times, ids assigned in first-seen order.
pub fn build_vocab(train: &[Record], hp: &Hyperparams) -> Result<Vocab> {
    let mut order: Vec<String> = Vec::new();
    let mut counts: HashMap<String, u64> = HashMap::new();
    for record in train {
        for token in record.name.split_whitespace() {
            match counts.get_mut(token) {
                Some(n) => *n += 1,
                None => {
                    counts.insert(token.to_string(), 1);
                    order.push(token.to_string());
                }
            }
        }
    }
    let mut tokens = Vec::new();
    let mut freqs = Vec::new();
    for token in order {
        let n = counts[&token];
        if n >= hp.min_count {
            tokens.push(token);
            freqs.push(n);
        }
    }
    if tokens.is_empty() {
        return Err(Error::Data(
            "empty vocabulary: no token meets the frequency threshold".into(),
        ));
    }
    Ok(Vocab::from_parts(tokens, freqs))
}

/// Dense row-major f32 matrix.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f32>,
}

impl Matrix {
    pub(crate) fn zeros(rows: usize, cols: usize) -> Matrix {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub(crate) fn from_vec(rows: usize, cols: usize, data: Vec<f32>) -> Result<Matrix> {
        if data.len() != rows * cols {
            return Err(Error::Data(format!(
                "matrix data length {} does not match {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub(crate) fn rows(&self) -> usize {
        self.rows
    }

    pub(crate) fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub(crate) fn row_mut(&mut self, i: usize) -> &mut [f32] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub(crate) fn get(&self, i: usize, j: usize) -> f32 {
        self.data[i * self.cols + j]
    }

    pub(crate) fn set(&mut self, i: usize, j: usize, v: f32) {
        self.data[i * self.cols + j] = v;
    }

    pub(crate) fn as_slice(&self) -> &[f32] {
        &self.data
    }

    fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// A ranked prediction over all labels. Probabilities are non-increasing;
/// ties are broken by ascending label index.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    ranked: Vec<(usize, f64)>,
}

impl Prediction {
    /// (label index, probability) pairs, best first.
    pub fn ranked(&self) -> &[(usize, f64)] {
        &self.ranked
    }

    /// Label index of the highest-probability label.
    pub fn top_label(&self) -> usize {
        self.ranked[0].0
    }

    /// True label index found within the first k entries?
    pub fn hit_within(&self, label: usize, k: usize) -> bool {
        self.ranked.iter().take(k).any(|&(id, _)| id == label)
    }
}

/// A trained model: vocabulary, label list, input embedding matrix and
/// output weight matrix, plus the hyperparameters and mode it was trained
/// with.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    hp: Hyperparams,
    mode: TrainMode,
    vocab: Vocab,
    labels: Vec<String>,
    label_index: HashMap<String, usize>,
    embeddings: Matrix,
    output: Matrix,
}

impl Model {
    /// Assemble a model from explicit parts. `embeddings` must have
    /// `vocab_len (+ bucket_count when enabled)` rows and `output` one row
    /// per label, both of width `hp.dim`; entries must be finite.
    pub fn from_parts(
        hp: Hyperparams,
        mode: TrainMode,
        vocab_tokens: Vec<String>,
        vocab_freqs: Vec<u64>,
        labels: Vec<String>,
        embeddings: Vec<f32>,
        output: Vec<f32>,
    ) -> Result<Model> {
        hp.validate()?;
        if vocab_tokens.len() != vocab_freqs.len() {
            return Err(Error::Data("vocab token/frequency length mismatch".into()));
        }
        if labels.len() < 2 {
            return Err(Error::Data("model needs at least 2 labels".into()));
        }
        let vocab = Vocab::from_parts(vocab_tokens, vocab_freqs);
        let e_rows = vocab.len()
            + if hp.use_hash_buckets {
                hp.bucket_count
            } else {
                0
            };
        let embeddings = Matrix::from_vec(e_rows, hp.dim, embeddings)?;
        let output = Matrix::from_vec(labels.len(), hp.dim, output)?;
        if !embeddings.all_finite() || !output.all_finite() {
            return Err(Error::Data(
                "model matrices contain non-finite values".into(),
            ));
        }
        let label_index = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), i))
            .collect();
        Ok(Model {
            hp,
            mode,
            vocab,
            labels,
            label_index,
            embeddings,
            output,
        })
    }

    pub fn hyperparams(&self) -> &Hyperparams {
        &self.hp
    }

    pub fn mode(&self) -> TrainMode {
        self.mode
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, id: usize) -> &str {
        &self.labels[id]
    }

    pub fn label_id(&self, label: &str) -> Option<usize> {
        self.label_index.get(label).copied()
    }

    pub(crate) fn embeddings(&self) -> &Matrix {
        &self.embeddings
    }

    pub(crate) fn embeddings_mut(&mut self) -> &mut Matrix {
        &mut self.embeddings
    }

    pub(crate) fn output(&self) -> &Matrix {
        &self.output
    }

    pub(crate) fn output_mut(&mut self) -> &mut Matrix {
        &mut self.output
    }

    /// Embedding row ids for the given tokens, sorted, with multiplicity.
    /// Out-of-vocabulary tokens are dropped unless hash buckets are enabled.
    pub(crate) fn input_ids(&self, tokens: &TokenSeq) -> Vec<usize> {
        let mut ids: Vec<usize> = Vec::with_capacity(tokens.len());
        for token in tokens.tokens() {
            if let Some(id) = self.vocab.id_of(token) {
                ids.push(id);
            } else if self.hp.use_hash_buckets {
                ids.push(
                    self.vocab.len() + (fnv1a64(token) % self.hp.bucket_count as u64) as usize,
                );
            }
        }
        // Sorted so the averaging order is canonical: the forward pass is
        // bit-identical under any permutation of the input tokens.
        ids.sort_unstable();
        ids
    }

    /// Mean of the embedding rows (64-bit accumulation); zero vector when no
    /// token is in vocabulary.
    pub(crate) fn hidden(&self, ids: &[usize]) -> Vec<f64> {
        let mut hidden = vec![0.0f64; self.hp.dim];
        if ids.is_empty() {
            return hidden;
        }
        for &id in ids {
            for (h, &e) in hidden.iter_mut().zip(self.embeddings.row(id)) {
                *h += e as f64;
            }
        }
        let inv = 1.0 / ids.len() as f64;
        for h in hidden.iter_mut() {
            *h *= inv;
        }
        hidden
    }

    pub(crate) fn scores(&self, hidden: &[f64]) -> Vec<f64> {
        (0..self.labels.len())
            .map(|j| {
                self.output
                    .row(j)
                    .iter()
                    .zip(hidden)
                    .map(|(&w, &h)| w as f64 * h)
                    .sum()
            })
            .collect()
    }

    /// Score a tokenized input against every label.
    pub fn forward(&self, tokens: &TokenSeq) -> Prediction {
        let ids = self.input_ids(tokens);
        let hidden = self.hidden(&ids);
        let probs = softmax(&self.scores(&hidden));
        let mut ranked: Vec<(usize, f64)> = probs.into_iter().enumerate().collect();
        ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        Prediction { ranked }
    }

    /// The k best (label, probability) pairs for a raw text.
    pub fn predict_topk(&self, text: &str, k: usize) -> Result<Vec<(&str, f64)>> {
        if k < 1 || k > self.labels.len() {
            return Err(Error::Config(format!(
                "k must be between 1 and {} (got {k})",
                self.labels.len()
            )));
        }
        let prediction = self.forward(&tokenize(text));
        Ok(prediction
            .ranked()
            .iter()
            .take(k)
            .map(|&(id, p)| (self.label(id), p))
            .collect())
    }
}

pub(crate) fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|&s| (s - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Cross-entropy loss for scores against a target label, computed via
/// log-sum-exp so it stays finite for finite scores.
pub(crate) fn cross_entropy(scores: &[f64], target: usize) -> f64 {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse: f64 = scores.iter().map(|&s| (s - max).exp()).sum::<f64>().ln() + max;
    lse - scores[target]
}

fn fnv1a64(s: &str) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for byte in s.bytes() {
        hash ^= byte as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

/// Per-epoch training diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Mean cross-entropy per epoch (over records that produced an update).
    pub epoch_losses: Vec<f64>,
    /// Records skipped because no token was in vocabulary.
    pub skipped_oov: usize,
    pub records: usize,
}

/// Train a model. Embeddings start uniform in [-1/dim, +1/dim] from the
/// seed, output weights start at zero; records are visited in a seeded
/// shuffled order each epoch; the learning rate decays linearly to zero
/// over all processed records.
pub fn train(
    records: &[Record],
    hp: &Hyperparams,
    mode: TrainMode,
) -> Result<(Model, TrainReport)> {
    hp.validate()?;
    let vocab = build_vocab(records, hp)?;

    let mut labels: Vec<String> = Vec::new();
    let mut label_index: HashMap<String, usize> = HashMap::new();
    for record in records {
        if !label_index.contains_key(&record.label) {
            label_index.insert(record.label.clone(), labels.len());
            labels.push(record.label.clone());
        }
    }
    if labels.len() < 2 {
        return Err(Error::Data(
            "training data must contain at least 2 distinct labels".into(),
        ));
    }

    let dim = hp.dim;
    let e_rows = vocab.len()
        + if hp.use_hash_buckets {
            hp.bucket_count
        } else {
            0
        };
    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
    let bound = 1.0f32 / dim as f32;
    let mut embeddings = Matrix::zeros(e_rows, dim);
    for i in 0..e_rows {
        for j in 0..dim {
            embeddings.set(i, j, rng.gen_range(-bound..bound));
        }
    }
    let output = Matrix::zeros(labels.len(), dim);

    let mut model = Model {
        hp: hp.clone(),
        mode,
        vocab,
        labels,
        label_index,
        embeddings,
        output,
    };

    let token_ids: Vec<Vec<usize>> = records
        .iter()
        .map(|r| model.input_ids(&tokenize(&r.name)))
        .collect();
    let target_ids: Vec<usize> = records
        .iter()
        .map(|r| model.label_index[&r.label])
        .collect();

    let total_steps = (hp.epochs * records.len()) as f64;
    let mut processed = 0usize;
    let mut skipped_oov = 0usize;
    let mut epoch_losses = Vec::with_capacity(hp.epochs);
    let mut order: Vec<usize> = (0..records.len()).collect();

    for epoch in 0..hp.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0f64;
        let mut loss_count = 0usize;
        for &i in &order {
            let lr = hp.lr * (1.0 - processed as f64 / total_steps);
            processed += 1;
            let ids = &token_ids[i];
            if ids.is_empty() {
                if epoch == 0 {
                    skipped_oov += 1;
                }
                continue;
            }
            let loss = sgd_step(&mut model, ids, target_ids[i], lr);
            if !loss.is_finite() {
                return Err(Error::Training(format!(
                    "non-finite loss at epoch {} record {i} ({:?})",
                    epoch + 1,
                    records[i].name
                )));
            }
            loss_sum += loss;
            loss_count += 1;
        }
        if loss_count == 0 {
            return Err(Error::Training(
                "no record produced an update (all out of vocabulary)".into(),
            ));
        }
        epoch_losses.push(loss_sum / loss_count as f64);
    }

    let report = TrainReport {
        epoch_losses,
        skipped_oov,
        records: records.len(),
    };
    Ok((model, report))
}

/// One SGD update on a single record; returns its pre-update loss.
fn sgd_step(model: &mut Model, ids: &[usize], target: usize, lr: f64) -> f64 {
    let hidden = model.hidden(ids);
    let scores = model.scores(&hidden);
    let loss = cross_entropy(&scores, target);

    // d(loss)/d(scores) = softmax(scores) - onehot(target)
    let mut dscores = softmax(&scores);
    dscores[target] -= 1.0;

    // Gradient w.r.t. hidden uses the pre-update output weights.
    let dim = model.hp.dim;
    let mut grad_hidden = vec![0.0f64; dim];
    for (j, &g) in dscores.iter().enumerate() {
        for (gh, &w) in grad_hidden.iter_mut().zip(model.output.row(j)) {
            *gh += g * w as f64;
        }
    }

    for (j, &g) in dscores.iter().enumerate() {
        let row = model.output.row_mut(j);
        for (w, &h) in row.iter_mut().zip(&hidden) {
            *w = (*w as f64 - lr * g * h) as f32;
        }
    }

    let scale = lr / ids.len() as f64;
    for &id in ids {
        let row = model.embeddings.row_mut(id);
        for (e, &gh) in row.iter_mut().zip(&grad_hidden) {
            *e = (*e as f64 - scale * gh) as f32;
        }
    }
    loss
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec(name: &str, label: &str) -> Record {
        Record::new(name, label)
    }

    pub(crate) fn tiny_model(seed: u64, n_tokens: usize, n_labels: usize, dim: usize) -> Model {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tokens: Vec<String> = (0..n_tokens).map(|i| format!("tok{i}")).collect();
        let freqs = vec![1u64; n_tokens];
        let labels: Vec<String> = (0..n_labels).map(|i| format!("label{i}")).collect();
        let embeddings: Vec<f32> = (0..n_tokens * dim)
            .map(|_| rng.gen_range(-0.5..0.5))
            .collect();
        let output: Vec<f32> = (0..n_labels * dim)
            .map(|_| rng.gen_range(-0.5..0.5))
            .collect();
        let hp = Hyperparams {
            dim,
            ..Hyperparams::default()
        };
        Model::from_parts(
            hp,
            TrainMode::Raw,
            tokens,
            freqs,
            labels,
            embeddings,
            output,
        )
        .unwrap()
    }

    #[test]
    fn build_vocab_first_seen_order_and_threshold() {
        let records = vec![rec("a b", "x"), rec("b c", "y")];
        let hp = Hyperparams::default();
        let vocab = build_vocab(&records, &hp).unwrap();
        assert_eq!(vocab.len(), 3);
        assert_eq!(vocab.id_of("a"), Some(0));
        assert_eq!(vocab.id_of("b"), Some(1));
        assert_eq!(vocab.id_of("c"), Some(2));
        assert_eq!(vocab.freq(1), 2);

        let hp2 = Hyperparams {
            min_count: 2,
            ..Hyperparams::default()
        };
        let vocab2 = build_vocab(&records, &hp2).unwrap();
        assert_eq!(vocab2.len(), 1);
        assert_eq!(vocab2.id_of("b"), Some(0));

        let hp3 = Hyperparams {
            min_count: 10,
            ..Hyperparams::default()
        };
        assert!(build_vocab(&records, &hp3).is_err());
    }

    #[test]
    fn all_oov_input_gives_exact_uniform() {
        let model = tiny_model(1, 4, 5, 8);
        let prediction = model.forward(&tokenize("nothing here matches"));
        for &(_, p) in prediction.ranked() {
            assert_eq!(p, 1.0 / 5.0);
        }
        // Ties broken by label index.
        let order: Vec<usize> = prediction.ranked().iter().map(|&(id, _)| id).collect();
        assert_eq!(order, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn equal_output_rows_give_half_half() {
        let hp = Hyperparams {
            dim: 4,
            ..Hyperparams::default()
        };
        let embeddings = vec![0.3f32; 2 * 4];
        let output = vec![0.7f32; 2 * 4];
        let model = Model::from_parts(
            hp,
            TrainMode::Raw,
            vec!["a".into(), "b".into()],
            vec![1, 1],
            vec!["x".into(), "y".into()],
            embeddings,
            output,
        )
        .unwrap();
        let prediction = model.forward(&tokenize("a b"));
        assert_eq!(prediction.ranked()[0].1, 0.5);
        assert_eq!(prediction.ranked()[1].1, 0.5);
    }

    #[test]
    fn training_is_deterministic() {
        let records: Vec<Record> = (0..20)
            .map(|i| {
                rec(
                    &format!("tok{} shared", i % 6),
                    if i % 2 == 0 { "x" } else { "y" },
                )
            })
            .collect();
        let hp = Hyperparams {
            dim: 16,
            seed: 5,
            ..Hyperparams::default()
        };
        let (m1, r1) = train(&records, &hp, TrainMode::Raw).unwrap();
        let (m2, r2) = train(&records, &hp, TrainMode::Raw).unwrap();
        assert_eq!(m1, m2);
        assert_eq!(r1, r2);
    }

    #[test]
    fn separable_records_reach_full_training_accuracy() {
        let mut records = Vec::new();
        for (label, toks) in [
            ("a", "alpha ash"),
            ("b", "birch bay"),
            ("c", "cedar cove"),
            ("d", "dune drift"),
        ] {
            for i in 0..3 {
                records.push(rec(&format!("{toks} v{i}"), label));
            }
        }
        let hp = Hyperparams {
            dim: 32,
            seed: 9,
            ..Hyperparams::default()
        };
        let (model, report) = train(&records, &hp, TrainMode::Raw).unwrap();
        for record in &records {
            let top = model.predict_topk(&record.name, 1).unwrap();
            assert_eq!(top[0].0, record.label);
        }
        // Mean loss should not increase epoch over epoch on this corpus.
        for pair in report.epoch_losses.windows(2) {
            assert!(
                pair[1] <= pair[0] + 1e-9,
                "losses: {:?}",
                report.epoch_losses
            );
        }
    }

    #[test]
    fn oov_records_are_skipped_with_counter() {
        let records = vec![rec("a", "x"), rec("b", "y")];
        let hp = Hyperparams {
            min_count: 1,
            dim: 4,
            ..Hyperparams::default()
        };
        // Manufacture OOV by training on a vocab that excludes one record.
        let train_recs = vec![rec("a", "x"), rec("a", "x"), rec("b", "y"), rec("zz", "x")];
        let hp2 = Hyperparams { min_count: 2, ..hp };
        let (_, report) = train(&train_recs, &hp2, TrainMode::Raw).unwrap();
        // Only "a" survives min_count=2; records "b" and "zz" are OOV.
        assert_eq!(report.skipped_oov, 2);
        drop(records);
    }

    #[test]
    fn predict_topk_validates_k() {
        let model = tiny_model(2, 3, 4, 8);
        assert!(model.predict_topk("tok0", 0).is_err());
        assert!(model.predict_topk("tok0", 5).is_err());
        assert_eq!(model.predict_topk("tok0", 4).unwrap().len(), 4);
    }

    #[test]
    fn hash_buckets_give_oov_tokens_an_embedding() {
        let hp = Hyperparams {
            dim: 4,
            bucket_count: 16,
            use_hash_buckets: true,
            seed: 3,
            ..Hyperparams::default()
        };
        let records = vec![rec("a known", "x"), rec("b known", "y")];
        let (model, _) = train(&records, &hp, TrainMode::Raw).unwrap();
        let ids = model.input_ids(&tokenize("unseen"));
        assert_eq!(ids.len(), 1);
        assert!(ids[0] >= model.vocab().len());
        assert!(ids[0] < model.vocab().len() + 16);
    }

    proptest! {
        #[test]
        fn softmax_is_a_distribution(scores in proptest::collection::vec(-30.0f64..30.0, 1..40)) {
            let probs = softmax(&scores);
            let sum: f64 = probs.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-6);
            for p in probs {
                prop_assert!((0.0..=1.0).contains(&p));
            }
        }

        #[test]
        fn forward_is_order_invariant(seed in 0u64..500, perm_seed in 0u64..500) {
            let model = tiny_model(seed, 6, 4, 8);
            let mut tokens: Vec<String> =
                vec!["tok0", "tok1", "tok2", "oov", "tok3"].into_iter().map(String::from).collect();
            let base = model.forward(&TokenSeq::from_tokens(tokens.clone()));
            let mut rng = ChaCha8Rng::seed_from_u64(perm_seed);
            tokens.shuffle(&mut rng);
            let shuffled = model.forward(&TokenSeq::from_tokens(tokens));
            prop_assert_eq!(base, shuffled);
        }
    }
}
