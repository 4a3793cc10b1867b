//! Finite-difference validation of the analytic gradients.

use crate::error::{Error, Result};
use crate::ingest::Record;
use crate::nametext::tokenize;

use super::{cross_entropy, softmax, Model};

/// Maximum relative error between analytic and central-difference gradients
/// over every parameter touched by one record: the embedding rows of its
/// in-vocabulary tokens and the full output matrix.
///
/// The loss is evaluated in f64 and each difference is divided by the step
/// actually realized after f32 rounding, so the check is meaningful at f32
/// parameter precision.
pub fn gradient_check(model: &Model, record: &Record, epsilon: f64) -> Result<f64> {
    if !epsilon.is_finite() || epsilon <= 0.0 {
        return Err(Error::Config("epsilon must be > 0".into()));
    }
    let ids = model.input_ids(&tokenize(&record.name));
    if ids.is_empty() {
        return Err(Error::Data(
            "gradient check needs at least one in-vocabulary token".into(),
        ));
    }
    let target = model
        .label_id(&record.label)
        .ok_or_else(|| Error::Data(format!("label {:?} not in model", record.label)))?;

    let dim = model.hyperparams().dim;

    // Analytic gradients for this record.
    let hidden = model.hidden(&ids);
    let scores = model.scores(&hidden);
    let mut dscores = softmax(&scores);
    dscores[target] -= 1.0;

    let mut grad_hidden = vec![0.0f64; dim];
    for (j, &g) in dscores.iter().enumerate() {
        for (gh, &w) in grad_hidden.iter_mut().zip(model.output().row(j)) {
            *gh += g * w as f64;
        }
    }

    // Multiplicity of each distinct embedding row (ids are sorted).
    let mut unique: Vec<(usize, usize)> = Vec::new();
    for &id in &ids {
        match unique.last_mut() {
            Some((last, mult)) if *last == id => *mult += 1,
            _ => unique.push((id, 1)),
        }
    }
    let k = ids.len() as f64;

    let mut work = model.clone();
    let mut max_rel = 0.0f64;

    let mut check = |analytic: f64, numeric: f64| {
        let denom = analytic.abs().max(numeric.abs()).max(1e-6);
        let rel = (analytic - numeric).abs() / denom;
        if rel > max_rel {
            max_rel = rel;
        }
    };

    for &(id, mult) in &unique {
        for (d, &gh) in grad_hidden.iter().enumerate() {
            let analytic = gh * mult as f64 / k;
            let numeric =
                central_difference(&mut work, &ids, target, Param::Embedding(id, d), epsilon);
            check(analytic, numeric);
        }
    }
    for (j, &ds) in dscores.iter().enumerate() {
        for (d, &h) in hidden.iter().enumerate() {
            let analytic = ds * h;
            let numeric = central_difference(&mut work, &ids, target, Param::Output(j, d), epsilon);
            check(analytic, numeric);
        }
    }
    Ok(max_rel)
}

enum Param {
    Embedding(usize, usize),
    Output(usize, usize),
}

fn central_difference(
    model: &mut Model,
    ids: &[usize],
    target: usize,
    param: Param,
    epsilon: f64,
) -> f64 {
    let original = read(model, &param);
    let base = original as f64;

    let plus = (base + epsilon) as f32;
    write(model, &param, plus);
    let loss_plus = record_loss(model, ids, target);

    let minus = (base - epsilon) as f32;
    write(model, &param, minus);
    let loss_minus = record_loss(model, ids, target);

    write(model, &param, original);
    (loss_plus - loss_minus) / (plus as f64 - minus as f64)
}

fn read(model: &Model, param: &Param) -> f32 {
    match *param {
        Param::Embedding(i, j) => model.embeddings().get(i, j),
        Param::Output(i, j) => model.output().get(i, j),
    }
}

fn write(model: &mut Model, param: &Param, value: f32) {
    match *param {
        Param::Embedding(i, j) => model.embeddings_mut().set(i, j, value),
        Param::Output(i, j) => model.output_mut().set(i, j, value),
    }
}

fn record_loss(model: &Model, ids: &[usize], target: usize) -> f64 {
    let hidden = model.hidden(ids);
    cross_entropy(&model.scores(&hidden), target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::{Hyperparams, Model, TrainMode};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_model(seed: u64, n_tokens: usize, n_labels: usize, dim: usize) -> Model {
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
    fn analytic_matches_numeric_on_random_model() {
        let model = random_model(11, 8, 5, 10);
        let record = Record::new("tok0 tok3 tok3 oov", "label2");
        let err = gradient_check(&model, &record, 1e-3).unwrap();
        assert!(err < 1e-4, "max relative error {err}");
    }

    #[test]
    fn model_is_unchanged_by_the_check() {
        let model = random_model(12, 6, 4, 8);
        let before = model.clone();
        let record = Record::new("tok1 tok2", "label0");
        gradient_check(&model, &record, 1e-3).unwrap();
        assert_eq!(model, before);
    }

    #[test]
    fn rejects_out_of_vocab_record_and_unknown_label() {
        let model = random_model(13, 4, 3, 6);
        assert!(gradient_check(&model, &Record::new("zzz", "label0"), 1e-3).is_err());
        assert!(gradient_check(&model, &Record::new("tok0", "absent"), 1e-3).is_err());
        assert!(gradient_check(&model, &Record::new("tok0", "label0"), 0.0).is_err());
    }
}
