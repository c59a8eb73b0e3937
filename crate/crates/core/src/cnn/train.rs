use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::eval::{evaluate, EvaluationReport};
use super::model::{accumulate, build_model, Model};
use super::spec::ArchitectureSpec;
use crate::error::{Error, Result};
use crate::rng::seeded;
use crate::signal::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdamParams {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        AdamParams {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Adam with bias-corrected moment estimates.
#[derive(Debug, Clone)]
pub struct Adam {
    hyper: AdamParams,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(n: usize, hyper: AdamParams) -> Self {
        Adam {
            hyper,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    pub fn step(&mut self, theta: &mut [f64], grad: &[f64], lr: f64) {
        let AdamParams {
            beta1,
            beta2,
            epsilon,
        } = self.hyper;
        self.t += 1;
        let c1 = 1.0 - beta1.powi(self.t);
        let c2 = 1.0 - beta2.powi(self.t);
        for (((p, g), m), v) in theta.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= lr * m_hat / (v_hat.sqrt() + epsilon);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub adam: AdamParams,
    pub batch_size: usize,
    pub seed: u64,
    /// Number of folds for [`cross_validate`]; plain training ignores it.
    pub folds: Option<usize>,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            epochs: 100,
            learning_rate: 0.001,
            adam: AdamParams::default(),
            batch_size: 32,
            seed: 0,
            folds: None,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate {} must be positive",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        let AdamParams {
            beta1,
            beta2,
            epsilon,
        } = self.adam;
        if !(0.0..1.0).contains(&beta1) || !(0.0..1.0).contains(&beta2) || !(epsilon > 0.0) {
            return Err(Error::Config("Adam betas must lie in [0, 1) and epsilon be positive".into()));
        }
        if matches!(self.folds, Some(k) if k < 2) {
            return Err(Error::Config("cross-validation needs at least 2 folds".into()));
        }
        Ok(())
    }
}

/// A trained model and its mean training loss per epoch.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub model: Model,
    pub epoch_losses: Vec<f64>,
}

/// Trains with mini-batch Adam on mean cross-entropy. The input model is
/// left untouched; the returned model starts from its weights.
pub fn train(model: &Model, ds: &Dataset, cfg: &TrainingConfig) -> Result<TrainedModel> {
    cfg.validate()?;
    fit(model, ds, cfg)
}

/// Continues optimizing every layer of an already trained model on a
/// (typically small) core-set. Adam moments start fresh.
pub fn fine_tune(model: &Model, coreset: &Dataset, cfg: &TrainingConfig) -> Result<TrainedModel> {
    cfg.validate()?;
    fit(model, coreset, cfg)
}

fn check_compatible(model: &Model, ds: &Dataset) -> Result<()> {
    if ds.is_empty() {
        return Err(Error::EmptyInput("training set"));
    }
    if ds.signal_len() != Some(model.input_len()) {
        return Err(Error::Shape(format!(
            "model expects {} samples per signal, dataset has {:?}",
            model.input_len(),
            ds.signal_len()
        )));
    }
    if ds.class_count() != model.class_count() {
        return Err(Error::Shape(format!(
            "model has {} classes, dataset has {}",
            model.class_count(),
            ds.class_count()
        )));
    }
    Ok(())
}

pub(crate) fn fit(model: &Model, ds: &Dataset, cfg: &TrainingConfig) -> Result<TrainedModel> {
    check_compatible(model, ds)?;
    let plan = model.plan();
    let mut params = model.params().to_vec();
    let mut grad = vec![0.0; params.len()];
    let mut adam = Adam::new(params.len(), cfg.adam);
    let mut rng = seeded(cfg.seed);
    let mut order: Vec<usize> = (0..ds.len()).collect();
    let signals = ds.signals();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            grad.fill(0.0);
            let scale = 1.0 / chunk.len() as f64;
            for &i in chunk {
                let s = &signals[i];
                total += accumulate(plan, &params, &s.samples, s.label, scale, &mut grad);
            }
            adam.step(&mut params, &grad, cfg.learning_rate);
        }
        let loss = total / ds.len() as f64;
        if !loss.is_finite() || params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Divergence { epoch, loss });
        }
        epoch_losses.push(loss);
    }
    Ok(TrainedModel {
        model: model.with_params(params)?,
        epoch_losses,
    })
}

/// Mean and per-fold metrics of k-fold cross-validation.
#[derive(Debug, Clone, Serialize)]
pub struct CrossValidationReport {
    pub folds: Vec<EvaluationReport>,
    pub mean_accuracy: f64,
    pub mean_precision: f64,
    pub mean_recall: f64,
}

/// Stratified k-fold cross-validation with a fresh model per fold, seeded
/// from `init_seed + fold`. Uses `cfg.folds` (default 10).
pub fn cross_validate(
    spec: &ArchitectureSpec,
    init_seed: u64,
    ds: &Dataset,
    cfg: &TrainingConfig,
) -> Result<CrossValidationReport> {
    cfg.validate()?;
    let k = cfg.folds.unwrap_or(10);
    if ds.len() < k {
        return Err(Error::Config(format!("{k} folds need at least {k} samples")));
    }
    let mut fold_of = vec![0usize; ds.len()];
    let mut rng = seeded(cfg.seed);
    let mut next = 0;
    for mut members in ds.indices_by_class() {
        members.shuffle(&mut rng);
        for i in members {
            fold_of[i] = next % k;
            next += 1;
        }
    }
    let mut folds = Vec::with_capacity(k);
    for fold in 0..k {
        let (mut tr, mut te) = (Vec::new(), Vec::new());
        for (s, &f) in ds.signals().iter().zip(&fold_of) {
            if f == fold {
                te.push(s.clone());
            } else {
                tr.push(s.clone());
            }
        }
        let model = build_model(spec, init_seed.wrapping_add(fold as u64))?;
        let trained = fit(&model, &ds.derive(tr)?, cfg)?;
        folds.push(evaluate(&trained.model, &ds.derive(te)?)?);
    }
    let mean = |f: fn(&EvaluationReport) -> f64| folds.iter().map(f).sum::<f64>() / k as f64;
    Ok(CrossValidationReport {
        mean_accuracy: mean(|r| r.accuracy),
        mean_precision: mean(|r| r.macro_precision),
        mean_recall: mean(|r| r.macro_recall),
        folds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnn::spec::{LayerSpec};
    use crate::signal::{ClassLabel, DatasetRole, Provenance, Signal};

    fn small_spec(len: usize) -> ArchitectureSpec {
        ArchitectureSpec {
            input_len: len,
            layers: vec![
                LayerSpec::conv(4, 3),
                LayerSpec::MaxPool { window: 2 },
                LayerSpec::conv(4, 3),
                LayerSpec::GlobalAvgPool,
                LayerSpec::DenseSoftmax { classes: 2 },
            ],
        }
    }

    /// Class 0: rising ramp; class 1: falling ramp, each with a small offset.
    fn separable(n: usize) -> Dataset {
        let signals = (0..n)
            .map(|i| {
                let label = i % 2;
                let offset = (i / 2) as f64 * 0.05;
                let samples = (0..16)
                    .map(|t| {
                        let r = t as f64 / 15.0;
                        offset + if label == 0 { r } else { 1.0 - r }
                    })
                    .collect();
                Signal::new(format!("t{i}"), samples, 16.0, label, Provenance::Asserted)
            })
            .collect();
        Dataset::new(signals, ClassLabel::generic(2), DatasetRole::AssertedPool).unwrap()
    }

    fn cfg(epochs: usize) -> TrainingConfig {
        TrainingConfig {
            epochs,
            learning_rate: 0.01,
            batch_size: 4,
            seed: 5,
            ..Default::default()
        }
    }

    #[test]
    fn fits_separable_toy_set() {
        let ds = separable(20);
        let model = build_model(&small_spec(16), 1).unwrap();
        let trained = train(&model, &ds, &cfg(50)).unwrap();
        let report = evaluate(&trained.model, &ds).unwrap();
        assert_eq!(report.accuracy, 1.0);
        let losses = &trained.epoch_losses;
        assert_eq!(losses.len(), 50);
        for w in losses[5..].windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "loss increased: {w:?}");
        }
    }

    #[test]
    fn training_is_deterministic_and_pure() {
        let ds = separable(12);
        let model = build_model(&small_spec(16), 1).unwrap();
        let before = model.clone();
        let a = train(&model, &ds, &cfg(5)).unwrap();
        let b = train(&model, &ds, &cfg(5)).unwrap();
        assert_eq!(a.model.params(), b.model.params());
        assert_eq!(model, before);
    }

    #[test]
    fn zero_epochs_rejected() {
        let ds = separable(4);
        let model = build_model(&small_spec(16), 1).unwrap();
        let err = train(&model, &ds, &cfg(0)).unwrap_err();
        assert_eq!(err.category(), "ConfigError");
    }

    #[test]
    fn zero_step_fine_tune_keeps_weights() {
        let ds = separable(8);
        let model = build_model(&small_spec(16), 2).unwrap();
        let mut zero = cfg(3);
        zero.learning_rate = 0.0;
        assert!(fine_tune(&model, &ds, &zero).is_err());
        let out = fit(&model, &ds, &zero).unwrap();
        assert_eq!(out.model.params(), model.params());
    }

    #[test]
    fn one_epoch_fine_tune_moves_weights() {
        let ds = separable(8);
        let model = build_model(&small_spec(16), 2).unwrap();
        let out = fine_tune(&model, &ds, &cfg(1)).unwrap();
        assert_ne!(out.model.params(), model.params());
        // Fresh moments: fine-tuning equals training from the same weights.
        let again = train(&model, &ds, &cfg(1)).unwrap();
        assert_eq!(out.model.params(), again.model.params());
    }

    #[test]
    fn cross_validation_reports_every_fold() {
        let ds = separable(20);
        let mut c = cfg(20);
        c.folds = Some(4);
        let report = cross_validate(&small_spec(16), 3, &ds, &c).unwrap();
        assert_eq!(report.folds.len(), 4);
        assert!(report.folds.iter().all(|f| f.total == 5));
        assert!(report.mean_accuracy > 0.5);
    }

    #[test]
    fn adam_first_step_is_lr_sized() {
        let mut adam = Adam::new(2, AdamParams::default());
        let mut theta = [1.0, -1.0];
        adam.step(&mut theta, &[0.5, -2.0], 0.1);
        assert!((theta[0] - 0.9).abs() < 1e-6);
        assert!((theta[1] + 0.9).abs() < 1e-6);
    }
}
