use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::losses::{ObjectiveWeights, UnsupervisedVariant};
use crate::numerics::DEFAULT_HIDDEN;
use crate::triplet::Mode;

/// Hyperparameters for both training stages.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub mode: Mode,
    pub alpha: f64,
    pub lambda: f64,
    pub margin: f64,
    pub lr: f64,
    /// Seen mini-batch size `N`.
    pub batch_seen: usize,
    /// Unlabeled mini-batch size `N′`.
    pub batch_unlabeled: usize,
    pub epochs_inductive: usize,
    pub epochs_transductive: usize,
    pub hidden: usize,
    pub seed: u64,
    pub variant: UnsupervisedVariant,
    /// Stop a stage once the epoch-mean loss has improved by less than
    /// [`EARLY_STOP_TOLERANCE`] (relative) for [`EARLY_STOP_PATIENCE`]
    /// consecutive epochs.
    pub early_stop: bool,
}

pub const EARLY_STOP_TOLERANCE: f64 = 1e-5;
pub const EARLY_STOP_PATIENCE: usize = 5;

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Zsl,
            alpha: 0.15,
            lambda: 1e-4,
            margin: 1.0,
            lr: 1e-4,
            batch_seen: 32,
            batch_unlabeled: 32,
            epochs_inductive: 200,
            epochs_transductive: 200,
            hidden: DEFAULT_HIDDEN,
            seed: 0,
            variant: UnsupervisedVariant::Triplet,
            early_stop: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let non_negative = [
            ("alpha", self.alpha),
            ("lambda", self.lambda),
            ("margin", self.margin),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be > 0, got {}",
                self.lr
            )));
        }
        if self.batch_seen == 0 || self.batch_unlabeled == 0 {
            return Err(Error::Config("batch sizes must be at least 1".into()));
        }
        if self.hidden == 0 {
            return Err(Error::Config("hidden width must be at least 1".into()));
        }
        Ok(())
    }

    pub fn objective(&self) -> ObjectiveWeights {
        ObjectiveWeights {
            alpha: self.alpha,
            lambda: self.lambda,
            margin: self.margin,
            variant: self.variant,
        }
    }

    /// Flat `key=value` lines.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "mode={}", self.mode.as_str());
        let _ = writeln!(s, "alpha={:?}", self.alpha);
        let _ = writeln!(s, "lambda={:?}", self.lambda);
        let _ = writeln!(s, "margin={:?}", self.margin);
        let _ = writeln!(s, "lr={:?}", self.lr);
        let _ = writeln!(s, "batch_seen={}", self.batch_seen);
        let _ = writeln!(s, "batch_unlabeled={}", self.batch_unlabeled);
        let _ = writeln!(s, "epochs_inductive={}", self.epochs_inductive);
        let _ = writeln!(s, "epochs_transductive={}", self.epochs_transductive);
        let _ = writeln!(s, "hidden={}", self.hidden);
        let _ = writeln!(s, "seed={}", self.seed);
        let _ = writeln!(s, "variant={}", self.variant.as_str());
        let _ = writeln!(s, "early_stop={}", self.early_stop);
        s
    }

    /// Applies one `key=value` setting; unknown keys are an error.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| Error::Config(format!("bad value {v:?} for {key}")))
        }
        match key {
            "mode" => self.mode = value.parse()?,
            "alpha" => self.alpha = num(key, value)?,
            "lambda" => self.lambda = num(key, value)?,
            "margin" => self.margin = num(key, value)?,
            "lr" => self.lr = num(key, value)?,
            "batch_seen" => self.batch_seen = num(key, value)?,
            "batch_unlabeled" => self.batch_unlabeled = num(key, value)?,
            "epochs_inductive" => self.epochs_inductive = num(key, value)?,
            "epochs_transductive" => self.epochs_transductive = num(key, value)?,
            "hidden" => self.hidden = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "variant" => self.variant = value.parse()?,
            "early_stop" => self.early_stop = num(key, value)?,
            _ => return Err(Error::Config(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("expected key=value, got {line:?}")))?;
            cfg.set(k.trim(), v.trim())?;
        }
        Ok(cfg)
    }
}
