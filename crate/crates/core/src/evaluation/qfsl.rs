use std::fmt::Write as _;

use super::{evaluate, Averaging, EvalReport};
use crate::dataset::{halve_unlabeled, Dataset};
use crate::error::{Error, Result};
use crate::training::{train_inductive, train_transductive, Checkpoint, TrainConfig};
use crate::triplet::Mode;

/// Mean of two half-model GZSL reports.
#[derive(Debug, Clone, PartialEq)]
pub struct QfslReport {
    /// `halves[0]`: trained on half A, scored on half B; `halves[1]` the
    /// reverse.
    pub halves: [EvalReport; 2],
    pub acc_seen: f64,
    pub acc_unseen: f64,
    pub hm: f64,
}

impl QfslReport {
    pub fn to_text(&self) -> String {
        let mut s = String::from("protocol=qfsl\nmode=gzsl\n");
        let _ = writeln!(s, "acc_seen={:?}", self.acc_seen);
        let _ = writeln!(s, "acc_unseen={:?}", self.acc_unseen);
        let _ = writeln!(s, "hm={:?}", self.hm);
        s
    }
}

/// Splits the unlabeled pool into halves; each half serves as the
/// unlabeled training set for one transductive model, which is scored on the
/// other half. Both models share the inductive stage (it sees no unlabeled
/// data).
pub fn evaluate_qfsl_protocol(
    dataset: &Dataset,
    config: &TrainConfig,
    averaging: Averaging,
) -> Result<QfslReport> {
    check_mode(config)?;
    let inductive = train_inductive(dataset, config)?;
    evaluate_qfsl_from(dataset, &inductive, config, averaging)
}

/// Same protocol starting from an existing inductive checkpoint.
pub fn evaluate_qfsl_from(
    dataset: &Dataset,
    inductive: &Checkpoint,
    config: &TrainConfig,
    averaging: Averaging,
) -> Result<QfslReport> {
    check_mode(config)?;
    let (half_a, half_b) = halve_unlabeled(dataset, config.seed)?;
    let model_a = train_transductive(&half_a, config, inductive)?;
    let model_b = train_transductive(&half_b, config, inductive)?;
    let on_b = evaluate(&model_a.net, &half_b, Mode::Gzsl, averaging)?;
    let on_a = evaluate(&model_b.net, &half_a, Mode::Gzsl, averaging)?;
    let mean = |f: fn(&EvalReport) -> Option<f64>| {
        (f(&on_b).unwrap_or(0.0) + f(&on_a).unwrap_or(0.0)) / 2.0
    };
    Ok(QfslReport {
        acc_seen: mean(|r| r.acc_seen),
        acc_unseen: mean(|r| r.acc_unseen),
        hm: mean(|r| r.hm),
        halves: [on_b, on_a],
    })
}

fn check_mode(config: &TrainConfig) -> Result<()> {
    if config.mode != Mode::Gzsl {
        return Err(Error::Config(
            "the split-in-halves protocol requires gzsl mode".into(),
        ));
    }
    Ok(())
}
