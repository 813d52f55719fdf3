//! Nearest-projection inference, accuracy reports, hubness and the
//! split-in-halves GZSL protocol.

mod hubness;
mod qfsl;

use std::fmt::Write as _;

use crate::dataset::{ClassId, Dataset};
use crate::error::{check_dim, Error, Result};
use crate::numerics::ProjectionNet;
use crate::triplet::{ClassProjections, Mode};

pub use hubness::{fisher_pearson_skewness, hubness_skewness, HubnessReport, ProjectionDirection};
pub use qfsl::{evaluate_qfsl_from, evaluate_qfsl_protocol, QfslReport};

/// Label over unseen classes (table index).
pub fn predict_zsl(proj: &ClassProjections, feature: &[f64]) -> Result<usize> {
    check_dim("query feature", proj.feature_dim(), feature.len())?;
    proj.nearest(feature, proj.unseen())
        .ok_or(Error::NoClasses("unseen"))
}

/// Label over seen ∪ unseen classes (table index).
pub fn predict_gzsl(proj: &ClassProjections, feature: &[f64]) -> Result<usize> {
    check_dim("query feature", proj.feature_dim(), feature.len())?;
    proj.nearest(feature, proj.all())
        .ok_or(Error::NoClasses("semantic"))
}

/// `2·s·u / (s + u)`, defined as 0 when both are 0.
pub fn harmonic_mean(seen: f64, unseen: f64) -> f64 {
    if seen + unseen == 0.0 {
        0.0
    } else {
        2.0 * seen * unseen / (seen + unseen)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Averaging {
    /// correct / total over the scored records.
    Overall,
    /// Mean of per-class accuracies.
    PerClassMean,
}

impl Averaging {
    pub fn as_str(self) -> &'static str {
        match self {
            Averaging::Overall => "overall",
            Averaging::PerClassMean => "per-class-mean",
        }
    }
}

impl std::str::FromStr for Averaging {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "overall" => Ok(Self::Overall),
            "per-class-mean" | "per-class" => Ok(Self::PerClassMean),
            _ => Err(Error::Config(format!("unknown averaging {s:?}"))),
        }
    }
}

/// Rows are ground truth, columns predictions, both over `classes`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionMatrix {
    pub classes: Vec<ClassId>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("truth\\pred");
        for c in &self.classes {
            let _ = write!(s, ",{c}");
        }
        s.push('\n');
        for (c, row) in self.classes.iter().zip(&self.counts) {
            let _ = write!(s, "{c}");
            for n in row {
                let _ = write!(s, ",{n}");
            }
            s.push('\n');
        }
        s
    }
}

/// Accuracies are percentages.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub mode: Mode,
    pub averaging: Averaging,
    pub total: usize,
    pub correct: usize,
    /// `100 · correct / total`.
    pub overall_top1: f64,
    /// Headline accuracy under the chosen averaging.
    pub top1: f64,
    /// Per-class accuracy for classes with at least one scored record.
    pub per_class_top1: Vec<(ClassId, f64)>,
    pub acc_seen: Option<f64>,
    pub acc_unseen: Option<f64>,
    pub hm: Option<f64>,
    pub confusion: ConfusionMatrix,
}

impl EvalReport {
    /// Flat `metric=value` lines.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "mode={}", self.mode.as_str());
        let _ = writeln!(s, "averaging={}", self.averaging.as_str());
        let _ = writeln!(s, "total={}", self.total);
        let _ = writeln!(s, "correct={}", self.correct);
        let _ = writeln!(s, "overall_top1={:?}", self.overall_top1);
        let _ = writeln!(s, "top1={:?}", self.top1);
        for (name, v) in [
            ("acc_seen", self.acc_seen),
            ("acc_unseen", self.acc_unseen),
            ("hm", self.hm),
        ] {
            if let Some(v) = v {
                let _ = writeln!(s, "{name}={v:?}");
            }
        }
        for (c, acc) in &self.per_class_top1 {
            let _ = writeln!(s, "class.{c}={acc:?}");
        }
        s
    }
}

fn average(correct: &[u64], count: &[u64], classes: &[usize], averaging: Averaging) -> f64 {
    let present: Vec<usize> = classes.iter().copied().filter(|&c| count[c] > 0).collect();
    if present.is_empty() {
        return 0.0;
    }
    match averaging {
        Averaging::Overall => {
            let hit: u64 = present.iter().map(|&c| correct[c]).sum();
            let n: u64 = present.iter().map(|&c| count[c]).sum();
            100.0 * hit as f64 / n as f64
        }
        Averaging::PerClassMean => {
            let sum: f64 = present
                .iter()
                .map(|&c| 100.0 * correct[c] as f64 / count[c] as f64)
                .sum();
            sum / present.len() as f64
        }
    }
}

/// Scores every unlabeled-test record against its held-back label.
///
/// ZSL scores only records of unseen classes, predicting among unseen
/// classes. GZSL scores all test records over all classes and reports
/// `Acc_s`, `Acc_u` and their harmonic mean.
pub fn evaluate(
    net: &ProjectionNet,
    dataset: &Dataset,
    mode: Mode,
    averaging: Averaging,
) -> Result<EvalReport> {
    let table = dataset.semantics();
    let proj = ClassProjections::new(net, table)?;
    let candidates: Vec<usize> = match mode {
        Mode::Zsl => proj.unseen().to_vec(),
        Mode::Gzsl => proj.all().to_vec(),
    };
    if candidates.is_empty() {
        return Err(Error::NoClasses(if mode == Mode::Zsl {
            "unseen"
        } else {
            "semantic"
        }));
    }
    let mut slot = vec![usize::MAX; table.len()];
    for (k, &c) in candidates.iter().enumerate() {
        slot[c] = k;
    }
    let mut counts = vec![vec![0u64; candidates.len()]; candidates.len()];
    let mut correct = vec![0u64; table.len()];
    let mut count = vec![0u64; table.len()];
    let (mut total, mut hits) = (0usize, 0usize);

    for r in dataset.unlabeled_test() {
        let id = r.label.ok_or_else(|| {
            Error::Invalid(format!("test record {} has no evaluation label", r.id))
        })?;
        let truth = table.index_of(id).expect("validated label");
        if slot[truth] == usize::MAX {
            continue;
        }
        let pred = match mode {
            Mode::Zsl => predict_zsl(&proj, &r.feature)?,
            Mode::Gzsl => predict_gzsl(&proj, &r.feature)?,
        };
        counts[slot[truth]][slot[pred]] += 1;
        count[truth] += 1;
        total += 1;
        if pred == truth {
            correct[truth] += 1;
            hits += 1;
        }
    }
    if total == 0 {
        return Err(Error::Invalid(format!(
            "no test records to score in {} mode",
            mode.as_str()
        )));
    }

    let per_class_top1 = candidates
        .iter()
        .filter(|&&c| count[c] > 0)
        .map(|&c| {
            (
                table.class(c).id,
                100.0 * correct[c] as f64 / count[c] as f64,
            )
        })
        .collect();
    let (acc_seen, acc_unseen, hm) = match mode {
        Mode::Zsl => (None, None, None),
        Mode::Gzsl => {
            let s = average(&correct, &count, proj.seen(), averaging);
            let u = average(&correct, &count, proj.unseen(), averaging);
            (Some(s), Some(u), Some(harmonic_mean(s, u)))
        }
    };
    Ok(EvalReport {
        mode,
        averaging,
        total,
        correct: hits,
        overall_top1: 100.0 * hits as f64 / total as f64,
        top1: average(&correct, &count, &candidates, averaging),
        per_class_top1,
        acc_seen,
        acc_unseen,
        hm,
        confusion: ConfusionMatrix {
            classes: candidates.iter().map(|&c| table.class(c).id).collect(),
            counts,
        },
    })
}
