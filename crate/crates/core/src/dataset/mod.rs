//! Embedding datasets, semantic tables, file formats, splits and a synthetic
//! generator.

mod io;
mod split;
mod synth;

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

pub use io::{load_dataset, save_dataset, write_features, write_semantics};
pub use split::{halve_unlabeled, split_seen_for_validation, ValidationSplit};
pub use synth::{generate_synthetic, SynthConfig};

/// Target range for feature coordinates after ingestion.
pub const FEATURE_BOUND: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClassId(pub u32);

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    SeenTrain,
    UnlabeledTest,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingRecord {
    pub id: String,
    pub feature: Vec<f64>,
    /// Ground truth. For unlabeled-test records this is only ever read by
    /// evaluation code.
    pub label: Option<ClassId>,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemanticClass {
    pub id: ClassId,
    pub name: String,
    pub vector: Vec<f64>,
    pub seen: bool,
}

/// Ordered class table. Table order is the tie-break order for every
/// nearest-class search.
#[derive(Debug, Clone, PartialEq)]
pub struct SemanticTable {
    dim: usize,
    classes: Vec<SemanticClass>,
    index: HashMap<ClassId, usize>,
}

impl SemanticTable {
    pub fn new(dim: usize, classes: Vec<SemanticClass>) -> Result<Self> {
        let mut index = HashMap::with_capacity(classes.len());
        for (i, c) in classes.iter().enumerate() {
            if c.vector.len() != dim {
                return Err(Error::Shape {
                    context: "semantic vector",
                    expected: dim,
                    actual: c.vector.len(),
                });
            }
            if c.vector.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("semantic vector"));
            }
            if index.insert(c.id, i).is_some() {
                return Err(Error::DuplicateClass(c.id.0));
            }
        }
        Ok(Self {
            dim,
            classes,
            index,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn classes(&self) -> &[SemanticClass] {
        &self.classes
    }

    pub fn class(&self, index: usize) -> &SemanticClass {
        &self.classes[index]
    }

    pub fn index_of(&self, id: ClassId) -> Option<usize> {
        self.index.get(&id).copied()
    }

    pub fn seen_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.classes[i].seen).collect()
    }

    pub fn unseen_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| !self.classes[i].seen).collect()
    }

    pub fn all_indices(&self) -> Vec<usize> {
        (0..self.len()).collect()
    }
}

/// Per-dimension affine map `x' = scale·x + shift` applied at ingestion.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureScaling {
    pub scale: Vec<f64>,
    pub shift: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    records: Vec<EmbeddingRecord>,
    semantics: SemanticTable,
    feature_dim: usize,
    scaling: Option<FeatureScaling>,
}

impl Dataset {
    pub fn new(
        records: Vec<EmbeddingRecord>,
        semantics: SemanticTable,
        feature_dim: usize,
    ) -> Result<Self> {
        for r in &records {
            if r.feature.len() != feature_dim {
                return Err(Error::Shape {
                    context: "feature vector",
                    expected: feature_dim,
                    actual: r.feature.len(),
                });
            }
            if r.feature.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("feature vector"));
            }
            match (r.split, r.label) {
                (_, Some(id)) => {
                    let idx = semantics.index_of(id).ok_or_else(|| {
                        Error::Invalid(format!("record {} has unknown class {id}", r.id))
                    })?;
                    if r.split == Split::SeenTrain && !semantics.class(idx).seen {
                        return Err(Error::Invalid(format!(
                            "training record {} is labeled with unseen class {id}",
                            r.id
                        )));
                    }
                }
                (Split::SeenTrain, None) => {
                    return Err(Error::Invalid(format!(
                        "training record {} has no label",
                        r.id
                    )));
                }
                (Split::UnlabeledTest, None) => {}
            }
        }
        Ok(Self {
            records,
            semantics,
            feature_dim,
            scaling: None,
        })
    }

    pub fn records(&self) -> &[EmbeddingRecord] {
        &self.records
    }

    pub fn semantics(&self) -> &SemanticTable {
        &self.semantics
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn semantic_dim(&self) -> usize {
        self.semantics.dim()
    }

    /// The affine map applied by the most recent [`Dataset::normalize_features`].
    pub fn scaling(&self) -> Option<&FeatureScaling> {
        self.scaling.as_ref()
    }

    pub fn seen_train(&self) -> impl Iterator<Item = &EmbeddingRecord> {
        self.records.iter().filter(|r| r.split == Split::SeenTrain)
    }

    pub fn unlabeled_test(&self) -> impl Iterator<Item = &EmbeddingRecord> {
        self.records
            .iter()
            .filter(|r| r.split == Split::UnlabeledTest)
    }

    /// Rescales every feature dimension affinely onto
    /// `[-FEATURE_BOUND, FEATURE_BOUND]` using the min/max over all records.
    /// Constant dimensions map to 0.
    pub fn normalize_features(&mut self) {
        let m = self.feature_dim;
        let mut lo = vec![f64::INFINITY; m];
        let mut hi = vec![f64::NEG_INFINITY; m];
        for r in &self.records {
            for (j, &v) in r.feature.iter().enumerate() {
                lo[j] = lo[j].min(v);
                hi[j] = hi[j].max(v);
            }
        }
        let mut scale = vec![0.0; m];
        let mut shift = vec![0.0; m];
        for j in 0..m {
            if hi[j] > lo[j] {
                scale[j] = 2.0 * FEATURE_BOUND / (hi[j] - lo[j]);
                shift[j] = -FEATURE_BOUND - scale[j] * lo[j];
            }
        }
        for r in &mut self.records {
            for (j, v) in r.feature.iter_mut().enumerate() {
                *v = if scale[j] == 0.0 {
                    0.0
                } else {
                    (scale[j] * *v + shift[j]).clamp(-FEATURE_BOUND, FEATURE_BOUND)
                };
            }
        }
        self.scaling = Some(FeatureScaling { scale, shift });
    }

    /// The label-free view handed to training code.
    pub fn training_view(&self) -> TrainingView<'_> {
        let mut seen = Vec::new();
        let mut unlabeled = Vec::new();
        for r in &self.records {
            match r.split {
                Split::SeenTrain => {
                    // Dataset::new guarantees a known seen label here.
                    let class = r
                        .label
                        .and_then(|id| self.semantics.index_of(id))
                        .expect("validated training label");
                    seen.push(LabeledFeature {
                        feature: &r.feature,
                        class,
                    });
                }
                Split::UnlabeledTest => unlabeled.push(UnlabeledFeature(&r.feature)),
            }
        }
        TrainingView {
            semantics: &self.semantics,
            feature_dim: self.feature_dim,
            seen,
            unlabeled,
        }
    }

    pub(crate) fn with_records(
        &self,
        records: Vec<EmbeddingRecord>,
        semantics: SemanticTable,
    ) -> Result<Self> {
        let mut out = Dataset::new(records, semantics, self.feature_dim)?;
        out.scaling = self.scaling.clone();
        Ok(out)
    }
}

/// A labeled seen-class sample; `class` indexes the semantic table.
#[derive(Debug, Clone, Copy)]
pub struct LabeledFeature<'a> {
    pub feature: &'a [f64],
    pub class: usize,
}

/// An unlabeled sample. Carries no label by construction.
#[derive(Debug, Clone, Copy)]
pub struct UnlabeledFeature<'a>(&'a [f64]);

impl<'a> UnlabeledFeature<'a> {
    pub fn new(feature: &'a [f64]) -> Self {
        Self(feature)
    }

    pub fn feature(&self) -> &'a [f64] {
        self.0
    }
}

/// Everything training may see: seen features with labels, unlabeled
/// features without, and the semantic table.
#[derive(Debug, Clone)]
pub struct TrainingView<'a> {
    pub semantics: &'a SemanticTable,
    pub feature_dim: usize,
    pub seen: Vec<LabeledFeature<'a>>,
    pub unlabeled: Vec<UnlabeledFeature<'a>>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> SemanticTable {
        SemanticTable::new(
            2,
            vec![
                SemanticClass {
                    id: ClassId(0),
                    name: "a".into(),
                    vector: vec![1.0, 0.0],
                    seen: true,
                },
                SemanticClass {
                    id: ClassId(1),
                    name: "b".into(),
                    vector: vec![0.0, 1.0],
                    seen: false,
                },
            ],
        )
        .unwrap()
    }

    fn rec(id: &str, f: Vec<f64>, label: Option<u32>, split: Split) -> EmbeddingRecord {
        EmbeddingRecord {
            id: id.into(),
            feature: f,
            label: label.map(ClassId),
            split,
        }
    }

    #[test]
    fn duplicate_class_rejected() {
        let c = SemanticClass {
            id: ClassId(3),
            name: "x".into(),
            vector: vec![0.0],
            seen: true,
        };
        assert!(matches!(
            SemanticTable::new(1, vec![c.clone(), c]),
            Err(Error::DuplicateClass(3))
        ));
    }

    #[test]
    fn training_records_need_seen_labels() {
        let bad = vec![rec("r", vec![0.0], Some(1), Split::SeenTrain)];
        assert!(Dataset::new(bad, table(), 1).is_err());
        let missing = vec![rec("r", vec![0.0], None, Split::SeenTrain)];
        assert!(Dataset::new(missing, table(), 1).is_err());
    }

    #[test]
    fn view_strips_test_labels() {
        let ds = Dataset::new(
            vec![
                rec("a", vec![0.1], Some(0), Split::SeenTrain),
                rec("b", vec![0.2], Some(1), Split::UnlabeledTest),
            ],
            table(),
            1,
        )
        .unwrap();
        let view = ds.training_view();
        assert_eq!(view.seen.len(), 1);
        assert_eq!(view.seen[0].class, 0);
        assert_eq!(view.unlabeled.len(), 1);
        assert_eq!(view.unlabeled[0].feature(), &[0.2]);
    }

    #[test]
    fn normalization_hits_bounds() {
        let mut ds = Dataset::new(
            vec![
                rec("a", vec![-3.0, 5.0], Some(0), Split::SeenTrain),
                rec("b", vec![1.0, 5.0], Some(0), Split::SeenTrain),
                rec("c", vec![-1.0, 5.0], None, Split::UnlabeledTest),
            ],
            table(),
            2,
        )
        .unwrap();
        ds.normalize_features();
        let f: Vec<_> = ds.records().iter().map(|r| r.feature.clone()).collect();
        assert_eq!(f[0][0], -0.9);
        assert!((f[1][0] - 0.9).abs() < 1e-15);
        assert!(f[2][0].abs() < 1e-15);
        assert!(f.iter().all(|v| v[1] == 0.0));
    }
}
