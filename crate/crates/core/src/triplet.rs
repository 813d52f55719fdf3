//! Pseudo-label triplet formation.
//!
//! Each unlabeled anchor gets a positive class (the nearest projected
//! semantic vector among unseen classes, or among all classes for GZSL) and a
//! negative class (the nearest projected seen-class vector). In GZSL an
//! anchor whose nearest class is seen is discarded.

use crate::dataset::{SemanticTable, UnlabeledFeature};
use crate::error::{check_dim, Error, Result};
use crate::numerics::{sq_dist, ProjectionNet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Zsl,
    Gzsl,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Zsl => "zsl",
            Mode::Gzsl => "gzsl",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zsl" => Ok(Mode::Zsl),
            "gzsl" => Ok(Mode::Gzsl),
            _ => Err(Error::Config(format!("unknown mode {s:?}"))),
        }
    }
}

/// Projections `Θ(e_c)` of every class in a semantic table, computed once
/// for a fixed network snapshot.
#[derive(Debug, Clone)]
pub struct ClassProjections {
    outputs: Vec<Vec<f64>>,
    seen: Vec<usize>,
    unseen: Vec<usize>,
    all: Vec<usize>,
}

impl ClassProjections {
    pub fn new(net: &ProjectionNet, table: &SemanticTable) -> Result<Self> {
        let outputs = table
            .classes()
            .iter()
            .map(|c| net.forward(&c.vector))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            outputs,
            seen: table.seen_indices(),
            unseen: table.unseen_indices(),
            all: table.all_indices(),
        })
    }

    pub fn get(&self, class: usize) -> &[f64] {
        &self.outputs[class]
    }

    pub fn len(&self) -> usize {
        self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }

    pub fn seen(&self) -> &[usize] {
        &self.seen
    }

    pub fn unseen(&self) -> &[usize] {
        &self.unseen
    }

    pub fn all(&self) -> &[usize] {
        &self.all
    }

    pub fn feature_dim(&self) -> usize {
        self.outputs.first().map_or(0, Vec::len)
    }

    /// Nearest candidate by squared distance; candidates must be in table
    /// order so that ties resolve to the earliest class.
    pub fn nearest(&self, anchor: &[f64], candidates: &[usize]) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for &c in candidates {
            let dist = sq_dist(anchor, &self.outputs[c]);
            if best.is_none_or(|(_, b)| dist < b) {
                best = Some((c, dist));
            }
        }
        best.map(|(c, _)| c)
    }

    fn check_anchor(&self, anchor: &[f64]) -> Result<()> {
        check_dim("anchor feature", self.feature_dim(), anchor.len())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TripletAssignment {
    /// Position of the anchor in the unlabeled batch.
    pub anchor: usize,
    /// Semantic-table index of the positive class.
    pub positive: usize,
    /// Semantic-table index of the negative (always seen) class.
    pub negative: usize,
    /// False when a GZSL anchor was pseudo-labeled as a seen class.
    pub retained: bool,
}

pub fn assign_positive_zsl(proj: &ClassProjections, anchor: &[f64]) -> Result<usize> {
    proj.check_anchor(anchor)?;
    proj.nearest(anchor, proj.unseen())
        .ok_or(Error::NoClasses("unseen"))
}

/// Returns the nearest class over seen ∪ unseen and whether the anchor is
/// retained (nearest class is unseen).
pub fn assign_positive_gzsl(proj: &ClassProjections, anchor: &[f64]) -> Result<(usize, bool)> {
    proj.check_anchor(anchor)?;
    let class = proj
        .nearest(anchor, proj.all())
        .ok_or(Error::NoClasses("semantic"))?;
    Ok((class, proj.unseen().binary_search(&class).is_ok()))
}

pub fn assign_negative(proj: &ClassProjections, anchor: &[f64]) -> Result<usize> {
    proj.check_anchor(anchor)?;
    proj.nearest(anchor, proj.seen())
        .ok_or(Error::NoClasses("seen"))
}

pub fn form_triplets(
    proj: &ClassProjections,
    batch: &[UnlabeledFeature<'_>],
    mode: Mode,
) -> Result<Vec<TripletAssignment>> {
    if batch.is_empty() {
        return Err(Error::Invalid(
            "cannot form triplets for an empty batch".into(),
        ));
    }
    batch
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let anchor = a.feature();
            let (positive, retained) = match mode {
                Mode::Zsl => (assign_positive_zsl(proj, anchor)?, true),
                Mode::Gzsl => assign_positive_gzsl(proj, anchor)?,
            };
            Ok(TripletAssignment {
                anchor: i,
                positive,
                negative: assign_negative(proj, anchor)?,
                retained,
            })
        })
        .collect()
}
