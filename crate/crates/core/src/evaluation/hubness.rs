use std::fmt::Write as _;

use crate::dataset::{ClassId, Dataset};
use crate::error::{Error, Result};
use crate::numerics::{sq_dist, ProjectionNet};
use crate::triplet::{ClassProjections, Mode};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectionDirection {
    SemanticToInput,
    /// Needs a separately trained reverse model; carried as a tag only.
    InputToSemantic,
}

impl ProjectionDirection {
    pub fn as_str(self) -> &'static str {
        match self {
            ProjectionDirection::SemanticToInput => "semantic->input",
            ProjectionDirection::InputToSemantic => "input->semantic",
        }
    }
}

/// `N_k(c)`: how many queries have class `c` among their `k` nearest
/// projected class embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct HubnessReport {
    pub k: usize,
    pub direction: ProjectionDirection,
    pub queries: usize,
    pub counts: Vec<(ClassId, usize)>,
    pub skewness: f64,
}

impl HubnessReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "k={}", self.k);
        let _ = writeln!(s, "direction={}", self.direction.as_str());
        let _ = writeln!(s, "queries={}", self.queries);
        let _ = writeln!(s, "skewness={:?}", self.skewness);
        for (c, n) in &self.counts {
            let _ = writeln!(s, "nk.{c}={n}");
        }
        s
    }
}

/// Adjusted Fisher–Pearson skewness `G1 = √(n(n−1))/(n−2) · m3/m2^{3/2}`
/// with biased central moments `m2`, `m3`. Returns 0 for fewer than three
/// values or zero variance.
pub fn fisher_pearson_skewness(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 3 {
        return 0.0;
    }
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let (mut m2, mut m3) = (0.0, 0.0);
    for v in values {
        let dev = v - mean;
        m2 += dev * dev;
        m3 += dev * dev * dev;
    }
    m2 /= nf;
    m3 /= nf;
    if m2 == 0.0 {
        return 0.0;
    }
    (nf * (nf - 1.0)).sqrt() / (nf - 2.0) * m3 / m2.powf(1.5)
}

/// Hubness of projected class embeddings as neighbors of the unlabeled-test
/// features. Candidates are the unseen classes in ZSL mode and all classes
/// in GZSL mode.
pub fn hubness_skewness(
    net: &ProjectionNet,
    dataset: &Dataset,
    k: usize,
    direction: ProjectionDirection,
    mode: Mode,
) -> Result<HubnessReport> {
    if direction == ProjectionDirection::InputToSemantic {
        return Err(Error::Unsupported(
            "input->semantic hubness needs a reverse projection model",
        ));
    }
    let table = dataset.semantics();
    let proj = ClassProjections::new(net, table)?;
    let candidates = match mode {
        Mode::Zsl => proj.unseen(),
        Mode::Gzsl => proj.all(),
    };
    if k == 0 || k > candidates.len() {
        return Err(Error::Config(format!(
            "k must lie in 1..={}, got {k}",
            candidates.len()
        )));
    }
    let mut hits = vec![0usize; candidates.len()];
    let mut queries = 0;
    let mut ranked: Vec<(f64, usize)> = Vec::with_capacity(candidates.len());
    for r in dataset.unlabeled_test() {
        ranked.clear();
        ranked.extend(
            candidates
                .iter()
                .enumerate()
                .map(|(slot, &c)| (sq_dist(&r.feature, proj.get(c)), slot)),
        );
        // Stable order: distance, then table order.
        ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(_, slot) in &ranked[..k] {
            hits[slot] += 1;
        }
        queries += 1;
    }
    let values: Vec<f64> = hits.iter().map(|&h| h as f64).collect();
    Ok(HubnessReport {
        k,
        direction,
        queries,
        counts: candidates
            .iter()
            .zip(&hits)
            .map(|(&c, &h)| (table.class(c).id, h))
            .collect(),
        skewness: fisher_pearson_skewness(&values),
    })
}
