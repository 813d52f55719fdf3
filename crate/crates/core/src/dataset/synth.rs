use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{ClassId, Dataset, EmbeddingRecord, SemanticClass, SemanticTable, Split};
use crate::error::{Error, Result};

/// Synthetic embedding space with a known semantic→feature relation.
///
/// Semantic vectors are standard normal. A fixed random linear map `A`
/// (`m × d`, entries `N(0, 1/d)`) gives class prototypes
/// `p_c = tanh(A·e_c) + σ_p·z`, and samples are
/// `p_c + σ_x·(1 + 3·cluster_quality)·z`. Higher `cluster_quality` means
/// more diffuse clusters.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seen_classes: usize,
    pub unseen_classes: usize,
    pub semantic_dim: usize,
    pub feature_dim: usize,
    pub samples_per_class: usize,
    /// Extra unlabeled-test samples drawn per seen class (GZSL test pool).
    pub seen_test_per_class: usize,
    pub prototype_noise: f64,
    pub sample_noise: f64,
    pub cluster_quality: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seen_classes: 20,
            unseen_classes: 8,
            semantic_dim: 16,
            feature_dim: 32,
            samples_per_class: 50,
            seen_test_per_class: 0,
            prototype_noise: 0.5,
            sample_noise: 0.3,
            cluster_quality: 0.6,
            seed: 1,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("seen classes", self.seen_classes),
            ("unseen classes", self.unseen_classes),
            ("semantic dim", self.semantic_dim),
            ("feature dim", self.feature_dim),
            ("samples per class", self.samples_per_class),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        if !(self.prototype_noise >= 0.0 && self.prototype_noise.is_finite())
            || !(self.sample_noise >= 0.0 && self.sample_noise.is_finite())
        {
            return Err(Error::Config(
                "noise levels must be finite and non-negative".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.cluster_quality) {
            return Err(Error::Config("cluster quality must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Generates a dataset; seen classes come first in the table, ids
/// `0..S`, then unseen ids `S..S+U`. Features are normalized like loaded
/// files.
pub fn generate_synthetic(cfg: &SynthConfig) -> Result<Dataset> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (d, m) = (cfg.semantic_dim, cfg.feature_dim);
    let n_classes = cfg.seen_classes + cfg.unseen_classes;

    let classes: Vec<SemanticClass> = (0..n_classes)
        .map(|c| {
            let seen = c < cfg.seen_classes;
            SemanticClass {
                id: ClassId(c as u32),
                name: format!("{}{c:03}", if seen { "seen" } else { "unseen" }),
                vector: gaussian(&mut rng, d, 1.0),
                seen,
            }
        })
        .collect();
    let a = gaussian(&mut rng, m * d, 1.0 / (d as f64).sqrt());
    let prototypes: Vec<Vec<f64>> = classes
        .iter()
        .map(|c| {
            let noise = gaussian(&mut rng, m, cfg.prototype_noise);
            (0..m)
                .map(|i| {
                    let z: f64 = a[i * d..(i + 1) * d]
                        .iter()
                        .zip(&c.vector)
                        .map(|(w, e)| w * e)
                        .sum();
                    z.tanh() + noise[i]
                })
                .collect()
        })
        .collect();

    let spread = cfg.sample_noise * (1.0 + 3.0 * cfg.cluster_quality);
    let mut records = Vec::new();
    let mut push = |rng: &mut ChaCha8Rng, class: usize, split: Split| {
        let noise = gaussian(rng, m, spread);
        let feature = prototypes[class]
            .iter()
            .zip(&noise)
            .map(|(p, z)| p + z)
            .collect();
        records.push(EmbeddingRecord {
            id: format!("r{:06}", records.len()),
            feature,
            label: Some(ClassId(class as u32)),
            split,
        });
    };
    for class in 0..n_classes {
        let seen = class < cfg.seen_classes;
        let split = if seen {
            Split::SeenTrain
        } else {
            Split::UnlabeledTest
        };
        for _ in 0..cfg.samples_per_class {
            push(&mut rng, class, split);
        }
        if seen {
            for _ in 0..cfg.seen_test_per_class {
                push(&mut rng, class, Split::UnlabeledTest);
            }
        }
    }

    let table = SemanticTable::new(d, classes)?;
    let mut ds = Dataset::new(records, table, m)?;
    ds.normalize_features();
    Ok(ds)
}

fn gaussian<R: Rng>(rng: &mut R, n: usize, sigma: f64) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            sigma * z
        })
        .collect()
}
