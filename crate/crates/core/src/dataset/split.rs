use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{ClassId, Dataset, SemanticClass, SemanticTable, Split};
use crate::error::{Error, Result};

/// A validation dataset built from seen classes only.
#[derive(Debug, Clone)]
pub struct ValidationSplit {
    /// Remaining seen classes keep their training records; pseudo-unseen
    /// classes are marked unseen and their records become unlabeled-test
    /// (labels kept for scoring).
    pub dataset: Dataset,
    pub pseudo_unseen: Vec<ClassId>,
}

/// Holds out `round(fraction · S)` (at least one) of the `S` seen classes as
/// pseudo-unseen. Original unseen classes and all original test records are
/// dropped.
pub fn split_seen_for_validation(
    dataset: &Dataset,
    fraction: f64,
    seed: u64,
) -> Result<ValidationSplit> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Config(format!(
            "validation fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let table = dataset.semantics();
    let seen: Vec<ClassId> = table
        .seen_indices()
        .into_iter()
        .map(|i| table.class(i).id)
        .collect();
    if seen.len() < 2 {
        return Err(Error::Config(
            "validation split needs at least 2 seen classes".into(),
        ));
    }
    let held = ((fraction * seen.len() as f64).round() as usize).max(1);
    if held >= seen.len() {
        return Err(Error::Config(format!(
            "fraction {fraction} of {} seen classes leaves no training classes",
            seen.len()
        )));
    }
    let mut shuffled = seen.clone();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let pseudo: HashSet<ClassId> = shuffled[..held].iter().copied().collect();

    let classes: Vec<SemanticClass> = table
        .classes()
        .iter()
        .filter(|c| c.seen)
        .map(|c| SemanticClass {
            seen: !pseudo.contains(&c.id),
            ..c.clone()
        })
        .collect();
    let records = dataset
        .seen_train()
        .map(|r| {
            let mut r = r.clone();
            if r.label.is_some_and(|l| pseudo.contains(&l)) {
                r.split = Split::UnlabeledTest;
            }
            r
        })
        .collect();
    let new_table = SemanticTable::new(table.dim(), classes)?;
    Ok(ValidationSplit {
        dataset: dataset.with_records(records, new_table)?,
        pseudo_unseen: seen.into_iter().filter(|c| pseudo.contains(c)).collect(),
    })
}

/// Splits the unlabeled-test records into two disjoint halves, stratified
/// by evaluation label. Each half keeps every seen-train record; records
/// keep their original order.
pub fn halve_unlabeled(dataset: &Dataset, seed: u64) -> Result<(Dataset, Dataset)> {
    let unlabeled: Vec<usize> = (0..dataset.records().len())
        .filter(|&i| dataset.records()[i].split == Split::UnlabeledTest)
        .collect();
    if unlabeled.len() < 2 {
        return Err(Error::Invalid(format!(
            "need at least 2 unlabeled records to halve, have {}",
            unlabeled.len()
        )));
    }
    // Unlabeled-without-truth records form their own stratum, placed last.
    let mut strata: BTreeMap<(bool, u32), Vec<usize>> = BTreeMap::new();
    for &i in &unlabeled {
        let key = match dataset.records()[i].label {
            Some(id) => (false, id.0),
            None => (true, 0),
        };
        strata.entry(key).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_first = vec![false; dataset.records().len()];
    let mut k = 0usize;
    for members in strata.values_mut() {
        members.shuffle(&mut rng);
        for &i in members.iter() {
            in_first[i] = k.is_multiple_of(2);
            k += 1;
        }
    }
    let build = |first: bool| {
        let records = dataset
            .records()
            .iter()
            .enumerate()
            .filter(|(i, r)| r.split == Split::SeenTrain || in_first[*i] == first)
            .map(|(_, r)| r.clone())
            .collect();
        dataset.with_records(records, dataset.semantics().clone())
    };
    Ok((build(true)?, build(false)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_synthetic, SynthConfig};

    fn synth(seen: usize, unseen: usize, per: usize) -> Dataset {
        generate_synthetic(&SynthConfig {
            seen_classes: seen,
            unseen_classes: unseen,
            semantic_dim: 3,
            feature_dim: 4,
            samples_per_class: per,
            ..SynthConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn seventeen_percent_of_thirty() {
        let split = split_seen_for_validation(&synth(30, 2, 2), 0.17, 9).unwrap();
        assert_eq!(split.pseudo_unseen.len(), 5);
        let t = split.dataset.semantics();
        assert_eq!(t.len(), 30);
        assert_eq!(t.unseen_indices().len(), 5);
    }

    #[test]
    fn half_of_two_classes() {
        let split = split_seen_for_validation(&synth(2, 1, 3), 0.5, 1).unwrap();
        assert_eq!(split.pseudo_unseen.len(), 1);
        assert_eq!(split.dataset.seen_train().count(), 3);
        assert_eq!(split.dataset.unlabeled_test().count(), 3);
        for r in split.dataset.unlabeled_test() {
            assert_eq!(r.label, Some(split.pseudo_unseen[0]));
        }
    }

    #[test]
    fn split_is_seeded_and_class_level() {
        let ds = synth(10, 2, 4);
        let a = split_seen_for_validation(&ds, 0.3, 5).unwrap();
        let b = split_seen_for_validation(&ds, 0.3, 5).unwrap();
        assert_eq!(a.pseudo_unseen, b.pseudo_unseen);
        for r in a.dataset.seen_train() {
            assert!(!a.pseudo_unseen.contains(&r.label.unwrap()));
        }
        assert_eq!(
            a.dataset.unlabeled_test().count(),
            4 * a.pseudo_unseen.len()
        );
    }

    #[test]
    fn split_rejects_degenerate_fractions() {
        let ds = synth(2, 1, 2);
        assert!(split_seen_for_validation(&ds, 0.9, 1).is_err());
        assert!(split_seen_for_validation(&ds, 0.0, 1).is_err());
        assert!(split_seen_for_validation(&synth(1, 1, 2), 0.5, 1).is_err());
    }

    fn ids(ds: &Dataset) -> HashSet<String> {
        ds.unlabeled_test().map(|r| r.id.clone()).collect()
    }

    #[test]
    fn halves_partition_the_test_pool() {
        for (per, expect) in [(25, (50, 50)), (1, (2, 2))] {
            let ds = synth(2, 4, per);
            let (a, b) = halve_unlabeled(&ds, 3).unwrap();
            assert_eq!((ids(&a).len(), ids(&b).len()), expect);
            assert!(ids(&a).is_disjoint(&ids(&b)));
            let union: HashSet<_> = ids(&a).union(&ids(&b)).cloned().collect();
            assert_eq!(union, ids(&ds));
            assert_eq!(a.seen_train().count(), ds.seen_train().count());
        }
    }

    #[test]
    fn odd_pool_splits_51_50() {
        let ds = synth(1, 1, 101);
        let (a, b) = halve_unlabeled(&ds, 0).unwrap();
        assert_eq!(
            (a.unlabeled_test().count(), b.unlabeled_test().count()),
            (51, 50)
        );
    }

    #[test]
    fn halving_needs_two_records() {
        assert!(halve_unlabeled(&synth(1, 1, 1), 0).is_err());
    }
}
