use rayon::prelude::*;

use super::{train_both, TrainConfig};
use crate::dataset::{split_seen_for_validation, Dataset};
use crate::error::{Error, Result};
use crate::evaluation::{evaluate, Averaging};
use crate::triplet::Mode;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub alpha: f64,
    pub lambda: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvRow {
    pub point: GridPoint,
    /// ZSL top-1 on the pseudo-unseen classes, one per repetition.
    pub scores: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation (0 for a single repetition).
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub best: GridPoint,
    pub rows: Vec<CvRow>,
}

impl CvResult {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("alpha,lambda,margin,mean,std\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{:?},{:?},{:?},{:?},{:?}\n",
                r.point.alpha, r.point.lambda, r.point.margin, r.mean, r.std
            ));
        }
        s
    }
}

/// Monte Carlo cross-validation over seen classes.
///
/// Repetition `r` holds out a fresh random subset of seen classes (seed
/// `base.seed + r`), trains both stages in ZSL mode with that seed, and
/// scores ZSL top-1 on the held-out classes. Every grid point sees the same
/// splits. The best point has the highest mean; ties go to the earlier
/// point. Runs execute in parallel; results do not depend on scheduling.
pub fn monte_carlo_cv(
    dataset: &Dataset,
    grid: &[GridPoint],
    repetitions: usize,
    fraction: f64,
    base: &TrainConfig,
) -> Result<CvResult> {
    if grid.is_empty() {
        return Err(Error::Config("cross-validation grid is empty".into()));
    }
    if repetitions == 0 {
        return Err(Error::Config(
            "cross-validation needs at least one repetition".into(),
        ));
    }
    let splits = (0..repetitions)
        .map(|r| split_seen_for_validation(dataset, fraction, base.seed.wrapping_add(r as u64)))
        .collect::<Result<Vec<_>>>()?;

    let jobs: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|g| (0..repetitions).map(move |r| (g, r)))
        .collect();
    let scores = jobs
        .par_iter()
        .map(|&(g, r)| {
            let p = grid[g];
            let cfg = TrainConfig {
                mode: Mode::Zsl,
                alpha: p.alpha,
                lambda: p.lambda,
                margin: p.margin,
                seed: base.seed.wrapping_add(r as u64),
                ..base.clone()
            };
            let split = &splits[r].dataset;
            let (_, model) = train_both(split, &cfg)?;
            Ok(evaluate(&model.net, split, Mode::Zsl, Averaging::Overall)?.overall_top1)
        })
        .collect::<Result<Vec<f64>>>()?;

    let rows: Vec<CvRow> = grid
        .iter()
        .enumerate()
        .map(|(g, &point)| {
            let s = scores[g * repetitions..(g + 1) * repetitions].to_vec();
            let n = s.len() as f64;
            let mean = s.iter().sum::<f64>() / n;
            let std = if s.len() > 1 {
                (s.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            CvRow {
                point,
                scores: s,
                mean,
                std,
            }
        })
        .collect();
    let mut best = 0;
    for (i, r) in rows.iter().enumerate() {
        if r.mean > rows[best].mean {
            best = i;
        }
    }
    Ok(CvResult {
        best: rows[best].point,
        rows,
    })
}
