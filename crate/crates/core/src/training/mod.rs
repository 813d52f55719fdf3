//! Two-stage training: an inductive stage on seen data, then a transductive
//! stage initialized from it that adds the pseudo-label loss on unlabeled
//! data.
//!
//! An epoch is one pass over the shuffled seen records in batches of `N`.
//! In the transductive stage each seen batch is paired with the next `N′`
//! records of an endless stream of shuffled passes over the unlabeled
//! records. Triplet assignments are recomputed at the start of every epoch
//! and held fixed within it. Every shuffle is derived from
//! `(seed, stream, index)` only, so the seen batches of epoch `k` are the
//! same whichever stage runs it.

mod checkpoint;
mod config;
mod cv;

use log::debug;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::{Dataset, LabeledFeature, TrainingView, UnlabeledFeature};
use crate::error::{Error, Result};
use crate::losses::{inductive_loss, transductive_loss, LossBreakdown};
use crate::numerics::{adam_step, AdamState, ProjectionNet};
use crate::triplet::{form_triplets, ClassProjections, TripletAssignment};

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint};
pub use config::{TrainConfig, EARLY_STOP_PATIENCE, EARLY_STOP_TOLERANCE};
pub use cv::{monte_carlo_cv, CvResult, CvRow, GridPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Inductive,
    Transductive,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Inductive => "inductive",
            Stage::Transductive => "transductive",
        }
    }
}

/// Network, optimizer state and per-epoch loss history.
///
/// Optimizer state is carried across the stage boundary, so a transductive
/// run with `α = 0` continues the inductive trajectory exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub net: ProjectionNet,
    pub adam: AdamState,
    pub config: TrainConfig,
    pub stage: Stage,
    /// Epochs completed over both stages.
    pub epoch: usize,
    /// One epoch-mean breakdown per completed epoch (`retained` is summed).
    pub history: Vec<LossBreakdown>,
}

impl Checkpoint {
    /// Freshly initialized network, before any epoch.
    pub fn initial(semantic_dim: usize, feature_dim: usize, config: &TrainConfig) -> Self {
        let mut rng = stream_rng(config.seed, STREAM_INIT, 0);
        let net = ProjectionNet::init(semantic_dim, config.hidden, feature_dim, &mut rng);
        let adam = AdamState::new(&net);
        Self {
            net,
            adam,
            config: config.clone(),
            stage: Stage::Inductive,
            epoch: 0,
            history: Vec::new(),
        }
    }
}

const STREAM_INIT: u64 = 0;
const STREAM_SEEN: u64 = 1;
const STREAM_UNLABELED: u64 = 2;

fn stream_rng(seed: u64, stream: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((stream << 48) ^ index);
    rng
}

fn permutation(n: usize, seed: u64, stream: u64, index: u64) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(&mut stream_rng(seed, stream, index));
    p
}

/// Minimizes the inductive objective on seen data from a fresh
/// initialization.
pub fn train_inductive(dataset: &Dataset, config: &TrainConfig) -> Result<Checkpoint> {
    train_inductive_view(&dataset.training_view(), config)
}

pub fn train_inductive_view(view: &TrainingView<'_>, config: &TrainConfig) -> Result<Checkpoint> {
    config.validate()?;
    if view.seen.is_empty() {
        return Err(Error::Invalid("no seen training records".into()));
    }
    let mut ckpt = Checkpoint::initial(view.semantics.dim(), view.feature_dim, config);
    run_stage(view, &mut ckpt, config.epochs_inductive)?;
    Ok(ckpt)
}

/// Starts the transductive stage from an inductive checkpoint.
pub fn train_transductive(
    dataset: &Dataset,
    config: &TrainConfig,
    init: &Checkpoint,
) -> Result<Checkpoint> {
    train_transductive_view(&dataset.training_view(), config, init)
}

pub fn train_transductive_view(
    view: &TrainingView<'_>,
    config: &TrainConfig,
    init: &Checkpoint,
) -> Result<Checkpoint> {
    config.validate()?;
    if init.stage != Stage::Inductive {
        return Err(Error::Invalid(
            "transductive training must start from an inductive checkpoint".into(),
        ));
    }
    check_shapes(view, &init.net)?;
    if view.unlabeled.is_empty() {
        return Err(Error::Invalid(
            "no unlabeled records for transductive training".into(),
        ));
    }
    let mut ckpt = Checkpoint {
        config: config.clone(),
        stage: Stage::Transductive,
        ..init.clone()
    };
    run_stage(view, &mut ckpt, config.epochs_transductive)?;
    Ok(ckpt)
}

/// Runs both stages back to back.
pub fn train_both(dataset: &Dataset, config: &TrainConfig) -> Result<(Checkpoint, Checkpoint)> {
    let view = dataset.training_view();
    let ind = train_inductive_view(&view, config)?;
    let tns = train_transductive_view(&view, config, &ind)?;
    Ok((ind, tns))
}

/// Continues the checkpoint's current stage for `epochs` more epochs with
/// its stored configuration.
pub fn resume(dataset: &Dataset, ckpt: &Checkpoint, epochs: usize) -> Result<Checkpoint> {
    let view = dataset.training_view();
    ckpt.config.validate()?;
    check_shapes(&view, &ckpt.net)?;
    let mut out = ckpt.clone();
    run_stage(&view, &mut out, epochs)?;
    Ok(out)
}

fn check_shapes(view: &TrainingView<'_>, net: &ProjectionNet) -> Result<()> {
    crate::error::check_dim(
        "checkpoint semantic dim",
        net.semantic_dim(),
        view.semantics.dim(),
    )?;
    crate::error::check_dim(
        "checkpoint feature dim",
        net.feature_dim(),
        view.feature_dim,
    )
}

/// Endless sequence of shuffled passes over the unlabeled records.
struct UnlabeledStream {
    n: usize,
    seed: u64,
    pass: Option<(u64, Vec<usize>)>,
}

impl UnlabeledStream {
    fn index_at(&mut self, position: u64) -> usize {
        let n = self.n as u64;
        let pass = position / n;
        if self.pass.as_ref().map(|p| p.0) != Some(pass) {
            self.pass = Some((pass, permutation(self.n, self.seed, STREAM_UNLABELED, pass)));
        }
        self.pass.as_ref().unwrap().1[(position % n) as usize]
    }
}

fn run_stage(view: &TrainingView<'_>, ckpt: &mut Checkpoint, epochs: usize) -> Result<()> {
    let cfg = ckpt.config.clone();
    let n_seen = view.seen.len();
    if n_seen == 0 {
        return Err(Error::Invalid("no seen training records".into()));
    }
    let steps = n_seen.div_ceil(cfg.batch_seen);
    let transductive = ckpt.stage == Stage::Transductive;
    let mut stream = UnlabeledStream {
        n: view.unlabeled.len(),
        seed: cfg.seed,
        pass: None,
    };
    let mut stalled = 0;

    for _ in 0..epochs {
        let epoch = ckpt.epoch;
        let assignments = if transductive {
            let proj = ClassProjections::new(&ckpt.net, view.semantics)?;
            form_triplets(&proj, &view.unlabeled, cfg.mode)?
        } else {
            Vec::new()
        };
        let order = permutation(n_seen, cfg.seed, STREAM_SEEN, epoch as u64);
        let mut sum = LossBreakdown::default();

        for (step, chunk) in order.chunks(cfg.batch_seen).enumerate() {
            let seen: Vec<LabeledFeature<'_>> = chunk.iter().map(|&i| view.seen[i]).collect();
            let (loss, grad) = if transductive {
                let start = ((epoch * steps + step) * cfg.batch_unlabeled) as u64;
                let mut batch: Vec<UnlabeledFeature<'_>> = Vec::with_capacity(cfg.batch_unlabeled);
                let mut local: Vec<TripletAssignment> = Vec::with_capacity(cfg.batch_unlabeled);
                for k in 0..cfg.batch_unlabeled as u64 {
                    let idx = stream.index_at(start + k);
                    local.push(TripletAssignment {
                        anchor: batch.len(),
                        ..assignments[idx]
                    });
                    batch.push(view.unlabeled[idx]);
                }
                transductive_loss(
                    &ckpt.net,
                    view.semantics,
                    &seen,
                    &batch,
                    &local,
                    cfg.objective(),
                )?
            } else {
                inductive_loss(&ckpt.net, view.semantics, &seen, cfg.lambda)?
            };
            if !loss.total.is_finite() {
                return Err(Error::NonFinite("training loss"));
            }
            adam_step(&mut ckpt.net, &grad, &mut ckpt.adam, cfg.lr)?;
            sum.total += loss.total;
            sum.supervised += loss.supervised;
            sum.unsupervised += loss.unsupervised;
            sum.regularizer += loss.regularizer;
            sum.retained += loss.retained;
        }

        let k = steps as f64;
        let mean = LossBreakdown {
            total: sum.total / k,
            supervised: sum.supervised / k,
            unsupervised: sum.unsupervised / k,
            regularizer: sum.regularizer / k,
            retained: sum.retained,
        };
        debug!(
            "{} epoch {epoch}: total {:.6} sup {:.6} unsup {:.6} retained {}",
            ckpt.stage.as_str(),
            mean.total,
            mean.supervised,
            mean.unsupervised,
            mean.retained
        );
        let previous = ckpt.history.last().map(|h| h.total);
        ckpt.history.push(mean);
        ckpt.epoch += 1;

        if cfg.early_stop {
            if let Some(prev) = previous {
                let improvement = (prev - mean.total) / prev.abs().max(f64::MIN_POSITIVE);
                stalled = if improvement < EARLY_STOP_TOLERANCE {
                    stalled + 1
                } else {
                    0
                };
                if stalled >= EARLY_STOP_PATIENCE {
                    debug!("early stop after epoch {epoch}");
                    break;
                }
            }
        }
    }
    Ok(())
}
