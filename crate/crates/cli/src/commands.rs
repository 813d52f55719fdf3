use std::fmt::Write as _;

use log::info;
use tzsl_core::dataset::{write_features, write_semantics};
use tzsl_core::evaluation::{evaluate_qfsl_from, hubness_skewness, ProjectionDirection};
use tzsl_core::training::{
    load_checkpoint, monte_carlo_cv, train_both, train_inductive, train_transductive,
    write_checkpoint, GridPoint,
};
use tzsl_core::{
    evaluate, generate_synthetic, load_dataset, Dataset, Error, Mode, Result, Stage, SynthConfig,
};

use crate::args::{
    CvArgs, DataArgs, EvalArgs, ProtocolArg, StageArg, SweepArgs, SynthArgs, TrainArgs,
};
use crate::output::Run;

fn load(data: &DataArgs, run: &mut Run) -> Result<Dataset> {
    run.input(&data.features);
    run.input(&data.semantics);
    load_dataset(&data.features, &data.semantics)
}

pub fn synth(args: &SynthArgs) -> Result<()> {
    let cfg = SynthConfig {
        seen_classes: args.seen as usize,
        unseen_classes: args.unseen as usize,
        semantic_dim: args.semantic_dim as usize,
        feature_dim: args.feature_dim as usize,
        samples_per_class: args.per_class as usize,
        seen_test_per_class: args.seen_test_per_class as usize,
        prototype_noise: args.prototype_noise,
        sample_noise: args.sample_noise,
        cluster_quality: args.cluster_quality,
        seed: args.seed,
    };
    let mut run = Run::new("synth", &args.common.out_dir);
    run.setting("seen", cfg.seen_classes);
    run.setting("unseen", cfg.unseen_classes);
    run.setting("semantic_dim", cfg.semantic_dim);
    run.setting("feature_dim", cfg.feature_dim);
    run.setting("per_class", cfg.samples_per_class);
    run.setting("seen_test_per_class", cfg.seen_test_per_class);
    run.setting("prototype_noise", format!("{:?}", cfg.prototype_noise));
    run.setting("sample_noise", format!("{:?}", cfg.sample_noise));
    run.setting("cluster_quality", format!("{:?}", cfg.cluster_quality));
    run.setting("seed", cfg.seed);
    let ds = generate_synthetic(&cfg)?;
    info!(
        "generated {} records over {} classes",
        ds.records().len(),
        ds.semantics().len()
    );
    run.output("features.emb", write_features(&ds)?);
    run.output("semantics.sem", write_semantics(ds.semantics())?);
    run.finish()
}

pub fn train(args: &TrainArgs) -> Result<()> {
    let cfg = args.hyper.config();
    cfg.validate()?;
    let mut run = Run::new("train", &args.common.out_dir);
    run.setting("stage", format!("{:?}", args.stage).to_lowercase());
    run.settings_text(&cfg.to_text());
    match (args.stage, &args.init) {
        (StageArg::Transductive, None) => {
            return Err(Error::Config(
                "--stage transductive requires --init <inductive checkpoint>".into(),
            ))
        }
        (StageArg::Inductive | StageArg::Both, Some(_)) => {
            return Err(Error::Config(
                "--init only applies to --stage transductive".into(),
            ))
        }
        _ => {}
    }
    let ds = load(&args.data, &mut run)?;
    match args.stage {
        StageArg::Inductive => {
            let ckpt = train_inductive(&ds, &cfg)?;
            run.output("model.ckpt", write_checkpoint(&ckpt));
        }
        StageArg::Transductive => {
            let path = args.init.as_ref().expect("checked above");
            run.input(path);
            let init = load_checkpoint(path)?;
            let ckpt = train_transductive(&ds, &cfg, &init)?;
            run.output("model.ckpt", write_checkpoint(&ckpt));
        }
        StageArg::Both => {
            let (ind, tns) = train_both(&ds, &cfg)?;
            run.output("inductive.ckpt", write_checkpoint(&ind));
            run.output("model.ckpt", write_checkpoint(&tns));
        }
    }
    info!("training finished");
    run.finish()
}

pub fn eval(args: &EvalArgs) -> Result<()> {
    let mut run = Run::new("eval", &args.common.out_dir);
    let mode: Mode = args.mode.into();
    let averaging: tzsl_core::Averaging = args.averaging.into();
    run.setting("mode", mode.as_str());
    run.setting("averaging", averaging.as_str());
    run.setting("protocol", format!("{:?}", args.protocol).to_lowercase());
    if let Some(k) = args.hubness {
        run.setting("hubness_k", k);
    }
    let ds = load(&args.data, &mut run)?;
    run.input(&args.checkpoint);
    let ckpt = load_checkpoint(&args.checkpoint)?;
    run.setting("seed", ckpt.config.seed);

    match args.protocol {
        ProtocolArg::Standard => {
            let report = evaluate(&ckpt.net, &ds, mode, averaging)?;
            run.output("report.txt", report.to_text());
            run.output("confusion.csv", report.confusion.to_csv());
        }
        ProtocolArg::Qfsl => {
            if mode != Mode::Gzsl {
                return Err(Error::Config("--protocol qfsl requires --mode gzsl".into()));
            }
            if ckpt.stage != Stage::Inductive {
                return Err(Error::Config(
                    "--protocol qfsl needs an inductive checkpoint".into(),
                ));
            }
            let cfg = tzsl_core::TrainConfig {
                mode,
                ..ckpt.config.clone()
            };
            let report = evaluate_qfsl_from(&ds, &ckpt, &cfg, averaging)?;
            run.output("report.txt", report.to_text());
            for (name, half) in ["a", "b"].iter().zip(&report.halves) {
                run.output(&format!("report_{name}.txt"), half.to_text());
                run.output(&format!("confusion_{name}.csv"), half.confusion.to_csv());
            }
        }
    }
    if let Some(k) = args.hubness {
        let report = hubness_skewness(
            &ckpt.net,
            &ds,
            k,
            ProjectionDirection::SemanticToInput,
            mode,
        )?;
        run.output("hubness.txt", report.to_text());
    }
    run.finish()
}

pub fn cv(args: &CvArgs) -> Result<()> {
    let base = args.hyper.config();
    base.validate()?;
    let mut run = Run::new("cv", &args.common.out_dir);
    run.settings_text(&base.to_text());
    let list = |v: &[f64]| {
        v.iter()
            .map(|x| format!("{x:?}"))
            .collect::<Vec<_>>()
            .join(",")
    };
    run.setting("alphas", list(&args.alphas));
    run.setting("lambdas", list(&args.lambdas));
    run.setting("margins", list(&args.margins));
    run.setting("reps", args.reps);
    run.setting("val_fraction", format!("{:?}", args.val_fraction));
    let ds = load(&args.data, &mut run)?;

    let mut grid = Vec::new();
    for &alpha in &args.alphas {
        for &lambda in &args.lambdas {
            for &margin in &args.margins {
                grid.push(GridPoint {
                    alpha,
                    lambda,
                    margin,
                });
            }
        }
    }
    let result = monte_carlo_cv(&ds, &grid, args.reps, args.val_fraction, &base)?;
    let mut runs = String::from("alpha,lambda,margin,rep,seed,score\n");
    for row in &result.rows {
        for (r, score) in row.scores.iter().enumerate() {
            let p = row.point;
            let seed = base.seed.wrapping_add(r as u64);
            let _ = writeln!(
                runs,
                "{:?},{:?},{:?},{r},{seed},{score:?}",
                p.alpha, p.lambda, p.margin
            );
        }
    }
    let best = tzsl_core::TrainConfig {
        alpha: result.best.alpha,
        lambda: result.best.lambda,
        margin: result.best.margin,
        ..base
    };
    info!(
        "best alpha={} lambda={} margin={}",
        best.alpha, best.lambda, best.margin
    );
    run.output("cv_scores.csv", result.to_csv());
    run.output("runs.csv", runs);
    run.output("best_config.txt", best.to_text());
    run.finish()
}

pub fn sweep_batch(args: &SweepArgs) -> Result<()> {
    let base = args.hyper.config();
    base.validate()?;
    if args.batch_sizes.is_empty() {
        return Err(Error::Config("--batch-sizes is empty".into()));
    }
    let mut run = Run::new("sweep-batch", &args.common.out_dir);
    run.settings_text(&base.to_text());
    let sizes: Vec<String> = args.batch_sizes.iter().map(|n| n.to_string()).collect();
    run.setting("batch_sizes", sizes.join(","));
    let ds = load(&args.data, &mut run)?;
    let mut csv = String::from("batch_size,unseen_top1\n");
    for &n in &args.batch_sizes {
        let cfg = tzsl_core::TrainConfig {
            batch_seen: n,
            batch_unlabeled: n,
            ..base.clone()
        };
        cfg.validate()?;
        let (_, model) = train_both(&ds, &cfg)?;
        let acc = evaluate(&model.net, &ds, Mode::Zsl, tzsl_core::Averaging::Overall)?.overall_top1;
        info!("batch size {n}: unseen top-1 {acc:.2}");
        let _ = writeln!(csv, "{n},{acc:?}");
    }
    run.output("sweep.csv", csv);
    run.finish()
}
