//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero when a criterion fails that is not listed in `KNOWN_RED`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tzsl_core::dataset::{LabeledFeature, SemanticClass, UnlabeledFeature};
use tzsl_core::evaluation::{
    fisher_pearson_skewness, hubness_skewness, predict_gzsl, predict_zsl, ProjectionDirection,
};
use tzsl_core::losses::{inductive_loss, transductive_loss, triplet_loss, ObjectiveWeights};
use tzsl_core::numerics::{finite_diff_grad, max_relative_error, Gradient};
use tzsl_core::training::{train_both, train_inductive, train_transductive};
use tzsl_core::triplet::form_triplets;
use tzsl_core::*;

/// Criteria whose trend checks are expected to fail on the synthetic
/// reference run; see the README. Exact sub-checks are never waived.
const KNOWN_RED: &[u32] = &[5, 7];

const FD_STEP: f64 = 1e-5;
const GRAD_TOL: f64 = 1e-4;
const GRAD_FLOOR: f64 = 1e-6;
const GRAD_INSTANCES: usize = 100;
const GRAD_BUDGET: Duration = Duration::from_secs(10);
const ORACLE_QUERIES: usize = 1000;
const ORACLE_BUDGET: Duration = Duration::from_secs(5);
const HM_PAIRS: usize = 10_000;
const HM_TOL: f64 = 1e-12;
const SKEW_TOL: f64 = 1e-12;

/// Reference synthetic benchmark: default generator settings, seeds 1..=5.
const REF_SEEDS: std::ops::RangeInclusive<u64> = 1..=5;
const TREND_OVER_EUCLIDEAN: f64 = 5.0;
const TREND_OVER_INDUCTIVE: f64 = 10.0;
const TREND_BUDGET: Duration = Duration::from_secs(300);
const SEEN_DROP_LIMIT: f64 = 5.0;

struct Outcome {
    pass: bool,
    /// False when an exact sub-check failed, which `KNOWN_RED` cannot excuse.
    waivable: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        waivable: true,
        detail: detail.into(),
    }
}

fn reference_data(seed: u64, seen_test_per_class: usize) -> Dataset {
    generate_synthetic(&SynthConfig {
        seen_test_per_class,
        seed,
        ..SynthConfig::default()
    })
    .unwrap()
}

// ---------------------------------------------------------------- 1

struct Instance {
    net: ProjectionNet,
    table: SemanticTable,
    seen: Vec<(Vec<f64>, usize)>,
    anchors: Vec<Vec<f64>>,
    triplets: Vec<TripletAssignment>,
}

fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    let (d, h, m) = (
        rng.random_range(1..=8),
        rng.random_range(1..=8),
        rng.random_range(1..=8),
    );
    let net = ProjectionNet::init(d, h, m, rng);
    let (s, u) = (rng.random_range(1..=3), rng.random_range(1..=3));
    let classes = (0..s + u)
        .map(|c| SemanticClass {
            id: ClassId(c as u32),
            name: format!("c{c}"),
            vector: (0..d).map(|_| rng.random_range(-1.5..1.5)).collect(),
            seen: c < s,
        })
        .collect();
    let table = SemanticTable::new(d, classes).unwrap();
    let feature = |rng: &mut ChaCha8Rng| {
        (0..m)
            .map(|_| rng.random_range(-0.9..0.9))
            .collect::<Vec<f64>>()
    };
    let seen = (0..rng.random_range(1..=5))
        .map(|_| (feature(rng), rng.random_range(0..s)))
        .collect();
    let n_u = rng.random_range(1..=5);
    let anchors = (0..n_u).map(|_| feature(rng)).collect();
    let triplets = (0..n_u)
        .map(|i| TripletAssignment {
            anchor: i,
            positive: rng.random_range(0..s + u),
            negative: rng.random_range(0..s),
            retained: rng.random_bool(0.8),
        })
        .collect();
    Instance {
        net,
        table,
        seen,
        anchors,
        triplets,
    }
}

/// Smallest |hinge argument| over retained triplets.
fn kink_distance(inst: &Instance, margin: f64) -> f64 {
    let d = |a: &[f64], c: usize| -> f64 {
        let p = inst.net.forward(&inst.table.class(c).vector).unwrap();
        a.iter().zip(&p).map(|(x, y)| (x - y) * (x - y)).sum()
    };
    inst.triplets
        .iter()
        .filter(|t| t.retained)
        .map(|t| {
            (d(&inst.anchors[t.anchor], t.positive) + margin
                - d(&inst.anchors[t.anchor], t.negative))
            .abs()
        })
        .fold(f64::INFINITY, f64::min)
}

fn gradient_suite() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = [0.0f64; 3];
    let mut counts = [0usize; 3];
    while counts.iter().any(|&c| c < GRAD_INSTANCES) {
        let inst = random_instance(&mut rng);
        let margin = rng.random_range(0.0..2.0);
        let w = ObjectiveWeights {
            alpha: rng.random_range(0.0..1.0),
            lambda: rng.random_range(0.0..0.1),
            margin,
            variant: UnsupervisedVariant::Triplet,
        };
        // Finite differences are meaningless across the hinge kink.
        let smooth = kink_distance(&inst, margin) > 1e-3;
        let seen: Vec<LabeledFeature<'_>> = inst
            .seen
            .iter()
            .map(|(x, c)| LabeledFeature {
                feature: x,
                class: *c,
            })
            .collect();
        let unl: Vec<UnlabeledFeature<'_>> = inst
            .anchors
            .iter()
            .map(|a| UnlabeledFeature::new(a))
            .collect();
        let (tb, tr) = (&inst.table, &inst.triplets);
        let check = |analytic: Gradient, loss: &dyn Fn(&ProjectionNet) -> Result<f64>| {
            let fd = finite_diff_grad(|n| loss(n), &inst.net, FD_STEP).unwrap();
            max_relative_error(&analytic, &fd, GRAD_FLOOR)
        };
        if counts[0] < GRAD_INSTANCES {
            let g = inductive_loss(&inst.net, tb, &seen, w.lambda).unwrap().1;
            worst[0] = worst[0].max(check(g, &|n| {
                Ok(inductive_loss(n, tb, &seen, w.lambda)?.0.total)
            }));
            counts[0] += 1;
        }
        if smooth && counts[1] < GRAD_INSTANCES {
            let v = UnsupervisedVariant::Triplet;
            let g = triplet_loss(&inst.net, tb, tr, &unl, margin, v).unwrap().1;
            worst[1] = worst[1].max(check(g, &|n| {
                Ok(triplet_loss(n, tb, tr, &unl, margin, v)?.0.total)
            }));
            counts[1] += 1;
        }
        if smooth && counts[2] < GRAD_INSTANCES {
            let g = transductive_loss(&inst.net, tb, &seen, &unl, tr, w)
                .unwrap()
                .1;
            worst[2] = worst[2].max(check(g, &|n| {
                Ok(transductive_loss(n, tb, &seen, &unl, tr, w)?.0.total)
            }));
            counts[2] += 1;
        }
    }
    let elapsed = start.elapsed();
    let pass = worst.iter().all(|&e| e < GRAD_TOL) && elapsed < GRAD_BUDGET;
    outcome(
        pass,
        format!(
            "{GRAD_INSTANCES} instances each; max rel err L_I {:.2e}, L_u {:.2e}, L_T {:.2e}; {:.2}s",
            worst[0],
            worst[1],
            worst[2],
            elapsed.as_secs_f64()
        ),
    )
}

// ---------------------------------------------------------------- 2

fn oracle_sq(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += (a[i] - b[i]) * (a[i] - b[i]);
    }
    s
}

/// First index (table order) with the smallest distance.
fn oracle_argmin(a: &[f64], proj: &[Vec<f64>], candidates: &[usize]) -> usize {
    let mut best = candidates[0];
    for &c in candidates {
        if oracle_sq(a, &proj[c]) < oracle_sq(a, &proj[best]) {
            best = c;
        }
    }
    best
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut mismatches = 0usize;
    let mut queries = 0usize;
    let mut ties = 0usize;
    while queries < ORACLE_QUERIES {
        let (d, m) = (4, 5);
        let net = ProjectionNet::init(d, 8, m, &mut rng);
        // Duplicated semantic vectors create exact ties between classes.
        let mut vectors: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        vectors.push(vectors[1].clone());
        vectors.push(vectors[3].clone());
        let seen_flags = [true, false, true, false, true, true, false];
        let classes = vectors
            .iter()
            .zip(seen_flags)
            .enumerate()
            .map(|(c, (v, seen))| SemanticClass {
                id: ClassId(c as u32),
                name: format!("c{c}"),
                vector: v.clone(),
                seen,
            })
            .collect();
        let table = SemanticTable::new(d, classes).unwrap();
        let proj = ClassProjections::new(&net, &table).unwrap();
        let raw: Vec<Vec<f64>> = (0..table.len())
            .map(|c| net.forward(&table.class(c).vector).unwrap())
            .collect();
        let seen: Vec<usize> = (0..7).filter(|&c| seen_flags[c]).collect();
        let unseen: Vec<usize> = (0..7).filter(|&c| !seen_flags[c]).collect();
        let all: Vec<usize> = (0..7).collect();

        let batch: Vec<Vec<f64>> = (0..50)
            .map(|i| match i % 5 {
                0 => raw[rng.random_range(0..7)].clone(),
                _ => (0..m).map(|_| rng.random_range(-1.0..1.0)).collect(),
            })
            .collect();
        let unl: Vec<UnlabeledFeature<'_>> =
            batch.iter().map(|a| UnlabeledFeature::new(a)).collect();
        let zsl = form_triplets(&proj, &unl, Mode::Zsl).unwrap();
        let gzsl = form_triplets(&proj, &unl, Mode::Gzsl).unwrap();
        for (i, a) in batch.iter().enumerate() {
            let pos_u = oracle_argmin(a, &raw, &unseen);
            let pos_all = oracle_argmin(a, &raw, &all);
            let neg = oracle_argmin(a, &raw, &seen);
            if [1, 3, 5, 6]
                .iter()
                .any(|&c| oracle_sq(a, &raw[c]) == oracle_sq(a, &raw[pos_all]))
            {
                ties += 1;
            }
            let expect_z = TripletAssignment {
                anchor: i,
                positive: pos_u,
                negative: neg,
                retained: true,
            };
            let expect_g = TripletAssignment {
                anchor: i,
                positive: pos_all,
                negative: neg,
                retained: !seen_flags[pos_all],
            };
            let ok = zsl[i] == expect_z
                && gzsl[i] == expect_g
                && predict_zsl(&proj, a).unwrap() == pos_u
                && predict_gzsl(&proj, a).unwrap() == pos_all;
            mismatches += usize::from(!ok);
        }
        queries += batch.len();
    }
    let elapsed = start.elapsed();
    outcome(
        mismatches == 0 && elapsed < ORACLE_BUDGET,
        format!(
            "{queries} queries ({ties} on exact ties), {mismatches} mismatches; {:.2}s",
            elapsed.as_secs_f64()
        ),
    )
}

// ---------------------------------------------------------------- 3

fn reduction_identity(bin: &Path, work: &Path) -> Outcome {
    let ds = reference_data(1, 0);
    let cfg = TrainConfig {
        alpha: 0.0,
        epochs_inductive: 6,
        epochs_transductive: 4,
        seed: 1,
        ..TrainConfig::default()
    };
    let (_, tns) = train_both(&ds, &cfg).unwrap();
    let ind = train_inductive(
        &ds,
        &TrainConfig {
            epochs_inductive: 10,
            ..cfg.clone()
        },
    )
    .unwrap();
    let core_ok = tns.net == ind.net && tns.adam == ind.adam;

    // The same identity through the command line, compared on evaluation reports.
    let data = synth_small(bin, &work.join("c3-data"));
    let common = ["--hidden", "32", "--lr", "0.001", "--seed", "3"];
    let both = work.join("c3-both");
    let only = work.join("c3-ind");
    let mut a = train_args(&data, &both, &common);
    a.extend(
        [
            "--stage",
            "both",
            "--alpha",
            "0",
            "--epochs-inductive",
            "4",
            "--epochs-transductive",
            "3",
        ]
        .map(String::from),
    );
    let mut b = train_args(&data, &only, &common);
    b.extend(["--stage", "inductive", "--epochs-inductive", "7"].map(String::from));
    run(bin, &a);
    run(bin, &b);
    for dir in [&both, &only] {
        let e = eval_args(
            &data,
            &dir.join("model.ckpt"),
            &dir.join("eval"),
            &["--mode", "gzsl"],
        );
        run(bin, &e);
    }
    let read = |d: &Path| fs::read(d.join("eval/report.txt")).unwrap();
    let cli_ok = read(&both) == read(&only);
    outcome(
        core_ok && cli_ok,
        format!("core checkpoints equal: {core_ok}; CLI reports equal: {cli_ok}"),
    )
}

// ---------------------------------------------------------------- 4

fn hm_algebra() -> Outcome {
    let headline = format!("{:.1}", harmonic_mean(74.6, 23.4));
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut bad = 0usize;
    for _ in 0..HM_PAIRS {
        let (x, y): (f64, f64) = (rng.random_range(0.0..=100.0), rng.random_range(0.0..=100.0));
        let h = harmonic_mean(x, y);
        let ok = (harmonic_mean(x, x) - x).abs() <= HM_TOL
            && harmonic_mean(x, 0.0) == 0.0
            && harmonic_mean(0.0, y) == 0.0
            && h >= x.min(y) - HM_TOL
            && h <= x.max(y) + HM_TOL
            && (h - harmonic_mean(y, x)).abs() <= HM_TOL;
        bad += usize::from(!ok);
    }
    let pass = headline == "35.6" && bad == 0 && harmonic_mean(0.0, 0.0) == 0.0;
    outcome(
        pass,
        format!("HM(74.6, 23.4) = {headline}; {bad} of {HM_PAIRS} random pairs violate"),
    )
}

// ---------------------------------------------------------------- 5, 7

struct TrendRun {
    acc: [f64; 3],
    skew: [f64; 2],
}

/// Inductive, euclidean and triplet models on each reference seed.
fn reference_runs() -> (Vec<TrendRun>, Duration) {
    let start = Instant::now();
    let runs = REF_SEEDS
        .map(|seed| {
            let ds = reference_data(seed, 0);
            let cfg = TrainConfig {
                seed,
                ..TrainConfig::default()
            };
            let ind = train_inductive(&ds, &cfg).unwrap();
            let eu = train_transductive(
                &ds,
                &TrainConfig {
                    variant: UnsupervisedVariant::Euclidean,
                    ..cfg.clone()
                },
                &ind,
            )
            .unwrap();
            let tri = train_transductive(&ds, &cfg, &ind).unwrap();
            let acc = |n: &ProjectionNet| {
                evaluate(n, &ds, Mode::Zsl, Averaging::Overall)
                    .unwrap()
                    .overall_top1
            };
            let skew = |n: &ProjectionNet| {
                hubness_skewness(n, &ds, 1, ProjectionDirection::SemanticToInput, Mode::Zsl)
                    .unwrap()
                    .skewness
            };
            TrendRun {
                acc: [acc(&ind.net), acc(&eu.net), acc(&tri.net)],
                skew: [skew(&ind.net), skew(&tri.net)],
            }
        })
        .collect();
    (runs, start.elapsed())
}

fn mean(runs: &[TrendRun], f: impl Fn(&TrendRun) -> f64) -> f64 {
    runs.iter().map(f).sum::<f64>() / runs.len() as f64
}

fn synthetic_trend(runs: &[TrendRun], elapsed: Duration) -> Outcome {
    let [ind, eu, tri] = [0, 1, 2].map(|i| mean(runs, |r| r.acc[i]));
    let pass = tri >= eu + TREND_OVER_EUCLIDEAN
        && tri >= ind + TREND_OVER_INDUCTIVE
        && elapsed < TREND_BUDGET;
    outcome(
        pass,
        format!(
            "unseen top-1 over {} seeds: inductive {ind:.1}, euclidean {eu:.1}, triplet {tri:.1} \
             (need triplet >= euclidean + {TREND_OVER_EUCLIDEAN} and >= inductive + {TREND_OVER_INDUCTIVE}); {:.0}s",
            runs.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn hubness(runs: &[TrendRun]) -> Outcome {
    let constant = fisher_pearson_skewness(&[3.0; 8]);
    let values = [0.0, 0.0, 0.0, 10.0];
    // Independent form: n/((n-1)(n-2)) Σ ((x - mean)/s)^3 with the sample standard deviation.
    let n = values.len() as f64;
    let mu = values.iter().sum::<f64>() / n;
    let s = (values.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let oracle =
        n / ((n - 1.0) * (n - 2.0)) * values.iter().map(|v| ((v - mu) / s).powi(3)).sum::<f64>();
    let got = fisher_pearson_skewness(&values);
    let [ind, tns] = [0, 1].map(|i| mean(runs, |r| r.skew[i]));
    let exact = constant == 0.0 && (got - oracle).abs() <= SKEW_TOL;
    Outcome {
        pass: exact && tns <= ind,
        waivable: exact,
        detail: format!(
            "constant -> {constant}; {{0,0,0,10}} -> {got} vs oracle {oracle}; \
             mean N_1 skewness inductive {ind:.3}, transductive {tns:.3}"
        ),
    }
}

// ---------------------------------------------------------------- 6

fn gzsl_discard() -> Outcome {
    let ds = reference_data(1, 10);
    let cfg = TrainConfig {
        mode: Mode::Gzsl,
        seed: 1,
        ..TrainConfig::default()
    };
    let (ind, tns) = train_both(&ds, &cfg).unwrap();
    let view = ds.training_view();

    // Discarded anchors must not move L_u or its gradient: relocate every one
    // of them and compare.
    let mut leaked = 0usize;
    let mut discarded = 0usize;
    for ckpt in [&ind, &tns] {
        let proj = ClassProjections::new(&ckpt.net, view.semantics).unwrap();
        let assignments = form_triplets(&proj, &view.unlabeled, Mode::Gzsl).unwrap();
        let far = vec![0.0; ds.feature_dim()];
        let moved: Vec<UnlabeledFeature<'_>> = view
            .unlabeled
            .iter()
            .zip(&assignments)
            .map(|(u, t)| {
                if t.retained {
                    *u
                } else {
                    UnlabeledFeature::new(&far)
                }
            })
            .collect();
        let a = triplet_loss(
            &ckpt.net,
            view.semantics,
            &assignments,
            &view.unlabeled,
            cfg.margin,
            cfg.variant,
        )
        .unwrap();
        let b = triplet_loss(
            &ckpt.net,
            view.semantics,
            &assignments,
            &moved,
            cfg.margin,
            cfg.variant,
        )
        .unwrap();
        let only: Vec<TripletAssignment> = assignments
            .iter()
            .copied()
            .filter(|t| !t.retained)
            .collect();
        discarded += only.len();
        if !only.is_empty() {
            let c = triplet_loss(
                &ckpt.net,
                view.semantics,
                &only,
                &view.unlabeled,
                cfg.margin,
                cfg.variant,
            )
            .unwrap();
            let zero =
                c.0.total == 0.0 && c.1.segments().iter().all(|s| s.iter().all(|&g| g == 0.0));
            leaked += usize::from(!zero);
        }
        leaked += usize::from(a != b);
    }
    let acc_s = |n: &ProjectionNet| {
        evaluate(n, &ds, Mode::Gzsl, Averaging::Overall)
            .unwrap()
            .acc_seen
            .unwrap()
    };
    let (before, after) = (acc_s(&ind.net), acc_s(&tns.net));
    let pass = leaked == 0 && discarded > 0 && before - after < SEEN_DROP_LIMIT;
    outcome(
        pass,
        format!(
            "{discarded} discarded anchors checked, {leaked} leaks; Acc_s inductive {before:.1} -> transductive {after:.1}"
        ),
    )
}

// ---------------------------------------------------------------- 8, 9

fn run(bin: &Path, args: &[String]) {
    let out = Command::new(bin)
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn s(p: &Path) -> String {
    p.display().to_string()
}

fn synth_small(bin: &Path, out: &Path) -> (String, String) {
    let args = [
        "synth",
        "--seen",
        "6",
        "--unseen",
        "4",
        "--per-class",
        "20",
        "--seen-test-per-class",
        "6",
        "--semantic-dim",
        "6",
        "--feature-dim",
        "10",
        "--seed",
        "5",
        "--out-dir",
    ];
    let mut v: Vec<String> = args.map(String::from).to_vec();
    v.push(s(out));
    run(bin, &v);
    (s(&out.join("features.emb")), s(&out.join("semantics.sem")))
}

fn train_args(data: &(String, String), out: &Path, extra: &[&str]) -> Vec<String> {
    let mut v: Vec<String> = [
        "train",
        "--features",
        &data.0,
        "--semantics",
        &data.1,
        "--out-dir",
        &s(out),
    ]
    .map(String::from)
    .to_vec();
    v.extend(extra.iter().map(|x| x.to_string()));
    v
}

fn eval_args(data: &(String, String), ckpt: &Path, out: &Path, extra: &[&str]) -> Vec<String> {
    let mut v: Vec<String> = [
        "eval",
        "--features",
        &data.0,
        "--semantics",
        &data.1,
        "--checkpoint",
        &s(ckpt),
        "--out-dir",
        &s(out),
    ]
    .map(String::from)
    .to_vec();
    v.extend(extra.iter().map(|x| x.to_string()));
    v
}

/// File name → bytes, with the manifest's duration line removed.
fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if !path.is_file() {
            continue;
        }
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        let mut bytes = fs::read(&path).unwrap();
        if name == "manifest.txt" {
            let text = String::from_utf8(bytes).unwrap();
            bytes = text
                .lines()
                .filter(|l| !l.starts_with("duration_ms="))
                .collect::<Vec<_>>()
                .join("\n")
                .into_bytes();
        }
        files.insert(name, bytes);
    }
    files
}

fn determinism(bin: &Path, work: &Path) -> Outcome {
    let base = work.join("c8");
    let data_dir = base.join("data");
    let train_dir = base.join("train");
    let eval_dir = base.join("eval");
    let fast = [
        "--hidden",
        "32",
        "--epochs-inductive",
        "5",
        "--epochs-transductive",
        "5",
        "--lr",
        "0.001",
        "--seed",
        "8",
    ];
    let mut differing = Vec::new();
    let mut first = Vec::new();
    for round in 0..2 {
        let data = synth_small(bin, &data_dir);
        run(bin, &train_args(&data, &train_dir, &fast));
        run(
            bin,
            &eval_args(
                &data,
                &train_dir.join("model.ckpt"),
                &eval_dir,
                &["--mode", "gzsl", "--hubness", "2"],
            ),
        );
        let snaps: Vec<_> = [&data_dir, &train_dir, &eval_dir]
            .iter()
            .map(|d| snapshot(d))
            .collect();
        if round == 0 {
            first = snaps;
        } else {
            for (cmd, (a, b)) in ["synth", "train", "eval"]
                .iter()
                .zip(first.iter().zip(&snaps))
            {
                if a != b {
                    differing.push(*cmd);
                }
            }
        }
    }
    outcome(
        differing.is_empty(),
        format!("synth/train/eval repeated; differing outputs: {differing:?}"),
    )
}

fn parse_report(path: &Path) -> BTreeMap<String, String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

fn qfsl_harness(bin: &Path, work: &Path) -> Outcome {
    let data = synth_small(bin, &work.join("c9-data"));
    let model = work.join("c9-train");
    let mut args = train_args(
        &data,
        &model,
        &[
            "--hidden",
            "32",
            "--epochs-inductive",
            "10",
            "--lr",
            "0.001",
        ],
    );
    args.extend(
        [
            "--epochs-transductive",
            "5",
            "--stage",
            "inductive",
            "--seed",
            "9",
        ]
        .map(String::from),
    );
    run(bin, &args);
    let out = work.join("c9-eval");
    run(
        bin,
        &eval_args(
            &data,
            &model.join("model.ckpt"),
            &out,
            &["--mode", "gzsl", "--protocol", "qfsl"],
        ),
    );
    let avg = parse_report(&out.join("report.txt"));
    let a = parse_report(&out.join("report_a.txt"));
    let b = parse_report(&out.join("report_b.txt"));
    let mut lines = Vec::new();
    let mut pass = true;
    for key in ["acc_seen", "acc_unseen", "hm"] {
        let v = |r: &BTreeMap<String, String>| r[key].parse::<f64>().unwrap();
        let expected = (v(&a) + v(&b)) / 2.0;
        pass &= v(&avg) == expected;
        lines.push(format!(
            "{key} {:.3} = ({:.3} + {:.3})/2",
            v(&avg),
            v(&a),
            v(&b)
        ));
    }
    outcome(pass, lines.join("; "))
}

// ----------------------------------------------------------------

fn main() -> ExitCode {
    let bin = Path::new(env!("CARGO_BIN_EXE_tzsl"));
    let work = tempfile::tempdir().unwrap();
    let w = work.path();
    let (runs, trend_time) = reference_runs();
    let criteria: Vec<(u32, &str, Box<dyn FnOnce() -> Outcome + '_>)> = vec![
        (1, "gradient suite", Box::new(gradient_suite)),
        (2, "oracle equivalence", Box::new(oracle_equivalence)),
        (
            3,
            "reduction identity",
            Box::new(|| reduction_identity(bin, w)),
        ),
        (4, "harmonic mean algebra", Box::new(hm_algebra)),
        (
            5,
            "synthetic trend",
            Box::new(|| synthetic_trend(&runs, trend_time)),
        ),
        (6, "gzsl discard rule", Box::new(gzsl_discard)),
        (7, "hubness diagnostic", Box::new(|| hubness(&runs))),
        (8, "cli determinism", Box::new(|| determinism(bin, w))),
        (
            9,
            "qfsl protocol harness",
            Box::new(|| qfsl_harness(bin, w)),
        ),
    ];
    let mut unexpected = 0;
    for (id, name, check) in criteria {
        let o = check();
        let status = match (o.pass, o.waivable && KNOWN_RED.contains(&id)) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => {
                unexpected += 1;
                "FAIL"
            }
        };
        println!("criterion {id} [{name}]: {status} - {}", o.detail);
    }
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
