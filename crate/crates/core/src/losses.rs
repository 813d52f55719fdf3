//! Training objectives with analytic gradients.
//!
//! * inductive: `L_I = (1/N)·Σ‖x_i − Θ(e_i)‖² + λ‖W‖²`
//! * unsupervised triplet: `L_u = (1/N′)·Σ_retained max{0, ‖a − Θ(e⁺)‖² + m − ‖a − Θ(e⁻)‖²}`
//! * transductive: `L_T = (1/N)·Σ‖x_i − Θ(e_i)‖² + α·L_u + λ‖W‖²`
//!
//! `‖W‖²` covers both weight matrices, not the biases. Every class
//! projection in a batch is computed once and its upstream gradients are
//! summed before a single backward pass per class, in table order.

use crate::dataset::{LabeledFeature, SemanticTable, UnlabeledFeature};
use crate::error::{check_dim, Error, Result};
use crate::numerics::{sq_dist, Activations, Gradient, ProjectionNet};
use crate::triplet::TripletAssignment;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnsupervisedVariant {
    /// Hinge triplet loss against the nearest seen class.
    Triplet,
    /// Mean squared distance to the pseudo-label projection (baseline).
    Euclidean,
}

impl UnsupervisedVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            UnsupervisedVariant::Triplet => "triplet",
            UnsupervisedVariant::Euclidean => "euclidean",
        }
    }
}

impl std::str::FromStr for UnsupervisedVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "triplet" => Ok(Self::Triplet),
            "euclidean" => Ok(Self::Euclidean),
            _ => Err(Error::Config(format!("unknown unsupervised variant {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossBreakdown {
    pub total: f64,
    pub supervised: f64,
    pub unsupervised: f64,
    /// Unscaled `‖W‖²`.
    pub regularizer: f64,
    pub retained: usize,
}

/// Weights of the transductive objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveWeights {
    pub alpha: f64,
    pub lambda: f64,
    pub margin: f64,
    pub variant: UnsupervisedVariant,
}

/// Lazily computed activations and summed upstream gradients per class.
struct ClassTape<'a> {
    net: &'a ProjectionNet,
    table: &'a SemanticTable,
    acts: Vec<Option<Activations>>,
    upstream: Vec<Option<Vec<f64>>>,
}

impl<'a> ClassTape<'a> {
    fn new(net: &'a ProjectionNet, table: &'a SemanticTable) -> Result<Self> {
        check_dim("semantic dim", net.semantic_dim(), table.dim())?;
        Ok(Self {
            net,
            table,
            acts: vec![None; table.len()],
            upstream: vec![None; table.len()],
        })
    }

    fn projection(&mut self, class: usize) -> Result<&[f64]> {
        if class >= self.acts.len() {
            return Err(Error::Invalid(format!("class index {class} out of range")));
        }
        if self.acts[class].is_none() {
            self.acts[class] = Some(self.net.forward_full(&self.table.class(class).vector)?);
        }
        Ok(&self.acts[class].as_ref().unwrap().output)
    }

    /// `upstream[class] += scale · (Θ(e_class) − x)`.
    fn push(&mut self, class: usize, scale: f64, x: &[f64]) {
        let out = &self.acts[class]
            .as_ref()
            .expect("projection computed first")
            .output;
        let up = self.upstream[class].get_or_insert_with(|| vec![0.0; out.len()]);
        for ((u, o), xi) in up.iter_mut().zip(out).zip(x) {
            *u += scale * (o - xi);
        }
    }

    /// `self.upstream[c] += scale · other.upstream[c]` for every class.
    fn absorb(&mut self, other: ClassTape<'_>, scale: f64) {
        for (c, up) in other.upstream.into_iter().enumerate() {
            let Some(up) = up else { continue };
            if self.acts[c].is_none() {
                self.acts[c] = other.acts[c].clone();
            }
            let dst = self.upstream[c].get_or_insert_with(|| vec![0.0; up.len()]);
            for (d, u) in dst.iter_mut().zip(&up) {
                *d += scale * u;
            }
        }
    }

    fn backward(&self) -> Gradient {
        let mut grad = self.net.zeros_like();
        for (c, up) in self.upstream.iter().enumerate() {
            if let Some(up) = up {
                let act = self.acts[c].as_ref().unwrap();
                self.net
                    .accumulate_backward(&self.table.class(c).vector, act, up, &mut grad);
            }
        }
        grad
    }
}

fn check_features(dim: usize, features: impl Iterator<Item = usize>) -> Result<()> {
    for len in features {
        check_dim("feature vector", dim, len)?;
    }
    Ok(())
}

fn supervised_term(tape: &mut ClassTape<'_>, seen: &[LabeledFeature<'_>]) -> Result<f64> {
    if seen.is_empty() {
        return Err(Error::Invalid("seen batch is empty".into()));
    }
    check_features(tape.net.feature_dim(), seen.iter().map(|s| s.feature.len()))?;
    let n = seen.len() as f64;
    let mut value = 0.0;
    for s in seen {
        if s.class >= tape.table.len() || !tape.table.class(s.class).seen {
            return Err(Error::Invalid(format!(
                "supervised sample must carry a seen-class label, got class index {}",
                s.class
            )));
        }
        value += sq_dist(s.feature, tape.projection(s.class)?);
        tape.push(s.class, 2.0 / n, s.feature);
    }
    Ok(value / n)
}

fn unsupervised_term(
    tape: &mut ClassTape<'_>,
    assignments: &[TripletAssignment],
    unlabeled: &[UnlabeledFeature<'_>],
    margin: f64,
    variant: UnsupervisedVariant,
) -> Result<(f64, usize)> {
    if !(margin >= 0.0 && margin.is_finite()) {
        return Err(Error::Config(format!(
            "margin must be non-negative, got {margin}"
        )));
    }
    if unlabeled.is_empty() {
        return Err(Error::Invalid("unlabeled batch is empty".into()));
    }
    check_features(
        tape.net.feature_dim(),
        unlabeled.iter().map(|u| u.feature().len()),
    )?;
    let n = unlabeled.len() as f64;
    let mut value = 0.0;
    let mut retained = 0;
    for t in assignments.iter().filter(|t| t.retained) {
        let a = unlabeled
            .get(t.anchor)
            .ok_or_else(|| Error::Invalid(format!("assignment anchor {} outside batch", t.anchor)))?
            .feature();
        retained += 1;
        let d_pos = sq_dist(a, tape.projection(t.positive)?);
        match variant {
            UnsupervisedVariant::Euclidean => {
                value += d_pos;
                tape.push(t.positive, 2.0 / n, a);
            }
            UnsupervisedVariant::Triplet => {
                let d_neg = sq_dist(a, tape.projection(t.negative)?);
                let hinge = d_pos + margin - d_neg;
                // The kink itself takes the inactive branch.
                if hinge > 0.0 {
                    value += hinge;
                    tape.push(t.positive, 2.0 / n, a);
                    tape.push(t.negative, -2.0 / n, a);
                }
            }
        }
    }
    Ok((value / n, retained))
}

fn add_regularizer(grad: &mut Gradient, net: &ProjectionNet, lambda: f64) {
    if lambda == 0.0 {
        return;
    }
    for (g, w) in grad.w1.as_mut_slice().iter_mut().zip(net.w1.as_slice()) {
        *g += 2.0 * lambda * w;
    }
    for (g, w) in grad.w2.as_mut_slice().iter_mut().zip(net.w2.as_slice()) {
        *g += 2.0 * lambda * w;
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda >= 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "lambda must be non-negative, got {lambda}"
        )))
    }
}

pub fn inductive_loss(
    net: &ProjectionNet,
    table: &SemanticTable,
    seen: &[LabeledFeature<'_>],
    lambda: f64,
) -> Result<(LossBreakdown, Gradient)> {
    check_lambda(lambda)?;
    let mut tape = ClassTape::new(net, table)?;
    let supervised = supervised_term(&mut tape, seen)?;
    let regularizer = net.weight_sq_norm();
    let mut grad = tape.backward();
    add_regularizer(&mut grad, net, lambda);
    let breakdown = LossBreakdown {
        total: supervised + lambda * regularizer,
        supervised,
        unsupervised: 0.0,
        regularizer,
        retained: 0,
    };
    Ok((breakdown, grad))
}

/// The unsupervised term alone; `total == unsupervised` in the result.
///
/// `N′` is the full unlabeled batch size, discarded anchors included.
pub fn triplet_loss(
    net: &ProjectionNet,
    table: &SemanticTable,
    assignments: &[TripletAssignment],
    unlabeled: &[UnlabeledFeature<'_>],
    margin: f64,
    variant: UnsupervisedVariant,
) -> Result<(LossBreakdown, Gradient)> {
    let mut tape = ClassTape::new(net, table)?;
    let (value, retained) = unsupervised_term(&mut tape, assignments, unlabeled, margin, variant)?;
    let breakdown = LossBreakdown {
        total: value,
        unsupervised: value,
        retained,
        ..LossBreakdown::default()
    };
    Ok((breakdown, tape.backward()))
}

/// Supervised term + `α·L_u` + a single `λ‖W‖²`.
pub fn transductive_loss(
    net: &ProjectionNet,
    table: &SemanticTable,
    seen: &[LabeledFeature<'_>],
    unlabeled: &[UnlabeledFeature<'_>],
    assignments: &[TripletAssignment],
    weights: ObjectiveWeights,
) -> Result<(LossBreakdown, Gradient)> {
    check_lambda(weights.lambda)?;
    if !(weights.alpha >= 0.0 && weights.alpha.is_finite()) {
        return Err(Error::Config(format!(
            "alpha must be non-negative, got {}",
            weights.alpha
        )));
    }
    let mut tape = ClassTape::new(net, table)?;
    let supervised = supervised_term(&mut tape, seen)?;
    let mut unsup_tape = ClassTape::new(net, table)?;
    let (unsupervised, retained) = unsupervised_term(
        &mut unsup_tape,
        assignments,
        unlabeled,
        weights.margin,
        weights.variant,
    )?;
    // With α = 0 the unsupervised gradient is skipped so the update matches
    // the inductive objective bit for bit.
    if weights.alpha != 0.0 {
        tape.absorb(unsup_tape, weights.alpha);
    }
    let regularizer = net.weight_sq_norm();
    let mut grad = tape.backward();
    add_regularizer(&mut grad, net, weights.lambda);
    let breakdown = LossBreakdown {
        total: supervised + weights.alpha * unsupervised + weights.lambda * regularizer,
        supervised,
        unsupervised,
        regularizer,
        retained,
    };
    Ok((breakdown, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{ClassId, SemanticClass};
    use crate::numerics::DenseMatrix;

    /// Identity weights on two dimensions, so `Θ(e) = tanh(tanh(e))`.
    fn tiny() -> (ProjectionNet, SemanticTable) {
        let net = ProjectionNet::from_parts(
            DenseMatrix::identity(2),
            vec![0.0; 2],
            DenseMatrix::identity(2),
            vec![0.0; 2],
        )
        .unwrap();
        let table = SemanticTable::new(
            2,
            vec![
                SemanticClass {
                    id: ClassId(0),
                    name: "s0".into(),
                    vector: vec![0.5, -0.2],
                    seen: true,
                },
                SemanticClass {
                    id: ClassId(1),
                    name: "s1".into(),
                    vector: vec![-0.4, 0.3],
                    seen: true,
                },
                SemanticClass {
                    id: ClassId(2),
                    name: "u0".into(),
                    vector: vec![0.1, 0.9],
                    seen: false,
                },
            ],
        )
        .unwrap();
        (net, table)
    }

    #[test]
    fn perfect_fit_has_zero_loss() {
        let (net, table) = tiny();
        let target = net.forward(&table.class(0).vector).unwrap();
        let seen = [LabeledFeature {
            feature: &target,
            class: 0,
        }];
        let (b, g) = inductive_loss(&net, &table, &seen, 0.0).unwrap();
        assert_eq!(b.total, 0.0);
        assert!(g.segments().iter().all(|s| s.iter().all(|&x| x == 0.0)));
    }

    #[test]
    fn unit_residual_costs_one() {
        let (net, table) = tiny();
        let mut target = net.forward(&table.class(1).vector).unwrap();
        target[0] += 1.0;
        let seen = [LabeledFeature {
            feature: &target,
            class: 1,
        }];
        let (b, _) = inductive_loss(&net, &table, &seen, 0.0).unwrap();
        assert!((b.total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn unseen_label_rejected() {
        let (net, table) = tiny();
        let f = [0.0, 0.0];
        let seen = [LabeledFeature {
            feature: &f,
            class: 2,
        }];
        assert!(inductive_loss(&net, &table, &seen, 0.0).is_err());
    }

    /// Anchor placed so that ‖a−Θ(e⁺)‖² and ‖a−Θ(e⁻)‖² take chosen values.
    fn hinge_case(d_pos_sq: f64, d_neg_sq: f64, margin: f64) -> f64 {
        // Positive and negative projections are points in R²; build a custom
        // table whose projections are known by evaluating the net.
        let (net, table) = tiny();
        let p = net.forward(&table.class(2).vector).unwrap();
        let n = net.forward(&table.class(0).vector).unwrap();
        // Find anchor on the plane with the requested distances (two-circle
        // intersection).
        let (dx, dy) = (n[0] - p[0], n[1] - p[1]);
        let dist = (dx * dx + dy * dy).sqrt();
        let x = (d_pos_sq - d_neg_sq + dist * dist) / (2.0 * dist);
        let h = (d_pos_sq - x * x).max(0.0).sqrt();
        let a = [
            p[0] + x * dx / dist - h * dy / dist,
            p[1] + x * dy / dist + h * dx / dist,
        ];
        let batch = [UnlabeledFeature::new(&a)];
        let trip = [TripletAssignment {
            anchor: 0,
            positive: 2,
            negative: 0,
            retained: true,
        }];
        triplet_loss(
            &net,
            &table,
            &trip,
            &batch,
            margin,
            UnsupervisedVariant::Triplet,
        )
        .unwrap()
        .0
        .total
    }

    #[test]
    fn hinge_arithmetic() {
        assert_eq!(hinge_case(1.0, 4.0, 1.0), 0.0);
        assert!((hinge_case(4.0, 2.0, 1.0) - 3.0).abs() < 1e-9);
    }

    #[test]
    fn discarded_anchors_contribute_nothing() {
        let (net, table) = tiny();
        let a = [0.2, 0.2];
        let batch = [UnlabeledFeature::new(&a)];
        let trip = [TripletAssignment {
            anchor: 0,
            positive: 0,
            negative: 0,
            retained: false,
        }];
        let (b, g) = triplet_loss(
            &net,
            &table,
            &trip,
            &batch,
            1.0,
            UnsupervisedVariant::Triplet,
        )
        .unwrap();
        assert_eq!((b.total, b.retained), (0.0, 0));
        assert!(g.segments().iter().all(|s| s.iter().all(|&x| x == 0.0)));
    }

    #[test]
    fn negative_margin_rejected() {
        let (net, table) = tiny();
        let a = [0.2, 0.2];
        let batch = [UnlabeledFeature::new(&a)];
        let trip = [TripletAssignment {
            anchor: 0,
            positive: 2,
            negative: 0,
            retained: true,
        }];
        assert!(triplet_loss(
            &net,
            &table,
            &trip,
            &batch,
            -0.1,
            UnsupervisedVariant::Triplet
        )
        .is_err());
    }

    #[test]
    fn transductive_reduces_without_unsupervised_term() {
        let (net, table) = tiny();
        let x = [0.3, -0.6];
        let a = [0.1, 0.4];
        let seen = [LabeledFeature {
            feature: &x,
            class: 1,
        }];
        let batch = [UnlabeledFeature::new(&a)];
        let kept = [TripletAssignment {
            anchor: 0,
            positive: 2,
            negative: 0,
            retained: true,
        }];
        let dropped = [TripletAssignment {
            retained: false,
            ..kept[0]
        }];
        let ind = inductive_loss(&net, &table, &seen, 1e-3).unwrap();
        for (alpha, trip) in [(0.0, &kept), (0.7, &dropped)] {
            let w = ObjectiveWeights {
                alpha,
                lambda: 1e-3,
                margin: 1.0,
                variant: UnsupervisedVariant::Triplet,
            };
            let tr = transductive_loss(&net, &table, &seen, &batch, trip, w).unwrap();
            assert_eq!(tr.0.total, ind.0.total);
            assert_eq!(tr.1, ind.1);
        }
    }
}
