//! One-vs-rest L2-regularized logistic regression and bagging ensembles.
//!
//! Each class `c` gets a binary problem in primal form,
//!
//! ```text
//! min_{w,b}  ½‖w‖² + C · Σ_i s_i · log(1 + exp(−y_i (w·x_i + b)))
//! ```
//!
//! with `y_i = +1` iff instance `i` has label `c` and `s_i` the class weight
//! of its label. The bias is not regularized. Problems are solved with a
//! truncated Newton method (conjugate gradient inner solver, backtracking
//! line search) until the gradient infinity-norm drops to `tol`.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{count_labels, Label, LabelCounts};
use crate::error::{Error, Result};
use crate::vectorize::SparseVector;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassWeight {
    #[default]
    None,
    Balanced,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LrConfig {
    #[serde(rename = "C", alias = "c")]
    pub c: f64,
    #[serde(default)]
    pub class_weight: ClassWeight,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

fn default_tol() -> f64 {
    1e-6
}

fn default_max_iter() -> usize {
    1000
}

impl Default for LrConfig {
    fn default() -> Self {
        LrConfig {
            c: 1.0,
            class_weight: ClassWeight::None,
            tol: default_tol(),
            max_iter: default_max_iter(),
        }
    }
}

impl LrConfig {
    pub fn new(c: f64, class_weight: ClassWeight) -> Self {
        LrConfig {
            c,
            class_weight,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::Config(format!("C must be positive, got {}", self.c)));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::Config("tol must be positive".into()));
        }
        Ok(())
    }
}

/// `N / (K · n_c)` over the classes present in `counts`; all ones for
/// [`ClassWeight::None`].
pub fn compute_class_weights(counts: &LabelCounts, mode: ClassWeight) -> Result<BTreeMap<Label, f64>> {
    let present: Vec<(Label, usize)> = counts.iter().filter(|(_, &n)| n > 0).map(|(&l, &n)| (l, n)).collect();
    match mode {
        ClassWeight::None => Ok(counts.keys().map(|&l| (l, 1.0)).collect()),
        ClassWeight::Balanced => {
            if present.is_empty() {
                return Err(Error::InvalidInput("no class has a positive count".into()));
            }
            let total: usize = present.iter().map(|(_, n)| n).sum();
            let k = present.len() as f64;
            Ok(present
                .into_iter()
                .map(|(l, n)| (l, total as f64 / (k * n as f64)))
                .collect())
        }
    }
}

fn log1p_exp(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// The binary primal objective over parameters `[w_0 .. w_{d-1}, b]`.
pub struct BinaryObjective<'a> {
    rows: &'a [SparseVector],
    targets: Vec<f64>,
    sample_weights: Vec<f64>,
    c: f64,
    dim: usize,
}

impl<'a> BinaryObjective<'a> {
    /// `targets` are ±1.
    pub fn new(rows: &'a [SparseVector], targets: Vec<f64>, sample_weights: Vec<f64>, c: f64) -> Result<Self> {
        let dim = rows.first().map(SparseVector::dim).unwrap_or(0);
        if rows.len() != targets.len() || rows.len() != sample_weights.len() {
            return Err(Error::InvalidInput("rows, targets and weights differ in length".into()));
        }
        if let Some(r) = rows.iter().find(|r| r.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: r.dim(),
            });
        }
        Ok(BinaryObjective {
            rows,
            targets,
            sample_weights,
            c,
            dim,
        })
    }

    /// Number of parameters, weights plus bias.
    pub fn n_params(&self) -> usize {
        self.dim + 1
    }

    fn margins(&self, params: &[f64]) -> Vec<f64> {
        let (w, b) = params.split_at(self.dim);
        self.rows.iter().map(|r| r.dot_dense(w) + b[0]).collect()
    }

    pub fn value(&self, params: &[f64]) -> f64 {
        let reg: f64 = params[..self.dim].iter().map(|x| x * x).sum::<f64>() * 0.5;
        let loss: f64 = self
            .margins(params)
            .iter()
            .zip(&self.targets)
            .zip(&self.sample_weights)
            .map(|((z, y), s)| s * log1p_exp(-y * z))
            .sum();
        reg + self.c * loss
    }

    pub fn gradient(&self, params: &[f64]) -> Vec<f64> {
        let mut g = params.to_vec();
        g[self.dim] = 0.0;
        let margins = self.margins(params);
        for (i, row) in self.rows.iter().enumerate() {
            let y = self.targets[i];
            let coef = -self.c * self.sample_weights[i] * y * sigmoid(-y * margins[i]);
            for (j, x) in row.iter() {
                g[j] += coef * x;
            }
            g[self.dim] += coef;
        }
        g
    }

    /// Per-instance curvature `C · s_i · σ(z_i)(1 − σ(z_i))`.
    fn curvature(&self, params: &[f64]) -> Vec<f64> {
        self.margins(params)
            .iter()
            .zip(&self.sample_weights)
            .map(|(&z, s)| {
                let p = sigmoid(z);
                self.c * s * p * (1.0 - p)
            })
            .collect()
    }

    fn hessian_vec(&self, curvature: &[f64], v: &[f64]) -> Vec<f64> {
        let mut out = v.to_vec();
        out[self.dim] = 0.0;
        let (vw, vb) = v.split_at(self.dim);
        for (row, &d) in self.rows.iter().zip(curvature) {
            let u = d * (row.dot_dense(vw) + vb[0]);
            for (j, x) in row.iter() {
                out[j] += u * x;
            }
            out[self.dim] += u;
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub converged: bool,
    pub gradient_norm: f64,
    /// Objective value at the start of every outer iteration and at the end.
    pub objective_trace: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

const MAX_CG_ITER: usize = 500;
const ARMIJO: f64 = 1e-4;

/// Truncated Newton minimization from the origin.
pub fn minimize(objective: &BinaryObjective<'_>, tol: f64, max_iter: usize) -> (Vec<f64>, SolveReport) {
    let n = objective.n_params();
    let mut x = vec![0.0; n];
    let mut f = objective.value(&x);
    let mut g = objective.gradient(&x);
    let mut trace = vec![f];
    let mut iterations = 0;
    let mut converged = inf_norm(&g) <= tol;
    while !converged && iterations < max_iter {
        iterations += 1;
        let curvature = objective.curvature(&x);
        let gnorm = dot(&g, &g).sqrt();
        let forcing = gnorm.sqrt().min(0.5);
        let mut step = conjugate_gradient(objective, &curvature, &g, forcing * gnorm);
        let mut slope = dot(&g, &step);
        if slope.is_nan() || slope >= 0.0 {
            step = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(&step).map(|(a, d)| a + t * d).collect();
            let ft = objective.value(&trial);
            if ft <= f + ARMIJO * t * slope {
                accepted = Some((trial, ft));
                break;
            }
            t *= 0.5;
        }
        let (next, fnext) = match accepted {
            Some(a) => a,
            None => {
                // Sufficient decrease is below rounding; keep the full step
                // only if it does not increase the objective beyond noise.
                let trial: Vec<f64> = x.iter().zip(&step).map(|(a, d)| a + d).collect();
                let ft = objective.value(&trial);
                let gt = objective.gradient(&trial);
                if ft <= f + 8.0 * f64::EPSILON * f.abs() && inf_norm(&gt) < inf_norm(&g) {
                    (trial, ft.min(f))
                } else {
                    break;
                }
            }
        };
        x = next;
        f = fnext;
        g = objective.gradient(&x);
        trace.push(f);
        converged = inf_norm(&g) <= tol;
    }
    let report = SolveReport {
        iterations,
        converged,
        gradient_norm: inf_norm(&g),
        objective_trace: trace,
    };
    (x, report)
}

fn conjugate_gradient(objective: &BinaryObjective<'_>, curvature: &[f64], g: &[f64], tol: f64) -> Vec<f64> {
    let n = g.len();
    let mut s = vec![0.0; n];
    let mut r: Vec<f64> = g.iter().map(|v| -v).collect();
    let mut d = r.clone();
    let mut rr = dot(&r, &r);
    for _ in 0..MAX_CG_ITER.min(2 * n) {
        if rr.sqrt() <= tol {
            break;
        }
        let hd = objective.hessian_vec(curvature, &d);
        let dhd = dot(&d, &hd);
        if dhd <= 0.0 {
            break;
        }
        let alpha = rr / dhd;
        for i in 0..n {
            s[i] += alpha * d[i];
            r[i] -= alpha * hd[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            d[i] = r[i] + beta * d[i];
        }
    }
    s
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub classes: Vec<Label>,
    pub dim: usize,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
}

/// Anything that maps a feature vector to a distribution over its classes.
pub trait Classifier {
    fn classes(&self) -> &[Label];

    fn dim(&self) -> usize;

    /// Probabilities aligned with [`Classifier::classes`].
    fn predict_proba(&self, x: &SparseVector) -> Result<Vec<f64>>;

    /// Argmax of [`Classifier::predict_proba`]; ties go to the class that
    /// comes first in canonical label order.
    fn predict(&self, x: &SparseVector) -> Result<Label> {
        let p = self.predict_proba(x)?;
        Ok(self.classes()[argmax(&p)])
    }

    /// Predicted label and the distribution over all four labels.
    fn predict_full(&self, x: &SparseVector) -> Result<(Label, [f64; 4])> {
        let p = self.predict_proba(x)?;
        let mut full = [0.0; 4];
        for (l, v) in self.classes().iter().zip(&p) {
            full[l.index()] = *v;
        }
        Ok((self.classes()[argmax(&p)], full))
    }
}

fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in p.iter().enumerate() {
        if *v > p[best] {
            best = i;
        }
    }
    best
}

fn check_dim(expected: usize, x: &SparseVector) -> Result<()> {
    if x.dim() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            actual: x.dim(),
        });
    }
    Ok(())
}

impl LinearModel {
    /// Raw one-vs-rest scores `w_c·x + b_c`.
    pub fn scores(&self, x: &SparseVector) -> Result<Vec<f64>> {
        check_dim(self.dim, x)?;
        Ok(self
            .weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| x.dot_dense(w) + b)
            .collect())
    }
}

impl Classifier for LinearModel {
    fn classes(&self) -> &[Label] {
        &self.classes
    }

    fn dim(&self) -> usize {
        self.dim
    }

    /// Per-class sigmoids normalized to sum to one.
    fn predict_proba(&self, x: &SparseVector) -> Result<Vec<f64>> {
        let raw: Vec<f64> = self.scores(x)?.into_iter().map(sigmoid).collect();
        let total: f64 = raw.iter().sum();
        if total > 0.0 {
            Ok(raw.into_iter().map(|p| p / total).collect())
        } else {
            Ok(vec![1.0 / raw.len() as f64; raw.len()])
        }
    }

    /// Argmax of the raw scores, which ranks like the probabilities but does
    /// not saturate.
    fn predict(&self, x: &SparseVector) -> Result<Label> {
        Ok(self.classes[argmax(&self.scores(x)?)])
    }

    fn predict_full(&self, x: &SparseVector) -> Result<(Label, [f64; 4])> {
        let mut full = [0.0; 4];
        for (l, v) in self.classes.iter().zip(self.predict_proba(x)?) {
            full[l.index()] = v;
        }
        Ok((self.predict(x)?, full))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainedLr {
    pub model: LinearModel,
    /// One report per class, in class order.
    pub reports: Vec<SolveReport>,
}

impl TrainedLr {
    pub fn converged(&self) -> bool {
        self.reports.iter().all(|r| r.converged)
    }
}

fn validate_training(features: &[SparseVector], labels: &[Label]) -> Result<(usize, Vec<Label>)> {
    if features.len() != labels.len() {
        return Err(Error::InvalidInput(format!(
            "{} feature rows but {} labels",
            features.len(),
            labels.len()
        )));
    }
    let dim = features.first().map(SparseVector::dim).unwrap_or(0);
    if dim == 0 {
        return Err(Error::InvalidInput("feature dimension must be positive".into()));
    }
    for f in features {
        check_dim(dim, f)?;
        if !f.is_finite() {
            return Err(Error::InvalidInput("non-finite feature value".into()));
        }
    }
    let counts = count_labels(labels);
    let classes: Vec<Label> = counts.iter().filter(|(_, &n)| n > 0).map(|(&l, _)| l).collect();
    if classes.len() < 2 {
        return Err(Error::InvalidInput(
            "training needs at least two distinct labels".into(),
        ));
    }
    Ok((dim, classes))
}

/// Trains one binary problem per present class, keeping solver reports.
pub fn train_lr_detailed(features: &[SparseVector], labels: &[Label], config: &LrConfig) -> Result<TrainedLr> {
    config.validate()?;
    let (dim, classes) = validate_training(features, labels)?;
    let class_weights = compute_class_weights(&count_labels(labels), config.class_weight)?;
    let sample_weights: Vec<f64> = labels.iter().map(|l| class_weights[l]).collect();
    let solved: Vec<(Vec<f64>, SolveReport)> = classes
        .par_iter()
        .map(|&class| {
            let targets = labels.iter().map(|&l| if l == class { 1.0 } else { -1.0 }).collect();
            let objective =
                BinaryObjective::new(features, targets, sample_weights.clone(), config.c).expect("validated above");
            minimize(&objective, config.tol, config.max_iter)
        })
        .collect();
    let mut weights = Vec::with_capacity(classes.len());
    let mut biases = Vec::with_capacity(classes.len());
    let mut reports = Vec::with_capacity(classes.len());
    for (class, (mut params, report)) in classes.iter().zip(solved) {
        if !report.converged {
            log::warn!(
                "class {class}: solver stopped after {} iterations with gradient norm {:.3e}",
                report.iterations,
                report.gradient_norm
            );
        }
        biases.push(params.pop().expect("bias"));
        weights.push(params);
        reports.push(report);
    }
    Ok(TrainedLr {
        model: LinearModel {
            classes,
            dim,
            weights,
            biases,
        },
        reports,
    })
}

pub fn train_lr(features: &[SparseVector], labels: &[Label], config: &LrConfig) -> Result<LinearModel> {
    train_lr_detailed(features, labels, config).map(|t| t.model)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaggingConfig {
    pub n_estimators: usize,
    #[serde(default)]
    pub seed: u64,
}

impl BaggingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_estimators < 1 {
            return Err(Error::Config("bagging needs at least one estimator".into()));
        }
        Ok(())
    }
}

/// How member training sets are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Bootstrap {
    /// Uniform with replacement, same size as the training set.
    #[default]
    Resample,
    /// Every member sees the full training set in order.
    Identity,
}

const BOOTSTRAP_ATTEMPTS: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaggingEnsemble {
    pub classes: Vec<Label>,
    pub dim: usize,
    pub members: Vec<LinearModel>,
}

pub fn train_bagging(
    features: &[SparseVector],
    labels: &[Label],
    lr: &LrConfig,
    bagging: &BaggingConfig,
) -> Result<BaggingEnsemble> {
    train_bagging_with(features, labels, lr, bagging, Bootstrap::Resample)
}

pub fn train_bagging_with(
    features: &[SparseVector],
    labels: &[Label],
    lr: &LrConfig,
    bagging: &BaggingConfig,
    bootstrap: Bootstrap,
) -> Result<BaggingEnsemble> {
    bagging.validate()?;
    lr.validate()?;
    let (dim, classes) = validate_training(features, labels)?;
    let n = features.len();
    let members = (0..bagging.n_estimators)
        .into_par_iter()
        .map(|k| {
            let sample = match bootstrap {
                Bootstrap::Identity => (0..n).collect(),
                Bootstrap::Resample => bootstrap_sample(labels, bagging.seed, k as u64)?,
            };
            let xs: Vec<SparseVector> = sample.iter().map(|&i| features[i].clone()).collect();
            let ys: Vec<Label> = sample.iter().map(|&i| labels[i]).collect();
            train_lr(&xs, &ys, lr)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BaggingEnsemble { classes, dim, members })
}

fn bootstrap_sample(labels: &[Label], seed: u64, member: u64) -> Result<Vec<usize>> {
    let n = labels.len();
    let mut rng = crate::seed::rng_for(seed, "bootstrap", member);
    for _ in 0..BOOTSTRAP_ATTEMPTS {
        let sample: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
        let first = labels[sample[0]];
        if sample.iter().any(|&i| labels[i] != first) {
            return Ok(sample);
        }
    }
    Err(Error::InvalidInput(format!(
        "bootstrap sample for member {member} collapsed to one class {BOOTSTRAP_ATTEMPTS} times"
    )))
}

impl Classifier for BaggingEnsemble {
    fn classes(&self) -> &[Label] {
        &self.classes
    }

    fn dim(&self) -> usize {
        self.dim
    }

    /// Mean of the member distributions; classes a member never saw get 0.
    fn predict_proba(&self, x: &SparseVector) -> Result<Vec<f64>> {
        check_dim(self.dim, x)?;
        let mut acc = vec![0.0; self.classes.len()];
        for m in &self.members {
            let p = m.predict_proba(x)?;
            for (label, v) in m.classes.iter().zip(p) {
                let slot = self
                    .classes
                    .iter()
                    .position(|c| c == label)
                    .expect("member class in ensemble");
                acc[slot] += v;
            }
        }
        let k = self.members.len() as f64;
        Ok(acc.into_iter().map(|v| v / k).collect())
    }
}

/// A trained classifier of either kind.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Model {
    Single(LinearModel),
    Bagging(BaggingEnsemble),
}

impl Classifier for Model {
    fn classes(&self) -> &[Label] {
        match self {
            Model::Single(m) => m.classes(),
            Model::Bagging(m) => m.classes(),
        }
    }

    fn dim(&self) -> usize {
        match self {
            Model::Single(m) => m.dim(),
            Model::Bagging(m) => m.dim(),
        }
    }

    fn predict_proba(&self, x: &SparseVector) -> Result<Vec<f64>> {
        match self {
            Model::Single(m) => m.predict_proba(x),
            Model::Bagging(m) => m.predict_proba(x),
        }
    }
}
