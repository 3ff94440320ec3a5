//! CRF training surface: partial-label negative log-likelihood, its gradient
//! with respect to the scores, a finite-difference checker, and an SGD trainer
//! for linear local scorers with a strength grid search on top.
//!
//! Unlisted labels are hidden and marginalized out. For a target `(t, s)` the
//! loss term is `-log p(y_t = s | z)` and its gradient is
//! `-(E[y | y_t = s, z] - E[y | z])`: one clamped run per target plus one
//! shared unclamped run.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{ClampSet, MarginalTable};
use crate::graph::{LabelGraph, Spin};
use crate::infer::{CrfModel, Inference};
use crate::par;

/// Strength grid used when none is given.
pub const DEFAULT_STRENGTH_GRID: [f64; 7] = [0.0, 0.1, 0.3, 0.5, 0.7, 1.0, 1.5];

/// Denominator floor of the gradient-check relative error.
pub const REL_ERROR_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Target {
    pub label: usize,
    pub state: Spin,
}

impl Target {
    pub fn on(label: usize) -> Self {
        Self { label, state: Spin::Up }
    }

    pub fn off(label: usize) -> Self {
        Self { label, state: Spin::Down }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingInstance {
    pub x: Vec<f64>,
    pub targets: Vec<Target>,
}

impl TrainingInstance {
    pub fn new(x: Vec<f64>, targets: Vec<Target>) -> Result<Self> {
        validate_targets(&targets, usize::MAX)?;
        Ok(Self { x, targets })
    }

    /// The first target that is on, if any.
    pub fn positive_label(&self) -> Option<usize> {
        self.targets.iter().find(|t| t.state == Spin::Up).map(|t| t.label)
    }
}

fn validate_targets(targets: &[Target], n: usize) -> Result<()> {
    if targets.is_empty() {
        return Err(Error::InvalidArgument("an instance needs at least one target".into()));
    }
    for (i, t) in targets.iter().enumerate() {
        if t.label >= n {
            return Err(Error::InvalidArgument(format!("target label {} out of range", t.label)));
        }
        if targets[..i].iter().any(|o| o.label == t.label) {
            return Err(Error::InvalidArgument(format!("target label {} repeated", t.label)));
        }
    }
    Ok(())
}

/// `z = W x + bias`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearScorer {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

impl LinearScorer {
    pub fn zeros(n: usize, d: usize) -> Self {
        Self { weights: vec![vec![0.0; d]; n], bias: vec![0.0; n] }
    }

    pub fn n(&self) -> usize {
        self.bias.len()
    }

    pub fn dim(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    pub fn score(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        Ok(self
            .weights
            .iter()
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b)
            .collect())
    }

    pub fn save(&self, labels: &[String], path: impl AsRef<Path>) -> Result<()> {
        let file = ScorerFile { labels: labels.to_vec(), weights: self.weights.clone(), bias: self.bias.clone() };
        std::fs::write(path, serde_json::to_string_pretty(&file)? + "\n")?;
        Ok(())
    }

    /// Loads a scorer file, checking its label list against `labels`.
    pub fn load(labels: &[String], path: impl AsRef<Path>) -> Result<Self> {
        let file: ScorerFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if file.labels != labels {
            return Err(Error::Parse("scorer labels do not match the graph".into()));
        }
        let d = file.weights.first().map_or(0, Vec::len);
        if file.weights.len() != labels.len()
            || file.bias.len() != labels.len()
            || file.weights.iter().any(|r| r.len() != d)
        {
            return Err(Error::Parse("scorer shape does not match its labels".into()));
        }
        Ok(Self { weights: file.weights, bias: file.bias })
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ScorerFile {
    labels: Vec<String>,
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
}

fn target_prob(t: &MarginalTable, target: &Target) -> f64 {
    t.prob(target.label, target.state)
}

/// `-Σ_j log p(y_{t_j} = s_j | z)`. A zero-probability target gives `+inf`.
pub fn nll_loss(model: &CrfModel, z: &[f64], targets: &[Target], inference: &Inference) -> Result<f64> {
    validate_targets(targets, model.n())?;
    let t = model.marginals(z, &ClampSet::new(), inference)?;
    Ok(targets.iter().map(|tg| neg_log(target_prob(&t, tg))).sum())
}

fn neg_log(p: f64) -> f64 {
    if p <= 0.0 {
        f64::INFINITY
    } else {
        -p.ln()
    }
}

/// Loss and `∂L/∂z` from one unclamped run and one clamped run per target.
pub fn loss_and_grad(
    model: &CrfModel,
    z: &[f64],
    targets: &[Target],
    inference: &Inference,
) -> Result<(f64, Vec<f64>)> {
    validate_targets(targets, model.n())?;
    let free = model.marginals(z, &ClampSet::new(), inference)?;
    let loss: f64 = targets.iter().map(|tg| neg_log(target_prob(&free, tg))).sum();
    let unclamped = free.expectations();
    let mut grad = vec![0.0; model.n()];
    for tg in targets {
        let clamped = model
            .marginals(z, &ClampSet::single(tg.label, tg.state), inference)?
            .expectations();
        for ((g, c), u) in grad.iter_mut().zip(&clamped).zip(&unclamped) {
            *g -= c - u;
        }
    }
    Ok((loss, grad))
}

pub fn grad_scores(model: &CrfModel, z: &[f64], targets: &[Target], inference: &Inference) -> Result<Vec<f64>> {
    loss_and_grad(model, z, targets, inference).map(|(_, g)| g)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradReport {
    pub analytic: Vec<f64>,
    pub numeric: Vec<f64>,
    /// `max_i |a_i - f_i| / max(|a_i|, |f_i|, REL_ERROR_FLOOR)`.
    pub max_rel_error: f64,
}

/// Central differences of [`nll_loss`] against [`grad_scores`].
pub fn finite_difference_check(
    model: &CrfModel,
    z: &[f64],
    targets: &[Target],
    inference: &Inference,
    eps: f64,
) -> Result<GradReport> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument("eps must be > 0".into()));
    }
    let analytic = grad_scores(model, z, targets, inference)?;
    let numeric = par::map_range(z.len(), |i| {
        let mut plus = z.to_vec();
        let mut minus = z.to_vec();
        plus[i] += eps;
        minus[i] -= eps;
        Ok((nll_loss(model, &plus, targets, inference)? - nll_loss(model, &minus, targets, inference)?)
            / (2.0 * eps))
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    let max_rel_error = analytic
        .iter()
        .zip(&numeric)
        .map(|(a, f)| (a - f).abs() / a.abs().max(f.abs()).max(REL_ERROR_FLOOR))
        .fold(0.0, f64::max);
    Ok(GradReport { analytic, numeric, max_rel_error })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Seeds the per-epoch shuffle.
    pub seed: u64,
    pub inference: Inference,
    /// Labels whose scorer rows are never updated.
    pub frozen: Vec<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            epochs: 50,
            batch_size: 16,
            seed: 0,
            inference: Inference::Lbp(Default::default()),
            frozen: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub scorer: LinearScorer,
    /// Mean training loss per epoch, measured during the epoch.
    pub epoch_losses: Vec<f64>,
}

/// Mini-batch SGD on the summed loss, chained through `z = W x + bias`.
/// Updates use the batch-mean gradient.
pub fn train_linear(
    scorer: LinearScorer,
    data: &[TrainingInstance],
    model: &CrfModel,
    config: &TrainConfig,
) -> Result<TrainReport> {
    if scorer.n() != model.n() {
        return Err(Error::DimensionMismatch { expected: model.n(), got: scorer.n() });
    }
    if config.batch_size == 0 {
        return Err(Error::InvalidArgument("batch_size must be > 0".into()));
    }
    for inst in data {
        if inst.x.len() != scorer.dim() {
            return Err(Error::DimensionMismatch { expected: scorer.dim(), got: inst.x.len() });
        }
        validate_targets(&inst.targets, model.n())?;
    }
    let mut trainable = vec![true; model.n()];
    for &f in &config.frozen {
        if f < trainable.len() {
            trainable[f] = false;
        }
    }

    let mut scorer = scorer;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for (batch_idx, batch) in order.chunks(config.batch_size).enumerate() {
            let results = par::map(batch, |&i| {
                let inst = &data[i];
                let z = scorer.score(&inst.x)?;
                loss_and_grad(model, &z, &inst.targets, &config.inference)
            });
            let mut batch_loss = 0.0;
            let mut grads = Vec::with_capacity(batch.len());
            for r in results {
                let (loss, g) = r?;
                batch_loss += loss;
                grads.push(g);
            }
            if !batch_loss.is_finite() || grads.iter().flatten().any(|g| !g.is_finite()) {
                return Err(Error::Divergence { epoch, batch: batch_idx, loss: batch_loss });
            }
            epoch_loss += batch_loss;
            let step = config.learning_rate / batch.len() as f64;
            for (&i, g) in batch.iter().zip(&grads) {
                let x = &data[i].x;
                for (r, &gr) in g.iter().enumerate() {
                    if !trainable[r] || gr == 0.0 {
                        continue;
                    }
                    for (w, v) in scorer.weights[r].iter_mut().zip(x) {
                        *w -= step * gr * v;
                    }
                    scorer.bias[r] -= step * gr;
                }
            }
            if scorer.bias.iter().chain(scorer.weights.iter().flatten()).any(|w| !w.is_finite()) {
                return Err(Error::Divergence { epoch, batch: batch_idx, loss: batch_loss });
            }
        }
        let mean = epoch_loss / data.len().max(1) as f64;
        log::debug!("epoch {epoch}: mean loss {mean:.6}");
        epoch_losses.push(mean);
    }
    Ok(TrainReport { scorer, epoch_losses })
}

/// How a candidate `u` turns the prior graph into the trained graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrengthMode {
    /// Every edge gets strength `u`.
    Constant,
    /// Every edge's prior strength is multiplied by `u`.
    Scale,
}

impl StrengthMode {
    pub fn apply(self, prior: &LabelGraph, u: f64) -> Result<LabelGraph> {
        match self {
            StrengthMode::Constant => prior.with_uniform_strength(u),
            StrengthMode::Scale => prior.scaled(u),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GridPoint {
    pub u: f64,
    pub validation_accuracy: f64,
    pub model: CrfModel,
    pub scorer: LinearScorer,
    pub epoch_losses: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct GridSearch {
    pub best: usize,
    pub points: Vec<GridPoint>,
}

impl GridSearch {
    pub fn best_u(&self) -> f64 {
        self.points[self.best].u
    }

    pub fn best_point(&self) -> &GridPoint {
        &self.points[self.best]
    }
}

/// Trains one scorer per candidate strength and keeps the one with the
/// highest validation accuracy (ties go to the smaller `u`). Candidates run
/// in parallel.
pub fn grid_search_strength<V>(
    candidates: &[f64],
    prior: &LabelGraph,
    mode: StrengthMode,
    initial: &LinearScorer,
    train: &[TrainingInstance],
    config: &TrainConfig,
    validate: V,
) -> Result<GridSearch>
where
    V: Fn(&CrfModel, &LinearScorer) -> Result<f64> + Sync,
{
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("empty strength grid".into()));
    }
    let points = par::map(candidates, |&u| -> Result<GridPoint> {
        let model = CrfModel::new(mode.apply(prior, u)?)?;
        let report = train_linear(initial.clone(), train, &model, config)?;
        let validation_accuracy = validate(&model, &report.scorer)?;
        log::info!("u = {u}: validation accuracy {validation_accuracy:.4}");
        Ok(GridPoint { u, validation_accuracy, model, scorer: report.scorer, epoch_losses: report.epoch_losses })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (i, p) in points.iter().enumerate().skip(1) {
        let b = &points[best];
        if p.validation_accuracy > b.validation_accuracy
            || (p.validation_accuracy == b.validation_accuracy && p.u < b.u)
        {
            best = i;
        }
    }
    Ok(GridSearch { best, points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{EdgeStrength, RelationEdge};

    fn edgeless(n: usize) -> CrfModel {
        CrfModel::new(LabelGraph::new((0..n).map(|i| format!("l{i}"))).unwrap()).unwrap()
    }

    #[test]
    fn edgeless_loss_and_gradient() {
        let m = edgeless(3);
        let loss = nll_loss(&m, &[0.0, 0.3, -0.2], &[Target::on(0)], &Inference::Exact).unwrap();
        assert!((loss - 2f64.ln()).abs() < 1e-15);
        let big = nll_loss(&m, &[40.0, 0.0, 0.0], &[Target::on(0)], &Inference::Exact).unwrap();
        assert!(big < 1e-30);

        let z = [0.0, 0.3, -0.2];
        let g = grad_scores(&m, &z, &[Target::on(0)], &Inference::Exact).unwrap();
        assert!((g[0] + 1.0).abs() < 1e-15);
        assert!(g[1].abs() < 1e-15 && g[2].abs() < 1e-15);
        let z = [0.7, 0.0, 0.0];
        let g = grad_scores(&m, &z, &[Target::on(0)], &Inference::Exact).unwrap();
        assert!((g[0] + (1.0 - 0.7f64.tanh())).abs() < 1e-14);
    }

    #[test]
    fn impossible_target_gives_infinite_loss() {
        // b on forces a on, but a excludes b: p(b = 1) = 0.
        let g = LabelGraph {
            labels: vec!["a".into(), "b".into(), "c".into()],
            edges: vec![
                RelationEdge::subsumption(0, 1, EdgeStrength::Hard),
                RelationEdge::exclusion(0, 2, EdgeStrength::Hard),
                RelationEdge::subsumption(2, 1, EdgeStrength::Hard),
            ],
            mece: None,
        };
        let m = CrfModel::new(g).unwrap();
        let loss = nll_loss(&m, &[0.0; 3], &[Target::on(1)], &Inference::Hex).unwrap();
        assert_eq!(loss, f64::INFINITY);
        assert!(matches!(
            grad_scores(&m, &[0.0; 3], &[Target::on(1)], &Inference::Hex),
            Err(Error::InfeasibleClamp)
        ));
    }

    #[test]
    fn exclusive_targets_under_hard_graph() {
        let mut g = LabelGraph::new(["dog", "cat"]).unwrap();
        g.add_exclusion(0, 1, EdgeStrength::Hard).unwrap();
        let m = CrfModel::new(g).unwrap();
        let both = ClampSet::single(0, Spin::Up).with(1, Spin::Up);
        assert!(matches!(m.marginals(&[0.0, 0.0], &both, &Inference::Hex), Err(Error::InfeasibleClamp)));
        // per-target terms: each marginal is 1/3
        let loss = nll_loss(&m, &[0.0, 0.0], &[Target::on(0), Target::on(1)], &Inference::Hex).unwrap();
        assert!((loss - 2.0 * 3f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn zero_learning_rate_is_identity() {
        let m = edgeless(2);
        let data = vec![TrainingInstance::new(vec![1.0, -1.0], vec![Target::on(0)]).unwrap()];
        let mut s = LinearScorer::zeros(2, 2);
        s.weights[1][0] = 0.25;
        let cfg = TrainConfig { learning_rate: 0.0, epochs: 3, inference: Inference::Exact, ..Default::default() };
        assert_eq!(train_linear(s.clone(), &data, &m, &cfg).unwrap().scorer, s);
    }

    #[test]
    fn separable_toy_reaches_full_accuracy() {
        let m = edgeless(2);
        let mut data = Vec::new();
        for i in 0..20 {
            let t = i as f64 / 10.0 - 1.0 + 0.05;
            let (l0, l1) = (t > 0.0, t < 0.3);
            let targets = vec![
                Target { label: 0, state: if l0 { Spin::Up } else { Spin::Down } },
                Target { label: 1, state: if l1 { Spin::Up } else { Spin::Down } },
            ];
            data.push(TrainingInstance::new(vec![t], targets).unwrap());
        }
        let cfg = TrainConfig {
            learning_rate: 1.0,
            epochs: 200,
            batch_size: 4,
            inference: Inference::Exact,
            ..Default::default()
        };
        let r = train_linear(LinearScorer::zeros(2, 1), &data, &m, &cfg).unwrap();
        for inst in &data {
            let z = r.scorer.score(&inst.x).unwrap();
            for t in &inst.targets {
                assert_eq!(z[t.label] > 0.0, t.state == Spin::Up);
            }
        }
        assert!(r.epoch_losses.last() < r.epoch_losses.first());
    }

    #[test]
    fn parent_only_targets_reach_child_scorer() {
        let mut g = LabelGraph::new(["animal", "dog"]).unwrap();
        g.add_subsumption(0, 1, EdgeStrength::from_u(0.7).unwrap()).unwrap();
        let m = CrfModel::new(g).unwrap();
        let g = grad_scores(&m, &[0.1, -0.3], &[Target::on(0)], &Inference::Exact).unwrap();
        assert!(g[1].abs() > 1e-3, "{g:?}");
    }

    #[test]
    fn grid_search_picks_best_and_breaks_ties_low() {
        let prior = LabelGraph::new(["a"]).unwrap();
        let data = vec![TrainingInstance::new(vec![1.0], vec![Target::on(0)]).unwrap()];
        let cfg = TrainConfig { epochs: 1, inference: Inference::Exact, ..Default::default() };
        let init = LinearScorer::zeros(1, 1);
        let r = grid_search_strength(&[0.7], &prior, StrengthMode::Constant, &init, &data, &cfg, |_, _| Ok(0.0))
            .unwrap();
        assert_eq!(r.best_u(), 0.7);
        let r = grid_search_strength(&[0.5, 0.1, 0.3], &prior, StrengthMode::Constant, &init, &data, &cfg, |_, _| {
            Ok(1.0)
        })
        .unwrap();
        assert_eq!(r.best_u(), 0.1);
        assert!(grid_search_strength(&[], &prior, StrengthMode::Constant, &init, &data, &cfg, |_, _| Ok(0.0)).is_err());
    }

    #[test]
    fn default_grid_is_the_strength_table() {
        assert_eq!(DEFAULT_STRENGTH_GRID, [0.0, 0.1, 0.3, 0.5, 0.7, 1.0, 1.5]);
    }

    #[test]
    fn target_validation() {
        assert!(TrainingInstance::new(vec![], vec![]).is_err());
        assert!(TrainingInstance::new(vec![], vec![Target::on(1), Target::off(1)]).is_err());
        let m = edgeless(2);
        assert!(nll_loss(&m, &[0.0, 0.0], &[Target::on(5)], &Inference::Exact).is_err());
    }
}
