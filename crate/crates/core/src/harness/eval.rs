//! Ranking metrics over marginal tables.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{ClampSet, MarginalTable};
use crate::infer::{CrfModel, Inference};
use crate::lbp::rank_labels;
use crate::learning::{LinearScorer, TrainingInstance};
use crate::par;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassAccuracy {
    pub label: usize,
    pub count: usize,
    pub top1: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalMeta {
    pub method: String,
    pub u: Option<f64>,
    pub mean_iterations: f64,
    pub unconverged: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Hit rates with ties broken by label id.
    pub top1: f64,
    pub top5: f64,
    /// Unweighted mean of the per-class top-1 accuracies.
    pub per_class_mean: f64,
    /// Hit rates expected under uniformly random tie breaking.
    pub expected_top1: f64,
    pub expected_top5: f64,
    pub count: usize,
    pub per_class: Vec<ClassAccuracy>,
    pub meta: EvalMeta,
}

/// Probability that `truth` lands in the top `k` when ties among equal
/// marginals are broken uniformly at random.
fn tie_aware_hit(t: &MarginalTable, candidates: &[usize], truth: usize, k: usize) -> f64 {
    let pt = t.p[truth];
    let above = candidates.iter().filter(|&&c| t.p[c] > pt).count();
    let equal = candidates.iter().filter(|&&c| t.p[c] == pt).count();
    ((k as f64 - above as f64) / equal as f64).clamp(0.0, 1.0)
}

/// Scores each table by where `truth` ranks among `candidates`.
pub fn evaluate(outputs: &[MarginalTable], truth: &[usize], candidates: &[usize], meta: EvalMeta) -> Result<EvalReport> {
    if outputs.len() != truth.len() {
        return Err(Error::DimensionMismatch { expected: outputs.len(), got: truth.len() });
    }
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("no candidate labels".into()));
    }
    for &t in truth {
        if !candidates.contains(&t) {
            return Err(Error::InvalidArgument(format!("true label {t} is not a candidate")));
        }
    }
    let mut classes: Vec<usize> = truth.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let mut per_hits = vec![0usize; classes.len()];
    let mut per_count = vec![0usize; classes.len()];
    let (mut top1, mut top5, mut e1, mut e5) = (0usize, 0usize, 0.0, 0.0);
    for (t, &y) in outputs.iter().zip(truth) {
        let ranked = rank_labels(t, candidates);
        let pos = ranked.iter().position(|&c| c == y).expect("truth is a candidate");
        let ci = classes.binary_search(&y).expect("class present");
        per_count[ci] += 1;
        if pos == 0 {
            top1 += 1;
            per_hits[ci] += 1;
        }
        if pos < 5 {
            top5 += 1;
        }
        e1 += tie_aware_hit(t, candidates, y, 1);
        e5 += tie_aware_hit(t, candidates, y, 5);
    }
    let count = truth.len();
    let rate = |h: f64| if count == 0 { 0.0 } else { h / count as f64 };
    let per_class: Vec<ClassAccuracy> = classes
        .iter()
        .zip(per_hits.iter().zip(&per_count))
        .map(|(&label, (&h, &c))| ClassAccuracy { label, count: c, top1: h as f64 / c as f64 })
        .collect();
    let per_class_mean = if per_class.is_empty() {
        0.0
    } else {
        per_class.iter().map(|c| c.top1).sum::<f64>() / per_class.len() as f64
    };
    Ok(EvalReport {
        top1: rate(top1 as f64),
        top5: rate(top5 as f64),
        per_class_mean,
        expected_top1: rate(e1),
        expected_top5: rate(e5),
        count,
        per_class,
        meta,
    })
}

/// Unclamped marginals for every instance, computed in parallel.
pub fn predict_batch(
    model: &CrfModel,
    scorer: &LinearScorer,
    data: &[TrainingInstance],
    inference: &Inference,
) -> Result<Vec<MarginalTable>> {
    par::map(data, |inst| model.marginals(&scorer.score(&inst.x)?, &ClampSet::new(), inference))
        .into_iter()
        .collect()
}

/// Predicts `data` and evaluates against each instance's positive target.
pub fn evaluate_scorer(
    model: &CrfModel,
    scorer: &LinearScorer,
    data: &[TrainingInstance],
    candidates: &[usize],
    inference: &Inference,
    u: Option<f64>,
) -> Result<EvalReport> {
    let truth = data
        .iter()
        .map(|i| i.positive_label().ok_or_else(|| Error::InvalidArgument("instance without a positive target".into())))
        .collect::<Result<Vec<_>>>()?;
    let outputs = predict_batch(model, scorer, data, inference)?;
    let meta = EvalMeta {
        method: inference.name().to_string(),
        u,
        mean_iterations: if outputs.is_empty() {
            0.0
        } else {
            outputs.iter().map(|t| t.diagnostics.iterations as f64).sum::<f64>() / outputs.len() as f64
        },
        unconverged: outputs.iter().filter(|t| !t.diagnostics.converged).count(),
    };
    evaluate(&outputs, &truth, candidates, meta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{Diagnostics, MarginalMethod};

    fn table(p: Vec<f64>) -> MarginalTable {
        MarginalTable {
            p_off: p.iter().map(|v| 1.0 - v).collect(),
            p,
            mece: None,
            diagnostics: Diagnostics { method: MarginalMethod::Exact, iterations: 0, converged: true },
            log_partition: None,
        }
    }

    #[test]
    fn perfect_marginals() {
        let outs: Vec<_> = (0..4).map(|i| { let mut p = vec![0.0; 4]; p[i] = 1.0; table(p) }).collect();
        let r = evaluate(&outs, &[0, 1, 2, 3], &[0, 1, 2, 3], EvalMeta::default()).unwrap();
        assert_eq!((r.top1, r.top5, r.per_class_mean), (1.0, 1.0, 1.0));
    }

    #[test]
    fn third_place_is_a_top5_hit() {
        let outs = vec![table(vec![0.5, 0.3, 0.2, 0.1, 0.05, 0.01])];
        let r = evaluate(&outs, &[2], &[0, 1, 2, 3, 4, 5], EvalMeta::default()).unwrap();
        assert_eq!((r.top1, r.top5), (0.0, 1.0));
    }

    #[test]
    fn uniform_marginals_expected_rates() {
        let k = 10;
        let truth: Vec<usize> = (0..1000).map(|i| i % k).collect();
        let outs: Vec<_> = truth.iter().map(|_| table(vec![0.1; k])).collect();
        let cands: Vec<usize> = (0..k).collect();
        let r = evaluate(&outs, &truth, &cands, EvalMeta::default()).unwrap();
        assert!((r.expected_top1 - 0.1).abs() < 1e-12);
        assert!((r.expected_top5 - 0.5).abs() < 1e-12);
        // Deterministic tie breaking favors low ids.
        assert!((r.top1 - 0.1).abs() < 1e-12);
        assert_eq!(r.per_class[0].top1, 1.0);
        assert_eq!(r.per_class[9].top1, 0.0);
    }

    #[test]
    fn per_class_mean_is_unweighted() {
        let outs = vec![table(vec![0.9, 0.1]), table(vec![0.9, 0.1]), table(vec![0.9, 0.1])];
        let r = evaluate(&outs, &[0, 0, 1], &[0, 1], EvalMeta::default()).unwrap();
        assert!((r.top1 - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.per_class_mean, 0.5);
        assert_eq!(r.count, 3);
    }

    #[test]
    fn truth_must_be_a_candidate() {
        assert!(evaluate(&[table(vec![1.0, 0.0])], &[1], &[0], EvalMeta::default()).is_err());
    }
}
