//! Seeded synthetic datasets: a two-level hierarchy with leaf labels relabeled
//! to their parents, and an attribute task with classes unseen at training
//! time.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EdgeStrength, LabelGraph};
use crate::learning::{Target, TrainingInstance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticTaskSpec {
    pub seed: u64,
    /// Leaves in the hierarchy task, object classes in the attribute task.
    pub num_classes: usize,
    /// Hierarchy task only.
    pub num_parents: usize,
    /// Attribute task only.
    pub num_attributes: usize,
    /// `k × a` binary matrix; drawn from the seed when absent.
    pub predicates: Option<Vec<Vec<u8>>>,
    /// Scale of the per-class centroid offsets.
    pub centroid_scale: f64,
    /// Scale of the shared components: parent centroids or attribute directions.
    pub shared_scale: f64,
    pub noise_scale: f64,
    pub dim: usize,
    /// Classes with no training instances.
    pub unseen: Vec<usize>,
    /// Probability that an instance disagrees with its class predicate.
    pub attribute_noise: f64,
    /// Fraction of training instances that keep only their parent label.
    pub relabel_fraction: f64,
    /// Probability that a relabeled instance gets a wrong parent.
    pub parent_noise: f64,
    pub train_per_class: usize,
    pub val_per_class: usize,
    pub test_per_class: usize,
}

impl SyntheticTaskSpec {
    pub fn hierarchy(seed: u64) -> Self {
        Self {
            seed,
            num_classes: 12,
            num_parents: 3,
            num_attributes: 0,
            predicates: None,
            centroid_scale: 1.0,
            shared_scale: 0.5,
            noise_scale: 1.0,
            dim: 16,
            unseen: Vec::new(),
            attribute_noise: 0.0,
            relabel_fraction: 0.95,
            parent_noise: 0.05,
            train_per_class: 40,
            val_per_class: 20,
            test_per_class: 40,
        }
    }

    pub fn zero_shot(seed: u64) -> Self {
        Self {
            seed,
            num_classes: 13,
            num_parents: 0,
            num_attributes: 8,
            predicates: None,
            centroid_scale: 0.5,
            shared_scale: 1.0,
            noise_scale: 1.0,
            dim: 16,
            unseen: vec![10, 11, 12],
            attribute_noise: 0.15,
            relabel_fraction: 0.0,
            parent_noise: 0.0,
            train_per_class: 20,
            val_per_class: 50,
            test_per_class: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Hierarchy,
    Zeroshot,
}

/// A generated dataset. Every edge of `graph` has unit strength; the grid
/// search rescales it.
#[derive(Debug, Clone)]
pub struct SyntheticTask {
    pub kind: TaskKind,
    pub spec: SyntheticTaskSpec,
    pub graph: LabelGraph,
    pub train: Vec<TrainingInstance>,
    pub val: Vec<TrainingInstance>,
    pub test: Vec<TrainingInstance>,
    /// Labels ranked at evaluation time.
    pub eval_labels: Vec<usize>,
    /// Labels whose scorers stay at zero during training.
    pub frozen: Vec<usize>,
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn gaussian(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> Vec<f64> {
    (0..d).map(|_| scale * normal(rng)).collect()
}

fn noisy(rng: &mut ChaCha8Rng, center: &[f64], scale: f64) -> Vec<f64> {
    center.iter().map(|c| c + scale * normal(rng)).collect()
}

fn check_common(spec: &SyntheticTaskSpec) -> Result<()> {
    if spec.dim == 0 {
        return Err(Error::InvalidArgument("dim must be > 0".into()));
    }
    for (name, v) in [
        ("centroid_scale", spec.centroid_scale),
        ("shared_scale", spec.shared_scale),
        ("noise_scale", spec.noise_scale),
    ] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::InvalidArgument(format!("{name} must be finite and >= 0")));
        }
    }
    Ok(())
}

/// MECE group over the classes, `attribute → class` subsumption where the
/// predicate is 1 and `attribute, class` exclusion where it is 0. Labels are
/// the classes followed by the attributes.
pub fn build_attribute_graph(
    predicates: &[Vec<u8>],
    class_names: &[String],
    attribute_names: &[String],
    u_pos: EdgeStrength,
    u_neg: EdgeStrength,
) -> Result<LabelGraph> {
    let k = class_names.len();
    let a = attribute_names.len();
    if predicates.len() != k {
        return Err(Error::DimensionMismatch { expected: k, got: predicates.len() });
    }
    for row in predicates {
        if row.len() != a {
            return Err(Error::DimensionMismatch { expected: a, got: row.len() });
        }
        if row.iter().any(|&v| v > 1) {
            return Err(Error::InvalidArgument("predicates must be 0 or 1".into()));
        }
    }
    let mut g = LabelGraph::new(class_names.iter().chain(attribute_names).cloned())?;
    g.set_mece((0..k).collect())?;
    for j in 0..a {
        let ones = predicates.iter().filter(|row| row[j] == 1).count();
        if k > 0 && (ones == 0 || ones == k) {
            log::warn!("attribute {:?} has the same predicate for every class", attribute_names[j]);
        }
        for (c, row) in predicates.iter().enumerate() {
            if row[j] == 1 {
                g.add_subsumption(k + j, c, u_pos)?;
            } else {
                g.add_exclusion(k + j, c, u_neg)?;
            }
        }
    }
    Ok(g)
}

fn parent_of(leaf: usize, k: usize, p: usize) -> usize {
    leaf * p / k
}

/// Two-level tree of `num_parents` groups over `num_classes` leaves.
/// Features are parent centroid + leaf offset + noise. A `relabel_fraction`
/// share of training instances carries only the parent label; validation and
/// test instances carry the leaf label. Each relabeled instance gets a wrong
/// parent with probability `parent_noise`.
pub fn build_hierarchy_task(spec: &SyntheticTaskSpec) -> Result<SyntheticTask> {
    check_common(spec)?;
    let (k, p) = (spec.num_classes, spec.num_parents);
    if !(0.0..=1.0).contains(&spec.relabel_fraction) {
        return Err(Error::InvalidArgument(format!(
            "relabel fraction {} outside [0, 1]",
            spec.relabel_fraction
        )));
    }
    if !(0.0..=1.0).contains(&spec.parent_noise) {
        return Err(Error::InvalidArgument("parent noise outside [0, 1]".into()));
    }
    if p == 0 || k < p {
        return Err(Error::InvalidArgument("need 1 <= num_parents <= num_classes".into()));
    }

    let labels = (0..p).map(|i| format!("group{i}")).chain((0..k).map(|j| format!("leaf{j}")));
    let mut graph = LabelGraph::new(labels)?;
    let unit = EdgeStrength::Finite(1.0);
    for a in 0..p {
        for b in a + 1..p {
            graph.add_exclusion(a, b, unit)?;
        }
    }
    for a in 0..p {
        for leaf in 0..k {
            if parent_of(leaf, k, p) == a {
                graph.add_subsumption(a, p + leaf, unit)?;
            } else {
                graph.add_exclusion(a, p + leaf, unit)?;
            }
        }
    }
    graph.set_mece((p..p + k).collect())?;

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let parents: Vec<Vec<f64>> = (0..p).map(|_| gaussian(&mut rng, spec.dim, spec.shared_scale)).collect();
    let centroids: Vec<Vec<f64>> = (0..k)
        .map(|leaf| {
            let offset = gaussian(&mut rng, spec.dim, spec.centroid_scale);
            parents[parent_of(leaf, k, p)].iter().zip(&offset).map(|(a, b)| a + b).collect()
        })
        .collect();

    let sample = |per_class: usize, rng: &mut ChaCha8Rng| -> Vec<(Vec<f64>, usize)> {
        let mut out = Vec::with_capacity(per_class * k);
        for (leaf, c) in centroids.iter().enumerate() {
            for _ in 0..per_class {
                out.push((noisy(rng, c, spec.noise_scale), leaf));
            }
        }
        out
    };
    let train_raw = sample(spec.train_per_class, &mut rng);
    let val_raw = sample(spec.val_per_class, &mut rng);
    let test_raw = sample(spec.test_per_class, &mut rng);

    let mut order: Vec<usize> = (0..train_raw.len()).collect();
    order.shuffle(&mut rng);
    let relabeled = (spec.relabel_fraction * train_raw.len() as f64).round() as usize;
    let mut to_parent = vec![false; train_raw.len()];
    for &i in &order[..relabeled] {
        to_parent[i] = true;
    }

    let leaf_instance = |(x, leaf): (Vec<f64>, usize)| TrainingInstance { x, targets: vec![Target::on(p + leaf)] };
    let train = train_raw
        .into_iter()
        .zip(to_parent)
        .map(|((x, leaf), up)| {
            let label = if !up {
                p + leaf
            } else if p > 1 && rng.random_bool(spec.parent_noise) {
                (parent_of(leaf, k, p) + rng.random_range(1..p)) % p
            } else {
                parent_of(leaf, k, p)
            };
            TrainingInstance { x, targets: vec![Target::on(label)] }
        })
        .collect();

    Ok(SyntheticTask {
        kind: TaskKind::Hierarchy,
        spec: spec.clone(),
        graph,
        train,
        val: val_raw.into_iter().map(leaf_instance).collect(),
        test: test_raw.into_iter().map(leaf_instance).collect(),
        eval_labels: (p..p + k).collect(),
        frozen: Vec::new(),
    })
}

fn draw_predicates(rng: &mut ChaCha8Rng, k: usize, a: usize) -> Vec<Vec<u8>> {
    let mut rows: Vec<Vec<u8>> = Vec::with_capacity(k);
    while rows.len() < k {
        let row: Vec<u8> = (0..a).map(|_| rng.random_bool(0.5) as u8).collect();
        // Distinct signatures keep every class identifiable from attributes.
        if a >= 64 || (1usize << a) < k || !rows.contains(&row) {
            rows.push(row);
        }
    }
    rows
}

/// Attribute task. Each instance draws its attributes from its class
/// predicates (each flipped with probability `attribute_noise`); features are
/// the sum of present attribute directions, a class offset, and noise.
/// Training uses seen classes only; targets are the class plus the
/// instance's attribute states. Validation
/// and test hold unseen-class instances and rank over the unseen classes.
pub fn build_zero_shot_task(spec: &SyntheticTaskSpec) -> Result<SyntheticTask> {
    check_common(spec)?;
    let (k, a) = (spec.num_classes, spec.num_attributes);
    if k == 0 {
        return Err(Error::InvalidArgument("need at least one class".into()));
    }
    if !(0.0..=1.0).contains(&spec.attribute_noise) {
        return Err(Error::InvalidArgument("attribute noise outside [0, 1]".into()));
    }
    let mut unseen = spec.unseen.clone();
    unseen.sort_unstable();
    unseen.dedup();
    if unseen.iter().any(|&c| c >= k) {
        return Err(Error::InvalidArgument("unseen class out of range".into()));
    }
    if unseen.is_empty() || unseen.len() == k {
        return Err(Error::InvalidArgument("need both seen and unseen classes".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let predicates = match &spec.predicates {
        Some(m) => m.clone(),
        None => draw_predicates(&mut rng, k, a),
    };
    let class_names: Vec<String> = (0..k).map(|c| format!("class{c}")).collect();
    let attribute_names: Vec<String> = (0..a).map(|j| format!("attr{j}")).collect();
    let unit = EdgeStrength::Finite(1.0);
    let graph = build_attribute_graph(&predicates, &class_names, &attribute_names, unit, unit)?;

    let directions: Vec<Vec<f64>> = (0..a).map(|_| gaussian(&mut rng, spec.dim, spec.shared_scale)).collect();
    let offsets: Vec<Vec<f64>> = (0..k).map(|_| gaussian(&mut rng, spec.dim, spec.centroid_scale)).collect();

    // Training instances also carry their own attribute annotations.
    let instance = |c: usize, annotate: bool, rng: &mut ChaCha8Rng| -> TrainingInstance {
        let mut x = offsets[c].clone();
        let mut targets = vec![Target::on(c)];
        for (j, dir) in directions.iter().enumerate() {
            let present = (predicates[c][j] == 1) != rng.random_bool(spec.attribute_noise);
            if present {
                x.iter_mut().zip(dir).for_each(|(v, d)| *v += d);
            }
            if annotate {
                targets.push(if present { Target::on(k + j) } else { Target::off(k + j) });
            }
        }
        x.iter_mut().for_each(|v| *v += spec.noise_scale * normal(rng));
        TrainingInstance { x, targets }
    };
    let seen: Vec<usize> = (0..k).filter(|c| !unseen.contains(c)).collect();
    let mut train = Vec::new();
    for &c in &seen {
        for _ in 0..spec.train_per_class {
            train.push(instance(c, true, &mut rng));
        }
    }
    let split = |per_class: usize, rng: &mut ChaCha8Rng| {
        let mut out = Vec::new();
        for &c in &unseen {
            for _ in 0..per_class {
                out.push(instance(c, false, rng));
            }
        }
        out
    };
    let val = split(spec.val_per_class, &mut rng);
    let test = split(spec.test_per_class, &mut rng);

    let mut spec = spec.clone();
    spec.predicates = Some(predicates);
    spec.unseen = unseen.clone();
    Ok(SyntheticTask {
        kind: TaskKind::Zeroshot,
        spec,
        graph,
        train,
        val,
        test,
        eval_labels: unseen.clone(),
        frozen: unseen,
    })
}

pub fn build_task(kind: TaskKind, spec: &SyntheticTaskSpec) -> Result<SyntheticTask> {
    match kind {
        TaskKind::Hierarchy => build_hierarchy_task(spec),
        TaskKind::Zeroshot => build_zero_shot_task(spec),
    }
}
