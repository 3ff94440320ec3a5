//! Shared generators and brute-force oracles for the integration tests.
//!
//! The oracles work from definitions only: the factor form multiplies a
//! weight of 1 for legal and `q` for illegal edge states, and the Ising form
//! sums `exp(-E)` over an explicit configuration list.

#![allow(dead_code)]

use phex::graph::{EdgeKind, EdgeStrength, LabelGraph, MeceGroup};
use phex::ising::IsingModel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("l{i}")).collect()
}

fn random_edge(g: &mut LabelGraph, rng: &mut ChaCha8Rng, a: usize, b: usize, s: EdgeStrength) {
    let (a, b) = if rng.random_bool(0.5) { (a, b) } else { (b, a) };
    let _ = if rng.random_bool(0.5) { g.add_exclusion(a, b, s) } else { g.add_subsumption(a, b, s) };
}

/// Random graph with mixed edge kinds and `u ∈ [0, u_max]`. With `mece`, the
/// first `k ≥ 2` labels form the group.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, density: f64, u_max: f64, mece: bool) -> LabelGraph {
    let mut g = LabelGraph::new(names(n)).unwrap();
    let k = if mece && n >= 2 { rng.random_range(2..=n.min(5)) } else { 0 };
    for a in 0..n {
        for b in a + 1..n {
            if (a < k && b < k) || !rng.random_bool(density) {
                continue;
            }
            let s = EdgeStrength::Finite(rng.random_range(0.0..=u_max));
            random_edge(&mut g, rng, a, b, s);
        }
    }
    if k >= 2 {
        g.set_mece((0..k).collect()).unwrap();
    }
    g
}

/// Random spanning tree over `n` labels.
pub fn random_tree_graph(rng: &mut ChaCha8Rng, n: usize, u_max: f64) -> LabelGraph {
    let mut g = LabelGraph::new(names(n)).unwrap();
    for b in 1..n {
        let a = rng.random_range(0..b);
        let s = EdgeStrength::Finite(rng.random_range(0.0..=u_max));
        random_edge(&mut g, rng, a, b, s);
    }
    g
}

/// A MECE group of `k` labels plus `m` outside labels whose grouped graph
/// is a tree: each outside label attaches either to another outside label or
/// to a nonempty subset of the group members.
pub fn random_grouped_tree(rng: &mut ChaCha8Rng, k: usize, m: usize, u_max: f64) -> LabelGraph {
    let mut g = LabelGraph::new(names(k + m)).unwrap();
    g.set_mece((0..k).collect()).unwrap();
    for j in 0..m {
        let node = k + j;
        let attach = rng.random_range(0..=j);
        if attach == 0 {
            let mut any = false;
            for c in 0..k {
                if rng.random_bool(0.5) || (!any && c == k - 1) {
                    any = true;
                    let s = EdgeStrength::Finite(rng.random_range(0.0..=u_max));
                    random_edge(&mut g, rng, node, c, s);
                }
            }
        } else {
            let s = EdgeStrength::Finite(rng.random_range(0.0..=u_max));
            random_edge(&mut g, rng, node, k + attach - 1, s);
        }
    }
    g
}

pub fn random_z(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-scale..=scale)).collect()
}

/// Ising model on a random tree with `|J| ≤ j_max`, `|h| ≤ h_max`.
pub fn random_tree_ising(rng: &mut ChaCha8Rng, n: usize, j_max: f64, h_max: f64) -> IsingModel {
    let couplings: Vec<_> =
        (1..n).map(|b| ((rng.random_range(0..b), b), rng.random_range(-j_max..=j_max))).collect();
    let fields = random_z(rng, n, h_max);
    IsingModel::from_parts(n, couplings, fields, None).unwrap()
}

/// Ising model with random extra edges on top of a spanning tree, so it has cycles.
pub fn random_loopy_ising(rng: &mut ChaCha8Rng, n: usize, j_max: f64, h_max: f64) -> IsingModel {
    assert!(n >= 3);
    let mut pairs: std::collections::BTreeSet<(usize, usize)> =
        (1..n).map(|b| (rng.random_range(0..b), b)).collect();
    let tree = pairs.len();
    while pairs.len() == tree || rng.random_bool(0.6) {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a != b {
            pairs.insert((a.min(b), a.max(b)));
        }
    }
    let couplings: Vec<_> = pairs.into_iter().map(|p| (p, rng.random_range(-j_max..=j_max))).collect();
    let fields = random_z(rng, n, h_max);
    IsingModel::from_parts(n, couplings, fields, None).unwrap()
}

/// Every spin configuration as ±1 values, in binary counting order.
pub fn configurations(n: usize) -> impl Iterator<Item = Vec<f64>> {
    (0u64..1 << n).map(move |bits| (0..n).map(|i| if bits >> i & 1 == 1 { 1.0 } else { -1.0 }).collect())
}

fn mece_ok(group: Option<&MeceGroup>, y: &[f64]) -> bool {
    group.is_none_or(|g| g.members.iter().filter(|&&m| y[m] > 0.0).count() == 1)
}

fn legal(kind: EdgeKind, a: f64, b: f64) -> bool {
    match kind {
        EdgeKind::Exclusion => !(a > 0.0 && b > 0.0),
        EdgeKind::Subsumption => !(b > 0.0 && a < 0.0),
    }
}

/// Product of edge factors: `1` when legal, `q = exp(-4u)` when not (`0` for hard edges).
pub fn factor_product(graph: &LabelGraph, y: &[f64]) -> f64 {
    graph
        .edges
        .iter()
        .map(|e| {
            if legal(e.kind, y[e.a], y[e.b]) {
                1.0
            } else {
                match e.strength {
                    EdgeStrength::Finite(u) => (-4.0 * u).exp(),
                    EdgeStrength::Hard => 0.0,
                }
            }
        })
        .product()
}

pub struct Oracle {
    pub p: Vec<f64>,
    pub mece: Option<Vec<f64>>,
}

fn accumulate(n: usize, group: Option<&MeceGroup>, weighted: impl Iterator<Item = (Vec<f64>, f64)>) -> Option<Oracle> {
    let mut total = 0.0;
    let mut up = vec![0.0; n];
    let mut states = group.map(|g| vec![0.0; g.members.len()]);
    for (y, w) in weighted {
        total += w;
        for i in 0..n {
            if y[i] > 0.0 {
                up[i] += w;
            }
        }
        if let (Some(g), Some(s)) = (group, states.as_mut()) {
            for (idx, &m) in g.members.iter().enumerate() {
                if y[m] > 0.0 {
                    s[idx] += w;
                }
            }
        }
    }
    if total <= 0.0 {
        return None;
    }
    Some(Oracle {
        p: up.iter().map(|v| v / total).collect(),
        mece: states.map(|s| s.iter().map(|v| v / total).collect()),
    })
}

/// Marginals of `p(y) ∝ Π φ(y) · exp(Σ z_i y_i)` restricted to MECE-legal
/// configurations agreeing with `clamps`.
pub fn graph_oracle(graph: &LabelGraph, z: &[f64], clamps: &[(usize, f64)]) -> Option<Oracle> {
    let n = graph.n();
    let group = graph.mece.as_ref();
    accumulate(
        n,
        group,
        configurations(n)
            .filter(|y| mece_ok(group, y) && clamps.iter().all(|&(i, s)| y[i] == s))
            .map(|y| {
                let w = factor_product(graph, &y) * y.iter().zip(z).map(|(a, b)| (a * b).exp()).product::<f64>();
                (y, w)
            }),
    )
}

/// `E(y) = Σ J_ij y_i y_j + Σ h'_i y_i` from explicit parameters.
pub fn ising_energy(couplings: &[((usize, usize), f64)], fields: &[f64], y: &[f64]) -> f64 {
    couplings.iter().map(|&((i, j), v)| v * y[i] * y[j]).sum::<f64>()
        + fields.iter().zip(y).map(|(h, s)| h * s).sum::<f64>()
}

/// Marginals of `exp(-E)` over MECE-legal configurations agreeing with `clamps`.
pub fn ising_oracle(
    couplings: &[((usize, usize), f64)],
    fields: &[f64],
    group: Option<&MeceGroup>,
    clamps: &[(usize, f64)],
) -> Option<Oracle> {
    let n = fields.len();
    let legal: Vec<Vec<f64>> = configurations(n)
        .filter(|y| mece_ok(group, y) && clamps.iter().all(|&(i, s)| y[i] == s))
        .collect();
    let energies: Vec<f64> = legal.iter().map(|y| ising_energy(couplings, fields, y)).collect();
    let min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    accumulate(n, group, legal.into_iter().zip(energies).map(|(y, e)| (y, (min - e).exp())))
}

pub fn couplings_of(model: &IsingModel) -> Vec<((usize, usize), f64)> {
    model.couplings().iter().map(|(&k, &v)| (k, v)).collect()
}

pub fn linf(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn argmax(p: &[f64], candidates: &[usize]) -> usize {
    let mut best = candidates[0];
    for &c in &candidates[1..] {
        if p[c] > p[best] {
            best = c;
        }
    }
    best
}
