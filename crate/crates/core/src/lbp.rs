//! Loopy belief propagation on conditioned Ising models.
//!
//! Binary labels are two-state variables (state 0 is `y = +1`, state 1 is
//! `y = -1`). When the model carries a MECE group its members are replaced
//! by one `k`-state variable whose state `s` means member `s` is on and the
//! rest are off. Every message and belief lives in the log domain and is
//! renormalized after each update.
//!
//! Schedule: asynchronous sweeps in ascending label order (the group variable
//! sits at the position of its smallest member). Each visit recomputes the
//! variable's belief from its incoming messages, then sends damped messages
//! `m_{v->w}(y) = Σ_x ψ(x, y) b_v(x) / m_{w->v}(x)` to every neighbor.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{ClampSet, Diagnostics, MarginalMethod, MarginalTable, ResolvedClamps};
use crate::graph::{MeceGroup, Spin};
use crate::ising::ConditionedModel;

/// Floor applied to `log b - log m` so clamped indicators never produce `-inf - -inf`.
pub const LOG_FLOOR: f64 = -700.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LbpOptions {
    pub max_iterations: usize,
    /// Convergence threshold on the max absolute change of normalized log-beliefs.
    pub tolerance: f64,
    /// `new = λ old + (1 - λ) computed`, in log space.
    pub damping: f64,
}

impl Default for LbpOptions {
    fn default() -> Self {
        Self { max_iterations: 200, tolerance: 1e-6, damping: 0.5 }
    }
}

impl LbpOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument("max_iterations must be > 0".into()));
        }
        if !(self.tolerance > 0.0) || !self.tolerance.is_finite() {
            return Err(Error::InvalidArgument("tolerance must be finite and > 0".into()));
        }
        if !(0.0..1.0).contains(&self.damping) {
            return Err(Error::InvalidArgument("damping must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || !max.is_finite() {
        return max;
    }
    max + xs.map(|x| (x - max).exp()).sum::<f64>().ln()
}

fn normalize(v: &mut [f64]) {
    let z = log_sum_exp(v.iter().copied());
    if z.is_finite() {
        v.iter_mut().for_each(|x| *x -= z);
    }
}

#[derive(Debug, Clone)]
enum VarKind {
    Label,
    Group,
}

#[derive(Debug, Clone)]
struct Variable {
    kind: VarKind,
    log_unary: Vec<f64>,
    /// Fixed log-belief for clamped variables.
    clamped: Option<Vec<f64>>,
    /// `(edge, is_first_endpoint)`.
    edges: Vec<(usize, bool)>,
}

#[derive(Debug, Clone)]
struct Edge {
    first: usize,
    second: usize,
    /// `table[x_first * states(second) + x_second]` = log pairwise factor.
    table: Vec<f64>,
}

/// Factor structure of one conditioned model under one clamp set.
#[derive(Debug, Clone)]
pub struct LbpGraph {
    vars: Vec<Variable>,
    edges: Vec<Edge>,
    n_labels: usize,
    group: Option<(usize, MeceGroup)>,
    label_var: Vec<usize>,
}

/// Log-beliefs and log-messages of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefState {
    /// Normalized log-belief per variable.
    pub log_beliefs: Vec<Vec<f64>>,
    /// Per edge: `[first -> second, second -> first]` log-messages.
    pub log_messages: Vec<[Vec<f64>; 2]>,
}

fn spin_of_state(x: usize) -> Spin {
    if x == 0 {
        Spin::Up
    } else {
        Spin::Down
    }
}

fn indicator(states: usize, on: usize) -> Vec<f64> {
    (0..states).map(|x| if x == on { 0.0 } else { f64::NEG_INFINITY }).collect()
}

impl LbpGraph {
    pub fn build(model: &ConditionedModel<'_>, clamps: &ClampSet) -> Result<Self> {
        let resolved = clamps.resolve(model.n(), model.mece())?;
        Ok(Self::from_resolved(model, &resolved))
    }

    fn from_resolved(model: &ConditionedModel<'_>, clamps: &ResolvedClamps) -> Self {
        let n = model.n();
        let h = &model.fields;
        let group = model.mece().cloned();
        let in_group = |i: usize| group.as_ref().is_some_and(|g| g.contains(i));

        let mut vars = Vec::new();
        let mut label_var = vec![usize::MAX; n];
        let mut group_var = None;
        for i in 0..n {
            if in_group(i) {
                let g = group.as_ref().expect("group present");
                let v = *group_var.get_or_insert_with(|| {
                    vars.push(group_variable(model, g, clamps));
                    vars.len() - 1
                });
                label_var[i] = v;
            } else {
                let clamped = clamps.spins[i].map(|s| indicator(2, if s == Spin::Up { 0 } else { 1 }));
                vars.push(Variable {
                    kind: VarKind::Label,
                    log_unary: vec![-h[i], h[i]],
                    clamped,
                    edges: Vec::new(),
                });
                label_var[i] = vars.len() - 1;
            }
        }

        let mut edges = Vec::new();
        // binary-binary couplings
        for (&(i, j), &jv) in model.base.couplings() {
            if in_group(i) || in_group(j) {
                continue;
            }
            let mut table = Vec::with_capacity(4);
            for xi in 0..2 {
                for xj in 0..2 {
                    table.push(-jv * spin_of_state(xi).value() * spin_of_state(xj).value());
                }
            }
            edges.push(Edge { first: label_var[i], second: label_var[j], table });
        }
        // label-group couplings, one edge per outside neighbor
        if let (Some(g), Some(gv)) = (&group, group_var) {
            let mut per_label: Vec<Vec<f64>> = vec![Vec::new(); n];
            for (&(i, j), &jv) in model.base.couplings() {
                let (outside, member) = match (in_group(i), in_group(j)) {
                    (false, true) => (i, j),
                    (true, false) => (j, i),
                    _ => continue,
                };
                let row = &mut per_label[outside];
                if row.is_empty() {
                    row.resize(g.k(), 0.0);
                }
                row[g.state_of(member).expect("member")] += jv;
            }
            for (label, row) in per_label.iter().enumerate() {
                if row.is_empty() {
                    continue;
                }
                let total: f64 = row.iter().sum();
                // pair energy at group state s is y_j (2 J_{j c_s} - Σ_s J_{j c_s})
                let mut table = Vec::with_capacity(2 * g.k());
                for &js in row {
                    for xj in 0..2 {
                        table.push(spin_of_state(xj).value() * (total - 2.0 * js));
                    }
                }
                edges.push(Edge { first: gv, second: label_var[label], table });
            }
        }
        for (e, edge) in edges.iter().enumerate() {
            vars[edge.first].edges.push((e, true));
            vars[edge.second].edges.push((e, false));
        }
        let group = group.map(|g| (group_var.expect("group var"), g));
        LbpGraph { vars, edges, n_labels: n, group, label_var }
    }

    fn states(&self, v: usize) -> usize {
        self.vars[v].log_unary.len()
    }

    /// Uniform messages, beliefs from unary potentials (or clamps).
    pub fn initial_state(&self) -> BeliefState {
        let log_messages = self
            .edges
            .iter()
            .map(|e| [vec![0.0; self.states(e.second)], vec![0.0; self.states(e.first)]])
            .collect();
        let mut state = BeliefState { log_beliefs: Vec::new(), log_messages };
        state.log_beliefs = (0..self.vars.len()).map(|v| self.fresh_belief(&state, v)).collect();
        state
    }

    fn fresh_belief(&self, state: &BeliefState, v: usize) -> Vec<f64> {
        let var = &self.vars[v];
        if let Some(c) = &var.clamped {
            return c.clone();
        }
        let mut b = var.log_unary.clone();
        for &(e, is_first) in &var.edges {
            let incoming = &state.log_messages[e][if is_first { 1 } else { 0 }];
            b.iter_mut().zip(incoming).for_each(|(x, m)| *x += m);
        }
        normalize(&mut b);
        b
    }

    /// Recomputes `v`'s belief, then its outgoing messages.
    fn update_variable(&self, state: &mut BeliefState, v: usize, damping: f64) {
        let belief = self.fresh_belief(state, v);
        for &(e, is_first) in &self.vars[v].edges {
            self.send(state, &belief, e, is_first, damping);
        }
        state.log_beliefs[v] = belief;
    }

    /// Message along edge `e` from the endpoint holding `belief`.
    fn send(&self, state: &mut BeliefState, belief: &[f64], e: usize, is_first: bool, damping: f64) {
        let edge = &self.edges[e];
        let sv = belief.len();
        let (out_dir, in_dir) = if is_first { (0, 1) } else { (1, 0) };
        let other = if is_first { edge.second } else { edge.first };
        let so = self.states(other);
        let cavity: Vec<f64> = belief
            .iter()
            .zip(&state.log_messages[e][in_dir])
            .map(|(b, m)| (b - m).max(LOG_FLOOR))
            .collect();
        let mut msg: Vec<f64> = (0..so)
            .map(|y| {
                log_sum_exp((0..sv).map(|x| {
                    let t = if is_first { edge.table[x * so + y] } else { edge.table[y * sv + x] };
                    t + cavity[x]
                }))
            })
            .collect();
        normalize(&mut msg);
        let old = &mut state.log_messages[e][out_dir];
        if damping > 0.0 {
            msg.iter_mut()
                .zip(old.iter())
                .for_each(|(new, prev)| *new = damping * prev + (1.0 - damping) * *new);
            normalize(&mut msg);
        }
        *old = msg;
    }

    /// One asynchronous sweep over all variables.
    pub fn sweep(&self, state: &mut BeliefState, damping: f64) {
        for v in 0..self.vars.len() {
            self.update_variable(state, v, damping);
        }
    }

    /// Updates tied to the multinomial variable: each outside neighbor's
    /// message into the group, then the group belief and its messages out.
    pub fn multinomial_updates(&self, state: &mut BeliefState, damping: f64) -> Result<()> {
        let Some((gv, _)) = &self.group else {
            return Err(Error::InvalidArgument("model has no MECE group".into()));
        };
        let neighbors: Vec<(usize, usize, bool)> = self.vars[*gv]
            .edges
            .iter()
            .map(|&(e, is_first)| {
                if is_first {
                    (self.edges[e].second, e, false)
                } else {
                    (self.edges[e].first, e, true)
                }
            })
            .collect();
        for (j, e, j_is_first) in neighbors {
            let belief = self.fresh_belief(state, j);
            self.send(state, &belief, e, j_is_first, damping);
            state.log_beliefs[j] = belief;
        }
        self.update_variable(state, *gv, damping);
        Ok(())
    }

    fn refresh_beliefs(&self, state: &mut BeliefState) {
        for v in 0..self.vars.len() {
            state.log_beliefs[v] = self.fresh_belief(state, v);
        }
    }

    pub fn marginals(&self, state: &BeliefState, iterations: usize, converged: bool) -> MarginalTable {
        let mut p = vec![0.0; self.n_labels];
        let mut p_off = vec![0.0; self.n_labels];
        for i in 0..self.n_labels {
            let v = self.label_var[i];
            let b = &state.log_beliefs[v];
            let (on, off) = match (&self.vars[v].kind, &self.group) {
                (VarKind::Label, _) => (b[0].exp(), b[1].exp()),
                (VarKind::Group, Some((_, g))) => {
                    let s = g.state_of(i).expect("member");
                    let off = b.iter().enumerate().filter(|&(t, _)| t != s).map(|(_, x)| x.exp()).sum::<f64>();
                    (b[s].exp(), off)
                }
                (VarKind::Group, None) => unreachable!("group variable without group"),
            };
            p[i] = on.clamp(0.0, 1.0);
            p_off[i] = off.clamp(0.0, 1.0);
        }
        let mece = self
            .group
            .as_ref()
            .map(|(gv, _)| state.log_beliefs[*gv].iter().map(|b| b.exp()).collect());
        MarginalTable {
            p,
            p_off,
            mece,
            diagnostics: Diagnostics { method: MarginalMethod::Lbp, iterations, converged },
            log_partition: None,
        }
    }
}

fn group_variable(model: &ConditionedModel<'_>, g: &MeceGroup, clamps: &ResolvedClamps) -> Variable {
    let k = g.k();
    let allowed = clamps.group_allowed.clone().unwrap_or_else(|| vec![true; k]);
    let mut log_unary = Vec::with_capacity(k);
    for s in 0..k {
        if !allowed[s] {
            log_unary.push(f64::NEG_INFINITY);
            continue;
        }
        let y = |idx: usize| if idx == s { 1.0 } else { -1.0 };
        let mut e = 0.0;
        for (a, &ma) in g.members.iter().enumerate() {
            e += model.fields[ma] * y(a);
            for (b, &mb) in g.members.iter().enumerate().skip(a + 1) {
                if let Some(jv) = model.base.coupling(ma, mb) {
                    e += jv * y(a) * y(b);
                }
            }
        }
        log_unary.push(-e);
    }
    normalize(&mut log_unary);
    let only = allowed.iter().filter(|&&a| a).count();
    let clamped = (only == 1).then(|| indicator(k, allowed.iter().position(|&a| a).expect("one")));
    Variable { kind: VarKind::Group, log_unary, clamped, edges: Vec::new() }
}

fn max_change(prev: &[Vec<f64>], next: &[Vec<f64>]) -> f64 {
    let mut delta: f64 = 0.0;
    for (a, b) in prev.iter().zip(next) {
        for (x, y) in a.iter().zip(b) {
            if x.is_finite() || y.is_finite() {
                let d = (x.max(LOG_FLOOR) - y.max(LOG_FLOOR)).abs();
                delta = delta.max(d);
            }
        }
    }
    delta
}

/// Runs damped asynchronous loopy BP and returns `p(y_i = 1)` per label.
///
/// Non-convergence is not an error: the last beliefs are returned with
/// `converged = false`.
pub fn run_lbp(
    model: &ConditionedModel<'_>,
    clamps: &ClampSet,
    opts: &LbpOptions,
) -> Result<MarginalTable> {
    opts.validate()?;
    let graph = LbpGraph::build(model, clamps)?;
    let mut state = graph.initial_state();
    let mut prev = state.log_beliefs.clone();
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=opts.max_iterations {
        iterations = it;
        graph.sweep(&mut state, opts.damping);
        graph.refresh_beliefs(&mut state);
        let finite = state
            .log_beliefs
            .iter()
            .flatten()
            .chain(state.log_messages.iter().flatten().flatten())
            .all(|x| !x.is_nan() && *x != f64::INFINITY);
        if !finite {
            return Err(Error::NumericalFailure {
                iteration: it,
                detail: "non-finite belief or message".into(),
            });
        }
        let delta = max_change(&prev, &state.log_beliefs);
        prev.clone_from(&state.log_beliefs);
        if delta < opts.tolerance {
            converged = true;
            break;
        }
    }
    if !converged {
        log::debug!("lbp stopped after {iterations} sweeps without converging");
    }
    Ok(graph.marginals(&state, iterations, converged))
}

/// One round of the multinomial-node updates on `state`.
pub fn run_lbp_multinomial_updates(
    state: BeliefState,
    model: &ConditionedModel<'_>,
    clamps: &ClampSet,
    damping: f64,
) -> Result<BeliefState> {
    let graph = LbpGraph::build(model, clamps)?;
    if state.log_beliefs.len() != graph.vars.len() || state.log_messages.len() != graph.edges.len() {
        return Err(Error::InvalidArgument("belief state does not match the model".into()));
    }
    let mut state = state;
    graph.multinomial_updates(&mut state, damping)?;
    Ok(state)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredictMode {
    Multiclass,
    Multilabel,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Prediction {
    Multiclass(usize),
    Multilabel(Vec<usize>),
}

/// Labels ranked by decreasing probability; ties go to the lower label id.
pub fn rank_labels(marginals: &MarginalTable, candidates: &[usize]) -> Vec<usize> {
    let mut ranked = candidates.to_vec();
    ranked.sort_by(|&a, &b| {
        marginals.p[b]
            .partial_cmp(&marginals.p[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    ranked
}

/// Multilabel: every label with `p >= 0.5`. Multiclass: argmax over the MECE
/// members (or all labels when there is no group).
pub fn predict(marginals: &MarginalTable, mece: Option<&MeceGroup>, mode: PredictMode) -> Prediction {
    match mode {
        PredictMode::Multilabel => Prediction::Multilabel(
            (0..marginals.p.len()).filter(|&i| marginals.p[i] >= 0.5).collect(),
        ),
        PredictMode::Multiclass => {
            let candidates: Vec<usize> = match mece {
                Some(g) => g.members.clone(),
                None => (0..marginals.p.len()).collect(),
            };
            Prediction::Multiclass(rank_labels(marginals, &candidates)[0])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::exact_marginals;
    use crate::graph::{EdgeStrength, LabelGraph};
    use crate::ising::{compile, IsingModel};

    fn tight() -> LbpOptions {
        LbpOptions { max_iterations: 2000, tolerance: 1e-13, damping: 0.5 }
    }

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
    fn isolated_node_is_sigmoid() {
        let m = IsingModel::from_parts(1, [], vec![0.0], None).unwrap();
        let t = run_lbp(&m.condition(&[0.5]).unwrap(), &ClampSet::new(), &LbpOptions::default())
            .unwrap();
        assert!((t.p[0] - 1.0 / (1.0 + (-1.0f64).exp())).abs() < 1e-12);
        assert!((t.p[0] - 0.7311).abs() < 1e-4);
        assert!(t.diagnostics.converged);
    }

    #[test]
    fn chain_matches_exact() {
        let m = IsingModel::from_parts(
            4,
            [((0, 1), 0.9), ((1, 2), -1.3), ((1, 3), 0.4)],
            vec![0.3, -0.2, 0.5, 0.1],
            None,
        )
        .unwrap();
        let cm = m.condition(&[0.2, 0.1, -0.4, 0.9]).unwrap();
        for clamps in [ClampSet::new(), ClampSet::single(1, Spin::Up), ClampSet::single(3, Spin::Down)] {
            let a = run_lbp(&cm, &clamps, &tight()).unwrap();
            let b = exact_marginals(&cm, &clamps).unwrap();
            for i in 0..4 {
                assert!((a.p[i] - b.p[i]).abs() < 1e-9, "{clamps:?} {i}: {} vs {}", a.p[i], b.p[i]);
            }
        }
    }

    #[test]
    fn zero_coupling_gives_sigmoids() {
        let mut g = LabelGraph::new(["a", "b", "c"]).unwrap();
        g.add_exclusion(0, 1, EdgeStrength::from_u(0.0).unwrap()).unwrap();
        g.add_subsumption(1, 2, EdgeStrength::from_u(0.0).unwrap()).unwrap();
        let m = compile(&g).unwrap();
        let z = [1.0, -0.3, 0.2];
        let t = run_lbp(&m.condition(&z).unwrap(), &ClampSet::new(), &LbpOptions::default()).unwrap();
        for i in 0..3 {
            assert!((t.p[i] - 1.0 / (1.0 + (-2.0 * z[i]).exp())).abs() < 1e-12);
        }
    }

    #[test]
    fn mece_without_edges_is_softmax() {
        let m = IsingModel::from_parts(3, [], vec![0.0; 3], Some(MeceGroup::new(vec![0, 1, 2])))
            .unwrap();
        let z = [0.4, -1.0, 0.9];
        let t = run_lbp(&m.condition(&z).unwrap(), &ClampSet::new(), &LbpOptions::default()).unwrap();
        let norm: f64 = z.iter().map(|v| (2.0 * v).exp()).sum();
        let dist = t.mece.as_ref().unwrap();
        for i in 0..3 {
            let expect = (2.0 * z[i]).exp() / norm;
            assert!((dist[i] - expect).abs() < 1e-12);
            assert!((t.p[i] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn mece_with_zero_coupled_attribute() {
        let mece = Some(MeceGroup::new(vec![0, 1]));
        let z = [0.3, -0.6, 1.2];
        let plain = IsingModel::from_parts(3, [], vec![0.0; 3], mece.clone()).unwrap();
        let zero = IsingModel::from_parts(3, [((0, 2), 0.0), ((1, 2), 0.0)], vec![0.0; 3], mece).unwrap();
        let a = run_lbp(&plain.condition(&z).unwrap(), &ClampSet::new(), &LbpOptions::default()).unwrap();
        let b = run_lbp(&zero.condition(&z).unwrap(), &ClampSet::new(), &LbpOptions::default()).unwrap();
        for (x, y) in a.mece.unwrap().iter().zip(b.mece.unwrap()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn mece_with_attribute_matches_exact() {
        let mut g = LabelGraph::new(["c0", "c1", "c2", "furry"]).unwrap();
        g.add_subsumption(3, 1, EdgeStrength::from_u(0.3).unwrap()).unwrap();
        g.set_mece(vec![0, 1, 2]).unwrap();
        let m = compile(&g).unwrap();
        let cm = m.condition(&[0.1, -0.2, 0.3, 0.5]).unwrap();
        for clamps in [ClampSet::new(), ClampSet::single(3, Spin::Up), ClampSet::single(1, Spin::Down)] {
            let a = run_lbp(&cm, &clamps, &tight()).unwrap();
            let b = exact_marginals(&cm, &clamps).unwrap();
            for i in 0..4 {
                assert!((a.p[i] - b.p[i]).abs() < 1e-6, "{clamps:?}");
            }
        }
    }

    #[test]
    fn multinomial_round_on_star_is_exact() {
        // Attributes only see the group: one round of group updates after one
        // binary sweep reaches the fixed point.
        let mut g = LabelGraph::new(["c0", "c1", "c2", "a0", "a1"]).unwrap();
        g.add_subsumption(3, 0, EdgeStrength::from_u(0.5).unwrap()).unwrap();
        g.add_exclusion(4, 2, EdgeStrength::from_u(0.7).unwrap()).unwrap();
        g.set_mece(vec![0, 1, 2]).unwrap();
        let m = compile(&g).unwrap();
        let cm = m.condition(&[0.2, 0.0, -0.1, 0.4, -0.3]).unwrap();
        let graph = LbpGraph::build(&cm, &ClampSet::new()).unwrap();
        let mut state = graph.initial_state();
        for _ in 0..3 {
            state = run_lbp_multinomial_updates(state, &cm, &ClampSet::new(), 0.0).unwrap();
        }
        let t = graph.marginals(&state, 3, true);
        let e = exact_marginals(&cm, &ClampSet::new()).unwrap();
        for i in 0..3 {
            assert!((t.p[i] - e.p[i]).abs() < 1e-12);
        }
        let no_group = IsingModel::from_parts(1, [], vec![0.0], None).unwrap();
        let s = LbpGraph::build(&no_group.unconditioned(), &ClampSet::new()).unwrap().initial_state();
        assert!(run_lbp_multinomial_updates(s, &no_group.unconditioned(), &ClampSet::new(), 0.0).is_err());
    }

    #[test]
    fn option_validation() {
        let m = IsingModel::from_parts(1, [], vec![0.0], None).unwrap();
        let cm = m.unconditioned();
        for opts in [
            LbpOptions { damping: 1.0, ..LbpOptions::default() },
            LbpOptions { tolerance: 0.0, ..LbpOptions::default() },
            LbpOptions { max_iterations: 0, ..LbpOptions::default() },
        ] {
            assert!(run_lbp(&cm, &ClampSet::new(), &opts).is_err());
        }
    }

    #[test]
    fn prediction_rules() {
        let t = table(vec![0.9, 0.5, 0.3]);
        assert_eq!(predict(&t, None, PredictMode::Multilabel), Prediction::Multilabel(vec![0, 1]));
        let t = table(vec![0.2, 0.7, 0.7]);
        assert_eq!(predict(&t, None, PredictMode::Multiclass), Prediction::Multiclass(1));
        let mut t = table(vec![0.1, 0.8, 0.1, 0.95]);
        t.mece = Some(vec![0.1, 0.8, 0.1]);
        let g = MeceGroup::new(vec![0, 1, 2]);
        assert_eq!(predict(&t, Some(&g), PredictMode::Multiclass), Prediction::Multiclass(1));
    }
}
