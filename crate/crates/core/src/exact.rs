//! Brute-force exact inference by enumeration.
//!
//! Used as the ground truth for the approximate engine and the gradients.
//! Free binary labels are visited in Gray-code order so each step costs one
//! spin flip; with a MECE group the outer loop runs over its `k` one-hot
//! states. Weights are accumulated against a running reference log-weight so
//! that large couplings do not overflow.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{is_legal, EdgeKind, LabelGraph, MeceGroup, RelationEdge, Spin};
use crate::ising::{compile, ConditionedModel, IsingModel};

/// Largest label count accepted by the enumeration routines.
pub const MAX_ENUMERATION_LABELS: usize = 24;

/// Labels held fixed during inference.
///
/// An up-clamp on a MECE member is equivalent to clamping the group to that
/// member's state; a down-clamp on a member only removes its state.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClampSet {
    pub spins: BTreeMap<usize, Spin>,
    pub mece_state: Option<usize>,
}

impl ClampSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn single(label: usize, spin: Spin) -> Self {
        Self::new().with(label, spin)
    }

    pub fn with(mut self, label: usize, spin: Spin) -> Self {
        self.spins.insert(label, spin);
        self
    }

    pub fn with_mece_state(mut self, state: usize) -> Self {
        self.mece_state = Some(state);
        self
    }

    pub fn is_empty(&self) -> bool {
        self.spins.is_empty() && self.mece_state.is_none()
    }

    /// Checks the clamps against a model's size and group and folds member
    /// clamps into the group state.
    pub(crate) fn resolve(&self, n: usize, mece: Option<&MeceGroup>) -> Result<ResolvedClamps> {
        let mut spins = vec![None; n];
        let mut fixed_state = None;
        let mut allowed = mece.map(|g| vec![true; g.k()]);

        if let Some(s) = self.mece_state {
            let group = mece.ok_or_else(|| {
                Error::InvalidClamp("MECE state clamp on a model without a MECE group".into())
            })?;
            if s >= group.k() {
                return Err(Error::InvalidClamp(format!(
                    "MECE state {s} out of range (k = {})",
                    group.k()
                )));
            }
            fixed_state = Some(s);
        }

        for (&label, &spin) in &self.spins {
            if label >= n {
                return Err(Error::InvalidClamp(format!("label {label} out of range (n = {n})")));
            }
            match mece.and_then(|g| g.state_of(label)) {
                Some(state) => match spin {
                    Spin::Up => {
                        if fixed_state.is_some_and(|s| s != state) {
                            return Err(Error::InvalidClamp(
                                "two MECE members clamped on".into(),
                            ));
                        }
                        fixed_state = Some(state);
                    }
                    Spin::Down => {
                        if let Some(a) = allowed.as_mut() {
                            a[state] = false;
                        }
                    }
                },
                None => spins[label] = Some(spin),
            }
        }

        if let (Some(a), Some(s)) = (allowed.as_mut(), fixed_state) {
            let ok = a[s];
            a.iter_mut().for_each(|v| *v = false);
            a[s] = ok;
        }
        if allowed.as_ref().is_some_and(|a| !a.iter().any(|&v| v)) {
            return Err(Error::InfeasibleClamp);
        }
        Ok(ResolvedClamps { spins, group_allowed: allowed })
    }
}

#[derive(Debug, Clone)]
pub(crate) struct ResolvedClamps {
    /// Clamp per non-member label (members are always `None`).
    pub spins: Vec<Option<Spin>>,
    /// Allowed MECE states, if the model has a group.
    pub group_allowed: Option<Vec<bool>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MarginalMethod {
    Exact,
    Hex,
    Lbp,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub method: MarginalMethod,
    pub iterations: usize,
    pub converged: bool,
}

/// Per-label `p(y_i = 1 | z, clamps)` plus the MECE state distribution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginalTable {
    pub p: Vec<f64>,
    /// `p(y_i = -1)`, computed separately so that tiny tails survive.
    #[serde(skip)]
    pub p_off: Vec<f64>,
    pub mece: Option<Vec<f64>>,
    pub diagnostics: Diagnostics,
    /// Log partition function over the clamped configurations (enumeration only).
    #[serde(skip)]
    pub log_partition: Option<f64>,
}

impl MarginalTable {
    /// `E[y_i] = p(y_i = 1) - p(y_i = -1)`.
    pub fn expectations(&self) -> Vec<f64> {
        self.p.iter().zip(&self.p_off).map(|(p, q)| p - q).collect()
    }

    pub fn prob(&self, label: usize, spin: Spin) -> f64 {
        match spin {
            Spin::Up => self.p[label],
            Spin::Down => self.p_off[label],
        }
    }
}

struct HardConstraint {
    kind: EdgeKind,
    a: usize,
    b: usize,
}

struct Enumerator<'a> {
    n: usize,
    fields: &'a [f64],
    adj: Vec<Vec<(usize, f64)>>,
    hard: Vec<HardConstraint>,
    hard_incident: Vec<Vec<usize>>,
    mece: Option<&'a MeceGroup>,
}

impl<'a> Enumerator<'a> {
    fn new(model: &'a IsingModel, fields: &'a [f64], hard: Vec<HardConstraint>) -> Result<Self> {
        let n = model.n();
        if n > MAX_ENUMERATION_LABELS {
            return Err(Error::EnumerationBound { n, max: MAX_ENUMERATION_LABELS });
        }
        let mut hard_incident = vec![Vec::new(); n];
        for (idx, h) in hard.iter().enumerate() {
            hard_incident[h.a].push(idx);
            hard_incident[h.b].push(idx);
        }
        Ok(Self { n, fields, adj: model.neighbors(), hard, hard_incident, mece: model.mece() })
    }

    fn violated(&self, idx: usize, y: &[Spin]) -> bool {
        let h = &self.hard[idx];
        !is_legal(h.kind, y[h.a], y[h.b])
    }

    fn energy(&self, y: &[Spin]) -> f64 {
        let mut e = 0.0;
        for i in 0..self.n {
            let yi = y[i].value();
            e += self.fields[i] * yi;
            for &(j, jv) in &self.adj[i] {
                if j > i {
                    e += jv * yi * y[j].value();
                }
            }
        }
        e
    }

    fn run(&self, clamps: &ResolvedClamps, method: MarginalMethod) -> Result<MarginalTable> {
        let n = self.n;
        let mut y = vec![Spin::Down; n];
        for (i, c) in clamps.spins.iter().enumerate() {
            if let Some(s) = c {
                y[i] = *s;
            }
        }
        let free: Vec<usize> = (0..n)
            .filter(|&i| clamps.spins[i].is_none() && !self.mece.is_some_and(|g| g.contains(i)))
            .collect();

        let group_states: Vec<Option<usize>> = match (self.mece, &clamps.group_allowed) {
            (Some(_), Some(allowed)) => {
                (0..allowed.len()).filter(|&s| allowed[s]).map(Some).collect()
            }
            _ => vec![None],
        };
        let k = self.mece.map_or(0, |g| g.k());

        let mut acc = Accumulator::new(n, k);
        for state in group_states {
            if let (Some(g), Some(s)) = (self.mece, state) {
                for (idx, &m) in g.members.iter().enumerate() {
                    y[m] = if idx == s { Spin::Up } else { Spin::Down };
                }
            }
            for &v in &free {
                y[v] = Spin::Down;
            }
            let mut e = self.energy(&y);
            let mut violations = (0..self.hard.len()).filter(|&h| self.violated(h, &y)).count();

            let total: u64 = 1u64 << free.len();
            for step in 0..total {
                if violations == 0 {
                    acc.add(-e, &y, state);
                }
                if step + 1 == total {
                    break;
                }
                let v = free[(step + 1).trailing_zeros() as usize];
                let before: usize =
                    self.hard_incident[v].iter().filter(|&&h| self.violated(h, &y)).count();
                let local: f64 = self.fields[v]
                    + self.adj[v].iter().map(|&(w, jv)| jv * y[w].value()).sum::<f64>();
                e -= 2.0 * y[v].value() * local;
                y[v] = y[v].flip();
                let after: usize =
                    self.hard_incident[v].iter().filter(|&&h| self.violated(h, &y)).count();
                violations = violations + after - before;
            }
        }
        acc.finish(method)
    }
}

/// Streaming weighted sums of `exp(log_w - reference)`.
struct Accumulator {
    reference: Option<f64>,
    total: f64,
    up: Vec<f64>,
    down: Vec<f64>,
    states: Vec<f64>,
}

impl Accumulator {
    const RESCALE_GAP: f64 = 300.0;

    fn new(n: usize, k: usize) -> Self {
        Self { reference: None, total: 0.0, up: vec![0.0; n], down: vec![0.0; n], states: vec![0.0; k] }
    }

    fn add(&mut self, log_w: f64, y: &[Spin], state: Option<usize>) {
        let reference = match self.reference {
            Some(r) if log_w - r <= Self::RESCALE_GAP => r,
            Some(r) => {
                let scale = (r - log_w).exp();
                self.total *= scale;
                self.up.iter_mut().for_each(|v| *v *= scale);
                self.down.iter_mut().for_each(|v| *v *= scale);
                self.states.iter_mut().for_each(|v| *v *= scale);
                self.reference = Some(log_w);
                log_w
            }
            None => {
                self.reference = Some(log_w);
                log_w
            }
        };
        let w = (log_w - reference).exp();
        self.total += w;
        for ((up, down), s) in self.up.iter_mut().zip(&mut self.down).zip(y) {
            match s {
                Spin::Up => *up += w,
                Spin::Down => *down += w,
            }
        }
        if let Some(s) = state {
            self.states[s] += w;
        }
    }

    fn finish(self, method: MarginalMethod) -> Result<MarginalTable> {
        let Some(reference) = self.reference else {
            return Err(Error::InfeasibleClamp);
        };
        if self.total <= 0.0 || !self.total.is_finite() {
            return Err(Error::InfeasibleClamp);
        }
        let p = self.up.iter().map(|v| (v / self.total).clamp(0.0, 1.0)).collect();
        let p_off = self.down.iter().map(|v| (v / self.total).clamp(0.0, 1.0)).collect();
        let mece = if self.states.is_empty() {
            None
        } else {
            Some(self.states.iter().map(|v| v / self.total).collect())
        };
        Ok(MarginalTable {
            p,
            p_off,
            mece,
            diagnostics: Diagnostics { method, iterations: 0, converged: true },
            log_partition: Some(reference + self.total.ln()),
        })
    }
}

/// Exact marginals of the conditioned Ising model under `clamps`.
pub fn exact_marginals(model: &ConditionedModel<'_>, clamps: &ClampSet) -> Result<MarginalTable> {
    let resolved = clamps.resolve(model.n(), model.mece())?;
    Enumerator::new(model.base, &model.fields, Vec::new())?.run(&resolved, MarginalMethod::Exact)
}

/// Exact marginals with `target` additionally clamped on.
pub fn exact_conditional(
    model: &ConditionedModel<'_>,
    clamps: &ClampSet,
    target: usize,
) -> Result<MarginalTable> {
    exact_marginals(model, &clamps.clone().with(target, Spin::Up))
}

/// Exact marginals with hard edges as constraints: configurations outside the
/// legal state space of any hard edge get zero weight. Finite edges remain soft.
pub fn exact_hex_marginals(
    graph: &LabelGraph,
    z: &[f64],
    clamps: &ClampSet,
) -> Result<MarginalTable> {
    graph.validate().into_result()?;
    let (soft, hard): (Vec<RelationEdge>, Vec<RelationEdge>) =
        graph.edges.iter().partition(|e| !e.strength.is_hard());
    let soft_graph = LabelGraph { labels: graph.labels.clone(), edges: soft, mece: graph.mece.clone() };
    let model = compile(&soft_graph)?;
    let conditioned = model.condition(z)?;
    let hard = hard
        .into_iter()
        .map(|e| HardConstraint { kind: e.kind, a: e.a, b: e.b })
        .collect();
    let resolved = clamps.resolve(model.n(), model.mece())?;
    Enumerator::new(&model, &conditioned.fields, hard)?.run(&resolved, MarginalMethod::Hex)
}

/// Hard-constraint limit of `graph`: every edge treated as hard.
pub fn exact_hex_limit_marginals(
    graph: &LabelGraph,
    z: &[f64],
    clamps: &ClampSet,
) -> Result<MarginalTable> {
    exact_hex_marginals(&graph.hardened(), z, clamps)
}
