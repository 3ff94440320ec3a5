//! Probabilistic hierarchy-and-exclusion label graphs.
//!
//! A [`LabelGraph`] holds an ordered list of labels, typed relation edges with
//! strengths, and at most one mutually-exclusive-and-collectively-exhaustive
//! (MECE) group. Edge strengths are stored as Ising coupling magnitudes `u`;
//! the relation strength `q` (the factor value given to the illegal state) is
//! `exp(-4u)`, and a hard edge is the `q = 0` limit.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest finite coupling accepted; larger values are capped with a warning.
pub const MAX_U: f64 = 16.0;

/// State of a binary label node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    pub const BOTH: [Spin; 2] = [Spin::Up, Spin::Down];

    pub fn value(self) -> f64 {
        match self {
            Spin::Up => 1.0,
            Spin::Down => -1.0,
        }
    }

    pub fn from_sign(s: i64) -> Option<Spin> {
        match s {
            1 => Some(Spin::Up),
            -1 => Some(Spin::Down),
            _ => None,
        }
    }

    pub fn flip(self) -> Spin {
        match self {
            Spin::Up => Spin::Down,
            Spin::Down => Spin::Up,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeKind {
    /// The two labels may not both be on.
    Exclusion,
    /// `a` (parent) subsumes `b` (child): child on forces parent on.
    Subsumption,
}

/// Edge strength: a finite coupling `u >= 0` or a hard constraint (`u = +inf`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EdgeStrength {
    Finite(f64),
    Hard,
}

impl EdgeStrength {
    /// Finite coupling `u`. Values above [`MAX_U`] are capped with a warning.
    pub fn from_u(u: f64) -> Result<Self> {
        check_u(u)?;
        if u > MAX_U {
            log::warn!("coupling u = {u} exceeds cap {MAX_U}; capping");
            return Ok(EdgeStrength::Finite(MAX_U));
        }
        Ok(EdgeStrength::Finite(u))
    }

    /// Strength from `q` in `(0, 1]`. `q = 0` is rejected here; see
    /// [`EdgeStrength::from_q_allow_hard`].
    pub fn from_q(q: f64) -> Result<Self> {
        Self::from_u(strength_from_q(q)?)
    }

    /// Like [`EdgeStrength::from_q`], but maps `q = 0` to [`EdgeStrength::Hard`].
    pub fn from_q_allow_hard(q: f64) -> Result<Self> {
        if q == 0.0 {
            Ok(EdgeStrength::Hard)
        } else {
            Self::from_q(q)
        }
    }

    pub fn u(self) -> Option<f64> {
        match self {
            EdgeStrength::Finite(u) => Some(u),
            EdgeStrength::Hard => None,
        }
    }

    pub fn q(self) -> f64 {
        match self {
            EdgeStrength::Finite(u) => (-4.0 * u).exp(),
            EdgeStrength::Hard => 0.0,
        }
    }

    pub fn is_hard(self) -> bool {
        matches!(self, EdgeStrength::Hard)
    }
}

fn check_u(u: f64) -> Result<()> {
    if !u.is_finite() || u < 0.0 {
        return Err(Error::InvalidStrength(format!(
            "u must be finite and >= 0, got {u}"
        )));
    }
    Ok(())
}

/// `q = exp(-4u)`.
pub fn strength_from_u(u: f64) -> Result<f64> {
    check_u(u)?;
    Ok((-4.0 * u).exp())
}

/// `u = -ln(q) / 4` for `q` in `(0, 1]`.
pub fn strength_from_q(q: f64) -> Result<f64> {
    if !q.is_finite() || q <= 0.0 || q > 1.0 {
        return Err(Error::InvalidStrength(format!(
            "q must lie in (0, 1], got {q}"
        )));
    }
    // -ln(1) is -0.0; report +0.
    Ok((-q.ln() / 4.0).max(0.0))
}

/// Deterministic ("absolute") pairwise potential: 1 on legal pairs, 0 on the
/// illegal pair. `None` is the no-relation potential (always 1).
pub fn absolute_potential(kind: Option<EdgeKind>, y1: Spin, y2: Spin) -> f64 {
    match kind {
        None => 1.0,
        Some(EdgeKind::Exclusion) => {
            if y1 == Spin::Up && y2 == Spin::Up {
                0.0
            } else {
                1.0
            }
        }
        Some(EdgeKind::Subsumption) => {
            if y1 == Spin::Down && y2 == Spin::Up {
                0.0
            } else {
                1.0
            }
        }
    }
}

/// Probabilistic pairwise potential: 1 on legal pairs, `q` on the illegal pair.
pub fn probabilistic_potential(kind: EdgeKind, y1: Spin, y2: Spin, q: f64) -> f64 {
    if absolute_potential(Some(kind), y1, y2) == 0.0 {
        q
    } else {
        1.0
    }
}

/// Whether `(y1, y2)` lies in the legal state space of `kind`.
pub fn is_legal(kind: EdgeKind, y1: Spin, y2: Spin) -> bool {
    absolute_potential(Some(kind), y1, y2) != 0.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelationEdge {
    pub kind: EdgeKind,
    /// First endpoint; the parent for subsumption.
    pub a: usize,
    /// Second endpoint; the child for subsumption.
    pub b: usize,
    pub strength: EdgeStrength,
}

impl RelationEdge {
    pub fn exclusion(a: usize, b: usize, strength: EdgeStrength) -> Self {
        Self { kind: EdgeKind::Exclusion, a, b, strength }
    }

    pub fn subsumption(parent: usize, child: usize, strength: EdgeStrength) -> Self {
        Self { kind: EdgeKind::Subsumption, a: parent, b: child, strength }
    }

    pub fn pair_key(&self) -> (usize, usize) {
        (self.a.min(self.b), self.a.max(self.b))
    }

    pub fn touches(&self, i: usize) -> bool {
        self.a == i || self.b == i
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeceGroup {
    pub members: Vec<usize>,
}

impl MeceGroup {
    pub fn new(members: Vec<usize>) -> Self {
        Self { members }
    }

    pub fn k(&self) -> usize {
        self.members.len()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.members.contains(&i)
    }

    /// Position of label `i` inside the group.
    pub fn state_of(&self, i: usize) -> Option<usize> {
        self.members.iter().position(|&m| m == i)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    EmptyLabel { index: usize },
    DuplicateLabel { name: String },
    UnknownLabel { edge: usize, id: usize },
    SelfEdge { edge: usize, label: usize },
    DuplicatePair { first: usize, second: usize },
    InvalidStrength { edge: usize, u: f64 },
    MeceTooSmall { size: usize },
    MeceUnknownMember { id: usize },
    MeceDuplicateMember { id: usize },
    ExclusionInsideMece { edge: usize },
    SubsumptionInsideMece { edge: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyLabel { index } => write!(f, "empty label name at index {index}"),
            Violation::DuplicateLabel { name } => write!(f, "duplicate label '{name}'"),
            Violation::UnknownLabel { edge, id } => {
                write!(f, "edge {edge}: unknown label id {id}")
            }
            Violation::SelfEdge { edge, label } => {
                write!(f, "edge {edge}: self-edge on label {label}")
            }
            Violation::DuplicatePair { first, second } => {
                write!(f, "duplicate pair: edges {first} and {second}")
            }
            Violation::InvalidStrength { edge, u } => {
                write!(f, "edge {edge}: invalid strength u = {u}")
            }
            Violation::MeceTooSmall { size } => write!(f, "MECE group has {size} < 2 members"),
            Violation::MeceUnknownMember { id } => write!(f, "MECE member {id} is not a label"),
            Violation::MeceDuplicateMember { id } => write!(f, "MECE member {id} repeated"),
            Violation::ExclusionInsideMece { edge } => {
                write!(f, "edge {edge}: exclusion inside MECE group")
            }
            Violation::SubsumptionInsideMece { edge } => {
                write!(f, "edge {edge}: subsumption inside MECE group (bad direction)")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_ok() {
            Ok(())
        } else {
            Err(Error::InvalidGraph(self))
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "ok");
        }
        let parts: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", parts.join("; "))
    }
}

/// A pHEX label-relation graph.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabelGraph {
    pub labels: Vec<String>,
    pub edges: Vec<RelationEdge>,
    pub mece: Option<MeceGroup>,
}

impl LabelGraph {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let graph = Self {
            labels: labels.into_iter().map(Into::into).collect(),
            edges: Vec::new(),
            mece: None,
        };
        graph.validate().into_result()?;
        Ok(graph)
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn label_id(&self, name: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == name)
    }

    pub fn require_label(&self, name: &str) -> Result<usize> {
        self.label_id(name)
            .ok_or_else(|| Error::UnknownLabel(name.to_string()))
    }

    fn push_edge(&mut self, edge: RelationEdge) -> Result<()> {
        self.edges.push(edge);
        let report = self.validate();
        if report.is_ok() {
            Ok(())
        } else {
            self.edges.pop();
            Err(Error::InvalidGraph(report))
        }
    }

    pub fn add_exclusion(&mut self, a: usize, b: usize, strength: EdgeStrength) -> Result<()> {
        self.push_edge(RelationEdge::exclusion(a, b, strength))
    }

    pub fn add_subsumption(
        &mut self,
        parent: usize,
        child: usize,
        strength: EdgeStrength,
    ) -> Result<()> {
        self.push_edge(RelationEdge::subsumption(parent, child, strength))
    }

    /// Installs the MECE group, dropping exclusion edges among its members.
    pub fn set_mece(&mut self, members: Vec<usize>) -> Result<()> {
        let previous = self.mece.replace(MeceGroup::new(members));
        match normalize_mece(self) {
            Ok(normalized) => {
                *self = normalized;
                Ok(())
            }
            Err(e) => {
                self.mece = previous;
                Err(e)
            }
        }
    }

    pub fn has_hard_edges(&self) -> bool {
        self.edges.iter().any(|e| e.strength.is_hard())
    }

    /// Copy with every finite coupling multiplied by `factor` (capped at [`MAX_U`]).
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        self.map_strengths(|s| match s {
            EdgeStrength::Finite(u) => EdgeStrength::from_u(u * factor),
            EdgeStrength::Hard => Ok(EdgeStrength::Hard),
        })
    }

    /// Copy with every edge (hard ones included) set to the same finite `u`.
    pub fn with_uniform_strength(&self, u: f64) -> Result<Self> {
        let s = EdgeStrength::from_u(u)?;
        self.map_strengths(|_| Ok(s))
    }

    /// Copy with every edge made hard.
    pub fn hardened(&self) -> Self {
        let mut g = self.clone();
        for e in &mut g.edges {
            e.strength = EdgeStrength::Hard;
        }
        g
    }

    fn map_strengths(&self, f: impl Fn(EdgeStrength) -> Result<EdgeStrength>) -> Result<Self> {
        let mut g = self.clone();
        for e in &mut g.edges {
            e.strength = f(e.strength)?;
        }
        Ok(g)
    }

    /// Report every invariant violation.
    pub fn validate(&self) -> ValidationReport {
        validate(self)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: GraphFile = serde_json::from_str(s)?;
        file.into_graph()
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&GraphFile::from_graph(self))?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json_string()? + "\n")?;
        Ok(())
    }
}

pub fn validate(graph: &LabelGraph) -> ValidationReport {
    let mut violations = Vec::new();
    let n = graph.n();

    let mut seen_names = HashSet::new();
    for (index, name) in graph.labels.iter().enumerate() {
        if name.is_empty() {
            violations.push(Violation::EmptyLabel { index });
        } else if !seen_names.insert(name.as_str()) {
            violations.push(Violation::DuplicateLabel { name: name.clone() });
        }
    }

    let mut pairs: HashMap<(usize, usize), usize> = HashMap::new();
    for (idx, e) in graph.edges.iter().enumerate() {
        let mut known = true;
        for id in [e.a, e.b] {
            if id >= n {
                violations.push(Violation::UnknownLabel { edge: idx, id });
                known = false;
            }
        }
        if let EdgeStrength::Finite(u) = e.strength {
            if !u.is_finite() || u < 0.0 {
                violations.push(Violation::InvalidStrength { edge: idx, u });
            }
        }
        if !known {
            continue;
        }
        if e.a == e.b {
            violations.push(Violation::SelfEdge { edge: idx, label: e.a });
            continue;
        }
        if let Some(&first) = pairs.get(&e.pair_key()) {
            violations.push(Violation::DuplicatePair { first, second: idx });
        } else {
            pairs.insert(e.pair_key(), idx);
        }
    }

    if let Some(group) = &graph.mece {
        if group.members.len() < 2 {
            violations.push(Violation::MeceTooSmall { size: group.members.len() });
        }
        let mut seen = BTreeSet::new();
        for &m in &group.members {
            if m >= n {
                violations.push(Violation::MeceUnknownMember { id: m });
            } else if !seen.insert(m) {
                violations.push(Violation::MeceDuplicateMember { id: m });
            }
        }
        for (idx, e) in graph.edges.iter().enumerate() {
            if e.a != e.b && group.contains(e.a) && group.contains(e.b) {
                violations.push(match e.kind {
                    EdgeKind::Exclusion => Violation::ExclusionInsideMece { edge: idx },
                    EdgeKind::Subsumption => Violation::SubsumptionInsideMece { edge: idx },
                });
            }
        }
    }

    ValidationReport { violations }
}

/// Removes exclusion edges between two MECE members (the group already
/// enforces them). A subsumption edge inside the group is contradictory and
/// rejected.
pub fn normalize_mece(graph: &LabelGraph) -> Result<LabelGraph> {
    let mut out = graph.clone();
    let Some(group) = &graph.mece else {
        return Ok(out);
    };
    if let Some(e) = graph.edges.iter().find(|e| {
        e.kind == EdgeKind::Subsumption && group.contains(e.a) && group.contains(e.b)
    }) {
        return Err(Error::Contradiction(format!(
            "subsumption {} -> {} between two MECE members",
            e.a, e.b
        )));
    }
    out.edges.retain(|e| {
        !(e.kind == EdgeKind::Exclusion && group.contains(e.a) && group.contains(e.b))
    });
    out.validate().into_result()?;
    Ok(out)
}

// ---------------------------------------------------------------------------
// JSON file format

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphFile {
    labels: Vec<String>,
    #[serde(default)]
    edges: Vec<EdgeFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mece: Option<MeceFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeceFile {
    members: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum EdgeFile {
    Exclusion {
        a: String,
        b: String,
        #[serde(flatten)]
        strength: StrengthFile,
    },
    Subsumption {
        parent: String,
        child: String,
        #[serde(flatten)]
        strength: StrengthFile,
    },
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct StrengthFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    u: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hard: Option<bool>,
}

impl StrengthFile {
    fn resolve(&self) -> Result<EdgeStrength> {
        match (self.u, self.q, self.hard) {
            (Some(u), None, None) => EdgeStrength::from_u(u),
            (None, Some(q), None) => EdgeStrength::from_q(q),
            (None, None, Some(true)) => Ok(EdgeStrength::Hard),
            (None, None, Some(false)) => Err(Error::Parse(
                "\"hard\": false is not a strength; give u or q".into(),
            )),
            _ => Err(Error::Parse(
                "each edge needs exactly one of \"u\", \"q\", \"hard\"".into(),
            )),
        }
    }

    fn from_strength(s: EdgeStrength) -> Self {
        match s {
            EdgeStrength::Finite(u) => Self { u: Some(u), ..Self::default() },
            EdgeStrength::Hard => Self { hard: Some(true), ..Self::default() },
        }
    }
}

impl GraphFile {
    fn into_graph(self) -> Result<LabelGraph> {
        let index: HashMap<&str, usize> = self
            .labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.as_str(), i))
            .collect();
        let lookup = |name: &str| {
            index
                .get(name)
                .copied()
                .ok_or_else(|| Error::UnknownLabel(name.to_string()))
        };
        let mut edges = Vec::with_capacity(self.edges.len());
        for e in &self.edges {
            edges.push(match e {
                EdgeFile::Exclusion { a, b, strength } => {
                    RelationEdge::exclusion(lookup(a)?, lookup(b)?, strength.resolve()?)
                }
                EdgeFile::Subsumption { parent, child, strength } => {
                    RelationEdge::subsumption(lookup(parent)?, lookup(child)?, strength.resolve()?)
                }
            });
        }
        let mece = match &self.mece {
            Some(m) => Some(MeceGroup::new(
                m.members.iter().map(|s| lookup(s)).collect::<Result<_>>()?,
            )),
            None => None,
        };
        let graph = LabelGraph { labels: self.labels, edges, mece };
        graph.validate().into_result()?;
        Ok(graph)
    }

    fn from_graph(g: &LabelGraph) -> Self {
        let name = |i: usize| g.labels[i].clone();
        GraphFile {
            labels: g.labels.clone(),
            edges: g
                .edges
                .iter()
                .map(|e| {
                    let strength = StrengthFile::from_strength(e.strength);
                    match e.kind {
                        EdgeKind::Exclusion => EdgeFile::Exclusion { a: name(e.a), b: name(e.b), strength },
                        EdgeKind::Subsumption => {
                            EdgeFile::Subsumption { parent: name(e.a), child: name(e.b), strength }
                        }
                    }
                })
                .collect(),
            mece: g.mece.as_ref().map(|m| MeceFile {
                members: m.members.iter().map(|&i| name(i)).collect(),
            }),
        }
    }
}
