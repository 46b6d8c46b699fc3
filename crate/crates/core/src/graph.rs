//! Metric graphs with leads and smooth edge-length perturbation families.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Highest polynomial degree accepted for `a_m(t)` or `ℓ_m(t)`.
pub const MAX_DEGREE: usize = 8;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RawEdge {
    pub id: String,
    pub ends: [String; 2],
    pub length: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RawLead {
    pub id: String,
    pub vertex: String,
}

/// Graph description as read from JSON.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
pub struct RawGraph {
    pub vertices: Vec<String>,
    #[serde(default)]
    pub edges: Vec<RawEdge>,
    #[serde(default)]
    pub leads: Vec<RawLead>,
}

impl RawGraph {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub id: String,
    /// Vertex at `x = 0`.
    pub start: usize,
    /// Vertex at `x = ℓ`.
    pub end: usize,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lead {
    pub id: String,
    pub vertex: usize,
}

/// One half-edge meeting a vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeEnd {
    /// Finite edge `m` at its `x = 0` end.
    Start(usize),
    /// Finite edge `m` at its `x = ℓ_m` end.
    End(usize),
    /// Lead `k` at `x = 0`.
    Lead(usize),
}

/// A validated metric graph. Immutable; lengths can only change by building a
/// new graph through [`MetricGraph::with_lengths`].
#[derive(Debug, Clone, PartialEq)]
pub struct MetricGraph {
    vertices: Vec<String>,
    edges: Vec<Edge>,
    leads: Vec<Lead>,
    incidence: Vec<Vec<EdgeEnd>>,
}

/// Validates a raw description. Edge order is the input order.
pub fn validate_graph(raw: &RawGraph) -> Result<MetricGraph> {
    let mut vertex_index = HashMap::new();
    for (i, v) in raw.vertices.iter().enumerate() {
        if vertex_index.insert(v.clone(), i).is_some() {
            return Err(Error::DuplicateId(v.clone()));
        }
    }
    let mut ids = HashSet::new();
    let lookup = |from: &str, name: &str| -> Result<usize> {
        vertex_index
            .get(name)
            .copied()
            .ok_or_else(|| Error::DanglingReference { from: from.to_string(), target: name.to_string() })
    };

    let mut edges = Vec::with_capacity(raw.edges.len());
    for e in &raw.edges {
        if !ids.insert(e.id.clone()) || vertex_index.contains_key(&e.id) {
            return Err(Error::DuplicateId(e.id.clone()));
        }
        let start = lookup(&e.id, &e.ends[0])?;
        let end = lookup(&e.id, &e.ends[1])?;
        if start == end {
            return Err(Error::LoopEdge(e.id.clone()));
        }
        if !(e.length.is_finite() && e.length > 0.0) {
            return Err(Error::NonpositiveLength { id: e.id.clone(), length: e.length });
        }
        edges.push(Edge { id: e.id.clone(), start, end, length: e.length });
    }
    let mut leads = Vec::with_capacity(raw.leads.len());
    for l in &raw.leads {
        if !ids.insert(l.id.clone()) || vertex_index.contains_key(&l.id) {
            return Err(Error::DuplicateId(l.id.clone()));
        }
        let vertex = lookup(&l.id, &l.vertex)?;
        leads.push(Lead { id: l.id.clone(), vertex });
    }
    Ok(MetricGraph::assemble(raw.vertices.clone(), edges, leads))
}

impl MetricGraph {
    fn assemble(vertices: Vec<String>, edges: Vec<Edge>, leads: Vec<Lead>) -> Self {
        let mut incidence = vec![Vec::new(); vertices.len()];
        for (m, e) in edges.iter().enumerate() {
            incidence[e.start].push(EdgeEnd::Start(m));
            incidence[e.end].push(EdgeEnd::End(m));
        }
        for (k, l) in leads.iter().enumerate() {
            incidence[l.vertex].push(EdgeEnd::Lead(k));
        }
        Self { vertices, edges, leads, incidence }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        validate_graph(&RawGraph::from_json(text)?)
    }

    pub fn to_raw(&self) -> RawGraph {
        RawGraph {
            vertices: self.vertices.clone(),
            edges: self
                .edges
                .iter()
                .map(|e| RawEdge {
                    id: e.id.clone(),
                    ends: [self.vertices[e.start].clone(), self.vertices[e.end].clone()],
                    length: e.length,
                })
                .collect(),
            leads: self
                .leads
                .iter()
                .map(|l| RawLead { id: l.id.clone(), vertex: self.vertices[l.vertex].clone() })
                .collect(),
        }
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn leads(&self) -> &[Lead] {
        &self.leads
    }

    /// Number of finite edges `M`.
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Number of leads `K`.
    pub fn num_leads(&self) -> usize {
        self.leads.len()
    }

    pub fn degree(&self, vertex: usize) -> usize {
        self.incidence[vertex].len()
    }

    /// Half-edges meeting `vertex`, edges in input order followed by leads.
    pub fn incident(&self, vertex: usize) -> &[EdgeEnd] {
        &self.incidence[vertex]
    }

    pub fn lengths(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e.length).collect()
    }

    pub fn vertex_index(&self, name: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v == name)
    }

    pub fn edge_index(&self, id: &str) -> Option<usize> {
        self.edges.iter().position(|e| e.id == id)
    }

    pub fn lead_index(&self, id: &str) -> Option<usize> {
        self.leads.iter().position(|l| l.id == id)
    }

    /// Same combinatorics, new finite-edge lengths.
    pub fn with_lengths(&self, lengths: &[f64]) -> Result<Self> {
        if lengths.len() != self.edges.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} lengths, got {}",
                self.edges.len(),
                lengths.len()
            )));
        }
        let mut g = self.clone();
        for (e, &l) in g.edges.iter_mut().zip(lengths) {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::NonpositiveLength { id: e.id.clone(), length: l });
            }
            e.length = l;
        }
        Ok(g)
    }

    /// Compact graph in which every lead is replaced by a finite edge of length
    /// `rho` ending at a new degree-one (Neumann) vertex. The capped edges are
    /// appended after the original edges and keep the lead ids.
    pub fn capped(&self, rho: f64) -> Result<Self> {
        let mut raw = self.to_raw();
        for l in std::mem::take(&mut raw.leads) {
            let cap = format!("{}#cap", l.id);
            raw.vertices.push(cap.clone());
            raw.edges.push(RawEdge { id: l.id, ends: [l.vertex, cap], length: rho });
        }
        validate_graph(&raw)
    }

    /// Inserts a degree-two vertex into edge `m` at distance `at` from its start.
    pub fn split_edge(&self, m: usize, at: f64) -> Result<Self> {
        let e = self.edges.get(m).ok_or_else(|| Error::UnknownEdge(m.to_string()))?;
        if !(at > 0.0 && at < e.length) {
            return Err(Error::InvalidArgument(format!("split point {at} not inside edge {}", e.id)));
        }
        let mut raw = self.to_raw();
        let mid = format!("{}#split", e.id);
        raw.vertices.push(mid.clone());
        let start = self.vertices[e.start].clone();
        let end = self.vertices[e.end].clone();
        raw.edges[m] = RawEdge { id: format!("{}a", e.id), ends: [start, mid.clone()], length: at };
        raw.edges.push(RawEdge { id: format!("{}b", e.id), ends: [mid, end], length: e.length - at });
        validate_graph(&raw)
    }
}

/// Ascending-degree real polynomial in `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polynomial(Vec<f64>);

impl Polynomial {
    pub fn new(coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() > MAX_DEGREE + 1 {
            return Err(Error::InvalidPerturbation(format!(
                "polynomial degree {} exceeds {MAX_DEGREE}",
                coefficients.len() - 1
            )));
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidPerturbation("non-finite coefficient".into()));
        }
        Ok(Self(coefficients))
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.0
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * t + c)
    }

    pub fn derivative_at_zero(&self) -> f64 {
        self.0.get(1).copied().unwrap_or(0.0)
    }

    pub fn constant(&self) -> f64 {
        self.0.first().copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PerturbationMode {
    /// `ℓ_m(t) = e^{-a_m(t)} ℓ_m` with polynomial `a_m`, `a_m(0) = 0`.
    #[serde(rename = "a")]
    LogScale,
    /// `ℓ_m(t)` given directly, `ℓ_m(0) = ℓ_m`.
    #[serde(rename = "length")]
    Length,
}

/// Perturbation description as read from JSON.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RawPerturbation {
    pub mode: PerturbationMode,
    #[serde(default)]
    pub entries: BTreeMap<String, Vec<f64>>,
}

impl RawPerturbation {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Per-edge deformation family, aligned with the edge order of the graph it
/// was validated against. Edges without an entry are left unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationFamily {
    mode: PerturbationMode,
    entries: Vec<Option<Polynomial>>,
}

impl PerturbationFamily {
    /// The identity family `a ≡ 0`.
    pub fn identity(g: &MetricGraph) -> Self {
        Self { mode: PerturbationMode::LogScale, entries: vec![None; g.num_edges()] }
    }

    pub fn new(g: &MetricGraph, raw: &RawPerturbation) -> Result<Self> {
        let mut entries = vec![None; g.num_edges()];
        for (id, coefficients) in &raw.entries {
            let m = g
                .edge_index(id)
                .ok_or_else(|| Error::DanglingReference { from: "perturbation".into(), target: id.clone() })?;
            let poly = Polynomial::new(coefficients.clone())?;
            match raw.mode {
                PerturbationMode::LogScale if poly.constant() != 0.0 => {
                    return Err(Error::InvalidPerturbation(format!("a_{id}(0) = {} ≠ 0", poly.constant())));
                }
                PerturbationMode::Length if (poly.constant() - g.edges()[m].length).abs() > 1e-12 * g.edges()[m].length => {
                    return Err(Error::InvalidPerturbation(format!(
                        "ℓ_{id}(0) = {} differs from the graph length {}",
                        poly.constant(),
                        g.edges()[m].length
                    )));
                }
                _ => {}
            }
            entries[m] = Some(poly);
        }
        Ok(Self { mode: raw.mode, entries })
    }

    /// Family from `(edge id, coefficients)` pairs.
    pub fn from_entries(g: &MetricGraph, mode: PerturbationMode, entries: &[(&str, &[f64])]) -> Result<Self> {
        let raw = RawPerturbation {
            mode,
            entries: entries.iter().map(|(id, c)| (id.to_string(), c.to_vec())).collect(),
        };
        Self::new(g, &raw)
    }

    pub fn mode(&self) -> PerturbationMode {
        self.mode
    }

    pub fn entries(&self) -> &[Option<Polynomial>] {
        &self.entries
    }
}

/// Graph with lengths `ℓ_m(t)`.
pub fn lengths_at(p: &PerturbationFamily, g: &MetricGraph, t: f64) -> Result<MetricGraph> {
    if p.entries.len() != g.num_edges() {
        return Err(Error::InvalidPerturbation("family does not match graph".into()));
    }
    let lengths: Vec<f64> = g
        .edges()
        .iter()
        .zip(&p.entries)
        .map(|(e, entry)| match (entry, p.mode) {
            (None, _) => e.length,
            (Some(a), PerturbationMode::LogScale) => (-a.eval(t)).exp() * e.length,
            (Some(l), PerturbationMode::Length) => l.eval(t),
        })
        .collect();
    g.with_lengths(&lengths)
}

/// `ȧ_m = a_m'(0)` per finite edge; for length-mode families
/// `ȧ_m = -ℓ_m'(0)/ℓ_m(0)`.
pub fn adot(p: &PerturbationFamily, g: &MetricGraph) -> Vec<f64> {
    p.entries
        .iter()
        .zip(g.edges())
        .map(|(entry, e)| match (entry, p.mode) {
            (None, _) => 0.0,
            (Some(a), PerturbationMode::LogScale) => a.derivative_at_zero(),
            (Some(l), PerturbationMode::Length) => -l.derivative_at_zero() / e.length,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn raw(vertices: &[&str], edges: &[(&str, &str, &str, f64)], leads: &[(&str, &str)]) -> RawGraph {
        RawGraph {
            vertices: vertices.iter().map(|s| s.to_string()).collect(),
            edges: edges
                .iter()
                .map(|(id, a, b, l)| RawEdge { id: id.to_string(), ends: [a.to_string(), b.to_string()], length: *l })
                .collect(),
            leads: leads.iter().map(|(id, v)| RawLead { id: id.to_string(), vertex: v.to_string() }).collect(),
        }
    }

    #[test]
    fn two_cycle_is_valid() {
        let g = validate_graph(&raw(
            &["v1", "v2"],
            &[("e3", "v1", "v2", 1.0), ("e4", "v1", "v2", 1.0)],
            &[("e1", "v1"), ("e2", "v2")],
        ))
        .unwrap();
        assert_eq!(g.num_edges(), 2);
        assert_eq!(g.num_leads(), 2);
        assert_eq!(g.degree(0), 3);
    }

    #[test]
    fn loop_edge_rejected() {
        let err = validate_graph(&raw(&["v1"], &[("e", "v1", "v1", 1.0)], &[])).unwrap_err();
        assert_eq!(err, Error::LoopEdge("e".into()));
    }

    #[test]
    fn malformed_inputs_give_typed_errors() {
        assert!(matches!(
            validate_graph(&raw(&["a", "b"], &[("e", "a", "b", 0.0)], &[])),
            Err(Error::NonpositiveLength { .. })
        ));
        assert!(matches!(
            validate_graph(&raw(&["a", "b"], &[("e", "a", "b", f64::NAN)], &[])),
            Err(Error::NonpositiveLength { .. })
        ));
        assert!(matches!(
            validate_graph(&raw(&["a", "b"], &[("e", "a", "c", 1.0)], &[])),
            Err(Error::DanglingReference { .. })
        ));
        assert!(matches!(
            validate_graph(&raw(&["a", "b"], &[("e", "a", "b", 1.0)], &[("e", "a")])),
            Err(Error::DuplicateId(_))
        ));
        assert!(matches!(validate_graph(&raw(&["a", "a"], &[], &[])), Err(Error::DuplicateId(_))));
        assert!(matches!(MetricGraph::from_json("{\"vertices\": 3}"), Err(Error::Parse(_))));
    }

    #[test]
    fn example2_counts() {
        let g = fixtures::example2();
        assert_eq!((g.num_edges(), g.num_leads(), g.vertices().len()), (5, 2, 4));
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{ "vertices": ["v1","v2"],
            "edges": [{"id":"e3","ends":["v1","v2"],"length":1.0}],
            "leads": [{"id":"e1","vertex":"v1"}] }"#;
        let g = MetricGraph::from_json(text).unwrap();
        assert_eq!(validate_graph(&g.to_raw()).unwrap(), g);
    }

    #[test]
    fn identity_perturbation_keeps_lengths() {
        let g = fixtures::example2();
        let p = PerturbationFamily::identity(&g);
        for t in [-0.3, 0.0, 0.7] {
            assert_eq!(lengths_at(&p, &g, t).unwrap().lengths(), g.lengths());
        }
    }

    #[test]
    fn log_scale_evaluation() {
        let g = fixtures::fig2();
        let p = PerturbationFamily::from_entries(&g, PerturbationMode::LogScale, &[("e3", &[0.0, 1.0])]).unwrap();
        let l = lengths_at(&p, &g, 0.1).unwrap().lengths();
        assert_eq!(l[0], (-0.1f64).exp());
        assert_eq!(l[1], 1.0);
    }

    #[test]
    fn adot_examples() {
        let g = fixtures::fig2();
        let b = fixtures::fig2_family(&g, 'b');
        assert_eq!(adot(&b, &g), vec![1.0, 0.0]);
        let d = fixtures::fig2_family(&g, 'd');
        assert_eq!(adot(&d, &g)[1], -2.0);
        let all = PerturbationFamily::from_entries(
            &g,
            PerturbationMode::LogScale,
            &[("e3", &[0.0, 1.0]), ("e4", &[0.0, 1.0])],
        )
        .unwrap();
        assert_eq!(adot(&all, &g), vec![1.0, 1.0]);
        let quad = PerturbationFamily::from_entries(&g, PerturbationMode::LogScale, &[("e3", &[0.0, 0.0, 3.0])]).unwrap();
        assert_eq!(adot(&quad, &g), vec![0.0, 0.0]);
    }

    #[test]
    fn mode_equivalence_for_exponential_lengths() {
        // ℓ(t) = e^{-t} in length mode via its degree-8 Chebyshev interpolant on [-0.2, 0.2] vs a(t) = t.
        let g = fixtures::fig2();
        let n = MAX_DEGREE + 1;
        let nodes: Vec<f64> = (0..n).map(|j| ((2 * j + 1) as f64 * std::f64::consts::PI / (2 * n) as f64).cos()).collect();
        let vander = nalgebra::DMatrix::from_fn(n, n, |i, j| nodes[i].powi(j as i32));
        let rhs = nalgebra::DVector::from_fn(n, |i, _| (-0.2 * nodes[i]).exp());
        let scaled = vander.lu().solve(&rhs).unwrap();
        let taylor: Vec<f64> = (0..n).map(|j| scaled[j] / 0.2f64.powi(j as i32)).collect();
        let direct = PerturbationFamily::from_entries(&g, PerturbationMode::Length, &[("e3", &taylor)]).unwrap();
        let log = PerturbationFamily::from_entries(&g, PerturbationMode::LogScale, &[("e3", &[0.0, 1.0])]).unwrap();
        assert!((adot(&direct, &g)[0] - adot(&log, &g)[0]).abs() < 1e-12);
        for i in -20..=20 {
            let t = i as f64 * 0.01;
            let a = lengths_at(&direct, &g, t).unwrap().lengths();
            let b = lengths_at(&log, &g, t).unwrap().lengths();
            assert!((a[0] - b[0]).abs() < 1e-12, "t = {t}: {} vs {}", a[0], b[0]);
        }
    }

    #[test]
    fn perturbation_validation() {
        let g = fixtures::fig2();
        assert!(PerturbationFamily::from_entries(&g, PerturbationMode::LogScale, &[("e3", &[0.1, 1.0])]).is_err());
        assert!(PerturbationFamily::from_entries(&g, PerturbationMode::Length, &[("e3", &[2.0, 1.0])]).is_err());
        assert!(PerturbationFamily::from_entries(&g, PerturbationMode::Length, &[("zz", &[1.0])]).is_err());
        assert!(PerturbationFamily::from_entries(&g, PerturbationMode::LogScale, &[("e3", &[0.0; 10])]).is_err());
        let shrink = PerturbationFamily::from_entries(&g, PerturbationMode::Length, &[("e3", &[1.0, -1.0])]).unwrap();
        assert!(matches!(lengths_at(&shrink, &g, 1.5), Err(Error::NonpositiveLength { .. })));
        let raw = RawPerturbation::from_json(r#"{"mode":"length","entries":{"e3":[1.0,-1.0]}}"#).unwrap();
        assert_eq!(PerturbationFamily::new(&g, &raw).unwrap(), shrink);
    }

    #[test]
    fn split_and_cap() {
        let g = fixtures::fig2();
        let s = g.split_edge(0, 0.3).unwrap();
        assert_eq!(s.num_edges(), 3);
        assert!((s.lengths().iter().sum::<f64>() - 2.0).abs() < 1e-15);
        let c = g.capped(1.0).unwrap();
        assert_eq!((c.num_edges(), c.num_leads()), (4, 0));
    }
}
