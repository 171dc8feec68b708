//! Metric graphs with unit-parametrized edges, per-edge function
//! representations and the quadratures shared by everything else.

use std::collections::{BTreeMap, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{KirchhoffError, Result};
use crate::hodge::VelocityField;

/// Highest polynomial degree accepted by [`EdgeFunction::poly`].
pub const MAX_POLY_DEGREE: usize = 8;
/// Default number of subintervals for sampled functions.
pub const DEFAULT_SAMPLES: usize = 256;

const CONT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeDoc {
    pub id: String,
    pub tail: String,
    pub head: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conductance: Option<f64>,
}

/// On-disk graph description (JSON).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GraphDocument {
    pub vertices: Vec<String>,
    pub edges: Vec<EdgeDoc>,
    #[serde(default)]
    pub boundary: Vec<String>,
    #[serde(default)]
    pub fields: BTreeMap<String, BTreeMap<String, f64>>,
}

impl GraphDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| KirchhoffError::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph documents always serialize")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub id: String,
    pub tail: usize,
    pub head: usize,
    pub conductance: f64,
}

impl Edge {
    pub fn is_loop(&self) -> bool {
        self.tail == self.head
    }
}

/// Which end of an edge: parameter 0 (tail) or 1 (head).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum End {
    Tail,
    Head,
}

impl End {
    pub fn param(self) -> f64 {
        match self {
            End::Tail => 0.0,
            End::Head => 1.0,
        }
    }

    /// Index of this end inside the `2|E|` trace vector.
    pub fn trace_index(self, edge: usize) -> usize {
        match self {
            End::Tail => 2 * edge,
            End::Head => 2 * edge + 1,
        }
    }
}

/// Conductance-weighted directed multigraph; every edge is a copy of [0,1].
#[derive(Debug, Clone, PartialEq)]
pub struct MetricGraph {
    vertices: Vec<String>,
    edges: Vec<Edge>,
    boundary: Vec<usize>,
    in_boundary: Vec<bool>,
    vertex_lookup: HashMap<String, usize>,
    edge_lookup: HashMap<String, usize>,
    fields: BTreeMap<String, Vec<f64>>,
    incidence: Vec<Vec<(usize, End)>>,
}

/// Validates a graph document.
pub fn build_graph(doc: &GraphDocument) -> Result<MetricGraph> {
    MetricGraph::from_document(doc)
}

impl MetricGraph {
    pub fn from_document(doc: &GraphDocument) -> Result<Self> {
        if doc.vertices.is_empty() {
            return Err(KirchhoffError::Disconnected { components: 0 });
        }
        let mut vertex_lookup = HashMap::new();
        for (i, v) in doc.vertices.iter().enumerate() {
            if vertex_lookup.insert(v.clone(), i).is_some() {
                return Err(KirchhoffError::DuplicateId(v.clone()));
            }
        }
        let lookup = |id: &str| {
            vertex_lookup
                .get(id)
                .copied()
                .ok_or_else(|| KirchhoffError::UnknownVertex(id.to_string()))
        };
        let mut edges = Vec::with_capacity(doc.edges.len());
        let mut edge_lookup = HashMap::new();
        for e in &doc.edges {
            if vertex_lookup.contains_key(&e.id) || edge_lookup.insert(e.id.clone(), edges.len()).is_some() {
                return Err(KirchhoffError::DuplicateId(e.id.clone()));
            }
            let c = e.conductance.unwrap_or(1.0);
            if !(c > 0.0) || !c.is_finite() {
                return Err(KirchhoffError::NonpositiveConductance { edge: e.id.clone(), value: c });
            }
            edges.push(Edge { id: e.id.clone(), tail: lookup(&e.tail)?, head: lookup(&e.head)?, conductance: c });
        }
        let mut boundary = Vec::with_capacity(doc.boundary.len());
        for q in &doc.boundary {
            let i = lookup(q)?;
            if boundary.contains(&i) {
                return Err(KirchhoffError::DuplicateId(q.clone()));
            }
            boundary.push(i);
        }
        boundary.sort_unstable();
        let mut in_boundary = vec![false; doc.vertices.len()];
        for &q in &boundary {
            in_boundary[q] = true;
        }
        let mut incidence = vec![Vec::new(); doc.vertices.len()];
        for (k, e) in edges.iter().enumerate() {
            incidence[e.tail].push((k, End::Tail));
            incidence[e.head].push((k, End::Head));
        }
        let mut fields = BTreeMap::new();
        for (name, map) in &doc.fields {
            let mut coeffs = vec![f64::NAN; edges.len()];
            for (eid, &val) in map {
                let k = *edge_lookup
                    .get(eid)
                    .ok_or_else(|| KirchhoffError::FieldInvalid(format!("field {name}: unknown edge {eid}")))?;
                if !val.is_finite() {
                    return Err(KirchhoffError::FieldInvalid(format!("field {name}: non-finite value on {eid}")));
                }
                coeffs[k] = val;
            }
            if let Some(k) = coeffs.iter().position(|c| c.is_nan()) {
                return Err(KirchhoffError::FieldInvalid(format!("field {name}: no value for edge {}", edges[k].id)));
            }
            fields.insert(name.clone(), coeffs);
        }
        let g = MetricGraph {
            vertices: doc.vertices.clone(),
            edges,
            boundary,
            in_boundary,
            vertex_lookup,
            edge_lookup,
            fields,
            incidence,
        };
        let components = g.component_count();
        if components != 1 {
            return Err(KirchhoffError::Disconnected { components });
        }
        Ok(g)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_document(&GraphDocument::from_json(text)?)
    }

    pub fn to_document(&self) -> GraphDocument {
        GraphDocument {
            vertices: self.vertices.clone(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeDoc {
                    id: e.id.clone(),
                    tail: self.vertices[e.tail].clone(),
                    head: self.vertices[e.head].clone(),
                    conductance: Some(e.conductance),
                })
                .collect(),
            boundary: self.boundary.iter().map(|&q| self.vertices[q].clone()).collect(),
            fields: self
                .fields
                .iter()
                .map(|(name, c)| {
                    (name.clone(), self.edges.iter().zip(c).map(|(e, &v)| (e.id.clone(), v)).collect())
                })
                .collect(),
        }
    }

    fn component_count(&self) -> usize {
        let n = self.vertices.len();
        let mut seen = vec![false; n];
        let mut count = 0;
        for s in 0..n {
            if seen[s] {
                continue;
            }
            count += 1;
            seen[s] = true;
            let mut queue = VecDeque::from([s]);
            while let Some(p) = queue.pop_front() {
                for &(k, end) in &self.incidence[p] {
                    let q = match end {
                        End::Tail => self.edges[k].head,
                        End::Head => self.edges[k].tail,
                    };
                    if !seen[q] {
                        seen[q] = true;
                        queue.push_back(q);
                    }
                }
            }
        }
        count
    }

    /// Same graph with a different boundary set.
    pub fn with_boundary(&self, ids: &[&str]) -> Result<Self> {
        let mut doc = self.to_document();
        doc.boundary = ids.iter().map(|s| s.to_string()).collect();
        Self::from_document(&doc)
    }

    /// Same graph with an added (or replaced) named edge-constant field.
    pub fn with_field(&self, name: &str, coeffs: &[f64]) -> Result<Self> {
        if coeffs.len() != self.edge_count() {
            return Err(KirchhoffError::DimensionMismatch { expected: self.edge_count(), got: coeffs.len() });
        }
        let mut g = self.clone();
        g.fields.insert(name.to_string(), coeffs.to_vec());
        Ok(g)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn vertex_id(&self, v: usize) -> &str {
        &self.vertices[v]
    }

    pub fn vertex_index(&self, id: &str) -> Result<usize> {
        self.vertex_lookup.get(id).copied().ok_or_else(|| KirchhoffError::UnknownVertex(id.to_string()))
    }

    pub fn edge_index(&self, id: &str) -> Option<usize> {
        self.edge_lookup.get(id).copied()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, k: usize) -> &Edge {
        &self.edges[k]
    }

    /// Boundary vertex indices, sorted.
    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.in_boundary[v]
    }

    pub fn interior_vertices(&self) -> Vec<usize> {
        (0..self.vertices.len()).filter(|&v| !self.in_boundary[v]).collect()
    }

    /// Edge ends meeting at vertex `v`; a loop appears twice.
    pub fn incident(&self, v: usize) -> &[(usize, End)] {
        &self.incidence[v]
    }

    /// `|E| − |V| + 1`.
    pub fn cycle_rank(&self) -> usize {
        self.edges.len() + 1 - self.vertices.len()
    }

    /// Vertex with the lexicographically smallest id.
    pub fn root(&self) -> usize {
        (0..self.vertices.len()).min_by(|&a, &b| self.vertices[a].cmp(&self.vertices[b])).unwrap()
    }

    pub fn field(&self, name: &str) -> Result<Vec<f64>> {
        self.fields.get(name).cloned().ok_or_else(|| KirchhoffError::FieldInvalid(format!("no field named {name}")))
    }

    pub fn field_names(&self) -> Vec<String> {
        self.fields.keys().cloned().collect()
    }

    pub fn check_len(&self, f: &EdgeFunction) -> Result<()> {
        if f.edge_count() != self.edge_count() {
            return Err(KirchhoffError::GraphMismatch(format!(
                "function has {} components, graph has {} edges",
                f.edge_count(),
                self.edge_count()
            )));
        }
        Ok(())
    }
}

/// Per-edge scalar function, either polynomial (ascending coefficients)
/// or uniformly sampled with piecewise-linear interpolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "representation", content = "edges", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EdgeFunction {
    Poly(Vec<Vec<f64>>),
    Sampled(Vec<Vec<f64>>),
}

pub(crate) fn poly_eval(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

pub(crate) fn poly_deriv(c: &[f64]) -> Vec<f64> {
    if c.len() <= 1 {
        return vec![0.0];
    }
    c.iter().enumerate().skip(1).map(|(i, &a)| i as f64 * a).collect()
}

fn poly_product_integral(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            s += x * y / (i + j + 1) as f64;
        }
    }
    s
}

fn trapezoid_product(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() - 1;
    let mut s = 0.5 * (a[0] * b[0] + a[n] * b[n]);
    for j in 1..n {
        s += a[j] * b[j];
    }
    s / n as f64
}

fn sampled_eval(s: &[f64], x: f64) -> f64 {
    let n = s.len() - 1;
    let t = (x.clamp(0.0, 1.0)) * n as f64;
    let j = (t.floor() as usize).min(n - 1);
    let r = t - j as f64;
    s[j] * (1.0 - r) + s[j + 1] * r
}

impl EdgeFunction {
    /// Polynomial representation; degree at most [`MAX_POLY_DEGREE`].
    pub fn poly(coeffs: Vec<Vec<f64>>) -> Result<Self> {
        for c in &coeffs {
            if c.is_empty() || c.len() > MAX_POLY_DEGREE + 1 {
                return Err(KirchhoffError::RepresentationMismatch(format!(
                    "polynomial with {} coefficients (allowed 1..={})",
                    c.len(),
                    MAX_POLY_DEGREE + 1
                )));
            }
        }
        Ok(EdgeFunction::Poly(coeffs))
    }

    /// Sampled representation with `n + 1 ≥ 2` uniform samples per edge.
    pub fn sampled(samples: Vec<Vec<f64>>) -> Result<Self> {
        let n = samples.first().map(|s| s.len()).unwrap_or(2);
        for s in &samples {
            if s.len() < 2 || s.len() != n {
                return Err(KirchhoffError::RepresentationMismatch(
                    "sampled functions need a common sample count ≥ 2".into(),
                ));
            }
        }
        Ok(EdgeFunction::Sampled(samples))
    }

    pub fn constants(values: &[f64]) -> Self {
        EdgeFunction::Poly(values.iter().map(|&v| vec![v]).collect())
    }

    pub fn zero(edges: usize) -> Self {
        Self::constants(&vec![0.0; edges])
    }

    /// Samples `f(edge, x)` at `n + 1` uniform points per edge.
    pub fn from_fn(edges: usize, n: usize, f: impl Fn(usize, f64) -> f64) -> Self {
        EdgeFunction::Sampled(
            (0..edges).map(|e| (0..=n).map(|j| f(e, j as f64 / n as f64)).collect()).collect(),
        )
    }

    pub fn edge_count(&self) -> usize {
        match self {
            EdgeFunction::Poly(c) | EdgeFunction::Sampled(c) => c.len(),
        }
    }

    pub fn is_poly(&self) -> bool {
        matches!(self, EdgeFunction::Poly(_))
    }

    /// Per-edge data (coefficients or samples).
    pub fn components(&self) -> &[Vec<f64>] {
        match self {
            EdgeFunction::Poly(c) | EdgeFunction::Sampled(c) => c,
        }
    }

    /// Sample count minus one for sampled functions.
    pub fn subintervals(&self) -> Option<usize> {
        match self {
            EdgeFunction::Sampled(s) => s.first().map(|v| v.len() - 1),
            EdgeFunction::Poly(_) => None,
        }
    }

    pub fn eval(&self, e: usize, x: f64) -> f64 {
        match self {
            EdgeFunction::Poly(c) => poly_eval(&c[e], x),
            EdgeFunction::Sampled(s) => sampled_eval(&s[e], x),
        }
    }

    pub fn trace(&self, e: usize, end: End) -> f64 {
        match (self, end) {
            (EdgeFunction::Poly(c), End::Tail) => c[e][0],
            (EdgeFunction::Poly(c), End::Head) => c[e].iter().sum(),
            (EdgeFunction::Sampled(s), End::Tail) => s[e][0],
            (EdgeFunction::Sampled(s), End::Head) => *s[e].last().unwrap(),
        }
    }

    /// `(f_e(0), f_e(1))` for all edges, flattened to length `2|E|`.
    pub fn traces(&self) -> Vec<f64> {
        (0..self.edge_count()).flat_map(|e| [self.trace(e, End::Tail), self.trace(e, End::Head)]).collect()
    }

    pub fn mean(&self, e: usize) -> f64 {
        match self {
            EdgeFunction::Poly(c) => c[e].iter().enumerate().map(|(i, &a)| a / (i + 1) as f64).sum(),
            EdgeFunction::Sampled(s) => {
                let ones = vec![1.0; s[e].len()];
                trapezoid_product(&s[e], &ones)
            }
        }
    }

    fn same_repr(&self, other: &Self) -> Result<()> {
        if self.edge_count() != other.edge_count() {
            return Err(KirchhoffError::GraphMismatch(format!(
                "{} vs {} edge components",
                self.edge_count(),
                other.edge_count()
            )));
        }
        match (self, other) {
            (EdgeFunction::Poly(_), EdgeFunction::Poly(_)) => Ok(()),
            (EdgeFunction::Sampled(a), EdgeFunction::Sampled(b)) if a[0].len() == b[0].len() => Ok(()),
            _ => Err(KirchhoffError::RepresentationMismatch("operands use different representations".into())),
        }
    }

    /// `∫₀¹ f_e g_e dx`: exact for polynomials, trapezoid for samples.
    pub fn integrate_product(&self, other: &Self, e: usize) -> Result<f64> {
        self.same_repr(other)?;
        Ok(match (self, other) {
            (EdgeFunction::Poly(a), EdgeFunction::Poly(b)) => poly_product_integral(&a[e], &b[e]),
            (EdgeFunction::Sampled(a), EdgeFunction::Sampled(b)) => trapezoid_product(&a[e], &b[e]),
            _ => unreachable!(),
        })
    }

    /// Edge-wise derivative in the edge parameter. Exact for polynomials,
    /// second-order differences for samples.
    pub fn derivative(&self) -> Self {
        match self {
            EdgeFunction::Poly(c) => EdgeFunction::Poly(c.iter().map(|p| poly_deriv(p)).collect()),
            EdgeFunction::Sampled(s) => EdgeFunction::Sampled(
                s.iter()
                    .map(|v| {
                        let n = v.len() - 1;
                        let h = 1.0 / n as f64;
                        (0..=n)
                            .map(|j| {
                                if n == 1 {
                                    v[1] - v[0]
                                } else if j == 0 {
                                    (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h)
                                } else if j == n {
                                    (3.0 * v[n] - 4.0 * v[n - 1] + v[n - 2]) / (2.0 * h)
                                } else {
                                    (v[j + 1] - v[j - 1]) / (2.0 * h)
                                }
                            })
                            .collect()
                    })
                    .collect(),
            ),
        }
    }

    fn zip_with(&self, other: &Self, op: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.same_repr(other)?;
        let combine = |a: &[f64], b: &[f64]| {
            let n = a.len().max(b.len());
            (0..n)
                .map(|i| op(a.get(i).copied().unwrap_or(0.0), b.get(i).copied().unwrap_or(0.0)))
                .collect::<Vec<_>>()
        };
        Ok(match (self, other) {
            (EdgeFunction::Poly(a), EdgeFunction::Poly(b)) => {
                EdgeFunction::Poly(a.iter().zip(b).map(|(x, y)| combine(x, y)).collect())
            }
            (EdgeFunction::Sampled(a), EdgeFunction::Sampled(b)) => {
                EdgeFunction::Sampled(a.iter().zip(b).map(|(x, y)| combine(x, y)).collect())
            }
            _ => unreachable!(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map_components(|_, c| c.iter().map(|&a| a * s).collect())
    }

    /// Multiplies edge `e` by `factors[e]`.
    pub fn scale_edges(&self, factors: &[f64]) -> Self {
        self.map_components(|e, c| c.iter().map(|&a| a * factors[e]).collect())
    }

    /// Adds the affine function `a_e + b_e x` on every edge.
    pub fn add_affine(&self, a: &[f64], b: &[f64]) -> Self {
        match self {
            EdgeFunction::Poly(_) => self.map_components(|e, c| {
                let mut c = c.to_vec();
                if c.len() < 2 {
                    c.resize(2, 0.0);
                }
                c[0] += a[e];
                c[1] += b[e];
                c
            }),
            EdgeFunction::Sampled(_) => self.map_components(|e, s| {
                let n = (s.len() - 1) as f64;
                s.iter().enumerate().map(|(j, &v)| v + a[e] + b[e] * j as f64 / n).collect()
            }),
        }
    }

    fn map_components(&self, f: impl Fn(usize, &[f64]) -> Vec<f64>) -> Self {
        match self {
            EdgeFunction::Poly(c) => EdgeFunction::Poly(c.iter().enumerate().map(|(e, v)| f(e, v)).collect()),
            EdgeFunction::Sampled(c) => {
                EdgeFunction::Sampled(c.iter().enumerate().map(|(e, v)| f(e, v)).collect())
            }
        }
    }

    /// Conversion to samples (polynomials are evaluated exactly at the nodes).
    pub fn to_sampled(&self, n: usize) -> Self {
        let n = n.max(1);
        match self {
            EdgeFunction::Poly(_) => Self::from_fn(self.edge_count(), n, |e, x| self.eval(e, x)),
            EdgeFunction::Sampled(s) if s[0].len() == n + 1 => self.clone(),
            EdgeFunction::Sampled(_) => Self::from_fn(self.edge_count(), n, |e, x| self.eval(e, x)),
        }
    }

    /// Per-edge constants if the function is edge-wise constant within `tol`.
    pub fn edge_constants(&self, tol: f64) -> Option<Vec<f64>> {
        self.components()
            .iter()
            .map(|c| match self {
                EdgeFunction::Poly(_) => {
                    if c.iter().skip(1).all(|a| a.abs() <= tol) {
                        Some(c[0])
                    } else {
                        None
                    }
                }
                EdgeFunction::Sampled(_) => {
                    if c.iter().all(|a| (a - c[0]).abs() <= tol) {
                        Some(c[0])
                    } else {
                        None
                    }
                }
            })
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        match self {
            EdgeFunction::Sampled(s) => s.iter().flatten().fold(0.0, |m, v| m.max(v.abs())),
            EdgeFunction::Poly(_) => {
                let s = self.to_sampled(512);
                s.max_abs()
            }
        }
    }
}

/// Element of H¹(X): edge-wise function with matching vertex values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuousFunction {
    values: EdgeFunction,
    vertex_values: Vec<f64>,
}

impl ContinuousFunction {
    /// Validates continuity at every edge end.
    pub fn new(graph: &MetricGraph, values: EdgeFunction, vertex_values: Vec<f64>) -> Result<Self> {
        graph.check_len(&values)?;
        if vertex_values.len() != graph.vertex_count() {
            return Err(KirchhoffError::DimensionMismatch { expected: graph.vertex_count(), got: vertex_values.len() });
        }
        let scale = 1.0 + vertex_values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (k, e) in graph.edges().iter().enumerate() {
            let d0 = (values.trace(k, End::Tail) - vertex_values[e.tail]).abs();
            let d1 = (values.trace(k, End::Head) - vertex_values[e.head]).abs();
            if d0.max(d1) > CONT_TOL * scale {
                return Err(KirchhoffError::NotInDomain { residual: d0.max(d1) });
            }
        }
        Ok(ContinuousFunction { values, vertex_values })
    }

    /// Edge-wise linear interpolation of vertex values (polynomial form).
    pub fn edge_linear(graph: &MetricGraph, vertex_values: &[f64]) -> Result<Self> {
        if vertex_values.len() != graph.vertex_count() {
            return Err(KirchhoffError::DimensionMismatch { expected: graph.vertex_count(), got: vertex_values.len() });
        }
        let coeffs = graph
            .edges()
            .iter()
            .map(|e| vec![vertex_values[e.tail], vertex_values[e.head] - vertex_values[e.tail]])
            .collect();
        Ok(ContinuousFunction { values: EdgeFunction::Poly(coeffs), vertex_values: vertex_values.to_vec() })
    }

    pub fn constant(graph: &MetricGraph, c: f64) -> Self {
        ContinuousFunction {
            values: EdgeFunction::constants(&vec![c; graph.edge_count()]),
            vertex_values: vec![c; graph.vertex_count()],
        }
    }

    pub(crate) fn from_parts_unchecked(values: EdgeFunction, vertex_values: Vec<f64>) -> Self {
        ContinuousFunction { values, vertex_values }
    }

    pub fn values(&self) -> &EdgeFunction {
        &self.values
    }

    pub fn vertex_values(&self) -> &[f64] {
        &self.vertex_values
    }

    pub fn at_vertex(&self, v: usize) -> f64 {
        self.vertex_values[v]
    }

    pub fn into_values(self) -> EdgeFunction {
        self.values
    }

    pub fn shifted(&self, s: f64) -> Self {
        let n = self.values.edge_count();
        ContinuousFunction {
            values: self.values.add_affine(&vec![s; n], &vec![0.0; n]),
            vertex_values: self.vertex_values.iter().map(|v| v + s).collect(),
        }
    }
}

/// Endpoint traces and mean of every edge component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMeanVector(pub Vec<[f64; 3]>);

pub fn trace_mean(f: &EdgeFunction) -> TraceMeanVector {
    TraceMeanVector((0..f.edge_count()).map(|e| [f.trace(e, End::Tail), f.trace(e, End::Head), f.mean(e)]).collect())
}

/// `Σ_e c_e b_e² ∫ f1 f2` — the pairing of L²(X, ν_b).
pub fn l2nu_inner(graph: &MetricGraph, b: &VelocityField, f1: &EdgeFunction, f2: &EdgeFunction) -> Result<f64> {
    graph.check_len(f1)?;
    graph.check_len(f2)?;
    b.check_graph(graph)?;
    let w = b.measure_weights();
    let mut s = 0.0;
    for e in 0..graph.edge_count() {
        s += w[e] * f1.integrate_product(f2, e)?;
    }
    Ok(s)
}

pub fn l2nu_norm(graph: &MetricGraph, b: &VelocityField, f: &EdgeFunction) -> Result<f64> {
    Ok(l2nu_inner(graph, b, f, f)?.max(0.0).sqrt())
}

/// `Σ_e c_e ∫ v1 v2` — the pairing of 1-forms.
pub fn h_inner(graph: &MetricGraph, v1: &EdgeFunction, v2: &EdgeFunction) -> Result<f64> {
    graph.check_len(v1)?;
    graph.check_len(v2)?;
    let mut s = 0.0;
    for (e, edge) in graph.edges().iter().enumerate() {
        s += edge.conductance * v1.integrate_product(v2, e)?;
    }
    Ok(s)
}

/// Dirichlet energy `Σ_e c_e ∫ (f_e′)²`.
pub fn dirichlet_energy(graph: &MetricGraph, f: &EdgeFunction) -> Result<f64> {
    let d = f.derivative();
    h_inner(graph, &d, &d)
}
