//! Cycle space, velocity fields, the Hodge star and normal parts.
//!
//! 1-forms are stored as edge functions `v_e(x)`; the pairing is
//! `⟨v, w⟩_H = Σ c_e ∫ v_e w_e`. A form is in `ker ∂*` iff it is edge-wise
//! constant and `Σ_head c v − Σ_tail c v = 0` at every vertex.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use crate::error::{KirchhoffError, Result};
use crate::graph::{ContinuousFunction, EdgeFunction, End, MetricGraph};

/// Edge-wise constant 1-form, one coefficient per edge.
pub type ConstantForm = Vec<f64>;

pub const TAU_MED: f64 = 1e-12;
pub const KIRCHHOFF_TOL: f64 = 1e-12;

/// An edge-constant field `b` with its flags and the measure weights `c_e b_e²`.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityField {
    coeffs: ConstantForm,
    weights: Vec<f64>,
    balance: Vec<f64>,
    divergence_free: bool,
    solenoidal: bool,
    minimal_energy_dominant: bool,
}

/// Signed flux `Σ_head c v − Σ_tail c v` of an edge-constant form at `p`.
pub fn vertex_balance(graph: &MetricGraph, v: &[f64], p: usize) -> f64 {
    graph
        .incident(p)
        .iter()
        .map(|&(k, end)| {
            let c = graph.edge(k).conductance * v[k];
            match end {
                End::Head => c,
                End::Tail => -c,
            }
        })
        .sum()
}

/// Annotates `b` with divergence-freeness (w.r.t. the graph boundary) and
/// minimal energy-dominance.
pub fn check_field(graph: &MetricGraph, b: &[f64]) -> Result<VelocityField> {
    if b.len() != graph.edge_count() {
        return Err(KirchhoffError::DimensionMismatch { expected: graph.edge_count(), got: b.len() });
    }
    if b.iter().any(|x| !x.is_finite()) {
        return Err(KirchhoffError::FieldInvalid("non-finite coefficient".into()));
    }
    let balance: Vec<f64> = (0..graph.vertex_count()).map(|p| vertex_balance(graph, b, p)).collect();
    let scale = 1.0 + graph.edges().iter().zip(b).fold(0.0f64, |m, (e, x)| m.max((e.conductance * x).abs()));
    let tol = KIRCHHOFF_TOL * scale;
    let divergence_free = (0..graph.vertex_count()).all(|p| graph.is_boundary(p) || balance[p].abs() <= tol);
    let solenoidal = balance.iter().all(|r| r.abs() <= tol);
    let minimal_energy_dominant = b.iter().all(|x| x.abs() > TAU_MED);
    Ok(VelocityField {
        coeffs: b.to_vec(),
        weights: graph.edges().iter().zip(b).map(|(e, x)| e.conductance * x * x).collect(),
        balance,
        divergence_free,
        solenoidal,
        minimal_energy_dominant,
    })
}

impl VelocityField {
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn b(&self, e: usize) -> f64 {
        self.coeffs[e]
    }

    /// `c_e b_e²`, the density of ν_b on edge `e`.
    pub fn measure_weights(&self) -> &[f64] {
        &self.weights
    }

    /// Divergence-free with respect to the graph's boundary set.
    pub fn divergence_free(&self) -> bool {
        self.divergence_free
    }

    /// Divergence-free at every vertex, i.e. `b ∈ ker ∂*`.
    pub fn solenoidal(&self) -> bool {
        self.solenoidal
    }

    pub fn minimal_energy_dominant(&self) -> bool {
        self.minimal_energy_dominant
    }

    /// Per-vertex signed flux of `b`.
    pub fn vertex_balance(&self) -> &[f64] {
        &self.balance
    }

    pub fn min_abs(&self) -> f64 {
        self.coeffs.iter().fold(f64::INFINITY, |m, x| m.min(x.abs()))
    }

    pub(crate) fn check_graph(&self, graph: &MetricGraph) -> Result<()> {
        if self.coeffs.len() != graph.edge_count() {
            return Err(KirchhoffError::GraphMismatch(format!(
                "field has {} coefficients, graph has {} edges",
                self.coeffs.len(),
                graph.edge_count()
            )));
        }
        Ok(())
    }

    pub(crate) fn require_dominant(&self) -> Result<()> {
        if !self.minimal_energy_dominant {
            return Err(KirchhoffError::NotEnergyDominant { min_abs: self.min_abs() });
        }
        Ok(())
    }

    /// Errors unless `b` is minimal energy-dominant and divergence-free w.r.t. B.
    pub fn require_valid(&self, graph: &MetricGraph) -> Result<()> {
        self.check_graph(graph)?;
        if !self.minimal_energy_dominant {
            return Err(KirchhoffError::FieldInvalid(format!("min |b_e| = {:e}", self.min_abs())));
        }
        if !self.divergence_free {
            return Err(KirchhoffError::FieldInvalid("not divergence-free at an interior vertex".into()));
        }
        Ok(())
    }

    pub fn as_form(&self) -> EdgeFunction {
        EdgeFunction::constants(&self.coeffs)
    }
}

/// Fundamental cycles of a BFS spanning tree, scaled to lie in `ker ∂*`.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleBasis {
    /// Signed incidence `χ ∈ {−1, 0, 1}^E` of each fundamental cycle.
    pub cycles: Vec<Vec<f64>>,
    /// The basis forms `χ_e / c_e`.
    pub forms: Vec<ConstantForm>,
    /// `⟨form_γ, form_δ⟩_H = Σ_e χ^γ_e χ^δ_e / c_e`.
    pub gram: DMatrix<f64>,
    tree: SpanningTree,
}

#[derive(Debug, Clone, PartialEq)]
struct SpanningTree {
    root: usize,
    order: Vec<usize>,
    parent_edge: Vec<Option<usize>>,
    parent: Vec<usize>,
    depth: Vec<usize>,
    in_tree: Vec<bool>,
}

fn spanning_tree(graph: &MetricGraph) -> SpanningTree {
    let n = graph.vertex_count();
    let root = graph.root();
    let mut parent_edge = vec![None; n];
    let mut parent = vec![usize::MAX; n];
    let mut depth = vec![0; n];
    let mut in_tree = vec![false; graph.edge_count()];
    let mut seen = vec![false; n];
    let mut order = vec![root];
    seen[root] = true;
    parent[root] = root;
    let mut queue = VecDeque::from([root]);
    while let Some(p) = queue.pop_front() {
        for &(k, end) in graph.incident(p) {
            let e = graph.edge(k);
            let q = if end == End::Tail { e.head } else { e.tail };
            if !seen[q] {
                seen[q] = true;
                parent[q] = p;
                parent_edge[q] = Some(k);
                depth[q] = depth[p] + 1;
                in_tree[k] = true;
                order.push(q);
                queue.push_back(q);
            }
        }
    }
    SpanningTree { root, order, parent_edge, parent, depth, in_tree }
}

pub fn cycle_basis(graph: &MetricGraph) -> CycleBasis {
    let tree = spanning_tree(graph);
    let m = graph.edge_count();
    let mut cycles = Vec::new();
    for k in 0..m {
        if tree.in_tree[k] {
            continue;
        }
        let e = graph.edge(k);
        let mut chi = vec![0.0; m];
        chi[k] += 1.0;
        // walk head → tail through the tree
        let (mut a, mut b) = (e.head, e.tail);
        let mut down = Vec::new();
        while a != b {
            if tree.depth[a] >= tree.depth[b] {
                let pe = tree.parent_edge[a].unwrap();
                chi[pe] += if graph.edge(pe).tail == a { 1.0 } else { -1.0 };
                a = tree.parent[a];
            } else {
                let pe = tree.parent_edge[b].unwrap();
                down.push((pe, b));
                b = tree.parent[b];
            }
        }
        for (pe, child) in down.into_iter().rev() {
            chi[pe] += if graph.edge(pe).head == child { 1.0 } else { -1.0 };
        }
        cycles.push(chi);
    }
    let forms: Vec<ConstantForm> =
        cycles.iter().map(|chi| chi.iter().zip(graph.edges()).map(|(x, e)| x / e.conductance).collect()).collect();
    let r = cycles.len();
    let gram = DMatrix::from_fn(r, r, |i, j| {
        (0..m).map(|k| cycles[i][k] * cycles[j][k] / graph.edge(k).conductance).sum()
    });
    CycleBasis { cycles, forms, gram, tree }
}

impl CycleBasis {
    pub fn len(&self) -> usize {
        self.forms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forms.is_empty()
    }

    /// Rows `edge id, coefficient per cycle`.
    pub fn to_csv(&self, graph: &MetricGraph) -> String {
        let mut out = String::from("edge");
        for i in 0..self.len() {
            out.push_str(&format!(",cycle{i}"));
        }
        out.push('\n');
        for (k, e) in graph.edges().iter().enumerate() {
            out.push_str(&e.id);
            for f in &self.forms {
                out.push_str(&format!(",{:.17e}", f[k]));
            }
            out.push('\n');
        }
        out
    }

    /// Solves for the cycle part given per-edge integrals `∫ F_e`.
    fn project(&self, graph: &MetricGraph, integrals: &[f64]) -> Result<ConstantForm> {
        let m = graph.edge_count();
        if self.is_empty() {
            return Ok(vec![0.0; m]);
        }
        let r = DVector::from_iterator(
            self.len(),
            self.cycles.iter().map(|chi| chi.iter().zip(integrals).map(|(x, i)| x * i).sum::<f64>()),
        );
        let a = self.gram.clone().cholesky().ok_or(KirchhoffError::SingularGram)?.solve(&r);
        let mut v = vec![0.0; m];
        for (g, form) in self.forms.iter().enumerate() {
            for k in 0..m {
                v[k] += a[g] * form[k];
            }
        }
        Ok(v)
    }

    /// Vertex potential with `pot(root) = 0` and `pot(head) − pot(tail) = increments`
    /// along tree edges.
    fn integrate_tree(&self, graph: &MetricGraph, increments: &[f64]) -> Vec<f64> {
        let t = &self.tree;
        let mut pot = vec![0.0; graph.vertex_count()];
        for &q in t.order.iter().skip(1) {
            let pe = t.parent_edge[q].unwrap();
            let p = t.parent[q];
            pot[q] = if graph.edge(pe).head == q { pot[p] + increments[pe] } else { pot[p] - increments[pe] };
        }
        debug_assert_eq!(pot[t.root], 0.0);
        pot
    }
}

/// `F = ∂g + v` with `v ∈ ker ∂*` and `g(root) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct HodgeSplit {
    pub g: ContinuousFunction,
    pub v: ConstantForm,
}

fn antiderivative(f: &EdgeFunction) -> EdgeFunction {
    match f {
        EdgeFunction::Poly(c) => EdgeFunction::Poly(
            c.iter()
                .map(|p| std::iter::once(0.0).chain(p.iter().enumerate().map(|(i, &a)| a / (i + 1) as f64)).collect())
                .collect(),
        ),
        EdgeFunction::Sampled(s) => EdgeFunction::Sampled(
            s.iter()
                .map(|v| {
                    let h = 1.0 / (v.len() - 1) as f64;
                    let mut acc = 0.0;
                    let mut out = Vec::with_capacity(v.len());
                    out.push(0.0);
                    for j in 1..v.len() {
                        acc += 0.5 * h * (v[j - 1] + v[j]);
                        out.push(acc);
                    }
                    out
                })
                .collect(),
        ),
    }
}

/// Glues per-edge primitives `prim_e` (with `prim_e(0) = 0`) into a
/// continuous function: `g_e = pot(tail) + prim_e + δ_e x`, where the tiny
/// linear correction `δ_e` absorbs round-off on non-tree edges.
fn glue(graph: &MetricGraph, prim: EdgeFunction, pot: Vec<f64>) -> ContinuousFunction {
    let m = graph.edge_count();
    let a: Vec<f64> = (0..m).map(|k| pot[graph.edge(k).tail] - prim.trace(k, End::Tail)).collect();
    let delta: Vec<f64> = (0..m)
        .map(|k| {
            let e = graph.edge(k);
            pot[e.head] - (pot[e.tail] + prim.trace(k, End::Head) - prim.trace(k, End::Tail))
        })
        .collect();
    let values = prim.add_affine(&a, &delta);
    let values = match values {
        EdgeFunction::Sampled(mut s) => {
            for (k, e) in graph.edges().iter().enumerate() {
                s[k][0] = pot[e.tail];
                *s[k].last_mut().unwrap() = pot[e.head];
            }
            EdgeFunction::Sampled(s)
        }
        p => p,
    };
    ContinuousFunction::from_parts_unchecked(values, pot)
}

/// Orthogonal decomposition `H = ∂(𝒞) ⊕ ker ∂*` of a 1-form.
pub fn hodge_decompose(graph: &MetricGraph, basis: &CycleBasis, form: &EdgeFunction) -> Result<HodgeSplit> {
    graph.check_len(form)?;
    let integrals: Vec<f64> = (0..graph.edge_count()).map(|k| form.mean(k)).collect();
    let v = basis.project(graph, &integrals)?;
    let exact_incr: Vec<f64> = integrals.iter().zip(&v).map(|(i, x)| i - x).collect();
    let pot = basis.integrate_tree(graph, &exact_incr);
    let zeros = vec![0.0; graph.edge_count()];
    let prim = antiderivative(&form.add_affine(&v.iter().map(|x| -x).collect::<Vec<_>>(), &zeros));
    Ok(HodgeSplit { g: glue(graph, prim, pot), v })
}

/// Hodge split of `∂f` computed from `f` itself: `∫ f_e′ = f_e(1) − f_e(0)`
/// exactly, so the result depends on `f` only through its traces plus
/// the edge-wise shape `f_e − f_e(0)`.
pub fn hodge_decompose_derivative(graph: &MetricGraph, basis: &CycleBasis, f: &EdgeFunction) -> Result<HodgeSplit> {
    graph.check_len(f)?;
    let m = graph.edge_count();
    let integrals: Vec<f64> = (0..m).map(|k| f.trace(k, End::Head) - f.trace(k, End::Tail)).collect();
    let v = basis.project(graph, &integrals)?;
    let exact_incr: Vec<f64> = integrals.iter().zip(&v).map(|(i, x)| i - x).collect();
    let pot = basis.integrate_tree(graph, &exact_incr);
    let minus_v: Vec<f64> = v.iter().map(|x| -x).collect();
    let prim = f.add_affine(&vec![0.0; m], &minus_v);
    Ok(HodgeSplit { g: glue(graph, prim, pot), v })
}

/// `n_B v(q) = Σ_head c v(1) − Σ_tail c v(0)` at any vertex.
pub fn normal_part_at(graph: &MetricGraph, v: &EdgeFunction, q: usize) -> f64 {
    graph
        .incident(q)
        .iter()
        .map(|&(k, end)| {
            let c = graph.edge(k).conductance;
            match end {
                End::Head => c * v.trace(k, End::Head),
                End::Tail => -c * v.trace(k, End::Tail),
            }
        })
        .sum()
}

/// Normal part of a 1-form at a boundary vertex.
pub fn normal_part(graph: &MetricGraph, v: &EdgeFunction, q: usize) -> Result<f64> {
    graph.check_len(v)?;
    if !graph.is_boundary(q) {
        return Err(KirchhoffError::NotBoundaryVertex(graph.vertex_id(q).to_string()));
    }
    Ok(normal_part_at(graph, v, q))
}

/// `n_B(f b)(q)` from one-sided traces of `f`.
pub fn flux_at(graph: &MetricGraph, b: &VelocityField, f: &EdgeFunction, q: usize) -> f64 {
    graph
        .incident(q)
        .iter()
        .map(|&(k, end)| {
            let cb = graph.edge(k).conductance * b.b(k);
            match end {
                End::Head => cb * f.trace(k, End::Head),
                End::Tail => -cb * f.trace(k, End::Tail),
            }
        })
        .sum()
}

/// `★_b⁻¹ v = v / b` edge-wise.
pub fn star_inv(graph: &MetricGraph, b: &VelocityField, v: &EdgeFunction) -> Result<EdgeFunction> {
    graph.check_len(v)?;
    b.check_graph(graph)?;
    b.require_dominant()?;
    let inv: Vec<f64> = b.coeffs().iter().map(|x| 1.0 / x).collect();
    Ok(v.scale_edges(&inv))
}

/// `★_b g = g b` edge-wise.
pub fn star(b: &VelocityField, g: &EdgeFunction) -> EdgeFunction {
    g.scale_edges(b.coeffs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::h_inner;

    fn k1() -> MetricGraph {
        crate::fixtures::k1_graph()
    }

    #[test]
    fn cycle_counts() {
        let g = k1();
        let cb = cycle_basis(&g);
        assert_eq!(cb.len(), 4);
        for f in &cb.forms {
            for p in 0..g.vertex_count() {
                assert!(vertex_balance(&g, f, p).abs() < 1e-15);
            }
        }
        let tree = crate::fixtures::star_tree_graph();
        assert!(cycle_basis(&tree).is_empty());
        let circles = crate::fixtures::two_circles_graph(1.0, 1.0);
        let cb = cycle_basis(&circles);
        assert_eq!(cb.cycles, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
    }

    #[test]
    fn nonuniform_conductance_cycles_are_balanced() {
        let g = MetricGraph::from_json(
            r#"{"vertices":["a","b"],"edges":[{"id":"x","tail":"a","head":"b","conductance":2.0},
            {"id":"y","tail":"b","head":"a","conductance":0.5}]}"#,
        )
        .unwrap();
        let cb = cycle_basis(&g);
        assert_eq!(cb.len(), 1);
        assert!(vertex_balance(&g, &cb.forms[0], 0).abs() < 1e-15);
        assert!((cb.gram[(0, 0)] - 2.5).abs() < 1e-15);
    }

    #[test]
    fn k1_field_flags() {
        let g = k1();
        let b = check_field(&g, &g.field("b").unwrap()).unwrap();
        assert!(b.divergence_free() && b.solenoidal() && b.minimal_energy_dominant());
        let bb = b.as_form();
        assert_eq!(h_inner(&g, &bb, &bb).unwrap(), 18.0);
    }

    #[test]
    fn star_inv_of_b_is_one() {
        let g = k1();
        let b = check_field(&g, &g.field("b").unwrap()).unwrap();
        let one = star_inv(&g, &b, &b.as_form()).unwrap();
        assert!(one.components().iter().all(|c| c == &vec![1.0]));
    }

    #[test]
    fn interval_normal_part() {
        let g = crate::fixtures::interval_graph();
        let f = EdgeFunction::poly(vec![vec![2.0, 1.0]]).unwrap();
        assert_eq!(normal_part(&g, &f, 1).unwrap(), 3.0);
        assert_eq!(normal_part(&g, &f, 0).unwrap(), -2.0);
    }

    #[test]
    fn hodge_split_of_cycle_and_gradient() {
        let g = k1();
        let cb = cycle_basis(&g);
        let chi = EdgeFunction::constants(&cb.forms[1]);
        let s = hodge_decompose(&g, &cb, &chi).unwrap();
        assert!(s.g.vertex_values().iter().all(|x| x.abs() < 1e-14));
        assert!(s.v.iter().zip(&cb.forms[1]).all(|(a, b)| (a - b).abs() < 1e-14));
        let pot: Vec<f64> = (0..g.vertex_count()).map(|p| p as f64 * 0.3 - 1.0).collect();
        let h = ContinuousFunction::edge_linear(&g, &pot).unwrap();
        let s = hodge_decompose(&g, &cb, &h.values().derivative()).unwrap();
        assert!(s.v.iter().all(|x| x.abs() < 1e-14));
        let root = g.root();
        for p in 0..g.vertex_count() {
            assert!((s.g.at_vertex(p) - (pot[p] - pot[root])).abs() < 1e-14);
        }
    }
}
