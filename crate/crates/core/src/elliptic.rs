//! Harmonic extension and Neumann problems with respect to ν_b.
//!
//! With `Δu = u″/b²` on every edge and an edge-constant right-hand side
//! `z`, the solution is edge-wise quadratic:
//! `u_e(x) = u_t + (u_h − u_t − s/2) x + (s/2) x²`, `s = b_e² z_e`, so only
//! vertex values are unknown.

use nalgebra::{DMatrix, DVector};

use crate::error::{KirchhoffError, Result};
use crate::graph::{ContinuousFunction, EdgeFunction, End, MetricGraph};
use crate::hodge::{normal_part, VelocityField};

pub const TAU_COMPAT: f64 = 1e-10;

/// Graph Laplacian `(L u)(p) = Σ_{e ∋ p} c_e (u(p) − u(other end))`.
fn laplacian(graph: &MetricGraph) -> DMatrix<f64> {
    let n = graph.vertex_count();
    let mut l = DMatrix::zeros(n, n);
    for e in graph.edges() {
        if e.is_loop() {
            continue;
        }
        let c = e.conductance;
        l[(e.tail, e.tail)] += c;
        l[(e.head, e.head)] += c;
        l[(e.tail, e.head)] -= c;
        l[(e.head, e.tail)] -= c;
    }
    l
}

fn lu_solve(a: DMatrix<f64>, rhs: DVector<f64>, what: &str) -> Result<DVector<f64>> {
    let sol = a.lu().solve(&rhs).ok_or_else(|| KirchhoffError::SingularSystem(what.to_string()))?;
    if sol.iter().any(|x| !x.is_finite()) {
        return Err(KirchhoffError::SingularSystem(what.to_string()));
    }
    Ok(sol)
}

/// Edge-wise linear function with Kirchhoff-balanced slopes off `B` and the
/// given values (ordered like `graph.boundary()`) on `B`.
pub fn harmonic_extend(graph: &MetricGraph, values: &[f64]) -> Result<ContinuousFunction> {
    let bnd = graph.boundary();
    if bnd.is_empty() {
        return Err(KirchhoffError::EmptyBoundary);
    }
    if values.len() != bnd.len() {
        return Err(KirchhoffError::DimensionMismatch { expected: bnd.len(), got: values.len() });
    }
    let n = graph.vertex_count();
    let mut a = laplacian(graph);
    let mut rhs = DVector::zeros(n);
    for (i, &q) in bnd.iter().enumerate() {
        a.row_mut(q).fill(0.0);
        a[(q, q)] = 1.0;
        rhs[q] = values[i];
    }
    let u = lu_solve(a, rhs, "harmonic extension")?;
    let mut vals: Vec<f64> = u.iter().copied().collect();
    for (i, &q) in bnd.iter().enumerate() {
        vals[q] = values[i];
    }
    ContinuousFunction::edge_linear(graph, &vals)
}

/// Data of `Δu = z` in X∖B with `(du)_B = η` on B.
#[derive(Debug, Clone, PartialEq)]
pub struct NeumannProblem<'a> {
    pub graph: &'a MetricGraph,
    pub b: &'a VelocityField,
    /// Edge-wise constant right-hand side.
    pub z: Vec<f64>,
    /// Neumann data, ordered like `graph.boundary()`.
    pub eta: Vec<f64>,
}

impl<'a> NeumannProblem<'a> {
    /// Accepts an edge function for `z`; only edge-wise constants are allowed.
    pub fn from_function(
        graph: &'a MetricGraph,
        b: &'a VelocityField,
        z: &EdgeFunction,
        eta: Vec<f64>,
    ) -> Result<Self> {
        graph.check_len(z)?;
        let z = z
            .edge_constants(1e-14)
            .ok_or_else(|| KirchhoffError::UnsupportedRhs("right-hand side must be edge-wise constant".into()))?;
        Ok(NeumannProblem { graph, b, z, eta })
    }

    /// `∫ z dν_b − Σ_B η`.
    pub fn compatibility_defect(&self) -> f64 {
        let w = self.b.measure_weights();
        let mass: f64 = self.z.iter().zip(w).map(|(z, w)| z * w).sum();
        mass - self.eta.iter().sum::<f64>()
    }
}

/// Solves the Neumann problem; the solution is pinned by `u(root) = 0`.
pub fn solve_neumann(problem: &NeumannProblem) -> Result<ContinuousFunction> {
    let graph = problem.graph;
    let m = graph.edge_count();
    let n = graph.vertex_count();
    problem.b.check_graph(graph)?;
    if problem.z.len() != m {
        return Err(KirchhoffError::DimensionMismatch { expected: m, got: problem.z.len() });
    }
    if problem.eta.len() != graph.boundary().len() {
        return Err(KirchhoffError::DimensionMismatch { expected: graph.boundary().len(), got: problem.eta.len() });
    }
    let w = problem.b.measure_weights();
    let scale = 1.0
        + problem.z.iter().zip(w).map(|(z, w)| (z * w).abs()).sum::<f64>()
        + problem.eta.iter().map(|x| x.abs()).sum::<f64>();
    let defect = problem.compatibility_defect();
    if defect.abs() > TAU_COMPAT * scale {
        return Err(KirchhoffError::IncompatibleData { defect });
    }
    let s: Vec<f64> = (0..m).map(|k| problem.b.b(k).powi(2) * problem.z[k]).collect();
    let mut rhs = DVector::zeros(n);
    for (i, &q) in graph.boundary().iter().enumerate() {
        rhs[q] += problem.eta[i];
    }
    for (k, e) in graph.edges().iter().enumerate() {
        let half = 0.5 * e.conductance * s[k];
        rhs[e.head] -= half;
        rhs[e.tail] -= half;
    }
    let mut a = laplacian(graph);
    let root = graph.root();
    a.row_mut(root).fill(0.0);
    a[(root, root)] = 1.0;
    rhs[root] = 0.0;
    let u = lu_solve(a, rhs, "Neumann problem")?;
    let coeffs = graph
        .edges()
        .iter()
        .enumerate()
        .map(|(k, e)| {
            let (ut, uh) = (u[e.tail], u[e.head]);
            vec![ut, uh - ut - 0.5 * s[k], 0.5 * s[k]]
        })
        .collect();
    Ok(ContinuousFunction::from_parts_unchecked(EdgeFunction::Poly(coeffs), u.iter().copied().collect()))
}

/// `(du)_B(q) = Σ_head c u′(1) − Σ_tail c u′(0)`.
pub fn normal_derivative(graph: &MetricGraph, u: &ContinuousFunction, q: usize) -> Result<f64> {
    normal_part(graph, &u.values().derivative(), q)
}

/// Kirchhoff residual `Σ_head c u′(1) − Σ_tail c u′(0)` at every vertex.
pub fn kirchhoff_residuals(graph: &MetricGraph, u: &ContinuousFunction) -> Vec<f64> {
    let d = u.values().derivative();
    (0..graph.vertex_count())
        .map(|p| {
            graph
                .incident(p)
                .iter()
                .map(|&(k, end)| {
                    let c = graph.edge(k).conductance;
                    match end {
                        End::Head => c * d.trace(k, End::Head),
                        End::Tail => -c * d.trace(k, End::Tail),
                    }
                })
                .sum()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::hodge::check_field;

    #[test]
    fn interval_harmonic_is_affine() {
        let g = fixtures::interval_graph();
        let h = harmonic_extend(&g, &[0.0, 2.5]).unwrap();
        assert_eq!(h.values().components()[0], vec![0.0, 2.5]);
        assert_eq!(normal_derivative(&g, &h, 1).unwrap(), 2.5);
        assert_eq!(normal_derivative(&g, &h, 0).unwrap(), -2.5);
    }

    #[test]
    fn star_tree_harmonic_value() {
        let g = fixtures::star_tree_graph();
        let h = harmonic_extend(&g, &[0.0, 1.0, 1.0]).unwrap();
        let p = g.vertex_index("p").unwrap();
        assert!((h.at_vertex(p) - 2.0 / 3.0).abs() < 1e-15);
        let c = harmonic_extend(&g, &[4.0, 4.0, 4.0]).unwrap();
        assert!(c.vertex_values().iter().all(|v| (v - 4.0).abs() < 1e-14));
    }

    #[test]
    fn empty_boundary_rejected() {
        let g = fixtures::k1_graph();
        assert_eq!(harmonic_extend(&g, &[]).unwrap_err(), KirchhoffError::EmptyBoundary);
    }

    #[test]
    fn zero_data_gives_zero() {
        let g = fixtures::k1_graph();
        let b = check_field(&g, &g.field("b").unwrap()).unwrap();
        let u = solve_neumann(&NeumannProblem { graph: &g, b: &b, z: vec![0.0; 9], eta: vec![] }).unwrap();
        assert!(u.vertex_values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn incompatible_data_rejected() {
        let g = fixtures::interval_graph();
        let b = check_field(&g, &[1.0]).unwrap();
        let err = solve_neumann(&NeumannProblem { graph: &g, b: &b, z: vec![1.0], eta: vec![0.5, 0.5 + 1e-3] });
        assert!(matches!(err, Err(KirchhoffError::IncompatibleData { .. })));
        let nonconst = EdgeFunction::poly(vec![vec![0.0, 1.0]]).unwrap();
        assert!(matches!(
            NeumannProblem::from_function(&g, &b, &nonconst, vec![0.0, 0.0]),
            Err(KirchhoffError::UnsupportedRhs(_))
        ));
    }

    #[test]
    fn neumann_round_trip() {
        let g = fixtures::star_tree_graph();
        let b = check_field(&g, &g.field("b").unwrap()).unwrap();
        let z = vec![1.0, -2.0, 0.5];
        let mass: f64 = z.iter().zip(b.measure_weights()).map(|(z, w)| z * w).sum();
        let eta = vec![0.25, mass - 1.0, 0.75];
        let u = solve_neumann(&NeumannProblem { graph: &g, b: &b, z: z.clone(), eta: eta.clone() }).unwrap();
        for (i, &q) in g.boundary().iter().enumerate() {
            assert!((normal_derivative(&g, &u, q).unwrap() - eta[i]).abs() < 1e-12);
        }
        let res = kirchhoff_residuals(&g, &u);
        let p = g.vertex_index("p").unwrap();
        assert!(res[p].abs() < 1e-12);
        for k in 0..3 {
            let second = 2.0 * u.values().components()[k][2];
            assert!((second - b.b(k).powi(2) * z[k]).abs() < 1e-14);
        }
    }
}
