//! The operator `∂⊥ f = f′/b` on functions satisfying the weighted
//! Kirchhoff condition, the decomposition `f = g + ★_b⁻¹∂u + w`, and the
//! integration-by-parts identity.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::elliptic::{solve_neumann, NeumannProblem};
use crate::error::{KirchhoffError, Result};
use crate::graph::{l2nu_inner, ContinuousFunction, EdgeFunction, End, MetricGraph};
use crate::hodge::{cycle_basis, flux_at, hodge_decompose_derivative, star_inv, CycleBasis, HodgeSplit, VelocityField};
use crate::linalg::null_space;

pub const DOMAIN_TOL: f64 = 1e-10;

/// Per-vertex weighted Kirchhoff residuals (zero at boundary vertices).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DomainCheck {
    pub in_domain: bool,
    pub residuals: Vec<f64>,
    pub max_residual: f64,
}

/// Rows `Σ_head c b t(1) − Σ_tail c b t(0)` at every interior vertex, acting
/// on the trace vector `(f_e(0), f_e(1))_e`.
pub fn kirchhoff_rows(graph: &MetricGraph, b: &VelocityField) -> DMatrix<f64> {
    let interior = graph.interior_vertices();
    let mut r = DMatrix::zeros(interior.len(), 2 * graph.edge_count());
    for (i, &p) in interior.iter().enumerate() {
        for &(k, end) in graph.incident(p) {
            let cb = graph.edge(k).conductance * b.b(k);
            r[(i, end.trace_index(k))] += if end == End::Head { cb } else { -cb };
        }
    }
    r
}

fn trace_scale(graph: &MetricGraph, b: &VelocityField, f: &EdgeFunction) -> f64 {
    (0..graph.edge_count()).fold(1.0f64, |m, k| {
        let cb = (graph.edge(k).conductance * b.b(k)).abs();
        m.max(cb * f.trace(k, End::Tail).abs()).max(cb * f.trace(k, End::Head).abs())
    })
}

pub fn check_domain(graph: &MetricGraph, b: &VelocityField, f: &EdgeFunction) -> Result<DomainCheck> {
    b.require_valid(graph)?;
    graph.check_len(f)?;
    let residuals: Vec<f64> = (0..graph.vertex_count())
        .map(|p| if graph.is_boundary(p) { 0.0 } else { flux_at(graph, b, f, p) })
        .collect();
    let max_residual = residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    Ok(DomainCheck {
        in_domain: max_residual <= DOMAIN_TOL * trace_scale(graph, b, f),
        residuals,
        max_residual,
    })
}

pub(crate) fn require_domain(graph: &MetricGraph, b: &VelocityField, f: &EdgeFunction) -> Result<()> {
    let c = check_domain(graph, b, f)?;
    if !c.in_domain {
        return Err(KirchhoffError::NotInDomain { residual: c.max_residual });
    }
    Ok(())
}

/// Smallest trace correction (added edge-wise as an affine function) that
/// puts `f` into the domain.
pub fn project_to_domain(graph: &MetricGraph, b: &VelocityField, f: &EdgeFunction) -> Result<EdgeFunction> {
    graph.check_len(f)?;
    b.check_graph(graph)?;
    let rows = kirchhoff_rows(graph, b);
    let t = DVector::from_vec(f.traces());
    let fixed = if rows.nrows() == 0 {
        t.clone()
    } else {
        let n = null_space(&rows, 1e-12);
        &n * (n.transpose() * &t)
    };
    let d = fixed - t;
    let m = graph.edge_count();
    let a: Vec<f64> = (0..m).map(|k| d[2 * k]).collect();
    let s: Vec<f64> = (0..m).map(|k| d[2 * k + 1] - d[2 * k]).collect();
    Ok(f.add_affine(&a, &s))
}

/// `(∂⊥f)_e = f_e′ / b_e`.
pub fn apply_dbot(graph: &MetricGraph, b: &VelocityField, f: &EdgeFunction) -> Result<EdgeFunction> {
    require_domain(graph, b, f)?;
    star_inv(graph, b, &f.derivative())
}

/// `f = g + ★_b⁻¹∂u + w` with `∂⊥f = ★_b⁻¹∂g + z`; `g(root) = u(root) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KeyDecomposition {
    pub g: ContinuousFunction,
    pub u: ContinuousFunction,
    /// Edge-wise constant element of `ker ∂⊥`.
    pub w: Vec<f64>,
    /// Edge-wise constant element of `ker ∂⊥`, equal to `★_b⁻¹` of the
    /// cycle part of `∂f`.
    pub z: Vec<f64>,
}

fn match_repr(like: &EdgeFunction, f: EdgeFunction) -> EdgeFunction {
    match like.subintervals() {
        Some(n) => f.to_sampled(n),
        None => f,
    }
}

impl KeyDecomposition {
    /// `g + ★_b⁻¹∂u + w`, in the representation of `g`.
    pub fn reconstruct(&self, graph: &MetricGraph, b: &VelocityField) -> Result<EdgeFunction> {
        let du = star_inv(graph, b, &self.u.values().derivative())?;
        let du = match_repr(self.g.values(), du.add_affine(&self.w, &vec![0.0; self.w.len()]));
        self.g.values().add(&du)
    }

    /// `★_b⁻¹∂g + z`.
    pub fn dbot(&self, graph: &MetricGraph, b: &VelocityField) -> Result<EdgeFunction> {
        let dg = star_inv(graph, b, &self.g.values().derivative())?;
        Ok(dg.add_affine(&self.z, &vec![0.0; self.z.len()]))
    }

    /// The equally valid decomposition `(g + s, u − s h, w − s ★_b⁻¹v, z)`
    /// where `b = ∂h + v`.
    pub fn shifted(&self, graph: &MetricGraph, b: &VelocityField, b_split: &HodgeSplit, s: f64) -> Result<Self> {
        let u = self.u.values().sub(&b_split.g.values().scale(s))?;
        let uv: Vec<f64> = self.u.vertex_values().iter().zip(b_split.g.vertex_values()).map(|(a, h)| a - s * h).collect();
        Ok(KeyDecomposition {
            g: self.g.shifted(s),
            u: ContinuousFunction::new(graph, u, uv)?,
            w: self.w.iter().zip(&b_split.v).zip(b.coeffs()).map(|((w, v), bb)| w - s * v / bb).collect(),
            z: self.z.clone(),
        })
    }
}

pub fn key_decompose(graph: &MetricGraph, b: &VelocityField, f: &EdgeFunction) -> Result<KeyDecomposition> {
    key_decompose_with(graph, b, &cycle_basis(graph), f)
}

/// As [`key_decompose`] with a precomputed cycle basis.
pub fn key_decompose_with(
    graph: &MetricGraph,
    b: &VelocityField,
    basis: &CycleBasis,
    f: &EdgeFunction,
) -> Result<KeyDecomposition> {
    require_domain(graph, b, f)?;
    let HodgeSplit { g, v } = hodge_decompose_derivative(graph, basis, f)?;
    let z: Vec<f64> = v.iter().zip(b.coeffs()).map(|(v, b)| v / b).collect();
    let nb = b.vertex_balance();
    let eta: Vec<f64> = graph.boundary().iter().map(|&q| flux_at(graph, b, f, q) - g.at_vertex(q) * nb[q]).collect();
    let u = solve_neumann(&NeumannProblem { graph, b, z: z.clone(), eta })?;
    let du = u.values().derivative();
    let w = graph
        .edges()
        .iter()
        .enumerate()
        .map(|(k, e)| f.trace(k, End::Tail) - g.at_vertex(e.tail) - du.trace(k, End::Tail) / b.b(k))
        .collect();
    Ok(KeyDecomposition { g, u, w, z })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IbpReport {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

/// `⟨w1, w2⟩` in L²(ν_b) for edge-wise constants.
pub(crate) fn nu_dot(b: &VelocityField, a: &[f64], c: &[f64]) -> f64 {
    b.measure_weights().iter().zip(a).zip(c).map(|((w, x), y)| w * x * y).sum()
}

fn common_repr(f1: &EdgeFunction, f2: &EdgeFunction) -> (EdgeFunction, EdgeFunction) {
    match (f1.subintervals(), f2.subintervals()) {
        (None, Some(n)) => (f1.to_sampled(n), f2.clone()),
        (Some(n), None) => (f1.clone(), f2.to_sampled(n)),
        (Some(n), Some(m)) if n != m => (f1.clone(), f2.to_sampled(n)),
        _ => (f1.clone(), f2.clone()),
    }
}

/// Both sides of the integration-by-parts identity
/// `⟨∂⊥f1, f2⟩ + ⟨f1, ∂⊥f2⟩ = Σ_B {g2 n(f1 b) + g1 n(f2 b) − g1 g2 n(b)} + ⟨w1, z2⟩ + ⟨z1, w2⟩`.
pub fn ibp_check(graph: &MetricGraph, b: &VelocityField, f1: &EdgeFunction, f2: &EdgeFunction) -> Result<IbpReport> {
    let basis = cycle_basis(graph);
    let (f1, f2) = common_repr(f1, f2);
    let d1 = apply_dbot(graph, b, &f1)?;
    let d2 = apply_dbot(graph, b, &f2)?;
    let lhs = l2nu_inner(graph, b, &d1, &f2)? + l2nu_inner(graph, b, &f1, &d2)?;
    let k1 = key_decompose_with(graph, b, &basis, &f1)?;
    let k2 = key_decompose_with(graph, b, &basis, &f2)?;
    let nb = b.vertex_balance();
    let boundary: f64 = graph
        .boundary()
        .iter()
        .map(|&q| {
            let (g1, g2) = (k1.g.at_vertex(q), k2.g.at_vertex(q));
            g2 * flux_at(graph, b, &f1, q) + g1 * flux_at(graph, b, &f2, q) - g1 * g2 * nb[q]
        })
        .sum();
    let rhs = boundary + nu_dot(b, &k1.w, &k2.z) + nu_dot(b, &k1.z, &k2.w);
    Ok(IbpReport { lhs, rhs, residual: (lhs - rhs).abs() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::graph::l2nu_norm;
    use crate::hodge::check_field;

    fn field(g: &MetricGraph) -> VelocityField {
        check_field(g, &g.field("b").unwrap()).unwrap()
    }

    #[test]
    fn continuous_functions_are_in_domain() {
        let g = fixtures::k1_graph();
        let b = field(&g);
        let vals: Vec<f64> = (0..6).map(|i| (i as f64).sin()).collect();
        let f = ContinuousFunction::edge_linear(&g, &vals).unwrap();
        assert!(check_domain(&g, &b, f.values()).unwrap().in_domain);
        let k = key_decompose(&g, &b, f.values()).unwrap();
        assert!(k.z.iter().all(|z| z.abs() < 1e-14));
        // with g(root) = 0 the constant f(root) lands in w = f(root)·𝟏
        let root = g.root();
        assert!(k.w.iter().all(|w| (w - vals[root]).abs() < 1e-14));
        for p in 0..6 {
            assert!((k.g.at_vertex(p) - (vals[p] - vals[root])).abs() < 1e-14);
        }
    }

    #[test]
    fn racetrack_condition() {
        let g = fixtures::two_circles_graph(1.0, 2.0);
        let b = field(&g);
        // c1 (f1(1) − f1(0)) + c2 (f2(1) − f2(0)) with conductance-weighted b
        let good = EdgeFunction::poly(vec![vec![0.0, 2.0], vec![0.0, -1.0]]).unwrap();
        assert!(check_domain(&g, &b, &good).unwrap().in_domain);
        let bad = EdgeFunction::poly(vec![vec![0.0, 1.0], vec![0.0, 1.0]]).unwrap();
        assert!(!check_domain(&g, &b, &bad).unwrap().in_domain);
        assert!(matches!(apply_dbot(&g, &b, &bad), Err(KirchhoffError::NotInDomain { .. })));
    }

    #[test]
    fn two_circle_formulas() {
        let c = 1.5;
        let g = fixtures::two_circles_graph(c, c);
        let b = field(&g);
        let f = EdgeFunction::poly(vec![vec![1.0, 2.0, -1.0, 0.5], vec![-0.5, -0.25, 0.0, -1.25]]).unwrap();
        let k = key_decompose(&g, &b, &f).unwrap();
        for j in 0..2 {
            let (f0, f1) = (f.trace(j, End::Tail), f.trace(j, End::Head));
            assert!((k.z[j] - (f1 - f0) / c).abs() < 1e-13);
            assert!((k.w[j] - (0.5 * (f0 + f1) - k.g.at_vertex(0))).abs() < 1e-13);
        }
    }

    #[test]
    fn reconstruction_and_dbot() {
        let g = fixtures::star_tree_graph();
        let b = field(&g);
        let raw = EdgeFunction::poly(vec![vec![1.0, -1.0, 2.0], vec![0.5, 0.25, 0.0, 1.0], vec![-1.0, 3.0]]).unwrap();
        let f = project_to_domain(&g, &b, &raw).unwrap();
        let k = key_decompose(&g, &b, &f).unwrap();
        let back = k.reconstruct(&g, &b).unwrap();
        assert!(l2nu_norm(&g, &b, &back.sub(&f).unwrap()).unwrap() < 1e-12);
        let d = apply_dbot(&g, &b, &f).unwrap();
        assert!(l2nu_norm(&g, &b, &k.dbot(&g, &b).unwrap().sub(&d).unwrap()).unwrap() < 1e-12);
    }

    #[test]
    fn interval_ibp_is_boundary_product() {
        let g = fixtures::interval_graph();
        let b = field(&g);
        let f1 = EdgeFunction::poly(vec![vec![1.0, 2.0, -0.5]]).unwrap();
        let f2 = EdgeFunction::poly(vec![vec![-2.0, 0.0, 1.0, 1.0]]).unwrap();
        let r = ibp_check(&g, &b, &f1, &f2).unwrap();
        let expected = f1.eval(0, 1.0) * f2.eval(0, 1.0) - f1.eval(0, 0.0) * f2.eval(0, 0.0);
        assert!((r.lhs - expected).abs() < 1e-13);
        assert!(r.residual < 1e-12);
    }

    #[test]
    fn constants_have_trivial_ibp() {
        let g = fixtures::k1_graph();
        let b = field(&g);
        let one = EdgeFunction::constants(&[1.0; 9]);
        let r = ibp_check(&g, &b, &one, &one).unwrap();
        assert!(r.lhs.abs() < 1e-14 && r.rhs.abs() < 1e-12);
    }

    #[test]
    fn shift_covariance() {
        let g = fixtures::star_tree_graph();
        let b = field(&g);
        let raw = EdgeFunction::poly(vec![vec![0.3, 1.0], vec![1.0, 0.0, -2.0], vec![0.0, 0.5]]).unwrap();
        let f = project_to_domain(&g, &b, &raw).unwrap();
        let k = key_decompose(&g, &b, &f).unwrap();
        let k2 = key_decompose(&g, &b, &f.add_affine(&[2.0; 3], &[0.0; 3])).unwrap();
        assert_eq!(k.z, k2.z);
        for p in 0..g.vertex_count() {
            assert!((k2.g.at_vertex(p) - k.g.at_vertex(p)).abs() < 1e-12);
        }
        let split = crate::hodge::hodge_decompose(&g, &cycle_basis(&g), &b.as_form()).unwrap();
        let s = k.shifted(&g, &b, &split, 0.7).unwrap();
        let back = s.reconstruct(&g, &b).unwrap();
        assert!(l2nu_norm(&g, &b, &back.sub(&f).unwrap()).unwrap() < 1e-12);
    }

    #[test]
    fn k1_decomposition_meets_every_constraint() {
        use crate::elliptic::kirchhoff_residuals;
        use rand::SeedableRng;
        let g = fixtures::k1_graph();
        let b = field(&g);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let f = crate::sampling::random_domain_poly(&g, &b, &mut rng, 3).unwrap();
        let k = key_decompose(&g, &b, &f).unwrap();
        assert!(kirchhoff_residuals(&g, &k.u).iter().all(|r| r.abs() < 1e-12));
        let w = EdgeFunction::constants(&k.w);
        assert!(check_domain(&g, &b, &w).unwrap().max_residual < 1e-12);
        assert!(check_domain(&g, &b, &EdgeFunction::constants(&k.z)).unwrap().max_residual < 1e-12);
        let back = k.reconstruct(&g, &b).unwrap();
        assert!(l2nu_norm(&g, &b, &back.sub(&f).unwrap()).unwrap() < 1e-12);
        // on the cell around q0: ★⁻¹∂u is z0·x, z0·x − z0 and z0/2 − z0·x
        let e = |id: &str| g.edge_index(id).unwrap();
        let du = star_inv(&g, &b, &k.u.values().derivative()).unwrap();
        let z0 = k.z[e("q0p2")];
        for x in [0.0, 0.4, 1.0] {
            assert!((du.eval(e("q0p2"), x) - z0 * x).abs() < 1e-12);
            assert!((du.eval(e("p1q0"), x) - (z0 * x - z0)).abs() < 1e-12);
            assert!((du.eval(e("p1p2"), x) - (0.5 * z0 - z0 * x)).abs() < 1e-12);
        }
        let t = |id: &str, end| f.trace(e(id), end);
        let w0 = (k.w[e("q0p2")] + k.w[e("p1q0")] - 2.0 * k.w[e("p1p2")]) / 3.0;
        let exposed = (t("p1q0", End::Tail) - t("p1p2", End::Tail) + t("q0p2", End::Head) - t("p1p2", End::Head)) / 3.0;
        assert!((w0 - exposed).abs() < 1e-12);
    }
}
