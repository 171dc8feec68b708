//! The generator `A^Θ f = −∂⊥f` on `{f ∈ D(∂⊥) | P+ΘG−f = G+f}`, its
//! resolvent, two evolvers and the verification functionals.
//!
//! Every `G±` coordinate depends on `f` only through its edge traces, so the
//! domain of `A^Θ` is cut out by `|E|` linear conditions on the trace vector
//! `(f_e(0), f_e(1))_e`; [`Generator::constraints`] holds them.

pub mod catalog;
pub mod checks;
pub mod galerkin;
pub mod resolvent;
pub mod scattering;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::decomp::{kirchhoff_rows, require_domain};
use crate::error::{KirchhoffError, Result};
use crate::graph::{EdgeFunction, End, MetricGraph};
use crate::hodge::VelocityField;
use crate::linalg::null_space;
use crate::quadruple::{check_contraction, QuadrupleSpaces, Side};

pub use catalog::CatalogCase;
pub use checks::{
    duality_check, kernel_invariance_check, mass_balance_check, positivity_probe, weak_solution_check, DualityReport,
};
pub use galerkin::{evolve_cn, CnOptions, GalerkinSpace};
pub use resolvent::resolvent_solve;
pub use scattering::{evolve_scattering, ScatteringRule};

pub const THETA_DOMAIN_TOL: f64 = 1e-9;

/// `Θ` together with the trace conditions describing `D(A^Θ)`.
#[derive(Debug, Clone)]
pub struct Generator {
    spaces: QuadrupleSpaces,
    theta: DMatrix<f64>,
    constraints: DMatrix<f64>,
}

/// Linear function on every edge with the given traces `(t(0), t(1))`.
fn linear_with_traces(t: &[f64]) -> EdgeFunction {
    EdgeFunction::Poly(t.chunks(2).map(|c| vec![c[0], c[1] - c[0]]).collect())
}

impl Generator {
    /// Errors with `NotContraction` unless `‖P+ΘP−‖ ≤ 1` in the weighted norms.
    pub fn new(spaces: QuadrupleSpaces, theta: DMatrix<f64>) -> Result<Self> {
        let report = check_contraction(&spaces, &theta)?;
        if !report.is_contraction {
            return Err(KirchhoffError::NotContraction { norm: report.norm });
        }
        let constraints = theta_constraints(&spaces, &theta)?;
        Ok(Generator { spaces, theta, constraints })
    }

    pub fn spaces(&self) -> &QuadrupleSpaces {
        &self.spaces
    }

    pub fn graph(&self) -> &MetricGraph {
        self.spaces.graph()
    }

    pub fn field(&self) -> &VelocityField {
        self.spaces.field()
    }

    pub fn theta(&self) -> &DMatrix<f64> {
        &self.theta
    }

    /// `|E| × 2|E|` matrix `M` with `f ∈ D(A^Θ) ⟺ M·traces(f) = 0`.
    pub fn constraints(&self) -> &DMatrix<f64> {
        &self.constraints
    }

    /// `‖P+ΘG−f − G+f‖` in the weighted norm of `H+`.
    pub fn domain_residual(&self, f: &EdgeFunction) -> Result<f64> {
        require_domain(self.graph(), self.field(), f)?;
        let (gm, gp) = self.spaces.apply_both(f)?;
        let r = self.spaces.projection(Side::Plus) * (&self.theta * gm) - gp;
        Ok(self.spaces.norm(&r))
    }

    /// Inflow traces as a linear function of outflow traces:
    /// `t_in = S t_out`, both indexed by edge. The inflow end of `e` is its
    /// tail when `b_e > 0`.
    pub fn scattering_matrix(&self) -> Result<DMatrix<f64>> {
        let m = self.graph().edge_count();
        let (inflow, outflow) = self.split_traces();
        let m_in = self.constraints.select_columns(&inflow);
        let m_out = self.constraints.select_columns(&outflow);
        let lu = m_in.lu();
        let s = lu.solve(&(-m_out)).ok_or_else(|| KirchhoffError::SingularSystem("inflow traces".into()))?;
        debug_assert_eq!(s.shape(), (m, m));
        Ok(s)
    }

    /// Trace indices of inflow and outflow ends, in edge order.
    pub(crate) fn split_traces(&self) -> (Vec<usize>, Vec<usize>) {
        let b = self.field();
        (0..self.graph().edge_count())
            .map(|e| {
                let (i, o) = inflow_outflow(b.b(e));
                (i.trace_index(e), o.trace_index(e))
            })
            .unzip()
    }
}

/// `(inflow end, outflow end)` for an edge with coefficient `b`.
pub fn inflow_outflow(b: f64) -> (End, End) {
    if b > 0.0 {
        (End::Tail, End::Head)
    } else {
        (End::Head, End::Tail)
    }
}

fn theta_constraints(spaces: &QuadrupleSpaces, theta: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let g = spaces.graph();
    let b = spaces.field();
    let m = g.edge_count();
    let kirchhoff = kirchhoff_rows(g, b);
    let basis = null_space(&kirchhoff, 1e-12);
    let n = spaces.ambient_dim();
    let mut residual = DMatrix::zeros(n, basis.ncols());
    let pp = spaces.projection(Side::Plus);
    for j in 0..basis.ncols() {
        let col: Vec<f64> = basis.column(j).iter().copied().collect();
        let (gm, gp) = spaces.apply_both(&linear_with_traces(&col))?;
        residual.set_column(j, &(pp * (theta * gm) - gp));
    }
    // orthonormal coordinates of range(P+) after whitening by W^{1/2}
    let s = spaces.weights().map(f64::sqrt);
    let whitened = DMatrix::from_fn(n, n, |i, k| s[i] * pp[(i, k)] / s[k]);
    let sym = (&whitened + whitened.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let keep: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > 0.5).collect();
    let q = eig.eigenvectors.select_columns(&keep);
    let scaled = DMatrix::from_fn(n, basis.ncols(), |i, j| s[i] * residual[(i, j)]);
    let c = q.transpose() * scaled * basis.transpose();
    let rows = kirchhoff.nrows() + c.nrows();
    if rows != m {
        return Err(KirchhoffError::SingularSystem(format!("{rows} trace conditions for {m} edges")));
    }
    let mut out = DMatrix::zeros(m, 2 * m);
    out.rows_mut(0, kirchhoff.nrows()).copy_from(&kirchhoff);
    out.rows_mut(kirchhoff.nrows(), c.nrows()).copy_from(&c);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThetaDomainReport {
    pub in_domain: bool,
    pub residual: f64,
}

/// Whether `f ∈ D(A^Θ)`, with `‖ΘG−f − G+f‖_{H+}` as residual.
pub fn in_domain_theta(generator: &Generator, f: &EdgeFunction) -> Result<ThetaDomainReport> {
    let residual = generator.domain_residual(f)?;
    Ok(ThetaDomainReport { in_domain: residual <= THETA_DOMAIN_TOL, residual })
}

/// `A^Θ f = −f′/b` (no domain check beyond `D(∂⊥)`).
pub fn apply_generator(generator: &Generator, f: &EdgeFunction) -> Result<EdgeFunction> {
    Ok(crate::decomp::apply_dbot(generator.graph(), generator.field(), f)?.scale(-1.0))
}

/// Per-step diagnostics of a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepDiagnostics {
    pub t: f64,
    /// `‖v‖_{L²(ν_b)}`.
    pub norm: f64,
    /// `∫ v dν_b`.
    pub mass: f64,
    /// `n_B(v b)(q)` at each boundary vertex, in `graph.boundary()` order.
    pub fluxes: Vec<f64>,
}

/// Snapshots of an evolution on the sampled representation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub snapshots: Vec<EdgeFunction>,
    /// Recorded at every time step, including `t = 0`.
    pub diagnostics: Vec<StepDiagnostics>,
}

impl Trajectory {
    pub fn last(&self) -> &EdgeFunction {
        self.snapshots.last().expect("trajectory has an initial snapshot")
    }

    /// Index of the snapshot closest to `t`.
    pub fn nearest(&self, t: f64) -> usize {
        let mut best = 0;
        for (i, &s) in self.times.iter().enumerate() {
            if (s - t).abs() < (self.times[best] - t).abs() {
                best = i;
            }
        }
        best
    }

    /// Rows `t,edge,sample,value`.
    pub fn to_csv(&self, graph: &MetricGraph) -> String {
        use crate::report::fmt17;
        let mut out = String::from("t,edge,sample,value\n");
        for (t, snap) in self.times.iter().zip(&self.snapshots) {
            for (e, vals) in snap.components().iter().enumerate() {
                for (i, v) in vals.iter().enumerate() {
                    out.push_str(&format!("{},{},{},{}\n", fmt17(*t), graph.edge(e).id, i, fmt17(*v)));
                }
            }
        }
        out
    }

    /// Rows `t,norm,mass,flux:<q>…`, one per time step.
    pub fn diagnostics_csv(&self, graph: &MetricGraph) -> String {
        use crate::report::{fmt17, fmt17_list};
        let mut out = String::from("t,norm,mass");
        for &q in graph.boundary() {
            out.push_str(&format!(",flux:{}", graph.vertex_id(q)));
        }
        out.push('\n');
        for d in &self.diagnostics {
            out.push_str(&format!("{},{},{}", fmt17(d.t), fmt17(d.norm), fmt17(d.mass)));
            if !d.fluxes.is_empty() {
                out.push(',');
                out.push_str(&fmt17_list(&d.fluxes));
            }
            out.push('\n');
        }
        out
    }
}

/// Time grid `0, dt, …, T` with `round(T/dt)` steps.
pub(crate) fn step_count(dt: f64, t_end: f64) -> Result<usize> {
    if !(dt > 0.0) || !(t_end >= 0.0) || !dt.is_finite() || !t_end.is_finite() {
        return Err(KirchhoffError::Parse(format!("invalid time grid dt = {dt}, T = {t_end}")));
    }
    Ok((t_end / dt).round() as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::quadruple::build_quadruple;
    use crate::hodge::check_field;

    fn gen_for(g: &MetricGraph, theta: DMatrix<f64>) -> Generator {
        let b = check_field(g, &g.field("b").unwrap()).unwrap();
        Generator::new(build_quadruple(g, &b).unwrap(), theta).unwrap()
    }

    #[test]
    fn interval_domain() {
        let theta = 0.5;
        let g = fixtures::interval_graph();
        let gen = gen_for(&g, DMatrix::from_row_slice(2, 2, &[0.0, theta, 0.0, 0.0]));
        // θ f(1) = −f(0)
        let good = EdgeFunction::poly(vec![vec![-0.5, 0.3, 1.2]]).unwrap();
        let bad = EdgeFunction::poly(vec![vec![0.5, 0.3, 1.7]]).unwrap();
        assert!(in_domain_theta(&gen, &good).unwrap().in_domain);
        assert!(!in_domain_theta(&gen, &bad).unwrap().in_domain);
        let s = gen.scattering_matrix().unwrap();
        assert!((s[(0, 0)] + theta).abs() < 1e-14);
    }

    #[test]
    fn non_contraction_rejected() {
        let g = fixtures::interval_graph();
        let b = check_field(&g, &g.field("b").unwrap()).unwrap();
        let spaces = build_quadruple(&g, &b).unwrap();
        let r = Generator::new(spaces, DMatrix::from_row_slice(2, 2, &[0.0, 2.0, 0.0, 0.0]));
        assert!(matches!(r, Err(KirchhoffError::NotContraction { .. })));
    }

    #[test]
    fn k1_identity_domain_is_z_zero() {
        let g = fixtures::k1_graph();
        let gen = gen_for(&g, DMatrix::identity(4, 4));
        // continuous functions have z = 0
        let f = crate::graph::ContinuousFunction::edge_linear(&g, &[0.3, -1.0, 2.0, 0.5, 0.1, 0.7]).unwrap();
        let f = crate::decomp::project_to_domain(&g, gen.field(), f.values()).unwrap();
        let k = gen.spaces().decompose(&f).unwrap();
        let zmax = k.z.iter().fold(0.0f64, |m, z| m.max(z.abs()));
        let r = in_domain_theta(&gen, &f).unwrap();
        assert_eq!(r.in_domain, zmax < 1e-9, "z = {:?}, residual {}", k.z, r.residual);
    }
}
