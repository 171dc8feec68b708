//! Verification functionals evaluated on trajectories.

use nalgebra::DMatrix;
use serde::Serialize;

use super::galerkin::{CnOptions, CnStepper, GalerkinSpace, Nodal};
use super::{CatalogCase, Generator, Trajectory};
use crate::error::{KirchhoffError, Result};
use crate::graph::{ContinuousFunction, EdgeFunction, MetricGraph};
use crate::hodge::VelocityField;
use crate::linalg::null_space;
use crate::quadrature::simpson_weights;

/// Trapezoid weights on a (possibly non-uniform) grid.
fn trapezoid_increments(t: &[f64], y: &[f64]) -> Vec<f64> {
    let mut acc = vec![0.0; t.len()];
    for k in 1..t.len() {
        acc[k] = acc[k - 1] + 0.5 * (t[k] - t[k - 1]) * (y[k] + y[k - 1]);
    }
    acc
}

/// `max_n |∫v(t_n)dν_b − ∫v̊dν_b + ∫₀^{t_n} Σ_q n_B(v b)(q) ds|`, the time
/// integral by the trapezoid rule on the step grid.
pub fn mass_balance_check(traj: &Trajectory) -> f64 {
    let d = &traj.diagnostics;
    if d.is_empty() {
        return 0.0;
    }
    let t: Vec<f64> = d.iter().map(|s| s.t).collect();
    let total: Vec<f64> = d.iter().map(|s| s.fluxes.iter().sum()).collect();
    let outflow = trapezoid_increments(&t, &total);
    d.iter().zip(&outflow).map(|(s, o)| (s.mass - d[0].mass + o).abs()).fold(0.0, f64::max)
}

/// `Σ_e w_e ∫ f g` by composite Simpson on sampled snapshots.
fn simpson_pairing(w: &[f64], f: &EdgeFunction, g: &dyn Fn(usize, f64) -> f64) -> Result<f64> {
    let n = f.subintervals().ok_or_else(|| KirchhoffError::RepresentationMismatch("needs sampled snapshots".into()))?;
    if n % 2 != 0 {
        return Err(KirchhoffError::RepresentationMismatch("Simpson needs an even number of subintervals".into()));
    }
    let sw = simpson_weights(n);
    Ok(f.components()
        .iter()
        .enumerate()
        .map(|(e, vals)| w[e] * vals.iter().enumerate().map(|(j, v)| sw[j] * v * g(e, j as f64 / n as f64)).sum::<f64>())
        .sum())
}

/// Residual of `−∫ψ′⟨v,φ⟩_{ν_b} dt = ∫ψ⟨v b, ∂φ⟩_H dt + ψ(0)⟨v̊, φ⟩_{ν_b}`.
///
/// Needs a snapshot at every one of an even number of uniform time steps;
/// both integrals use Simpson's rule.
pub fn weak_solution_check(
    traj: &Trajectory,
    graph: &MetricGraph,
    b: &VelocityField,
    psi: &dyn Fn(f64) -> f64,
    dpsi: &dyn Fn(f64) -> f64,
    phi: &ContinuousFunction,
) -> Result<f64> {
    let k = traj.times.len() - 1;
    if k < 2 || k % 2 != 0 {
        return Err(KirchhoffError::RepresentationMismatch("needs an even number (≥ 2) of time steps".into()));
    }
    let span = traj.times[k] - traj.times[0];
    let tw: Vec<f64> = simpson_weights(k).iter().map(|w| w * span).collect();
    let nu = b.measure_weights();
    let cb: Vec<f64> = graph.edges().iter().enumerate().map(|(e, edge)| edge.conductance * b.b(e)).collect();
    let phi_v = phi.values();
    let dphi = phi_v.derivative();
    let mut lhs = 0.0;
    let mut flux = 0.0;
    for (i, (t, v)) in traj.times.iter().zip(&traj.snapshots).enumerate() {
        lhs -= tw[i] * dpsi(*t) * simpson_pairing(nu, v, &|e, x| phi_v.eval(e, x))?;
        flux += tw[i] * psi(*t) * simpson_pairing(&cb, v, &|e, x| dphi.eval(e, x))?;
    }
    let initial = psi(traj.times[0]) * simpson_pairing(nu, &traj.snapshots[0], &|e, x| phi_v.eval(e, x))?;
    Ok((lhs - flux - initial).abs())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualityReport {
    /// `max_t sup |w(t) − ẘ + ∫₀ᵗ ∂⊥w ds|`.
    pub residual: f64,
    /// `sup |∂⊥ẘ + u(0)|`.
    pub initial_mismatch: f64,
}

/// Builds `w(t) = ẘ + ∫₀ᵗ u ds` from a trajectory `u` with `u(0) = −∂⊥ẘ`
/// and checks the integral form `w(t) = ẘ − ∫₀ᵗ ∂⊥w ds`.
pub fn duality_check(traj: &Trajectory, graph: &MetricGraph, b: &VelocityField, w0: &EdgeFunction) -> Result<DualityReport> {
    let n = traj.snapshots[0]
        .subintervals()
        .ok_or_else(|| KirchhoffError::RepresentationMismatch("needs sampled snapshots".into()))?;
    let inv: Vec<f64> = b.coeffs().iter().map(|x| 1.0 / x).collect();
    let dbot = |f: &EdgeFunction| f.derivative().scale_edges(&inv);
    let w0 = w0.to_sampled(n);
    let mismatch = dbot(&w0).add(&traj.snapshots[0])?.max_abs();
    let scale = 1.0 + traj.snapshots[0].max_abs();
    if mismatch > 1e-9 * scale {
        return Err(KirchhoffError::InitialMismatch { residual: mismatch });
    }
    let mut w = w0.clone();
    let mut int_dw = EdgeFunction::zero(graph.edge_count()).to_sampled(n);
    let mut prev_dw = dbot(&w);
    let mut residual = 0.0f64;
    for k in 1..traj.times.len() {
        let h = traj.times[k] - traj.times[k - 1];
        let du = traj.snapshots[k].add(&traj.snapshots[k - 1])?.scale(0.5 * h);
        w = w.add(&du)?;
        let dw = dbot(&w);
        int_dw = int_dw.add(&dw.add(&prev_dw)?.scale(0.5 * h))?;
        prev_dw = dw;
        residual = residual.max(w.sub(&w0)?.add(&int_dw)?.max_abs());
    }
    Ok(DualityReport { residual, initial_mismatch: mismatch })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelReport {
    pub kernel_dim: usize,
    /// `‖P_ker v̊‖` before it is removed.
    pub initial_projection: f64,
    /// `max_t ‖P_ker v(t)‖` after removal.
    pub max_projection: f64,
}

/// A `ν_b`-orthonormal basis of `ker A^Θ` (edge-wise constants satisfying
/// the trace conditions), as columns.
pub fn kernel_basis(generator: &Generator) -> Result<DMatrix<f64>> {
    let m = generator.graph().edge_count();
    let dup = DMatrix::from_fn(2 * m, m, |i, j| if i / 2 == j { 1.0 } else { 0.0 });
    let k = null_space(&(generator.constraints() * dup), 1e-10);
    if k.ncols() == 0 {
        return Ok(k);
    }
    let w = generator.field().measure_weights();
    let gram = k.transpose() * DMatrix::from_fn(m, m, |i, j| if i == j { w[i] } else { 0.0 }) * &k;
    let l = gram.cholesky().ok_or(KirchhoffError::SingularGram)?.l();
    let inv = l.transpose().try_inverse().ok_or(KirchhoffError::SingularGram)?;
    Ok(k * inv)
}

fn kernel_coefficients(space: &GalerkinSpace, basis: &DMatrix<f64>, v: &Nodal) -> Vec<f64> {
    (0..basis.ncols())
        .map(|j| {
            let k: Vec<f64> = basis.column(j).iter().copied().collect();
            space.inner(v, &space.constants(&k))
        })
        .collect()
}

/// Evolves `v̊ − P_ker v̊` by Crank–Nicolson and reports `max_t ‖P_ker v(t)‖`.
/// Only the periodic catalog cases are eligible.
pub fn kernel_invariance_check(
    case: &CatalogCase,
    v0: &dyn Fn(usize, f64) -> f64,
    opts: CnOptions,
) -> Result<KernelReport> {
    if !case.kernel_invariant() {
        return Err(KirchhoffError::NotInCatalog(case.tag()));
    }
    let generator = case.generator()?;
    let basis = kernel_basis(&generator)?;
    let space = GalerkinSpace::from_options(generator, &opts);
    let mut v = space.project(v0)?;
    let coef = kernel_coefficients(&space, &basis, &v);
    let initial_projection = coef.iter().map(|c| c * c).sum::<f64>().sqrt();
    for (j, c) in coef.iter().enumerate() {
        for (e, ve) in v.iter_mut().enumerate() {
            ve.add_scalar_mut(-c * basis[(e, j)]);
        }
    }
    let stepper = CnStepper::new(&space, opts.dt)?;
    let steps = super::step_count(opts.dt, opts.t_end)?;
    let mut max_projection = 0.0f64;
    for k in 0..=steps {
        if k > 0 {
            v = stepper.step(&space, &v)?;
        }
        let c = kernel_coefficients(&space, &basis, &v);
        max_projection = max_projection.max(c.iter().map(|c| c * c).sum::<f64>().sqrt());
    }
    Ok(KernelReport { kernel_dim: basis.ncols(), initial_projection, max_projection })
}

/// Smallest sample value over all snapshots.
pub fn positivity_probe(traj: &Trajectory) -> f64 {
    traj.snapshots.iter().flat_map(|s| s.components().iter().flatten().copied()).fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::galerkin::evolve_cn;

    #[test]
    fn stationary_kernel_element_passes_weak_check_and_duality() {
        let case = CatalogCase::K1Identity;
        let gen = case.generator().unwrap();
        let phi0 = [1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, -0.5, 0.0];
        let v0 = |e: usize, _: f64| phi0[e];
        let opts = CnOptions { elements: 2, degree: 4, samples: 16, ..CnOptions::new(0.05, 1.0) };
        let traj = evolve_cn(&gen, &v0, opts).unwrap();
        let g = gen.graph();
        let phi = ContinuousFunction::edge_linear(g, &[0.2, -0.4, 1.0, 0.5, 0.0, 0.3]).unwrap();
        let r = weak_solution_check(&traj, g, gen.field(), &|t| (1.0 - t).powi(2), &|t| -2.0 * (1.0 - t), &phi).unwrap();
        assert!(r < 1e-12, "{r}");
        // −∂⊥ẘ = φ0 with ẘ linear on each edge
        let w0 = EdgeFunction::Poly((0..9).map(|e| vec![0.0, -phi0[e] * gen.field().b(e)]).collect());
        let d = duality_check(&traj, g, gen.field(), &w0).unwrap();
        assert!(d.residual < 1e-12, "{}", d.residual);
        let kernel = kernel_basis(&gen).unwrap();
        assert_eq!(kernel.ncols(), 4);
    }

    #[test]
    fn initial_mismatch_detected() {
        let gen = CatalogCase::K1Identity.generator().unwrap();
        let opts = CnOptions { elements: 2, degree: 4, samples: 16, ..CnOptions::new(0.1, 0.2) };
        let traj = evolve_cn(&gen, &|_, _| 1.0, opts).unwrap();
        let w0 = EdgeFunction::zero(9);
        assert!(matches!(duality_check(&traj, gen.graph(), gen.field(), &w0), Err(KirchhoffError::InitialMismatch { .. })));
    }

    #[test]
    fn non_catalog_kernel_case_rejected() {
        let r = kernel_invariance_check(&CatalogCase::TreeNilpotent, &|_, _| 0.0, CnOptions::new(0.1, 0.1));
        assert!(matches!(r, Err(KirchhoffError::NotInCatalog(_))));
    }
}
