//! Crank–Nicolson (Cayley) stepping for `∂_t v = A^Θ v` on a conforming
//! spectral-element subspace `V_h ⊂ D(A^Θ)`.
//!
//! Every edge carries `K` elements of degree `p` on Gauss–Lobatto nodes;
//! the edge traces are restricted to the null space of the trace conditions,
//! so `V_h` lies in the domain exactly. The Galerkin form of `λ − A^Θ`
//! inherits dissipativity, which makes each step non-expansive and exactly
//! isometric for unitary `Θ`. Edge interiors are eliminated locally; the
//! remaining `|E|`-dimensional trace system is dense.

use nalgebra::{DMatrix, DVector, LU, Dyn};

use super::scattering::diagnostics;
use super::{step_count, Generator, StepDiagnostics, Trajectory};
use crate::error::{KirchhoffError, Result};
use crate::graph::{EdgeFunction, End};
use crate::hodge::flux_at;
use crate::linalg::null_space;
use crate::quadrature::{gauss_legendre, gauss_lobatto, lagrange_derivatives, lagrange_values};

pub const DEFAULT_ELEMENTS: usize = 16;
pub const DEFAULT_DEGREE: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CnOptions {
    pub dt: f64,
    pub t_end: f64,
    pub elements: usize,
    pub degree: usize,
    /// Subintervals of the sampled snapshots.
    pub samples: usize,
    pub snapshot_every: usize,
}

impl CnOptions {
    pub fn new(dt: f64, t_end: f64) -> Self {
        CnOptions {
            dt,
            t_end,
            elements: DEFAULT_ELEMENTS,
            degree: DEFAULT_DEGREE,
            samples: DEFAULT_ELEMENTS * DEFAULT_DEGREE,
            snapshot_every: 1,
        }
    }

    /// `n/p` elements so that the nodes match an `n`-subinterval sampling.
    pub fn with_resolution(mut self, n: usize) -> Self {
        self.elements = (n / self.degree).max(1);
        self.samples = n;
        self
    }

    pub fn snapshots_every(mut self, k: usize) -> Self {
        self.snapshot_every = k.max(1);
        self
    }
}

/// Nodal values on every edge.
pub type Nodal = Vec<DVector<f64>>;

/// The discrete space and its matrices.
#[derive(Debug, Clone)]
pub struct GalerkinSpace {
    generator: Generator,
    elements: usize,
    degree: usize,
    /// Reference GLL nodes on [−1, 1].
    ref_nodes: Vec<f64>,
    /// Edge mass matrix `∫ ℓ_i ℓ_j dx` on [0, 1].
    mass: DMatrix<f64>,
    /// Edge convection matrix `∫ ℓ_i ℓ_j′ dx`.
    convection: DMatrix<f64>,
    /// `2|E| × |E|` basis of admissible trace vectors.
    traces: DMatrix<f64>,
}

/// `A_II⁻¹` and the static condensation data of one edge.
#[derive(Debug, Clone)]
struct EdgeSolver {
    /// `A_BI`.
    a_bi: DMatrix<f64>,
    interior: LU<f64, Dyn, Dyn>,
    /// `A_II⁻¹ A_IB`.
    x: DMatrix<f64>,
}

/// A factored Galerkin operator `σ M + τ C` (edge-weighted).
#[derive(Debug, Clone)]
pub struct GalerkinSolver {
    edges: Vec<EdgeSolver>,
    schur: LU<f64, Dyn, Dyn>,
}

impl GalerkinSpace {
    pub fn new(generator: Generator, elements: usize, degree: usize) -> Self {
        let (elements, degree) = (elements.max(1), degree.max(1));
        let (ref_nodes, _) = gauss_lobatto(degree);
        let (qx, qw) = gauss_legendre(degree + 2);
        let p1 = degree + 1;
        let mut m_ref = DMatrix::<f64>::zeros(p1, p1);
        let mut c_ref = DMatrix::<f64>::zeros(p1, p1);
        for (x, w) in qx.iter().zip(&qw) {
            let l = lagrange_values(&ref_nodes, *x);
            let dl = lagrange_derivatives(&ref_nodes, *x);
            for i in 0..p1 {
                for j in 0..p1 {
                    m_ref[(i, j)] += w * l[i] * l[j];
                    c_ref[(i, j)] += w * l[i] * dl[j];
                }
            }
        }
        let nn = elements * degree + 1;
        let h = 1.0 / elements as f64;
        let mut mass = DMatrix::zeros(nn, nn);
        let mut convection = DMatrix::zeros(nn, nn);
        for k in 0..elements {
            let o = k * degree;
            for i in 0..p1 {
                for j in 0..p1 {
                    mass[(o + i, o + j)] += 0.5 * h * m_ref[(i, j)];
                    convection[(o + i, o + j)] += c_ref[(i, j)];
                }
            }
        }
        let traces = null_space(generator.constraints(), 1e-11);
        GalerkinSpace { generator, elements, degree, ref_nodes, mass, convection, traces }
    }

    pub fn from_options(generator: Generator, opts: &CnOptions) -> Self {
        Self::new(generator, opts.elements, opts.degree)
    }

    pub fn generator(&self) -> &Generator {
        &self.generator
    }

    pub fn nodes_per_edge(&self) -> usize {
        self.elements * self.degree + 1
    }

    /// Position of local node `i` on [0, 1].
    pub fn node_position(&self, i: usize) -> f64 {
        let (k, j) = (i / self.degree, i % self.degree);
        let (k, j) = if k == self.elements { (k - 1, self.degree) } else { (k, j) };
        (k as f64 + 0.5 * (self.ref_nodes[j] + 1.0)) / self.elements as f64
    }

    /// Factors `Σ_e (σ c_e b_e² M + τ c_e b_e C)` restricted to `V_h`.
    pub fn factor(&self, sigma: f64, tau: f64) -> Result<GalerkinSolver> {
        let g = self.generator.graph();
        let b = self.generator.field();
        let nn = self.nodes_per_edge();
        let ni = nn - 2;
        let dim = self.traces.ncols();
        let mut schur = DMatrix::zeros(dim, dim);
        let mut edges = Vec::with_capacity(g.edge_count());
        let bidx = [0, nn - 1];
        for e in 0..g.edge_count() {
            let c = g.edge(e).conductance;
            let matrix = &self.mass * (sigma * c * b.b(e).powi(2)) + &self.convection * (tau * c * b.b(e));
            let a_ii = matrix.view((1, 1), (ni, ni)).into_owned();
            let a_ib = matrix.select_rows(&(1..nn - 1).collect::<Vec<_>>()).select_columns(&bidx);
            let a_bi = matrix.select_rows(&bidx).select_columns(&(1..nn - 1).collect::<Vec<_>>());
            let a_bb = matrix.select_rows(&bidx).select_columns(&bidx);
            let interior = a_ii.lu();
            let x = if ni == 0 {
                DMatrix::zeros(0, 2)
            } else {
                interior.solve(&a_ib).ok_or_else(|| KirchhoffError::SingularSystem("edge interior block".into()))?
            };
            let s_e = a_bb - &a_bi * &x;
            let z_e = self.traces.rows(2 * e, 2);
            schur += z_e.transpose() * s_e * z_e;
            edges.push(EdgeSolver { a_bi, interior, x });
        }
        let schur = schur.lu();
        if dim > 0 && !schur.is_invertible() {
            return Err(KirchhoffError::SingularSystem("trace Schur complement".into()));
        }
        Ok(GalerkinSolver { edges, schur })
    }

    /// Solves `a(y, φ) = ⟨F, φ⟩` for all `φ ∈ V_h`, with `F` given as nodal
    /// load vectors.
    pub fn solve(&self, solver: &GalerkinSolver, load: &Nodal) -> Result<Nodal> {
        let nn = self.nodes_per_edge();
        let ni = nn - 2;
        let dim = self.traces.ncols();
        let mut rhs = DVector::zeros(dim);
        let mut partial = Vec::with_capacity(load.len());
        for (e, (f, es)) in load.iter().zip(&solver.edges).enumerate() {
            let f_i = f.rows(1, ni).into_owned();
            let y0 = if ni == 0 {
                DVector::zeros(0)
            } else {
                es.interior.solve(&f_i).ok_or_else(|| KirchhoffError::SingularSystem("edge interior block".into()))?
            };
            let f_b = DVector::from_vec(vec![f[0], f[nn - 1]]);
            let r = f_b - &es.a_bi * &y0;
            rhs += self.traces.rows(2 * e, 2).transpose() * r;
            partial.push(y0);
        }
        let zeta = if dim == 0 {
            DVector::zeros(0)
        } else {
            solver.schur.solve(&rhs).ok_or_else(|| KirchhoffError::SingularSystem("trace Schur complement".into()))?
        };
        let t = &self.traces * zeta;
        Ok(partial
            .into_iter()
            .zip(&solver.edges)
            .enumerate()
            .map(|(e, (y0, es))| {
                let te = DVector::from_vec(vec![t[2 * e], t[2 * e + 1]]);
                let yi = y0 - &es.x * &te;
                let mut y = DVector::zeros(nn);
                y[0] = te[0];
                y[nn - 1] = te[1];
                y.rows_mut(1, ni).copy_from(&yi);
                y
            })
            .collect())
    }

    /// `c_e b_e² M v_e` on every edge, scaled by `s`.
    pub fn weighted_mass(&self, v: &Nodal, s: f64) -> Nodal {
        let w = self.generator.field().measure_weights();
        v.iter().enumerate().map(|(e, x)| &self.mass * x * (s * w[e])).collect()
    }

    /// Constrained `L²(ν_b)` projection of `f(edge, x)` onto `V_h`.
    pub fn project(&self, f: &dyn Fn(usize, f64) -> f64) -> Result<Nodal> {
        let solver = self.factor(1.0, 0.0)?;
        let w = self.generator.field().measure_weights();
        let (qx, qw) = gauss_legendre(self.degree + 4);
        let nn = self.nodes_per_edge();
        let h = 1.0 / self.elements as f64;
        let load: Nodal = (0..w.len())
            .map(|e| {
                let mut l = DVector::zeros(nn);
                for k in 0..self.elements {
                    for (x, qwt) in qx.iter().zip(&qw) {
                        let pos = (k as f64 + 0.5 * (x + 1.0)) * h;
                        let val = f(e, pos) * qwt * 0.5 * h * w[e];
                        for (i, li) in lagrange_values(&self.ref_nodes, *x).iter().enumerate() {
                            l[k * self.degree + i] += val * li;
                        }
                    }
                }
                l
            })
            .collect();
        self.solve(&solver, &load)
    }

    /// `⟨u, v⟩_{L²(ν_b)}`, exact on `V_h`.
    pub fn inner(&self, u: &Nodal, v: &Nodal) -> f64 {
        let w = self.generator.field().measure_weights();
        u.iter().zip(v).enumerate().map(|(e, (a, b))| w[e] * (a.transpose() * &self.mass * b)[(0, 0)]).sum()
    }

    /// Edge-wise constants as a nodal function.
    pub fn constants(&self, c: &[f64]) -> Nodal {
        c.iter().map(|&x| DVector::from_element(self.nodes_per_edge(), x)).collect()
    }

    pub fn diagnostics(&self, v: &Nodal, t: f64) -> StepDiagnostics {
        let g = self.generator.graph();
        let b = self.generator.field();
        let ones = self.constants(&vec![1.0; g.edge_count()]);
        let nn = self.nodes_per_edge();
        let traces = EdgeFunction::Poly(v.iter().map(|x| vec![x[0], x[nn - 1] - x[0]]).collect());
        StepDiagnostics {
            t,
            norm: self.inner(v, v).max(0.0).sqrt(),
            mass: self.inner(v, &ones),
            fluxes: g.boundary().iter().map(|&q| flux_at(g, b, &traces, q)).collect(),
        }
    }

    /// Samples at `n + 1` uniform points per edge.
    pub fn sample(&self, v: &Nodal, n: usize) -> EdgeFunction {
        let k = self.elements;
        EdgeFunction::from_fn(v.len(), n.max(1), |e, x| {
            let el = ((x * k as f64).floor() as usize).min(k - 1);
            let xi = 2.0 * (x * k as f64 - el as f64) - 1.0;
            lagrange_values(&self.ref_nodes, xi)
                .iter()
                .enumerate()
                .map(|(i, l)| l * v[e][el * self.degree + i])
                .sum()
        })
    }

    /// Trace `v_e(end)`.
    pub fn trace(&self, v: &Nodal, e: usize, end: End) -> f64 {
        match end {
            End::Tail => v[e][0],
            End::Head => v[e][self.nodes_per_edge() - 1],
        }
    }
}

/// Cayley stepping `v ↦ (λ + A)(λ − A)⁻¹ v` with `λ = 2/dt`.
#[derive(Debug, Clone)]
pub struct CnStepper {
    solver: GalerkinSolver,
    lambda: f64,
}

impl CnStepper {
    pub fn new(space: &GalerkinSpace, dt: f64) -> Result<Self> {
        let lambda = 2.0 / dt;
        Ok(CnStepper { solver: space.factor(lambda, 1.0)?, lambda })
    }

    pub fn step(&self, space: &GalerkinSpace, v: &Nodal) -> Result<Nodal> {
        let load = space.weighted_mass(v, self.lambda);
        let y = space.solve(&self.solver, &load)?;
        Ok(y.iter().zip(v).map(|(y, v)| y * 2.0 - v).collect())
    }
}

/// Crank–Nicolson evolution of the projection of `v0` onto `V_h`.
pub fn evolve_cn(generator: &Generator, v0: &dyn Fn(usize, f64) -> f64, opts: CnOptions) -> Result<Trajectory> {
    let space = GalerkinSpace::from_options(generator.clone(), &opts);
    let v = space.project(v0)?;
    evolve_nodal(&space, v, &opts)
}

/// As [`evolve_cn`] for an edge function, which must lie in `D(A^Θ)`.
pub fn evolve_cn_from(generator: &Generator, v0: &EdgeFunction, opts: CnOptions) -> Result<Trajectory> {
    let residual = generator.domain_residual(v0)?;
    if residual > super::THETA_DOMAIN_TOL * (1.0 + v0.max_abs()) {
        return Err(KirchhoffError::NotInDomain { residual });
    }
    evolve_cn(generator, &|e, x| v0.eval(e, x), opts)
}

pub fn evolve_nodal(space: &GalerkinSpace, mut v: Nodal, opts: &CnOptions) -> Result<Trajectory> {
    let steps = step_count(opts.dt, opts.t_end)?;
    let stepper = CnStepper::new(space, opts.dt)?;
    let every = opts.snapshot_every.max(1);
    let mut traj = Trajectory { times: vec![], snapshots: vec![], diagnostics: vec![] };
    for k in 0..=steps {
        let t = k as f64 * opts.dt;
        if k > 0 {
            v = stepper.step(space, &v)?;
        }
        traj.diagnostics.push(space.diagnostics(&v, t));
        if k % every == 0 || k == steps {
            traj.times.push(t);
            traj.snapshots.push(space.sample(&v, opts.samples));
        }
    }
    Ok(traj)
}

/// Sampled-snapshot diagnostics, for trajectories produced elsewhere.
pub fn sampled_diagnostics(generator: &Generator, v: &EdgeFunction, t: f64) -> Result<StepDiagnostics> {
    diagnostics(generator.graph(), generator.field(), v, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::CatalogCase;

    #[test]
    fn mass_and_convection_matrices() {
        let gen = CatalogCase::Interval { theta: 0.0 }.generator().unwrap();
        let s = GalerkinSpace::new(gen, 3, 4);
        let ones = DVector::from_element(s.nodes_per_edge(), 1.0);
        let x = DVector::from_fn(s.nodes_per_edge(), |i, _| s.node_position(i));
        assert!(((ones.transpose() * &s.mass * &ones)[(0, 0)] - 1.0).abs() < 1e-14);
        assert!(((x.transpose() * &s.mass * &x)[(0, 0)] - 1.0 / 3.0).abs() < 1e-14);
        // ∫ x · (x)′ = 1/2
        assert!(((x.transpose() * &s.convection * &x)[(0, 0)] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn projection_reproduces_domain_polynomials() {
        let gen = CatalogCase::Interval { theta: -1.0 }.generator().unwrap();
        let s = GalerkinSpace::new(gen, 4, 4);
        let f = |_: usize, x: f64| 1.0 + x * (1.0 - x) * (2.0 + x);
        let v = s.project(&f).unwrap();
        for i in 0..s.nodes_per_edge() {
            assert!((v[0][i] - f(0, s.node_position(i))).abs() < 1e-12);
        }
    }

    #[test]
    fn unitary_case_is_isometric() {
        let gen = CatalogCase::K1Identity.generator().unwrap();
        let opts = CnOptions { elements: 4, degree: 6, samples: 24, ..CnOptions::new(1e-2, 0.5) };
        let bump = |e: usize, x: f64| if e == 7 { (4.0 * x * (1.0 - x)).powi(4) } else { 0.0 };
        let traj = evolve_cn(&gen, &bump, opts).unwrap();
        let n0 = traj.diagnostics[0].norm;
        assert!(n0 > 0.1);
        for d in &traj.diagnostics {
            assert!((d.norm - n0).abs() < 1e-12);
        }
    }
}
