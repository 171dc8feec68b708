//! Boundary quadruples `(H−, H+, G−, G+)` for `(−★_b⁻¹∂_B, 𝒞_B)`.
//!
//! Everything lives in the ambient space `H̃ = ℓ(B̊) ⊕ ℓ(B̌) ⊕ ℓ(B̂) ⊕ ker ∂⊥`
//! with weights `W = (1, |n_B b|, |n_B b|, 1)`; the kernel part uses a
//! ν_b-orthonormal basis of `★_b⁻¹(ker ∂*)`. `H∓` are the `W`-orthogonal
//! complements of one removed direction `d∓` each, realised by the
//! projections `P∓`.

use std::f64::consts::SQRT_2;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::decomp::{apply_dbot, key_decompose_with, KeyDecomposition};
use crate::elliptic::{harmonic_extend, normal_derivative, solve_neumann, NeumannProblem};
use crate::error::{KirchhoffError, Result};
use crate::graph::{l2nu_inner, ContinuousFunction, EdgeFunction, MetricGraph};
use crate::hodge::{cycle_basis, flux_at, hodge_decompose, star_inv, CycleBasis, HodgeSplit, VelocityField};
use crate::linalg::spectral_norm;

pub const TAU_PART: f64 = 1e-12;
pub const CONTRACTION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    Minus,
    Plus,
}

/// `B̊ = {n_B b = 0}`, `B̌ = {n_B b < 0}`, `B̂ = {n_B b > 0}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryPartition {
    pub neutral: Vec<usize>,
    pub inflow: Vec<usize>,
    pub outflow: Vec<usize>,
    /// `n_B b` at every vertex.
    pub normal: Vec<f64>,
}

pub fn boundary_partition(graph: &MetricGraph, b: &VelocityField) -> BoundaryPartition {
    let normal = b.vertex_balance().to_vec();
    let scale = 1.0 + graph.edges().iter().enumerate().fold(0.0f64, |m, (k, e)| m.max((e.conductance * b.b(k)).abs()));
    let tol = TAU_PART * scale;
    let mut p = BoundaryPartition { neutral: vec![], inflow: vec![], outflow: vec![], normal };
    for &q in graph.boundary() {
        let n = p.normal[q];
        if n.abs() <= tol {
            p.neutral.push(q);
        } else if n < 0.0 {
            p.inflow.push(q);
        } else {
            p.outflow.push(q);
        }
    }
    p
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadrupleSpaces {
    graph: MetricGraph,
    b: VelocityField,
    basis: CycleBasis,
    b_split: HodgeSplit,
    partition: BoundaryPartition,
    /// Columns: ν_b-orthonormal basis of `ker ∂⊥`.
    kernel: DMatrix<f64>,
    weights: DVector<f64>,
    d_minus: DVector<f64>,
    d_plus: DVector<f64>,
    p_minus: DMatrix<f64>,
    p_plus: DMatrix<f64>,
}

fn w_projection(d: &DVector<f64>, w: &DVector<f64>) -> DMatrix<f64> {
    let wd = d.component_mul(w);
    let n = d.len();
    DMatrix::identity(n, n) - d * wd.transpose() / d.dot(&wd)
}

pub fn build_quadruple(graph: &MetricGraph, b: &VelocityField) -> Result<QuadrupleSpaces> {
    b.require_valid(graph)?;
    let basis = cycle_basis(graph);
    let b_split = hodge_decompose(graph, &basis, &b.as_form())?;
    let partition = boundary_partition(graph, b);
    let inflow: f64 = partition.inflow.iter().map(|&q| partition.normal[q].abs()).sum();
    let outflow: f64 = partition.outflow.iter().map(|&q| partition.normal[q].abs()).sum();
    assert!(
        (inflow - outflow).abs() <= 1e-10 * (1.0 + inflow),
        "divergence-free field must balance inflow and outflow"
    );
    let m = graph.edge_count();
    let r = basis.len();
    // images (χ/c)/b have ν_b-Gram equal to the cycle Gram
    let images = DMatrix::from_fn(m, r, |e, j| basis.forms[j][e] / b.b(e));
    let kernel = if r == 0 {
        images
    } else {
        let l = basis.gram.clone().cholesky().ok_or(KirchhoffError::SingularGram)?.l();
        let lt_inv = l.transpose().try_inverse().ok_or(KirchhoffError::SingularGram)?;
        images * lt_inv
    };
    let nb = partition.neutral.len();
    let (ni, no) = (partition.inflow.len(), partition.outflow.len());
    let n = nb + ni + no + r;
    let mut weights = DVector::from_element(n, 1.0);
    for (i, &q) in partition.inflow.iter().chain(&partition.outflow).enumerate() {
        weights[nb + i] = partition.normal[q].abs();
    }
    let vb: Vec<f64> = b_split.v.iter().zip(b.coeffs()).map(|(v, bb)| v / bb).collect();
    let vcoords = coords_with(&kernel, b, &vb);
    let mut d_minus = DVector::zeros(n);
    let mut d_plus = DVector::zeros(n);
    for i in 0..nb {
        d_minus[i] = 1.0 / SQRT_2;
        d_plus[i] = 1.0 / SQRT_2;
    }
    for i in 0..ni {
        d_minus[nb + i] = 1.0;
    }
    for i in 0..no {
        d_plus[nb + ni + i] = -1.0;
    }
    for j in 0..r {
        d_minus[nb + ni + no + j] = -vcoords[j] / SQRT_2;
        d_plus[nb + ni + no + j] = -vcoords[j] / SQRT_2;
    }
    let p_minus = w_projection(&d_minus, &weights);
    let p_plus = w_projection(&d_plus, &weights);
    Ok(QuadrupleSpaces {
        graph: graph.clone(),
        b: b.clone(),
        basis,
        b_split,
        partition,
        kernel,
        weights,
        d_minus,
        d_plus,
        p_minus,
        p_plus,
    })
}

fn coords_with(kernel: &DMatrix<f64>, b: &VelocityField, x: &[f64]) -> DVector<f64> {
    let wx = DVector::from_iterator(x.len(), x.iter().zip(b.measure_weights()).map(|(x, w)| x * w));
    kernel.transpose() * wx
}

impl QuadrupleSpaces {
    pub fn graph(&self) -> &MetricGraph {
        &self.graph
    }

    pub fn field(&self) -> &VelocityField {
        &self.b
    }

    pub fn basis(&self) -> &CycleBasis {
        &self.basis
    }

    /// `b = ∂h + v`.
    pub fn field_split(&self) -> &HodgeSplit {
        &self.b_split
    }

    pub fn partition(&self) -> &BoundaryPartition {
        &self.partition
    }

    /// Dimension of the ambient space `H̃`.
    pub fn ambient_dim(&self) -> usize {
        self.weights.len()
    }

    /// `dim H− = dim H+`.
    pub fn dim(&self) -> usize {
        self.ambient_dim() - 1
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    pub fn kernel_basis(&self) -> &DMatrix<f64> {
        &self.kernel
    }

    pub fn projection(&self, side: Side) -> &DMatrix<f64> {
        match side {
            Side::Minus => &self.p_minus,
            Side::Plus => &self.p_plus,
        }
    }

    pub fn removed_direction(&self, side: Side) -> &DVector<f64> {
        match side {
            Side::Minus => &self.d_minus,
            Side::Plus => &self.d_plus,
        }
    }

    fn boundary_order(&self) -> impl Iterator<Item = usize> + '_ {
        self.partition.neutral.iter().chain(&self.partition.inflow).chain(&self.partition.outflow).copied()
    }

    /// Coordinate names: boundary vertex ids, then `ker0, ker1, …`.
    pub fn labels(&self) -> Vec<String> {
        self.boundary_order()
            .map(|q| self.graph.vertex_id(q).to_string())
            .chain((0..self.kernel.ncols()).map(|j| format!("ker{j}")))
            .collect()
    }

    /// `W`-weighted inner product on `H̃`.
    pub fn inner(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        x.component_mul(&self.weights).dot(y)
    }

    pub fn norm(&self, x: &DVector<f64>) -> f64 {
        self.inner(x, x).max(0.0).sqrt()
    }

    /// Kernel coordinates `Kᵀ diag(c b²) x` of an edge-wise constant.
    pub fn coords(&self, x: &[f64]) -> DVector<f64> {
        coords_with(&self.kernel, &self.b, x)
    }

    /// Edge constants `K α`.
    pub fn kernel_element(&self, alpha: &[f64]) -> Vec<f64> {
        let a = DVector::from_column_slice(alpha);
        (&self.kernel * a).iter().copied().collect()
    }

    /// Largest deviation of `P∓` from being `W`-orthogonal projections.
    pub fn projection_residual(&self) -> f64 {
        let w = DMatrix::from_diagonal(&self.weights);
        [&self.p_minus, &self.p_plus]
            .iter()
            .map(|p| {
                let idem = (*p * *p - *p).amax();
                let sym = (&w * *p - p.transpose() * &w).amax();
                idem.max(sym)
            })
            .fold(0.0, f64::max)
    }

    pub fn decompose(&self, f: &EdgeFunction) -> Result<KeyDecomposition> {
        key_decompose_with(&self.graph, &self.b, &self.basis, f)
    }

    /// The unprojected vector of `G∓ f` for a given decomposition of `f`.
    pub fn raw_g(&self, side: Side, f: &EdgeFunction, k: &KeyDecomposition) -> Result<DVector<f64>> {
        let g = &self.graph;
        let n = self.ambient_dim();
        let mut out = DVector::zeros(n);
        let sign = if side == Side::Minus { 1.0 } else { -1.0 };
        let nrm = &self.partition.normal;
        let mut i = 0;
        for &q in &self.partition.neutral {
            out[i] = (k.g.at_vertex(q) + sign * flux_at(g, &self.b, f, q)) / SQRT_2;
            i += 1;
        }
        for &q in &self.partition.inflow {
            out[i] = match side {
                Side::Minus => normal_derivative(g, &k.u, q)?,
                Side::Plus => flux_at(g, &self.b, f, q),
            } / nrm[q].abs();
            i += 1;
        }
        for &q in &self.partition.outflow {
            out[i] = match side {
                Side::Minus => flux_at(g, &self.b, f, q),
                Side::Plus => normal_derivative(g, &k.u, q)?,
            } / nrm[q].abs();
            i += 1;
        }
        let wz: Vec<f64> = k.w.iter().zip(&k.z).map(|(w, z)| (w + sign * z) / SQRT_2).collect();
        let c = self.coords(&wz);
        for j in 0..c.len() {
            out[i + j] = c[j];
        }
        Ok(out)
    }

    /// `G∓ f` (projected), from the default decomposition.
    pub fn apply_g(&self, side: Side, f: &EdgeFunction) -> Result<DVector<f64>> {
        self.apply_g_shifted(side, f, 0.0)
    }

    /// `G∓ f` computed from the decomposition shifted by the gauge constant `s`.
    pub fn apply_g_shifted(&self, side: Side, f: &EdgeFunction, s: f64) -> Result<DVector<f64>> {
        let mut k = self.decompose(f)?;
        if s != 0.0 {
            k = k.shifted(&self.graph, &self.b, &self.b_split, s)?;
        }
        Ok(self.projection(side) * self.raw_g(side, f, &k)?)
    }

    /// Both G maps at once from one decomposition.
    pub fn apply_both(&self, f: &EdgeFunction) -> Result<(DVector<f64>, DVector<f64>)> {
        let k = self.decompose(f)?;
        Ok((
            &self.p_minus * self.raw_g(Side::Minus, f, &k)?,
            &self.p_plus * self.raw_g(Side::Plus, f, &k)?,
        ))
    }
}

/// Free-standing form of [`QuadrupleSpaces::apply_g`].
pub fn apply_g(spaces: &QuadrupleSpaces, side: Side, f: &EdgeFunction) -> Result<DVector<f64>> {
    spaces.apply_g(side, f)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadrupleReport {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

/// `|(−⟨∂⊥f1, f2⟩ − ⟨f1, ∂⊥f2⟩) − (⟨G+f1, G+f2⟩ − ⟨G−f1, G−f2⟩)|`.
pub fn quadruple_identity_check(spaces: &QuadrupleSpaces, f1: &EdgeFunction, f2: &EdgeFunction) -> Result<QuadrupleReport> {
    let (g, b) = (&spaces.graph, &spaces.b);
    let d1 = apply_dbot(g, b, f1)?;
    let d2 = apply_dbot(g, b, f2)?;
    let lhs = -l2nu_inner(g, b, &d1, f2)? - l2nu_inner(g, b, f1, &d2)?;
    let (m1, p1) = spaces.apply_both(f1)?;
    let (m2, p2) = spaces.apply_both(f2)?;
    let rhs = spaces.inner(&p1, &p2) - spaces.inner(&m1, &m2);
    Ok(QuadrupleReport { lhs, rhs, residual: (lhs - rhs).abs() })
}

/// A domain element `f` with `G−f = P−F−` and `G+f = P+F+`.
pub fn construct_preimage(spaces: &QuadrupleSpaces, f_minus: &DVector<f64>, f_plus: &DVector<f64>) -> Result<EdgeFunction> {
    let n = spaces.ambient_dim();
    for v in [f_minus, f_plus] {
        if v.len() != n {
            return Err(KirchhoffError::DimensionMismatch { expected: n, got: v.len() });
        }
    }
    let g = &spaces.graph;
    let b = &spaces.b;
    let part = &spaces.partition;
    let nrm = &part.normal;
    let (n0, ni, no) = (part.neutral.len(), part.inflow.len(), part.outflow.len());
    let kstart = n0 + ni + no;
    let r = n - kstart;
    let km: Vec<f64> = (0..r).map(|j| f_minus[kstart + j]).collect();
    let kp: Vec<f64> = (0..r).map(|j| f_plus[kstart + j]).collect();
    let diff = spaces.kernel_element(&km.iter().zip(&kp).map(|(a, c)| (a - c) / SQRT_2).collect::<Vec<_>>());
    let sum = spaces.kernel_element(&km.iter().zip(&kp).map(|(a, c)| (a + c) / SQRT_2).collect::<Vec<_>>());
    let v = &spaces.b_split.v;
    let v_energy: f64 = g.edges().iter().zip(v).map(|(e, x)| e.conductance * x * x).sum();
    let diff_mass: f64 = diff.iter().zip(b.measure_weights()).map(|(x, w)| x * w).sum();
    let mut rhs = diff_mass;
    let mut denom = n0 as f64 + v_energy;
    for i in 0..n0 {
        rhs -= (f_minus[i] - f_plus[i]) / SQRT_2;
    }
    for (i, &q) in part.inflow.iter().enumerate() {
        rhs += nrm[q] * f_minus[n0 + i];
        denom += nrm[q].abs();
    }
    for (i, &q) in part.outflow.iter().enumerate() {
        rhs -= nrm[q] * f_plus[n0 + ni + i];
        denom += nrm[q].abs();
    }
    let c = rhs / denom;
    let z: Vec<f64> = diff.iter().zip(v).zip(b.coeffs()).map(|((d, v), bb)| d - c * v / bb).collect();
    let w = sum;
    // Neumann data and boundary values of g, in the order of graph.boundary()
    let bnd = g.boundary();
    let mut eta = vec![0.0; bnd.len()];
    let mut gvals = vec![0.0; bnd.len()];
    let pos = |q: usize| bnd.iter().position(|&x| x == q).unwrap();
    for (i, &q) in part.neutral.iter().enumerate() {
        eta[pos(q)] = (f_minus[i] - f_plus[i]) / SQRT_2 + c;
        gvals[pos(q)] = (f_minus[i] + f_plus[i]) / SQRT_2;
    }
    for (i, &q) in part.inflow.iter().enumerate() {
        let j = n0 + i;
        eta[pos(q)] = -nrm[q] * (f_minus[j] + c);
        gvals[pos(q)] = f_minus[j] - f_plus[j] + c;
    }
    for (i, &q) in part.outflow.iter().enumerate() {
        let j = n0 + ni + i;
        eta[pos(q)] = nrm[q] * (f_plus[j] + c);
        gvals[pos(q)] = f_minus[j] - f_plus[j] - c;
    }
    let u = solve_neumann(&NeumannProblem { graph: g, b, z, eta })?;
    let gf = if bnd.is_empty() { ContinuousFunction::constant(g, 0.0) } else { harmonic_extend(g, &gvals)? };
    let du = star_inv(g, b, &u.values().derivative())?;
    let f = gf.values().add(&du)?;
    Ok(f.add_affine(&w, &vec![0.0; w.len()]))
}

/// Operator norm of `P+ Θ P−` between the weighted spaces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContractionReport {
    pub norm: f64,
    pub is_contraction: bool,
}

/// `Θ` is given as an ambient `n × n` matrix; only `P+ Θ P−` matters.
pub fn check_contraction(spaces: &QuadrupleSpaces, theta: &DMatrix<f64>) -> Result<ContractionReport> {
    let n = spaces.ambient_dim();
    if theta.nrows() != n || theta.ncols() != n {
        return Err(KirchhoffError::DimensionMismatch { expected: n, got: theta.nrows().max(theta.ncols()) });
    }
    let eff = &spaces.p_plus * theta * &spaces.p_minus;
    let s = spaces.weights.map(f64::sqrt);
    let whitened = DMatrix::from_fn(n, n, |i, j| s[i] * eff[(i, j)] / s[j]);
    let norm = spectral_norm(&whitened);
    Ok(ContractionReport { norm, is_contraction: norm <= 1.0 + CONTRACTION_TOL })
}

/// Reads `rows,cols` followed by `rows` comma-separated lines.
pub fn theta_from_csv(text: &str) -> Result<DMatrix<f64>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut records = reader.records();
    let parse_err = |e: &dyn std::fmt::Display| KirchhoffError::Parse(e.to_string());
    let header = records.next().ok_or_else(|| KirchhoffError::Parse("empty matrix file".into()))?.map_err(|e| parse_err(&e))?;
    if header.len() != 2 {
        return Err(KirchhoffError::Parse("header must be `rows,cols`".into()));
    }
    let rows: usize = header[0].parse().map_err(|e| parse_err(&e))?;
    let cols: usize = header[1].parse().map_err(|e| parse_err(&e))?;
    let mut data = Vec::with_capacity(rows * cols);
    for rec in records {
        let rec = rec.map_err(|e| parse_err(&e))?;
        if rec.len() != cols {
            return Err(KirchhoffError::DimensionMismatch { expected: cols, got: rec.len() });
        }
        for x in rec.iter() {
            data.push(x.parse::<f64>().map_err(|e| parse_err(&e))?);
        }
    }
    if data.len() != rows * cols {
        return Err(KirchhoffError::DimensionMismatch { expected: rows, got: data.len() / cols.max(1) });
    }
    Ok(DMatrix::from_row_slice(rows, cols, &data))
}

pub fn theta_to_csv(theta: &DMatrix<f64>) -> String {
    let mut out = format!("{},{}\n", theta.nrows(), theta.ncols());
    for i in 0..theta.nrows() {
        let row: Vec<String> = (0..theta.ncols()).map(|j| crate::report::fmt17(theta[(i, j)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// A labelled boundary vector for JSON output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryVector {
    pub labels: Vec<String>,
    pub values: Vec<f64>,
}

impl BoundaryVector {
    pub fn new(spaces: &QuadrupleSpaces, v: &DVector<f64>) -> Self {
        BoundaryVector { labels: spaces.labels(), values: v.iter().copied().collect() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::hodge::check_field;
    use crate::sampling::random_domain_poly;
    use crate::sierpinski::{sg_graph, sg_harmonic, sg_velocity};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spaces_of(g: &MetricGraph) -> QuadrupleSpaces {
        let b = check_field(g, &g.field("b").unwrap()).unwrap();
        build_quadruple(g, &b).unwrap()
    }

    #[test]
    fn interval_maps() {
        let s = spaces_of(&fixtures::interval_graph());
        assert_eq!(s.dim(), 1);
        let f = EdgeFunction::poly(vec![vec![0.5, 1.0, -2.0]]).unwrap();
        let gm = s.apply_g(Side::Minus, &f).unwrap();
        let gp = s.apply_g(Side::Plus, &f).unwrap();
        // coordinates (q0 ∈ B̌, q1 ∈ B̂)
        assert!((gm - DVector::from_vec(vec![0.0, -0.5])).amax() < 1e-14);
        assert!((gp - DVector::from_vec(vec![-0.5, 0.0])).amax() < 1e-14);
    }

    #[test]
    fn star_tree_g_minus() {
        let s = spaces_of(&fixtures::star_tree_graph());
        assert_eq!(s.labels(), vec!["q0", "q1", "q2"]);
        let f = EdgeFunction::poly(vec![vec![1.0, 2.0], vec![3.0, -1.0, 0.5], vec![3.0, 4.0]]).unwrap();
        let f = crate::decomp::project_to_domain(s.graph(), s.field(), &f).unwrap();
        let gm = s.apply_g(Side::Minus, &f).unwrap();
        assert!(gm[0].abs() < 1e-14);
        assert!((gm[1] - f.eval(1, 1.0)).abs() < 1e-13);
        assert!((gm[2] - f.eval(2, 1.0)).abs() < 1e-13);
    }

    #[test]
    fn degenerate_weights_on_gasket() {
        let sg = sg_graph(2, false).unwrap();
        let h = sg_harmonic(&sg, [0.0, -1.0 / 6.0, 1.0 / 6.0]);
        let b = sg_velocity(&sg, &h).unwrap();
        let s = build_quadruple(&sg.graph, &b).unwrap();
        assert_eq!(&s.labels()[..3], &["q0", "q1", "q2"]);
        for (i, w) in [1.0, 0.5, 0.5].iter().enumerate() {
            assert!((s.weights()[i] - w).abs() < 1e-12);
        }
        assert!(s.projection_residual() < 1e-12);
    }

    #[test]
    fn identity_and_round_trip_on_k1() {
        let g = fixtures::k1_graph();
        let s = spaces_of(&g);
        assert_eq!(s.dim(), 3);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let f1 = random_domain_poly(&g, s.field(), &mut rng, 4).unwrap();
            let f2 = random_domain_poly(&g, s.field(), &mut rng, 5).unwrap();
            assert!(quadruple_identity_check(&s, &f1, &f2).unwrap().residual < 1e-10);
            let a = s.apply_g(Side::Minus, &f1).unwrap();
            let bshift = s.apply_g_shifted(Side::Minus, &f1, 0.37).unwrap();
            assert!((a - bshift).amax() < 1e-12);
        }
        let fm = DVector::from_vec(vec![0.3, -1.0, 0.25, 2.0]);
        let fp = DVector::from_vec(vec![1.0, 0.5, -0.5, 0.0]);
        let f = construct_preimage(&s, &fm, &fp).unwrap();
        let (gm, gp) = s.apply_both(&f).unwrap();
        assert!((gm - s.projection(Side::Minus) * &fm).amax() < 1e-10);
        assert!((gp - s.projection(Side::Plus) * &fp).amax() < 1e-10);
    }

    #[test]
    fn round_trip_with_boundary() {
        for g in [fixtures::interval_graph(), fixtures::star_tree_graph()] {
            let s = spaces_of(&g);
            let n = s.ambient_dim();
            let fm = DVector::from_fn(n, |i, _| 0.3 * i as f64 - 0.7);
            let fp = DVector::from_fn(n, |i, _| 1.1 - 0.4 * i as f64);
            let f = construct_preimage(&s, &fm, &fp).unwrap();
            let (gm, gp) = s.apply_both(&f).unwrap();
            assert!((gm - s.projection(Side::Minus) * &fm).amax() < 1e-10);
            assert!((gp - s.projection(Side::Plus) * &fp).amax() < 1e-10);
        }
    }

    #[test]
    fn contraction_checks() {
        let s = spaces_of(&fixtures::interval_graph());
        let zero = DMatrix::zeros(2, 2);
        assert!(check_contraction(&s, &zero).unwrap().is_contraction);
        let big = DMatrix::from_row_slice(2, 2, &[0.0, 1.5, 0.0, 0.0]);
        assert!(!check_contraction(&s, &big).unwrap().is_contraction);
        assert!(matches!(check_contraction(&s, &DMatrix::zeros(3, 3)), Err(KirchhoffError::DimensionMismatch { .. })));
        let tree = spaces_of(&fixtures::star_tree_graph());
        let theta = DMatrix::from_row_slice(3, 3, &[0.0, -0.5, -0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let r = check_contraction(&tree, &theta).unwrap();
        assert!((r.norm - 1.0).abs() < 1e-12 && r.is_contraction);
    }

    #[test]
    fn csv_round_trip() {
        let t = DMatrix::from_row_slice(2, 3, &[1.0, -0.5, 0.25, 0.0, 1e-3, 7.0]);
        assert_eq!(theta_from_csv(&theta_to_csv(&t)).unwrap(), t);
        assert!(theta_from_csv("2,2\n1,2\n3\n").is_err());
    }
}
