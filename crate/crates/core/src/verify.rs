//! The acceptance suite: eleven criteria, each a list of numeric checks
//! against fixed tolerances, run on built-in fixtures only.

use std::f64::consts::PI;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::decomp::{ibp_check, key_decompose};
use crate::elliptic::normal_derivative;
use crate::error::Result;
use crate::fixtures;
use crate::generator::checks::{kernel_invariance_check, mass_balance_check, weak_solution_check};
use crate::generator::galerkin::{evolve_cn, CnOptions, CnStepper, GalerkinSpace};
use crate::generator::scattering::{evolve_scattering, ScatteringOptions};
use crate::generator::{CatalogCase, Trajectory};
use crate::graph::{l2nu_norm, ContinuousFunction, EdgeFunction, End, MetricGraph};
use crate::hodge::{check_field, star_inv, VelocityField};
use crate::quadruple::{build_quadruple, construct_preimage, quadruple_identity_check, Side};
use crate::sampling::{random_domain_poly, random_vector};
use crate::sierpinski::{convergence_experiment, cylindrical_solution, sg_graph, sg_harmonic, CylindricalCase};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    /// `value ≥ bound` instead of `value ≤ bound`.
    pub at_least: bool,
    /// Reported, but not part of the verdict.
    pub informational: bool,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check { name: name.into(), value, bound, at_least: false, informational: false, passed: value <= bound }
    }

    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check { name: name.into(), value, bound, at_least: true, informational: false, passed: value >= bound }
    }

    fn note(mut self) -> Self {
        self.informational = true;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionReport {
    pub id: usize,
    pub title: String,
    pub passed: bool,
    pub seconds: f64,
    pub checks: Vec<Check>,
    pub error: Option<String>,
}

impl CriterionReport {
    /// `PASS|FAIL <id> <title>` followed by the failing checks.
    pub fn summary_line(&self) -> String {
        let mut s = format!("{} {:>2} {}", if self.passed { "PASS" } else { "FAIL" }, self.id, self.title);
        for c in self.checks.iter().filter(|c| !c.passed && !c.informational) {
            let op = if c.at_least { "≥" } else { "≤" };
            s.push_str(&format!("\n        {}: {:.3e} (need {op} {:.1e})", c.name, c.value, c.bound));
        }
        if let Some(e) = &self.error {
            s.push_str(&format!("\n        error: {e}"));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub criteria: Vec<CriterionReport>,
}

pub const CRITERIA: [(usize, &str); 11] = [
    (1, "K1 closed-form decomposition identities"),
    (2, "integration by parts"),
    (3, "quadruple identity and gauge invariance"),
    (4, "surjectivity round trip"),
    (5, "interval dynamics"),
    (6, "two-circle dynamics"),
    (7, "conservation"),
    (8, "kernel and stationarity"),
    (9, "gasket normal derivatives"),
    (10, "cylindrical solutions and convergence"),
    (11, "weak-sense non-uniqueness"),
];

pub fn run_criterion(id: usize) -> CriterionReport {
    let title = CRITERIA.iter().find(|c| c.0 == id).map_or("unknown criterion", |c| c.1).to_string();
    let start = Instant::now();
    let result = match id {
        1 => criterion_1(),
        2 => criterion_2(),
        3 => criterion_3(),
        4 => criterion_4(),
        5 => criterion_5(),
        6 => criterion_6(),
        7 => criterion_7(),
        8 => criterion_8(),
        9 => criterion_9(),
        10 => criterion_10(),
        11 => criterion_11(),
        _ => Err(crate::KirchhoffError::Parse(format!("no criterion {id}"))),
    };
    let seconds = start.elapsed().as_secs_f64();
    match result {
        Ok(checks) => CriterionReport {
            id,
            title,
            passed: checks.iter().all(|c| c.passed || c.informational),
            seconds,
            checks,
            error: None,
        },
        Err(e) => CriterionReport { id, title, passed: false, seconds, checks: vec![], error: Some(e.to_string()) },
    }
}

pub fn run_all() -> VerifyReport {
    let criteria: Vec<CriterionReport> = CRITERIA.iter().map(|&(id, _)| run_criterion(id)).collect();
    VerifyReport { passed: criteria.iter().all(|c| c.passed), criteria }
}

fn field_of(g: &MetricGraph) -> Result<VelocityField> {
    check_field(g, &g.field("b")?)
}

/// The graphs swept by criteria 2–4.
fn sweep_fixtures() -> Result<Vec<(&'static str, MetricGraph, VelocityField)>> {
    let mut out = Vec::new();
    for (name, g) in [
        ("interval", fixtures::interval_graph()),
        ("circles", fixtures::two_circles_graph(1.0, 2.0)),
        ("star-tree", fixtures::star_tree_graph()),
        ("k1", fixtures::k1_graph()),
    ] {
        let b = field_of(&g)?;
        out.push((name, g, b));
    }
    for (name, case) in [("sg2-reduced-011", CylindricalCase::Reduced011), ("sg2-half01", CylindricalCase::Half01)] {
        let (sg, _, b) = case.graph(2)?;
        out.push((name, sg.graph, b));
    }
    Ok(out)
}

fn max_of(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter().fold(0.0, f64::max)
}

/// The cells of `K^(1)` around `q_i`: (edge into `q_i`, edge out of `q_i`,
/// inner edge opposite `q_i`).
const K1_CELLS: [[&str; 3]; 3] = [["p1q0", "q0p2", "p1p2"], ["p2q1", "q1p0", "p2p0"], ["p0q2", "q2p1", "p0p1"]];

/// Coordinates `(c_∅, c_0, c_1, c_2)` of an element of `ker ∂⊥` on `K^(1)` in
/// the basis `𝟏, φ_0, φ_1, φ_2`.
fn k1_coordinates(g: &MetricGraph, x: &[f64]) -> Vec<f64> {
    let m = g.edge_count();
    let mut basis = DMatrix::from_element(m, 4, 0.0);
    for e in 0..m {
        basis[(e, 0)] = 1.0;
    }
    for (i, cell) in K1_CELLS.iter().enumerate() {
        for (j, id) in cell.iter().enumerate() {
            basis[(g.edge_index(id).unwrap(), i + 1)] = if j == 2 { -0.5 } else { 1.0 };
        }
    }
    let svd = basis.svd(true, true);
    svd.solve(&DVector::from_column_slice(x), 1e-12).expect("thin SVD").iter().copied().collect()
}

fn criterion_1() -> Result<Vec<Check>> {
    let g = fixtures::k1_graph();
    let b = field_of(&g)?;
    let e = |id: &str| g.edge_index(id).unwrap();
    let q = |i: usize| g.vertex_index(&format!("q{i}")).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = [0.0f64; 9];
    for _ in 0..50 {
        let f = random_domain_poly(&g, &b, &mut rng, 3)?;
        let k = key_decompose(&g, &b, &f)?;
        let z = k1_coordinates(&g, &k.z);
        let w = k1_coordinates(&g, &k.w);
        let du = star_inv(&g, &b, &k.u.values().derivative())?;
        let t = |id: &str, end| f.trace(e(id), end);
        worst[0] = worst[0].max(z[0].abs());
        let mut sum_g = 0.0;
        for (i, [into, out, inner]) in K1_CELLS.iter().enumerate() {
            let (zi, wi) = (z[i + 1], w[i + 1]);
            let (a, bb) = (t(into, End::Tail), t(inner, End::Tail));
            let (c, d) = (t(out, End::Head), t(inner, End::Head));
            let z_closed = (c - d + bb - a) / 3.0;
            worst[1] = worst[1].max((zi - z_closed).abs());
            worst[2] = worst[2].max((wi - (2.0 * a - 2.0 * bb + 4.0 * c - 4.0 * d) / 9.0).abs());
            worst[3] = worst[3].max((3.0 * wi - 4.0 * zi - (2.0 * a - 2.0 * bb)).abs());
            for x in [0.0, 0.25, 0.5, 0.75, 1.0] {
                worst[4] = worst[4].max((du.eval(e(into), x) - (zi * x - zi)).abs());
                worst[4] = worst[4].max((du.eval(e(out), x) - zi * x).abs());
                worst[5] = worst[5].max((du.eval(e(inner), x) - (zi - zi * x)).abs());
                worst[7] = worst[7].max((du.eval(e(inner), x) - (0.5 * zi - zi * x)).abs());
            }
            worst[8] = worst[8].max((wi - (a - bb + c - d) / 3.0).abs());
            sum_g += t(out, End::Tail) - k.g.at_vertex(q(i));
        }
        let w_empty = (sum_g - w[1] - w[2] - w[3]) / 3.0;
        worst[6] = worst[6].max((w[0] - w_empty).abs());
    }
    Ok(vec![
        Check::at_most("z_∅ = 0", worst[0], 1e-12),
        Check::at_most("z_i closed form", worst[1], 1e-10),
        Check::at_most("w_i closed form (1/9 weights)", worst[2], 1e-10),
        Check::at_most("3w_i − 4z_i closed form", worst[3], 1e-10),
        Check::at_most("★⁻¹∂u on the outer cell edges", worst[4], 1e-10),
        Check::at_most("★⁻¹∂u on the inner edges (z_i − z_i x)", worst[5], 1e-10),
        Check::at_most("w_∅ closed form", worst[6], 1e-10),
        Check::at_most("★⁻¹∂u on the inner edges (z_i/2 − z_i x)", worst[7], 1e-10).note(),
        Check::at_most("w_i = (f_in(0) − f_inner(0) + f_out(1) − f_inner(1))/3", worst[8], 1e-10).note(),
    ])
}

fn criterion_2() -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut checks = Vec::new();
    for (name, g, b) in sweep_fixtures()? {
        let mut worst = 0.0f64;
        for _ in 0..100 {
            let f1 = random_domain_poly(&g, &b, &mut rng, 3)?;
            let f2 = random_domain_poly(&g, &b, &mut rng, 3)?;
            worst = worst.max(ibp_check(&g, &b, &f1, &f2)?.residual);
        }
        checks.push(Check::at_most(format!("{name}: integration by parts"), worst, 1e-9));
    }
    Ok(checks)
}

fn criterion_3() -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut checks = Vec::new();
    for (name, g, b) in sweep_fixtures()? {
        let spaces = build_quadruple(&g, &b)?;
        let (mut identity, mut gauge) = (0.0f64, 0.0f64);
        for _ in 0..100 {
            let f1 = random_domain_poly(&g, &b, &mut rng, 3)?;
            let f2 = random_domain_poly(&g, &b, &mut rng, 3)?;
            identity = identity.max(quadruple_identity_check(&spaces, &f1, &f2)?.residual);
            for side in [Side::Minus, Side::Plus] {
                let d = spaces.apply_g(side, &f1)? - spaces.apply_g_shifted(side, &f1, 0.7)?;
                gauge = gauge.max(d.amax());
            }
        }
        checks.push(Check::at_most(format!("{name}: quadruple identity"), identity, 1e-9));
        checks.push(Check::at_most(format!("{name}: gauge invariance of G±"), gauge, 1e-10));
    }
    Ok(checks)
}

fn criterion_4() -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut checks = Vec::new();
    for (name, g, b) in sweep_fixtures()? {
        let spaces = build_quadruple(&g, &b)?;
        let n = spaces.ambient_dim();
        let mut worst = 0.0f64;
        for _ in 0..50 {
            let fm = DVector::from_vec(random_vector(&mut rng, n));
            let fp = DVector::from_vec(random_vector(&mut rng, n));
            let f = construct_preimage(&spaces, &fm, &fp)?;
            let (gm, gp) = spaces.apply_both(&f)?;
            worst = worst.max((gm - spaces.projection(Side::Minus) * &fm).amax());
            worst = worst.max((gp - spaces.projection(Side::Plus) * &fp).amax());
        }
        checks.push(Check::at_most(format!("{name}: G± of the preimage"), worst, 1e-9));
    }
    Ok(checks)
}

fn criterion_5() -> Result<Vec<Check>> {
    let dt = 1e-3;
    let v0 = |_: usize, x: f64| (PI * x).sin().powi(6);
    let opts = CnOptions::new(dt, 1.2).with_resolution(512).snapshots_every(10);
    let gen = CatalogCase::Interval { theta: 0.0 }.generator()?;
    let traj = evolve_cn(&gen, &v0, opts)?;
    let after = max_of(traj.times.iter().zip(&traj.snapshots).filter(|(t, _)| **t > 1.0 + 5.0 * dt).map(|(_, s)| s.max_abs()));

    let gen = CatalogCase::Interval { theta: -1.0 }.generator()?;
    let traj = evolve_cn(&gen, &v0, CnOptions::new(dt, 1.0).with_resolution(512).snapshots_every(1000))?;
    let exact = EdgeFunction::from_fn(1, 512, v0);
    let err = l2nu_norm(gen.graph(), gen.field(), &traj.last().sub(&exact)?)?;
    Ok(vec![
        Check::at_most("θ = 0: sup |v(t)| for t > 1 + 5dt", after, 1e-6),
        Check::at_most("θ = −1: L² error at t = 1", err, 1e-4),
    ])
}

/// `(4x(1 − x))⁴` on the first circle.
fn circle_bump(e: usize, x: f64) -> f64 {
    if e == 0 {
        (4.0 * x * (1.0 - x)).powi(4)
    } else {
        0.0
    }
}

/// `∫ |v| dν_b` per edge by the trapezoid rule.
fn l1_per_edge(b: &VelocityField, v: &EdgeFunction) -> Vec<f64> {
    v.components()
        .iter()
        .enumerate()
        .map(|(e, s)| {
            let n = (s.len() - 1) as f64;
            let inner: f64 = s.iter().map(|x| x.abs()).sum::<f64>() - 0.5 * (s[0].abs() + s[s.len() - 1].abs());
            b.measure_weights()[e] * inner / n
        })
        .collect()
}

fn criterion_6() -> Result<Vec<Check>> {
    let (dt, n) = (1e-3, 512);
    let mut checks = Vec::new();
    for theta_bar in [1.0, -1.0] {
        let case = CatalogCase::Circles { theta_bar, c: 1.0 };
        let gen = case.generator()?;
        let rules = case.scattering_rules(&gen)?;
        let opts = ScatteringOptions { snapshot_every: 1000, ..ScatteringOptions::new(dt, 1.0, n) };
        let scat = evolve_scattering(gen.graph(), gen.field(), &rules, &circle_bump, opts)?;
        let last = scat.last();
        if theta_bar > 0.0 {
            let exact = EdgeFunction::from_fn(2, n, circle_bump);
            let err: f64 = l1_per_edge(gen.field(), &last.sub(&exact)?).iter().sum();
            checks.push(Check::at_most("θ̄ = 1: L¹ error after one period", err, 2.0 / n as f64));
        } else {
            let mass = l1_per_edge(gen.field(), last);
            checks.push(Check::at_least("θ̄ = −1: mass fraction on the other circle", mass[1] / (mass[0] + mass[1]), 0.99));
        }
        let cn = evolve_cn(&gen, &circle_bump, CnOptions::new(dt, 1.0).with_resolution(n).snapshots_every(1000))?;
        let diff = l2nu_norm(gen.graph(), gen.field(), &cn.last().sub(last)?)?;
        checks.push(Check::at_most(format!("θ̄ = {theta_bar}: CN vs scattering at t = 1"), diff, 1e-3));
    }
    Ok(checks)
}

fn criterion_7() -> Result<Vec<Check>> {
    let gen = CatalogCase::K1Identity.generator()?;
    let bump = |e: usize, x: f64| if e == 7 { (4.0 * x * (1.0 - x)).powi(4) } else { 0.0 };
    let traj = evolve_cn(&gen, &bump, CnOptions::new(1e-3, 1.0).snapshots_every(1000))?;
    let drift = max_of(traj.diagnostics.windows(2).map(|w| (w[1].norm - w[0].norm).abs()));

    let gen = CatalogCase::TreePeriodic.generator()?;
    let v0 = |e: usize, x: f64| 1.0 + 0.5 * (2.0 * PI * x + e as f64).sin();
    let traj = evolve_cn(&gen, &v0, CnOptions::new(1e-3, 1.0).snapshots_every(1000))?;
    Ok(vec![
        Check::at_most("K1, Θ = id: norm drift per step", drift, 1e-12),
        Check::at_most("tree periodic: mass balance", mass_balance_check(&traj), 1e-8),
    ])
}

/// The cell form `φ_0` on `K^(1)`.
pub fn k1_phi0(g: &MetricGraph) -> Vec<f64> {
    let mut phi = vec![0.0; g.edge_count()];
    for (j, id) in K1_CELLS[0].iter().enumerate() {
        phi[g.edge_index(id).unwrap()] = if j == 2 { -0.5 } else { 1.0 };
    }
    phi
}

fn criterion_8() -> Result<Vec<Check>> {
    let gen = CatalogCase::K1Identity.generator()?;
    let phi0 = k1_phi0(gen.graph());
    let space = GalerkinSpace::from_options(gen, &CnOptions::new(1e-2, 1.0));
    let stepper = CnStepper::new(&space, 1e-2)?;
    let mut v = space.constants(&phi0);
    let mut step = 0.0f64;
    for _ in 0..100 {
        let next = stepper.step(&space, &v)?;
        step = step.max(next.iter().zip(&v).map(|(a, b)| (a - b).amax()).fold(0.0, f64::max));
        v = next;
    }
    let mut checks = vec![Check::at_most("φ0 under CN: change per step", step, 1e-12)];
    let v0 = |e: usize, x: f64| (1.3 * e as f64 + 3.0 * x).cos() + 0.5;
    for case in [
        CatalogCase::K1Identity,
        CatalogCase::TreePeriodic,
        CatalogCase::SgReduced011 { level: 2 },
        CatalogCase::SgHalf01 { level: 2 },
    ] {
        let opts = CnOptions { elements: 4, degree: 6, ..CnOptions::new(1e-2, 1.0) };
        let r = kernel_invariance_check(&case, &v0, opts)?;
        checks.push(Check::at_most(format!("{}: kernel component after removal", case.tag()), r.max_projection, 1e-8));
    }
    Ok(checks)
}

fn criterion_9() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for (label, values, expected) in [
        ("(0, 1, 1)", [0.0, 1.0, 1.0], [-2.0, 1.0, 1.0]),
        ("(0, −1/6, 1/6)", [0.0, -1.0 / 6.0, 1.0 / 6.0], [0.0, -0.5, 0.5]),
    ] {
        let mut worst = 0.0f64;
        for m in 1..=5 {
            let sg = sg_graph(m, false)?;
            let h = sg_harmonic(&sg, values);
            for (i, &q) in sg.graph.boundary().iter().enumerate() {
                worst = worst.max((normal_derivative(&sg.graph, &h, q)? - expected[i]).abs());
            }
        }
        checks.push(Check::at_most(format!("h|V0 = {label}: normal derivatives, m = 1..5"), worst, 1e-10));
    }
    Ok(checks)
}

/// `1 + ½ sin 2πy`, with `sup |V′| = π`.
fn profile(y: f64) -> f64 {
    1.0 + 0.5 * (2.0 * PI * y).sin()
}

fn criterion_10() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for (case, cyl) in [
        (CatalogCase::SgReduced011 { level: 2 }, CylindricalCase::Reduced011),
        (CatalogCase::SgHalf01 { level: 2 }, CylindricalCase::Half01),
    ] {
        let (sg, h, _) = cyl.graph(2)?;
        let gen = case.generator()?;
        let hv = h.values().clone();
        let v0 = move |e: usize, x: f64| profile(hv.eval(e, x));
        let opts = CnOptions::new(1e-3, 1.0).snapshots_every(250);
        let traj = evolve_cn(&gen, &v0, opts)?;
        let mut worst = 0.0f64;
        for (t, snap) in traj.times.iter().zip(&traj.snapshots) {
            let exact = cylindrical_solution(&sg.graph, &h, &profile, *t, opts.samples, None)?;
            worst = worst.max(l2nu_norm(gen.graph(), gen.field(), &snap.sub(&exact)?)?);
        }
        checks.push(Check::at_most(format!("{}: CN vs V(h − t)", case.tag()), worst, 1e-3));

        let rows = convergence_experiment(&profile, PI, cyl, &[1, 2, 3, 4, 5], 11)?;
        let decreasing = rows.windows(2).filter(|w| w[1].sup_error >= w[0].sup_error).count();
        let excess = max_of(rows.iter().map(|r| r.sup_error - r.bound));
        checks.push(Check::at_most(format!("{}: non-decreasing steps in the error table", case.tag()), decreasing as f64, 0.0));
        checks.push(Check::at_most(format!("{}: error above the oscillation bound", case.tag()), excess, 0.0));
    }
    Ok(checks)
}

fn criterion_11() -> Result<Vec<Check>> {
    let (dt, n, c) = (1e-3, 512, 1.0);
    let g = fixtures::two_circles_graph(c, c);
    let phi = ContinuousFunction::new(
        &g,
        EdgeFunction::poly(vec![vec![1.0, 1.0, -1.0], vec![1.0, -2.0, 0.0, 2.0]])?,
        vec![1.0],
    )?;
    let psi = |t: f64| (1.0 - t / c).powi(2);
    let dpsi = |t: f64| -2.0 * (1.0 - t / c) / c;
    let mut checks = Vec::new();
    let mut finals: Vec<EdgeFunction> = Vec::new();
    let mut trajectories: Vec<(Trajectory, VelocityField)> = Vec::new();
    for theta_bar in [1.0, -1.0] {
        let case = CatalogCase::Circles { theta_bar, c };
        let gen = case.generator()?;
        let rules = case.scattering_rules(&gen)?;
        let traj = evolve_scattering(gen.graph(), gen.field(), &rules, &circle_bump, ScatteringOptions::new(dt, c, n))?;
        finals.push(traj.last().clone());
        trajectories.push((traj, gen.field().clone()));
    }
    for ((traj, b), theta_bar) in trajectories.iter().zip([1.0, -1.0]) {
        let r = weak_solution_check(traj, &g, b, &psi, &dpsi, &phi)?;
        checks.push(Check::at_most(format!("θ̄ = {theta_bar}: weak-solution residual"), r, 1e-6));
    }
    let b = &trajectories[0].1;
    let v0 = EdgeFunction::from_fn(2, n, circle_bump);
    let gap = l2nu_norm(&g, b, &finals[0].sub(&finals[1])?)?;
    checks.push(Check::at_least("‖v₊(c) − v₋(c)‖ / ‖v̊‖", gap / l2nu_norm(&g, b, &v0)?, 0.1));
    Ok(checks)
}
