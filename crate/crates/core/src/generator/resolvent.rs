//! `(λ − A^Θ)⁻¹` by integrating `f′ + λ b f = b r` along each edge from its
//! inflow end; the unknown inflow traces come from the trace conditions.

use nalgebra::{DMatrix, DVector};

use super::{inflow_outflow, Generator};
use crate::error::{KirchhoffError, Result};
use crate::graph::{EdgeFunction, DEFAULT_SAMPLES};

/// `r(1 − s)` as coefficients in `s`.
fn reflect(c: &[f64]) -> Vec<f64> {
    let d = c.len();
    let mut out = vec![0.0; d];
    // (1 − s)^k = Σ_j C(k, j) (−s)^j
    for (k, &a) in c.iter().enumerate() {
        let mut binom = 1.0;
        for j in 0..=k {
            out[j] += a * binom * if j % 2 == 0 { 1.0 } else { -1.0 };
            binom = binom * (k - j) as f64 / (j + 1) as f64;
        }
    }
    out
}

fn poly_eval(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

/// Polynomial solution `q` of `q′ + a q = |b| r`: `q = (1/λ) Σ_k (−D/a)^k r`.
fn particular(r: &[f64], a: f64, lambda: f64) -> Vec<f64> {
    let mut q = vec![0.0; r.len()];
    let mut term = r.to_vec();
    let mut sign = 1.0;
    let mut scale = 1.0 / lambda;
    while !term.is_empty() {
        for (i, &t) in term.iter().enumerate() {
            q[i] += sign * scale * t;
        }
        term = term.iter().enumerate().skip(1).map(|(i, &t)| i as f64 * t).collect();
        sign = -sign;
        scale /= a;
    }
    q
}

/// `(1 − e^{−y}(1 + y)) / y²`, stable near 0.
fn phi2(y: f64) -> f64 {
    if y.abs() < 1e-3 {
        0.5 - y / 3.0 + y * y / 8.0 - y.powi(3) / 30.0 + y.powi(4) / 144.0
    } else {
        (1.0 - (-y).exp() * (1.0 + y)) / (y * y)
    }
}

/// Particular solution with zero inflow value, sampled at `n + 1` points in
/// the upwind coordinate.
fn particular_samples(rhs: &EdgeFunction, e: usize, forward: bool, beta: f64, lambda: f64, n: usize) -> Vec<f64> {
    let a = lambda * beta;
    match rhs {
        EdgeFunction::Poly(c) => {
            let r = if forward { c[e].clone() } else { reflect(&c[e]) };
            let q = particular(&r, a, lambda);
            let q0 = q[0];
            (0..=n)
                .map(|j| {
                    let s = j as f64 / n as f64;
                    poly_eval(&q, s) - q0 * (-a * s).exp()
                })
                .collect()
        }
        EdgeFunction::Sampled(samples) => {
            let raw = &samples[e];
            let k = raw.len() - 1;
            let r: Vec<f64> = if forward { raw.clone() } else { raw.iter().rev().copied().collect() };
            let h = 1.0 / k as f64;
            let y = a * h;
            let decay = (-y).exp();
            let i0 = if a == 0.0 { h } else { -(-y).exp_m1() / a };
            let j = h * h * phi2(y);
            let mut p = vec![0.0; k + 1];
            for i in 0..k {
                let slope = (r[i + 1] - r[i]) / h;
                p[i + 1] = decay * p[i] + beta * (r[i] * i0 + slope * (h * i0 - j));
            }
            if k == n {
                p
            } else {
                EdgeFunction::Sampled(vec![p]).to_sampled(n).components()[0].clone()
            }
        }
    }
}

/// Solves `λ f − A^Θ f = rhs`; the result is sampled on the grid of `rhs`
/// (or [`DEFAULT_SAMPLES`] subintervals for polynomial data).
pub fn resolvent_solve(generator: &Generator, lambda: f64, rhs: &EdgeFunction) -> Result<EdgeFunction> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(KirchhoffError::SingularSystem(format!("λ = {lambda} must be positive")));
    }
    let g = generator.graph();
    g.check_len(rhs)?;
    let b = generator.field();
    let m = g.edge_count();
    let n = rhs.subintervals().unwrap_or(DEFAULT_SAMPLES);
    let mc = generator.constraints();
    let mut part = Vec::with_capacity(m);
    let mut system = DMatrix::zeros(m, m);
    let mut fixed = DVector::zeros(2 * m);
    for e in 0..m {
        let beta = b.b(e).abs();
        let forward = b.b(e) > 0.0;
        let p = particular_samples(rhs, e, forward, beta, lambda, n);
        let (inflow, outflow) = inflow_outflow(b.b(e));
        let decay = (-lambda * beta).exp();
        for r in 0..m {
            system[(r, e)] = mc[(r, inflow.trace_index(e))] + decay * mc[(r, outflow.trace_index(e))];
        }
        fixed[outflow.trace_index(e)] = p[n];
        part.push(p);
    }
    let rhs_vec = -(mc * fixed);
    let alpha = system
        .lu()
        .solve(&rhs_vec)
        .ok_or_else(|| KirchhoffError::SingularSystem("inflow traces of the resolvent".into()))?;
    let samples = (0..m)
        .map(|e| {
            let beta = b.b(e).abs();
            let mut s: Vec<f64> = (0..=n)
                .map(|j| alpha[e] * (-lambda * beta * j as f64 / n as f64).exp() + part[e][j])
                .collect();
            if b.b(e) < 0.0 {
                s.reverse();
            }
            s
        })
        .collect();
    EdgeFunction::sampled(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::{in_domain_theta, CatalogCase};
    use crate::graph::l2nu_norm;
    use crate::sampling::random_poly;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn interval_nilpotent_constant_rhs() {
        let gen = CatalogCase::Interval { theta: 0.0 }.generator().unwrap();
        for lambda in [0.1, 1.0, 7.0] {
            for rhs in [EdgeFunction::constants(&[1.0]), EdgeFunction::constants(&[1.0]).to_sampled(64)] {
                let f = resolvent_solve(&gen, lambda, &rhs).unwrap();
                let n = f.subintervals().unwrap();
                for j in 0..=n {
                    let x = j as f64 / n as f64;
                    let exact = -(-lambda * x).exp_m1() / lambda;
                    assert!((f.eval(0, x) - exact).abs() < 1e-13, "λ = {lambda}, x = {x}");
                }
            }
        }
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let gen = CatalogCase::K1Seventh.generator().unwrap();
        let f = resolvent_solve(&gen, 1.0, &EdgeFunction::zero(9)).unwrap();
        assert_eq!(f.max_abs(), 0.0);
    }

    #[test]
    fn solves_the_equation_and_the_conditions() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for case in [CatalogCase::K1Identity, CatalogCase::TreePeriodic, CatalogCase::Circles { theta_bar: 0.2, c: 1.5 }] {
            let gen = case.generator().unwrap();
            let r = random_poly(gen.graph(), &mut rng, 3);
            let f = resolvent_solve(&gen, 2.0, &r).unwrap();
            assert!(in_domain_theta(&gen, &f).unwrap().residual < 1e-10, "{}", case.tag());
            let norm_f = l2nu_norm(gen.graph(), gen.field(), &f).unwrap();
            let norm_r = l2nu_norm(gen.graph(), gen.field(), &r.to_sampled(DEFAULT_SAMPLES)).unwrap();
            assert!(2.0 * norm_f <= norm_r * (1.0 + 1e-4), "{}", case.tag());
        }
    }

    #[test]
    fn reflection_of_polynomials() {
        let c = [1.0, -2.0, 0.5, 3.0];
        let r = reflect(&c);
        for x in [0.0, 0.3, 1.0] {
            assert!((poly_eval(&r, x) - poly_eval(&c, 1.0 - x)).abs() < 1e-14);
        }
    }
}
