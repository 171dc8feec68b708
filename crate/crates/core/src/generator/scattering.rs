//! Characteristics with vertex scattering: on every edge `v` is carried with
//! speed `1/|b_e|` from its inflow end, and inflow values are produced from
//! arriving outflow values by the rule matrices.

use nalgebra::DMatrix;

use super::{inflow_outflow, step_count, StepDiagnostics, Trajectory};
use crate::error::{KirchhoffError, Result};
use crate::graph::{l2nu_inner, EdgeFunction, End, MetricGraph};
use crate::hodge::{flux_at, VelocityField};

/// `departing values = matrix · arriving values`, where arriving ends are
/// outflow ends of edges and departing ends are inflow ends.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringRule {
    pub tag: String,
    pub arriving: Vec<(usize, End)>,
    pub departing: Vec<(usize, End)>,
    pub matrix: DMatrix<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringOptions {
    pub dt: f64,
    pub t_end: f64,
    /// Subintervals of the sampled snapshots.
    pub samples: usize,
    pub snapshot_every: usize,
}

impl ScatteringOptions {
    pub fn new(dt: f64, t_end: f64, samples: usize) -> Self {
        ScatteringOptions { dt, t_end, samples, snapshot_every: 1 }
    }
}

fn end_vertex(graph: &MetricGraph, (e, end): (usize, End)) -> String {
    let edge = graph.edge(e);
    graph.vertex_id(if end == End::Tail { edge.tail } else { edge.head }).to_string()
}

/// `rule[e] = (rule index, row)` producing the inflow value of edge `e`.
fn check_rules(graph: &MetricGraph, b: &VelocityField, rules: &[ScatteringRule]) -> Result<Vec<(usize, usize)>> {
    let m = graph.edge_count();
    let mut producer = vec![None; m];
    for (r, rule) in rules.iter().enumerate() {
        if rule.matrix.shape() != (rule.departing.len(), rule.arriving.len()) {
            return Err(KirchhoffError::DimensionMismatch { expected: rule.departing.len(), got: rule.matrix.nrows() });
        }
        for &(e, end) in &rule.arriving {
            if e >= m || end != inflow_outflow(b.b(e)).1 {
                return Err(KirchhoffError::FieldInvalid(format!("rule {} lists a non-outflow end as arriving", rule.tag)));
            }
        }
        for (i, &(e, end)) in rule.departing.iter().enumerate() {
            if e >= m || end != inflow_outflow(b.b(e)).0 {
                return Err(KirchhoffError::FieldInvalid(format!("rule {} lists a non-inflow end as departing", rule.tag)));
            }
            producer[e] = Some((r, i));
        }
    }
    producer
        .iter()
        .enumerate()
        .map(|(e, p)| p.ok_or_else(|| KirchhoffError::UncoveredVertex(end_vertex(graph, (e, inflow_outflow(b.b(e)).0)))))
        .collect()
}

/// Inflow values of every edge on the time grid `k·dt`.
struct History {
    dt: f64,
    values: Vec<Vec<f64>>,
}

impl History {
    /// Cubic interpolation on the known grid values (`τ ≤ last grid time`).
    fn at(&self, e: usize, tau: f64) -> f64 {
        let v = &self.values[e];
        let last = v.len() - 1;
        if last == 0 {
            return v[0];
        }
        let x = (tau / self.dt).clamp(0.0, last as f64);
        let j = (x.floor() as usize).min(last.saturating_sub(1));
        let lo = j.saturating_sub(1).min(last.saturating_sub(3));
        let hi = (lo + 3).min(last);
        let mut s = 0.0;
        for i in lo..=hi {
            let mut l = 1.0;
            for k in lo..=hi {
                if k != i {
                    l *= (x - k as f64) / (i as f64 - k as f64);
                }
            }
            s += l * v[i];
        }
        s
    }
}

struct Characteristics<'a> {
    b: &'a VelocityField,
    v0: &'a dyn Fn(usize, f64) -> f64,
}

impl Characteristics<'_> {
    /// `v(t)` at upwind coordinate `s` of edge `e`.
    fn value(&self, hist: &History, e: usize, s: f64, t: f64) -> f64 {
        let beta = self.b.b(e).abs();
        let s0 = s - t / beta;
        if s0 >= 0.0 {
            let x = if self.b.b(e) > 0.0 { s0 } else { 1.0 - s0 };
            (self.v0)(e, x)
        } else {
            hist.at(e, t - s * beta)
        }
    }

    fn snapshot(&self, hist: &History, graph: &MetricGraph, t: f64, n: usize) -> EdgeFunction {
        EdgeFunction::from_fn(graph.edge_count(), n, |e, x| {
            let s = if self.b.b(e) > 0.0 { x } else { 1.0 - x };
            self.value(hist, e, s, t)
        })
    }
}

/// Semi-Lagrangian evolution with vertex scattering; CFL-free.
pub fn evolve_scattering(
    graph: &MetricGraph,
    b: &VelocityField,
    rules: &[ScatteringRule],
    v0: &dyn Fn(usize, f64) -> f64,
    opts: ScatteringOptions,
) -> Result<Trajectory> {
    b.check_graph(graph)?;
    if b.coeffs().iter().any(|&x| x == 0.0) {
        return Err(KirchhoffError::FieldInvalid("scattering needs b_e ≠ 0 on every edge".into()));
    }
    let producer = check_rules(graph, b, rules)?;
    let steps = step_count(opts.dt, opts.t_end)?;
    let m = graph.edge_count();
    let ch = Characteristics { b, v0 };
    let mut hist = History { dt: opts.dt, values: vec![Vec::with_capacity(steps + 1); m] };

    let inflow_from = |hist: &History, t: f64| -> Vec<f64> {
        let outflow: Vec<f64> = (0..m).map(|e| ch.value(hist, e, 1.0, t)).collect();
        (0..m)
            .map(|e| {
                let (r, i) = producer[e];
                let rule = &rules[r];
                rule.arriving.iter().enumerate().map(|(j, &(f, _))| rule.matrix[(i, j)] * outflow[f]).sum()
            })
            .collect()
    };

    let n = opts.samples.max(2);
    let every = opts.snapshot_every.max(1);
    let mut traj = Trajectory { times: vec![], snapshots: vec![], diagnostics: vec![] };
    for k in 0..=steps {
        let t = k as f64 * opts.dt;
        // provisional value, refined while the new grid value feeds back on itself
        for e in 0..m {
            let guess = hist.values[e].last().copied().unwrap_or(0.0);
            hist.values[e].push(guess);
        }
        for _ in 0..100 {
            let new = inflow_from(&hist, t);
            let mut change = 0.0f64;
            for e in 0..m {
                change = change.max((new[e] - hist.values[e][k]).abs());
                hist.values[e][k] = new[e];
            }
            if change <= 1e-15 {
                break;
            }
        }
        let snap = ch.snapshot(&hist, graph, t, n);
        traj.diagnostics.push(diagnostics(graph, b, &snap, t)?);
        if k % every == 0 || k == steps {
            traj.times.push(t);
            traj.snapshots.push(snap);
        }
    }
    Ok(traj)
}

pub(crate) fn diagnostics(graph: &MetricGraph, b: &VelocityField, v: &EdgeFunction, t: f64) -> Result<StepDiagnostics> {
    let ones = EdgeFunction::constants(&vec![1.0; graph.edge_count()]);
    let ones = match v.subintervals() {
        Some(n) => ones.to_sampled(n),
        None => ones,
    };
    Ok(StepDiagnostics {
        t,
        norm: l2nu_inner(graph, b, v, v)?.max(0.0).sqrt(),
        mass: l2nu_inner(graph, b, v, &ones)?,
        fluxes: graph.boundary().iter().map(|&q| flux_at(graph, b, v, q)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::CatalogCase;

    #[test]
    fn interval_periodic_shift() {
        let case = CatalogCase::Interval { theta: -1.0 };
        let gen = case.generator().unwrap();
        let rules = case.scattering_rules(&gen).unwrap();
        let v0 = |_: usize, x: f64| (2.0 * std::f64::consts::PI * x).sin();
        let traj = evolve_scattering(gen.graph(), gen.field(), &rules, &v0, ScatteringOptions::new(1e-2, 0.25, 64))
            .unwrap();
        let last = traj.last();
        for j in 0..=64 {
            let x = j as f64 / 64.0;
            let exact = (2.0 * std::f64::consts::PI * (x - 0.25)).sin();
            assert!((last.eval(0, x) - exact).abs() < 1e-5);
        }
    }

    #[test]
    fn missing_rule_is_reported() {
        let case = CatalogCase::Circles { theta_bar: 1.0, c: 1.0 };
        let gen = case.generator().unwrap();
        let mut rules = case.scattering_rules(&gen).unwrap();
        rules[0].departing.pop();
        rules[0].matrix = rules[0].matrix.rows(0, 1).into_owned();
        let v0 = |_: usize, _: f64| 0.0;
        let r = evolve_scattering(gen.graph(), gen.field(), &rules, &v0, ScatteringOptions::new(0.1, 1.0, 8));
        assert!(matches!(r, Err(KirchhoffError::UncoveredVertex(ref v)) if v == "p"));
    }
}
