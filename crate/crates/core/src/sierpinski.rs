//! Gasket graph approximations `K^(m)`, harmonic extension, harmonic
//! 1-forms `dζ_α`, cylindrical solutions and the level-convergence table.
//!
//! Points are integer barycentric triples at scale `2^m`; the cell maps are
//! `F_i(x) = (x + q_i)/2` and `F_α = F_{α1} ∘ … ∘ F_{αn}`.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::error::{KirchhoffError, Result};
use crate::graph::{ContinuousFunction, EdgeDoc, EdgeFunction, GraphDocument, MetricGraph};
use crate::hodge::{check_field, ConstantForm, VelocityField};

pub const MAX_LEVEL: usize = 8;

pub type Point = [u64; 3];

/// Words over {0, 1, 2}.
pub type Word = Vec<u8>;

#[derive(Debug, Clone, PartialEq)]
pub struct SGLevelGraph {
    pub level: usize,
    pub reduced: bool,
    pub graph: MetricGraph,
    /// Corner vertices `F_β(q_0), F_β(q_1), F_β(q_2)` of every level cell,
    /// keyed by the word `β` written as digits.
    pub cells: BTreeMap<String, [usize; 3]>,
    points: Vec<Point>,
}

pub fn word_string(w: &[u8]) -> String {
    w.iter().map(|d| char::from(b'0' + d)).collect()
}

pub fn parse_word(s: &str) -> Result<Word> {
    s.chars()
        .map(|c| match c {
            '0'..='2' => Ok(c as u8 - b'0'),
            _ => Err(KirchhoffError::Parse(format!("invalid word letter {c:?}"))),
        })
        .collect()
}

/// All words of length `k` in lexicographic order.
pub fn words(k: usize) -> Vec<Word> {
    let mut out = vec![Vec::new()];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|w| {
                (0..3u8).map(move |i| {
                    let mut w2 = w.clone();
                    w2.push(i);
                    w2
                })
            })
            .collect();
    }
    out
}

/// `F_w(q_j)` at scale `2^m` (requires `|w| ≤ m`).
pub fn point(w: &[u8], j: usize, m: usize) -> Point {
    let mut p = [0u64; 3];
    p[j] = 1;
    let mut scale = 1u64;
    for &i in w.iter().rev() {
        p[i as usize] += scale;
        scale *= 2;
    }
    let lift = 1u64 << (m - w.len());
    [p[0] * lift, p[1] * lift, p[2] * lift]
}

fn midpoint(a: Point, b: Point) -> Point {
    [(a[0] + b[0]) / 2, (a[1] + b[1]) / 2, (a[2] + b[2]) / 2]
}

/// Level-`m` conductance `(5/3)^m`.
pub fn level_conductance(m: usize) -> f64 {
    (5.0f64 / 3.0).powi(m as i32)
}

/// Builds `K^(m)` (or the reduced graph without the edge opposite `q0` in
/// the cell `0^m`) with boundary `V0 = {q0, q1, q2}`.
pub fn sg_graph(m: usize, reduced: bool) -> Result<SGLevelGraph> {
    if m > MAX_LEVEL {
        return Err(KirchhoffError::LevelTooLarge { level: m, max: MAX_LEVEL });
    }
    let mut ids: Vec<String> = Vec::new();
    let mut points: Vec<Point> = Vec::new();
    let mut index: HashMap<Point, usize> = HashMap::new();
    for k in 0..=m {
        for w in words(k) {
            for j in 0..3 {
                let p = point(&w, j, m);
                if let std::collections::hash_map::Entry::Vacant(e) = index.entry(p) {
                    e.insert(points.len());
                    points.push(p);
                    ids.push(if k == 0 { format!("q{j}") } else { format!("x{}_{j}", word_string(&w)) });
                }
            }
        }
    }
    let c = level_conductance(m);
    let mut edges = Vec::new();
    let mut cells = BTreeMap::new();
    for beta in words(m) {
        let corners = [0, 1, 2].map(|j| index[&point(&beta, j, m)]);
        for k in 0..3 {
            if reduced && k == 1 && beta.iter().all(|&d| d == 0) {
                continue;
            }
            edges.push(EdgeDoc {
                id: format!("e{}_{k}", word_string(&beta)),
                tail: ids[corners[k]].clone(),
                head: ids[corners[(k + 1) % 3]].clone(),
                conductance: Some(c),
            });
        }
        cells.insert(word_string(&beta), corners);
    }
    let doc = GraphDocument {
        vertices: ids,
        edges,
        boundary: vec!["q0".into(), "q1".into(), "q2".into()],
        fields: BTreeMap::new(),
    };
    Ok(SGLevelGraph { level: m, reduced, graph: MetricGraph::from_document(&doc)?, cells, points })
}

impl SGLevelGraph {
    pub fn points(&self) -> &[Point] {
        &self.points
    }
}

/// Harmonic values on `V_m` for boundary values on `V0`, by the rule
/// `h(midpoint opposite q_k) = (2h(q_i) + 2h(q_j) + h(q_k))/5` in every cell.
pub fn harmonic_values(m: usize, values: [f64; 3]) -> HashMap<Point, f64> {
    let corners = [0, 1, 2].map(|j| point(&[], j, m));
    refine_cell(corners, values, m)
}

fn refine_cell(corners: [Point; 3], values: [f64; 3], depth: usize) -> HashMap<Point, f64> {
    let mut out = HashMap::new();
    let mut stack = vec![(corners, values, depth)];
    while let Some((c, a, d)) = stack.pop() {
        for j in 0..3 {
            out.insert(c[j], a[j]);
        }
        if d == 0 {
            continue;
        }
        // mid[k] is the midpoint opposite corner k
        let mid = [0, 1, 2].map(|k| {
            let (i, j) = ((k + 1) % 3, (k + 2) % 3);
            (midpoint(c[i], c[j]), (2.0 * a[i] + 2.0 * a[j] + a[k]) / 5.0)
        });
        for i in 0..3 {
            let (i1, i2) = ((i + 1) % 3, (i + 2) % 3);
            let mut sc = [c[i]; 3];
            let mut sa = [a[i]; 3];
            // corner j of subcell i is the midpoint of c_i and c_j
            sc[i1] = mid[i2].0;
            sa[i1] = mid[i2].1;
            sc[i2] = mid[i1].0;
            sa[i2] = mid[i1].1;
            stack.push((sc, sa, d - 1));
        }
    }
    out
}

/// Harmonic function on `K^(m)` with the given values on `V0`, edge-wise linear.
pub fn sg_harmonic(sg: &SGLevelGraph, values: [f64; 3]) -> ContinuousFunction {
    let h = harmonic_values(sg.level, values);
    let vals: Vec<f64> = sg.points.iter().map(|p| h[p]).collect();
    ContinuousFunction::edge_linear(&sg.graph, &vals).expect("one value per vertex")
}

/// `b = ∂h`, the edge slopes of `h`, with its flags.
pub fn sg_velocity(sg: &SGLevelGraph, h: &ContinuousFunction) -> Result<VelocityField> {
    let b: Vec<f64> = sg.graph.edges().iter().map(|e| h.at_vertex(e.head) - h.at_vertex(e.tail)).collect();
    check_field(&sg.graph, &b)
}

/// Boundary data of the harmonic pieces of `dζ_α` on the subcells `αi`.
const DZETA_DATA: [[f64; 3]; 3] =
    [[0.0, -1.0 / 6.0, 1.0 / 6.0], [1.0 / 6.0, 0.0, -1.0 / 6.0], [-1.0 / 6.0, 1.0 / 6.0, 0.0]];

/// The harmonic 1-form `dζ_α = Σ_i 𝟏_{K_{αi}} ∂h_{αi}` restricted to `K^(m)`.
pub fn sg_dzeta(sg: &SGLevelGraph, alpha: &[u8]) -> Result<ConstantForm> {
    let m = sg.level;
    if m < alpha.len() + 1 {
        return Err(KirchhoffError::LevelInsufficient { level: m, word_len: alpha.len() });
    }
    if alpha.iter().any(|&d| d > 2) {
        return Err(KirchhoffError::Parse("word letters must be 0, 1 or 2".into()));
    }
    let mut form = vec![0.0; sg.graph.edge_count()];
    for i in 0..3u8 {
        let mut sub = alpha.to_vec();
        sub.push(i);
        let corners = [0, 1, 2].map(|j| point(&sub, j, m));
        let vals = refine_cell(corners, DZETA_DATA[i as usize], m - sub.len());
        for (word, c) in sg.cells.range(word_string(&sub)..) {
            if !word.starts_with(&word_string(&sub)) {
                break;
            }
            for k in 0..3 {
                if let Some(e) = sg.graph.edge_index(&format!("e{word}_{k}")) {
                    let (t, h) = (sg.points[c[k]], sg.points[c[(k + 1) % 3]]);
                    form[e] = vals[&h] - vals[&t];
                }
            }
        }
    }
    Ok(form)
}

/// Wraps a profile on [0, 1) to its periodic extension, after checking
/// `V(1) = V(0)`.
pub fn periodic_profile<'a>(profile: &'a dyn Fn(f64) -> f64) -> Result<impl Fn(f64) -> f64 + 'a> {
    let gap = (profile(1.0) - profile(0.0)).abs();
    if gap > 1e-12 {
        return Err(KirchhoffError::ProfileNotPeriodic { gap });
    }
    Ok(move |y: f64| profile(y.rem_euclid(1.0)))
}

/// `V(h(x) − t) + w` sampled at `n + 1` points per edge.
pub fn cylindrical_solution(
    graph: &MetricGraph,
    h: &ContinuousFunction,
    profile: &dyn Fn(f64) -> f64,
    t: f64,
    n: usize,
    w: Option<&[f64]>,
) -> Result<EdgeFunction> {
    let v = periodic_profile(profile)?;
    let hv = h.values();
    Ok(EdgeFunction::from_fn(graph.edge_count(), n, |e, x| v(hv.eval(e, x) - t) + w.map_or(0.0, |w| w[e])))
}

/// The two harmonic profiles with transparent cylindrical dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CylindricalCase {
    /// `h = (0, 1, 1)` on the reduced graph.
    Reduced011,
    /// `h = (1/2, 0, 1)` on the full graph.
    Half01,
}

impl CylindricalCase {
    pub fn boundary_values(self) -> [f64; 3] {
        match self {
            CylindricalCase::Reduced011 => [0.0, 1.0, 1.0],
            CylindricalCase::Half01 => [0.5, 0.0, 1.0],
        }
    }

    pub fn reduced(self) -> bool {
        matches!(self, CylindricalCase::Reduced011)
    }

    pub fn graph(self, m: usize) -> Result<(SGLevelGraph, ContinuousFunction, VelocityField)> {
        let sg = sg_graph(m, self.reduced())?;
        let h = sg_harmonic(&sg, self.boundary_values());
        let b = sg_velocity(&sg, &h)?;
        Ok((sg, h, b))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub level: usize,
    pub sup_error: f64,
    pub bound: f64,
}

/// For each level `m`: sup over the `V_{m+2}` points on level-`m` edges and
/// over `t_samples` times in [0, 1] of `|V(h − t) − V(h^(m) − t)|`, with `h`
/// taken exactly from level `m + 4`, next to the bound
/// `sup|V′| · max cell oscillation of h`.
pub fn convergence_experiment(
    profile: &dyn Fn(f64) -> f64,
    derivative_sup: f64,
    case: CylindricalCase,
    levels: &[usize],
    t_samples: usize,
) -> Result<Vec<ConvergenceRow>> {
    let v = periodic_profile(profile)?;
    let vals = case.boundary_values();
    let times: Vec<f64> = (0..t_samples.max(2)).map(|i| i as f64 / (t_samples.max(2) - 1) as f64).collect();
    let mut rows = Vec::new();
    for &m in levels {
        let fine = harmonic_values(m + 4, vals);
        let coarse = harmonic_values(m, vals);
        let mut sup: f64 = 0.0;
        let mut osc: f64 = 0.0;
        for beta in words(m) {
            let c = [0, 1, 2].map(|j| point(&beta, j, m));
            let a = c.map(|p| coarse[&p]);
            osc = osc.max(a.iter().fold(f64::MIN, |x, &y| x.max(y)) - a.iter().fold(f64::MAX, |x, &y| x.min(y)));
            for k in 0..3 {
                if case.reduced() && k == 1 && beta.iter().all(|&d| d == 0) {
                    continue;
                }
                let (p, q) = (c[k], c[(k + 1) % 3]);
                for j in 0..=4u64 {
                    let x = [0, 1, 2].map(|i| 4 * (4 * p[i] + j * q[i] - j * p[i]));
                    let h = fine[&x];
                    let hm = a[k] + (a[(k + 1) % 3] - a[k]) * j as f64 / 4.0;
                    for &t in &times {
                        sup = sup.max((v(h - t) - v(hm - t)).abs());
                    }
                }
            }
        }
        rows.push(ConvergenceRow { level: m, sup_error: sup, bound: derivative_sup * osc });
    }
    Ok(rows)
}
