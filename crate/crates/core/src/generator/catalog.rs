//! The explicit `Θ` of the worked examples, with their local scattering
//! rules where those are known in closed form.

use nalgebra::DMatrix;
use serde::Serialize;

use super::scattering::ScatteringRule;
use super::{inflow_outflow, Generator};
use crate::error::{KirchhoffError, Result};
use crate::fixtures;
use crate::graph::{End, MetricGraph};
use crate::hodge::{check_field, VelocityField};
use crate::quadruple::build_quadruple;
use crate::sierpinski::CylindricalCase;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum CatalogCase {
    /// `θ f(1) = −f(0)` on the unit interval.
    Interval { theta: f64 },
    /// Two loops with `b = (c, c)` and the transmission parameter `θ̄`.
    Circles { theta_bar: f64, c: f64 },
    /// Level-1 gasket graph, `Θ = id`.
    K1Identity,
    /// Level-1 gasket graph, `Θ = id/7`.
    K1Seventh,
    /// Star tree, outflow fed back into the root.
    TreePeriodic,
    /// Star tree, nothing enters.
    TreeNilpotent,
    /// `h = (0, 1, 1)` on the reduced level-`m` gasket graph.
    SgReduced011 { level: usize },
    /// `h = (1/2, 0, 1)` on the level-`m` gasket graph.
    SgHalf01 { level: usize },
}

/// `θ` for a given `θ̄` on two loops with `b = (c, c)`.
pub fn circles_theta(theta_bar: f64, c: f64) -> f64 {
    let a = 1.0 / c;
    (a - 0.5 - theta_bar * (a + 0.5)) / (theta_bar * (a - 0.5) - (a + 0.5))
}

/// `θ̄ = (c⁻¹(θ+1) + ½(θ−1)) / (c⁻¹(θ+1) − ½(θ−1))`.
pub fn circles_theta_bar(theta: f64, c: f64) -> f64 {
    let a = 1.0 / c;
    (a * (theta + 1.0) + 0.5 * (theta - 1.0)) / (a * (theta + 1.0) - 0.5 * (theta - 1.0))
}

fn tree_block() -> DMatrix<f64> {
    DMatrix::from_row_slice(3, 3, &[0.0, -0.5, -0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0])
}

fn half01_block() -> DMatrix<f64> {
    DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, -1.0, 0.0])
}

/// `block ⊕ id` on an ambient space of dimension `n`.
fn with_identity_tail(block: DMatrix<f64>, n: usize) -> DMatrix<f64> {
    let k = block.nrows();
    let mut t = DMatrix::identity(n, n);
    t.view_mut((0, 0), (k, k)).copy_from(&block);
    t
}

impl CatalogCase {
    /// Every tag accepted by [`CatalogCase::parse`], with example parameters.
    pub const TAGS: &'static [&'static str] = &[
        "interval:<theta>",
        "circles:<theta-bar>[:<c>]",
        "k1-id",
        "k1-seventh",
        "tree-periodic",
        "tree-nilpotent",
        "sg-011:<level>",
        "sg-half01:<level>",
    ];

    pub fn parse(tag: &str) -> Result<Self> {
        let parts: Vec<&str> = tag.split(':').collect();
        let num = |i: usize| -> Result<f64> {
            parts
                .get(i)
                .ok_or_else(|| KirchhoffError::NotInCatalog(tag.into()))?
                .parse::<f64>()
                .map_err(|_| KirchhoffError::NotInCatalog(tag.into()))
        };
        let level = |i: usize| -> Result<usize> {
            parts
                .get(i)
                .ok_or_else(|| KirchhoffError::NotInCatalog(tag.into()))?
                .parse::<usize>()
                .map_err(|_| KirchhoffError::NotInCatalog(tag.into()))
        };
        Ok(match (parts[0], parts.len()) {
            ("interval", 2) => CatalogCase::Interval { theta: num(1)? },
            ("circles", 2) => CatalogCase::Circles { theta_bar: num(1)?, c: 1.0 },
            ("circles", 3) => CatalogCase::Circles { theta_bar: num(1)?, c: num(2)? },
            ("k1-id", 1) => CatalogCase::K1Identity,
            ("k1-seventh", 1) => CatalogCase::K1Seventh,
            ("tree-periodic", 1) => CatalogCase::TreePeriodic,
            ("tree-nilpotent", 1) => CatalogCase::TreeNilpotent,
            ("sg-011", 2) => CatalogCase::SgReduced011 { level: level(1)? },
            ("sg-half01", 2) => CatalogCase::SgHalf01 { level: level(1)? },
            _ => return Err(KirchhoffError::NotInCatalog(tag.into())),
        })
    }

    pub fn tag(&self) -> String {
        match *self {
            CatalogCase::Interval { theta } => format!("interval:{theta}"),
            CatalogCase::Circles { theta_bar, c } if c == 1.0 => format!("circles:{theta_bar}"),
            CatalogCase::Circles { theta_bar, c } => format!("circles:{theta_bar}:{c}"),
            CatalogCase::K1Identity => "k1-id".into(),
            CatalogCase::K1Seventh => "k1-seventh".into(),
            CatalogCase::TreePeriodic => "tree-periodic".into(),
            CatalogCase::TreeNilpotent => "tree-nilpotent".into(),
            CatalogCase::SgReduced011 { level } => format!("sg-011:{level}"),
            CatalogCase::SgHalf01 { level } => format!("sg-half01:{level}"),
        }
    }

    /// The graph and velocity field of the case.
    pub fn setup(&self) -> Result<(MetricGraph, VelocityField)> {
        let from_doc = |g: MetricGraph| -> Result<(MetricGraph, VelocityField)> {
            let b = check_field(&g, &g.field("b")?)?;
            Ok((g, b))
        };
        match *self {
            CatalogCase::Interval { .. } => from_doc(fixtures::interval_graph()),
            CatalogCase::Circles { c, .. } => from_doc(fixtures::two_circles_graph(c, c)),
            CatalogCase::K1Identity | CatalogCase::K1Seventh => from_doc(fixtures::k1_graph()),
            CatalogCase::TreePeriodic | CatalogCase::TreeNilpotent => from_doc(fixtures::star_tree_graph()),
            CatalogCase::SgReduced011 { level } => {
                let (sg, _, b) = CylindricalCase::Reduced011.graph(level)?;
                Ok((sg.graph, b))
            }
            CatalogCase::SgHalf01 { level } => {
                let (sg, _, b) = CylindricalCase::Half01.graph(level)?;
                Ok((sg.graph, b))
            }
        }
    }

    /// `Θ` on the ambient coordinates of the case's quadruple.
    pub fn theta(&self, ambient_dim: usize) -> DMatrix<f64> {
        let n = ambient_dim;
        match *self {
            CatalogCase::Interval { theta } => DMatrix::from_row_slice(2, 2, &[0.0, theta, 0.0, 0.0]),
            CatalogCase::Circles { theta_bar, c } => DMatrix::identity(n, n) * circles_theta(theta_bar, c),
            CatalogCase::K1Identity => DMatrix::identity(n, n),
            CatalogCase::K1Seventh => DMatrix::identity(n, n) / 7.0,
            CatalogCase::TreePeriodic => tree_block(),
            CatalogCase::TreeNilpotent => DMatrix::zeros(n, n),
            CatalogCase::SgReduced011 { .. } => with_identity_tail(tree_block(), n),
            CatalogCase::SgHalf01 { .. } => with_identity_tail(half01_block(), n),
        }
    }

    pub fn generator(&self) -> Result<Generator> {
        let (g, b) = self.setup()?;
        let spaces = build_quadruple(&g, &b)?;
        let theta = self.theta(spaces.ambient_dim());
        Generator::new(spaces, theta)
    }

    /// Whether the case is one of the periodic cases for which `A^Θ*`
    /// extends `−A^Θ` (so that `ker A^Θ` is invariant).
    pub fn kernel_invariant(&self) -> bool {
        matches!(
            self,
            CatalogCase::K1Identity
                | CatalogCase::TreePeriodic
                | CatalogCase::SgReduced011 { .. }
                | CatalogCase::SgHalf01 { .. }
        )
    }

    /// Vertex scattering rules: closed-form where the example states them,
    /// otherwise the single rule `t_in = S t_out` solved from the trace
    /// conditions (which may couple several vertices).
    pub fn scattering_rules(&self, generator: &Generator) -> Result<Vec<ScatteringRule>> {
        let g = generator.graph();
        let b = generator.field();
        let out_end = |e: usize| (e, inflow_outflow(b.b(e)).1);
        let in_end = |e: usize| (e, inflow_outflow(b.b(e)).0);
        let tag = self.tag();
        Ok(match *self {
            CatalogCase::Interval { theta } => vec![ScatteringRule {
                tag,
                arriving: vec![(0, End::Head)],
                departing: vec![(0, End::Tail)],
                matrix: DMatrix::from_element(1, 1, -theta),
            }],
            CatalogCase::Circles { theta_bar, .. } => {
                let (p, q) = (0.5 * (1.0 + theta_bar), 0.5 * (1.0 - theta_bar));
                vec![ScatteringRule {
                    tag,
                    arriving: vec![out_end(0), out_end(1)],
                    departing: vec![in_end(0), in_end(1)],
                    matrix: DMatrix::from_row_slice(2, 2, &[p, q, q, p]),
                }]
            }
            _ => {
                let s = generator.scattering_matrix()?;
                let m = g.edge_count();
                vec![ScatteringRule {
                    tag,
                    arriving: (0..m).map(out_end).collect(),
                    departing: (0..m).map(in_end).collect(),
                    matrix: s,
                }]
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_cases() -> Vec<CatalogCase> {
        vec![
            CatalogCase::Interval { theta: -1.0 },
            CatalogCase::Interval { theta: 0.0 },
            CatalogCase::Circles { theta_bar: 1.0, c: 1.0 },
            CatalogCase::Circles { theta_bar: -1.0, c: 1.0 },
            CatalogCase::Circles { theta_bar: 0.3, c: 2.0 },
            CatalogCase::K1Identity,
            CatalogCase::K1Seventh,
            CatalogCase::TreePeriodic,
            CatalogCase::TreeNilpotent,
            CatalogCase::SgReduced011 { level: 2 },
            CatalogCase::SgHalf01 { level: 2 },
        ]
    }

    #[test]
    fn theta_bar_round_trip() {
        for c in [0.5, 1.0, 3.0] {
            for tb in [-1.0, -0.4, 0.0, 0.7, 1.0] {
                assert!((circles_theta_bar(circles_theta(tb, c), c) - tb).abs() < 1e-14);
            }
        }
        assert!((circles_theta(1.0, 1.0) - 1.0).abs() < 1e-15);
        assert!((circles_theta(-1.0, 1.0) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn tags_round_trip() {
        for case in all_cases() {
            assert_eq!(CatalogCase::parse(&case.tag()).unwrap(), case);
        }
        assert!(matches!(CatalogCase::parse("k2-id"), Err(KirchhoffError::NotInCatalog(_))));
    }

    #[test]
    fn every_case_is_a_contraction() {
        for case in all_cases() {
            assert!(case.generator().is_ok(), "{}", case.tag());
        }
    }

    #[test]
    fn closed_form_rules_match_trace_conditions() {
        for case in [
            CatalogCase::Interval { theta: 0.4 },
            CatalogCase::Circles { theta_bar: 1.0, c: 1.0 },
            CatalogCase::Circles { theta_bar: -1.0, c: 1.0 },
            CatalogCase::Circles { theta_bar: 0.3, c: 2.0 },
        ] {
            let gen = case.generator().unwrap();
            let s = gen.scattering_matrix().unwrap();
            let m = gen.graph().edge_count();
            let mut assembled = DMatrix::zeros(m, m);
            for rule in case.scattering_rules(&gen).unwrap() {
                for (i, &(e, _)) in rule.departing.iter().enumerate() {
                    for (j, &(f, _)) in rule.arriving.iter().enumerate() {
                        assembled[(e, f)] += rule.matrix[(i, j)];
                    }
                }
            }
            assert!((&assembled - &s).amax() < 1e-10, "{}: {assembled} vs {s}", case.tag());
        }
    }

    /// Coefficient of the cell form around `q_i` in an edge-constant element of
    /// `ker ∂⊥` on `K^(1)`.
    fn cell_coefficient(g: &MetricGraph, x: &[f64], cell: [&str; 3]) -> f64 {
        let e = |id: &str| g.edge_index(id).unwrap();
        (x[e(cell[0])] + x[e(cell[1])] - 2.0 * x[e(cell[2])]) / 3.0
    }

    #[test]
    fn k1_seventh_domain_is_three_w_equals_four_z() {
        use crate::decomp::key_decompose;
        use crate::generator::resolvent_solve;
        use crate::sampling::random_poly;
        use rand::SeedableRng;
        let gen = CatalogCase::K1Seventh.generator().unwrap();
        let g = gen.graph();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let f = resolvent_solve(&gen, 1.5, &random_poly(g, &mut rng, 2)).unwrap();
        let k = key_decompose(g, gen.field(), &f).unwrap();
        for cell in [["q0p2", "p1q0", "p1p2"], ["q1p0", "p2q1", "p2p0"], ["q2p1", "p0q2", "p0p1"]] {
            let (w, z) = (cell_coefficient(g, &k.w, cell), cell_coefficient(g, &k.z, cell));
            assert!((3.0 * w - 4.0 * z).abs() < 1e-6, "{cell:?}: {w} {z}");
        }
    }
}
