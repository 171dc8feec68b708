//! Random test data: polynomial edge functions and domain elements.

use rand::Rng;

use crate::error::Result;
use crate::graph::{EdgeFunction, MetricGraph};
use crate::decomp::project_to_domain;
use crate::hodge::VelocityField;

/// Coefficients uniform in [−1, 1], degree `degree` on every edge.
pub fn random_poly(graph: &MetricGraph, rng: &mut impl Rng, degree: usize) -> EdgeFunction {
    EdgeFunction::Poly(
        (0..graph.edge_count()).map(|_| (0..=degree).map(|_| rng.random_range(-1.0..1.0)).collect()).collect(),
    )
}

/// A random polynomial pushed into `D(∂⊥)` by the minimal trace correction.
pub fn random_domain_poly(
    graph: &MetricGraph,
    b: &VelocityField,
    rng: &mut impl Rng,
    degree: usize,
) -> Result<EdgeFunction> {
    project_to_domain(graph, b, &random_poly(graph, rng, degree.max(1)))
}

pub fn random_vector(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}
