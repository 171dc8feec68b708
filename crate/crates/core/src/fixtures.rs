//! Built-in graphs: the interval, two glued circles, a star tree, the
//! level-1 gasket graph with its cycle field, and gasket levels.

use crate::error::{KirchhoffError, Result};
use crate::graph::{GraphDocument, MetricGraph};
use crate::sierpinski::sg_graph;

pub const INTERVAL: &str = include_str!("../fixtures/interval.json");
pub const TWO_CIRCLES: &str = include_str!("../fixtures/two_circles.json");
pub const STAR_TREE: &str = include_str!("../fixtures/star_tree.json");
pub const K1: &str = include_str!("../fixtures/k1.json");

fn load(text: &str) -> MetricGraph {
    MetricGraph::from_json(text).expect("embedded fixture is valid")
}

/// One edge `q0 → q1`, `B = {q0, q1}`, field `b = 1`.
pub fn interval_graph() -> MetricGraph {
    load(INTERVAL)
}

/// Two loops `c1, c2` at `p`, `B = ∅`, field `b = (c1, c2)`.
pub fn two_circles_graph(c1: f64, c2: f64) -> MetricGraph {
    load(TWO_CIRCLES).with_field("b", &[c1, c2]).expect("two coefficients")
}

/// `q0 → p → {q1, q2}`, `B = {q0, q1, q2}`, field `b = ∂h` with
/// `h = (0, 2/3, 1, 1)`.
pub fn star_tree_graph() -> MetricGraph {
    load(STAR_TREE).with_field("b", &[2.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]).expect("three coefficients")
}

/// Level-1 gasket graph with outer edges `b = 1` and inner triangle `b = 2`,
/// `B = ∅`.
pub fn k1_graph() -> MetricGraph {
    load(K1)
}

/// Names accepted by [`builtin`].
pub const BUILTIN_NAMES: &[&str] =
    &["interval", "circles", "star-tree", "k1", "sg1", "sg2", "sg3", "sg1-reduced", "sg2-reduced"];

/// Looks up a built-in graph by name.
pub fn builtin(name: &str) -> Result<MetricGraph> {
    Ok(match name {
        "interval" => interval_graph(),
        "circles" => two_circles_graph(1.0, 1.0),
        "star-tree" => star_tree_graph(),
        "k1" => k1_graph(),
        "sg1" | "sg2" | "sg3" => sg_graph(name[2..].parse().unwrap(), false)?.graph,
        "sg1-reduced" | "sg2-reduced" => sg_graph(name[2..3].parse().unwrap(), true)?.graph,
        _ => return Err(KirchhoffError::Parse(format!("unknown built-in graph {name}"))),
    })
}

pub fn builtin_document(name: &str) -> Result<GraphDocument> {
    Ok(builtin(name)?.to_document())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_counts() {
        let g = interval_graph();
        assert_eq!((g.vertex_count(), g.edge_count()), (2, 1));
        let g = two_circles_graph(1.0, 2.0);
        assert_eq!((g.vertex_count(), g.edge_count(), g.cycle_rank()), (1, 2, 2));
        assert_eq!(g.field("b").unwrap(), vec![1.0, 2.0]);
        let g = k1_graph();
        assert_eq!((g.vertex_count(), g.edge_count(), g.cycle_rank()), (6, 9, 4));
        for name in BUILTIN_NAMES {
            assert!(builtin(name).is_ok(), "{name}");
        }
    }
}
