use serde::Serialize;
use thiserror::Error;

/// A directed influence diagram: nodes, directed edges, and the subset of
/// nodes that are experimenter inputs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CausalGraph {
    pub nodes: Vec<String>,
    pub edges: Vec<(String, String)>,
    pub input_nodes: Vec<String>,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("edge references unknown node {name:?}")]
    UnknownNode { name: String },

    #[error("duplicate edge {from:?} -> {to:?}")]
    DuplicateEdge { from: String, to: String },

    #[error("duplicate node {name:?}")]
    DuplicateNode { name: String },
}

impl CausalGraph {
    pub fn new(
        nodes: &[&str],
        edges: &[(&str, &str)],
        input_nodes: &[&str],
    ) -> Result<Self, GraphError> {
        for (i, n) in nodes.iter().enumerate() {
            if nodes[..i].contains(n) {
                return Err(GraphError::DuplicateNode {
                    name: n.to_string(),
                });
            }
        }
        for name in input_nodes {
            if !nodes.contains(name) {
                return Err(GraphError::UnknownNode {
                    name: name.to_string(),
                });
            }
        }
        for (i, (from, to)) in edges.iter().enumerate() {
            if !nodes.contains(from) {
                return Err(GraphError::UnknownNode {
                    name: from.to_string(),
                });
            }
            if !nodes.contains(to) {
                return Err(GraphError::UnknownNode {
                    name: to.to_string(),
                });
            }
            if edges[..i].contains(&(*from, *to)) {
                return Err(GraphError::DuplicateEdge {
                    from: from.to_string(),
                    to: to.to_string(),
                });
            }
        }
        Ok(CausalGraph {
            nodes: nodes.iter().map(|s| s.to_string()).collect(),
            edges: edges
                .iter()
                .map(|(f, t)| (f.to_string(), t.to_string()))
                .collect(),
            input_nodes: input_nodes.iter().map(|s| s.to_string()).collect(),
        })
    }

    fn successors(&self, node: &str) -> impl Iterator<Item = &str> + '_ {
        let node = node.to_string();
        self.edges
            .iter()
            .filter(move |(from, _)| *from == node)
            .map(|(_, to)| to.as_str())
    }

    /// True when a directed path exists from `from` to `to`.
    pub fn has_path(&self, from: &str, to: &str) -> bool {
        let mut stack = vec![from];
        let mut seen = Vec::new();
        while let Some(n) = stack.pop() {
            if n == to {
                return true;
            }
            if seen.contains(&n) {
                continue;
            }
            seen.push(n);
            stack.extend(self.successors(n));
        }
        false
    }
}

/// Acyclicity verdict; a cyclic graph carries one closed causal cycle as a
/// node sequence whose last element equals its first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum AcyclicityVerdict {
    Acyclic,
    Cyclic { cycle: Vec<String> },
}

impl AcyclicityVerdict {
    pub fn is_acyclic(&self) -> bool {
        matches!(self, AcyclicityVerdict::Acyclic)
    }
}

/// Depth-first search for a directed cycle.
pub fn check_acyclic(graph: &CausalGraph) -> AcyclicityVerdict {
    #[derive(Clone, Copy, PartialEq)]
    enum Color {
        White,
        Gray,
        Black,
    }

    fn visit(
        graph: &CausalGraph,
        node: &str,
        colors: &mut Vec<(String, Color)>,
        stack: &mut Vec<String>,
    ) -> Option<Vec<String>> {
        set_color(colors, node, Color::Gray);
        stack.push(node.to_string());
        for succ in graph.successors(node) {
            match get_color(colors, succ) {
                Color::Gray => {
                    let start = stack.iter().position(|n| n == succ).unwrap();
                    let mut cycle: Vec<String> = stack[start..].to_vec();
                    cycle.push(succ.to_string());
                    return Some(cycle);
                }
                Color::White => {
                    if let Some(cycle) = visit(graph, succ, colors, stack) {
                        return Some(cycle);
                    }
                }
                Color::Black => {}
            }
        }
        stack.pop();
        set_color(colors, node, Color::Black);
        None
    }

    fn get_color(colors: &[(String, Color)], node: &str) -> Color {
        colors
            .iter()
            .find(|(n, _)| n == node)
            .map(|(_, c)| *c)
            .unwrap_or(Color::White)
    }

    fn set_color(colors: &mut Vec<(String, Color)>, node: &str, color: Color) {
        if let Some(slot) = colors.iter_mut().find(|(n, _)| n == node) {
            slot.1 = color;
        } else {
            colors.push((node.to_string(), color));
        }
    }

    let mut colors = Vec::new();
    for node in &graph.nodes {
        if get_color(&colors, node) == Color::White {
            let mut stack = Vec::new();
            if let Some(cycle) = visit(graph, node, &mut colors, &mut stack) {
                return AcyclicityVerdict::Cyclic { cycle };
            }
        }
    }
    AcyclicityVerdict::Acyclic
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_is_acyclic() {
        let g = CausalGraph::new(&["a", "b", "c"], &[("a", "b"), ("b", "c")], &["a"]).unwrap();
        assert!(check_acyclic(&g).is_acyclic());
    }

    #[test]
    fn cycle_is_reported_as_node_sequence() {
        let g = CausalGraph::new(
            &["p", "t", "m"],
            &[("p", "t"), ("t", "m"), ("m", "p")],
            &[],
        )
        .unwrap();
        match check_acyclic(&g) {
            AcyclicityVerdict::Cyclic { cycle } => {
                assert_eq!(cycle.first(), cycle.last());
                assert!(cycle.len() >= 4, "three-node cycle plus closing node");
            }
            AcyclicityVerdict::Acyclic => panic!("cycle missed"),
        }
    }

    #[test]
    fn self_loop_is_a_cycle() {
        let g = CausalGraph::new(&["a"], &[("a", "a")], &[]).unwrap();
        assert!(!check_acyclic(&g).is_acyclic());
    }

    #[test]
    fn constructor_rejects_unknown_nodes_and_duplicate_edges() {
        assert!(matches!(
            CausalGraph::new(&["a"], &[("a", "b")], &[]),
            Err(GraphError::UnknownNode { .. })
        ));
        assert!(matches!(
            CausalGraph::new(&["a", "b"], &[("a", "b"), ("a", "b")], &[]),
            Err(GraphError::DuplicateEdge { .. })
        ));
    }

    #[test]
    fn path_queries() {
        let g = CausalGraph::new(
            &["x", "p", "t", "m", "b"],
            &[("x", "p"), ("p", "t"), ("t", "m"), ("m", "b")],
            &["x"],
        )
        .unwrap();
        assert!(g.has_path("p", "b"));
        assert!(!g.has_path("b", "p"));
    }
}
