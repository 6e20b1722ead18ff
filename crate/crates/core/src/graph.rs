//! Network topology: nodes, directed edges with lengths and cell counts,
//! orientation conventions at nodes, and the JSON network description.
//!
//! Internally nodes and edges are addressed by their dense position in the
//! network (`usize` index). The ids from the description file are kept as
//! labels and written back on serialization and in every output file.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which end of an edge touches a node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EdgeEnd {
    /// The node is the edge's start; the edge points out of the node.
    Start,
    /// The node is the edge's end; the edge points into the node.
    End,
}

impl EdgeEnd {
    /// Orientation sign: +1 for an outgoing edge, -1 for an incoming one.
    pub fn sign(self) -> f64 {
        match self {
            EdgeEnd::Start => 1.0,
            EdgeEnd::End => -1.0,
        }
    }

    pub fn opposite(self) -> Self {
        match self {
            EdgeEnd::Start => EdgeEnd::End,
            EdgeEnd::End => EdgeEnd::Start,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Incidence {
    pub edge: usize,
    pub end: EdgeEnd,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub id: usize,
    pub incident: Vec<Incidence>,
}

impl Node {
    pub fn degree(&self) -> usize {
        self.incident.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub id: usize,
    pub from: usize,
    pub to: usize,
    pub length: f64,
    pub cells: usize,
}

impl Edge {
    pub fn node_at(&self, end: EdgeEnd) -> usize {
        match end {
            EdgeEnd::Start => self.from,
            EdgeEnd::End => self.to,
        }
    }
}

/// A validated, immutable network.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeDoc {
    id: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeDoc {
    id: usize,
    from: usize,
    to: usize,
    length: f64,
    cells: usize,
}

/// On-disk network description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkDoc {
    nodes: Vec<NodeDoc>,
    edges: Vec<EdgeDoc>,
}

/// Edge description used by [`Network::new`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeSpec {
    pub id: usize,
    pub from: usize,
    pub to: usize,
    pub length: f64,
    pub cells: usize,
}

impl Network {
    /// Build and validate a network from node ids and edge records that
    /// reference node ids.
    pub fn new(node_ids: &[usize], edges: &[EdgeSpec]) -> Result<Self> {
        let mut index = HashMap::with_capacity(node_ids.len());
        let mut sorted_nodes = node_ids.to_vec();
        sorted_nodes.sort_unstable();
        for w in sorted_nodes.windows(2) {
            if w[0] == w[1] {
                return Err(Error::DuplicateId {
                    kind: "node",
                    id: w[0],
                });
            }
        }
        let mut nodes: Vec<Node> = sorted_nodes
            .iter()
            .enumerate()
            .map(|(i, &id)| {
                index.insert(id, i);
                Node {
                    id,
                    incident: Vec::new(),
                }
            })
            .collect();

        let mut sorted_edges = edges.to_vec();
        sorted_edges.sort_by_key(|e| e.id);
        for w in sorted_edges.windows(2) {
            if w[0].id == w[1].id {
                return Err(Error::DuplicateId {
                    kind: "edge",
                    id: w[0].id,
                });
            }
        }

        let mut out_edges = Vec::with_capacity(sorted_edges.len());
        for (k, e) in sorted_edges.iter().enumerate() {
            let from = *index.get(&e.from).ok_or(Error::DanglingNode {
                edge: e.id,
                node: e.from,
            })?;
            let to = *index.get(&e.to).ok_or(Error::DanglingNode {
                edge: e.id,
                node: e.to,
            })?;
            if !(e.length.is_finite() && e.length > 0.0) {
                return Err(Error::InvalidEdge {
                    edge: e.id,
                    reason: format!("length must be positive, got {}", e.length),
                });
            }
            if e.cells < 2 {
                return Err(Error::InvalidEdge {
                    edge: e.id,
                    reason: format!("needs at least 2 cells, got {}", e.cells),
                });
            }
            nodes[from].incident.push(Incidence {
                edge: k,
                end: EdgeEnd::Start,
            });
            nodes[to].incident.push(Incidence {
                edge: k,
                end: EdgeEnd::End,
            });
            out_edges.push(Edge {
                id: e.id,
                from,
                to,
                length: e.length,
                cells: e.cells,
            });
        }
        Ok(Network {
            nodes,
            edges: out_edges,
        })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node(&self, index: usize) -> Result<&Node> {
        self.nodes.get(index).ok_or(Error::UnknownNode(index))
    }

    pub fn edge(&self, index: usize) -> Result<&Edge> {
        self.edges.get(index).ok_or(Error::UnknownEdge(index))
    }

    pub fn node_index(&self, id: usize) -> Result<usize> {
        self.nodes
            .binary_search_by_key(&id, |n| n.id)
            .map_err(|_| Error::UnknownNode(id))
    }

    pub fn edge_index(&self, id: usize) -> Result<usize> {
        self.edges
            .binary_search_by_key(&id, |e| e.id)
            .map_err(|_| Error::UnknownEdge(id))
    }

    /// Same topology with every edge re-meshed to `max(2, round(L / dx))` cells.
    pub fn with_cell_width(&self, dx: f64) -> Result<Self> {
        if !(dx.is_finite() && dx > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "cell width must be positive, got {dx}"
            )));
        }
        let mut net = self.clone();
        for e in &mut net.edges {
            e.cells = ((e.length / dx).round() as usize).max(2);
        }
        Ok(net)
    }

    /// The frame in which every edge incident to `node` points away from it.
    pub fn node_local_frame(&self, node: usize) -> Result<NodeLocalFrame> {
        let n = self.node(node)?;
        Ok(NodeLocalFrame {
            node,
            edges: n.incident.clone(),
        })
    }

    /// For an edge end sitting on a degree-2 node, the other edge end at that
    /// node. Such nodes join two edges into one continuous line.
    pub fn continuation(&self, edge: usize, end: EdgeEnd) -> Option<Incidence> {
        let node = &self.nodes[self.edges[edge].node_at(end)];
        if node.degree() != 2 {
            return None;
        }
        node.incident
            .iter()
            .copied()
            .find(|inc| !(inc.edge == edge && inc.end == end))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let doc: NetworkDoc =
            serde_json::from_str(text).map_err(|e| Error::Syntax(e.to_string()))?;
        Self::from_doc(&doc)
    }

    pub fn from_doc(doc: &NetworkDoc) -> Result<Self> {
        let ids: Vec<usize> = doc.nodes.iter().map(|n| n.id).collect();
        let edges: Vec<EdgeSpec> = doc
            .edges
            .iter()
            .map(|e| EdgeSpec {
                id: e.id,
                from: e.from,
                to: e.to,
                length: e.length,
                cells: e.cells,
            })
            .collect();
        Self::new(&ids, &edges)
    }

    pub fn to_doc(&self) -> NetworkDoc {
        NetworkDoc {
            nodes: self.nodes.iter().map(|n| NodeDoc { id: n.id }).collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeDoc {
                    id: e.id,
                    from: self.nodes[e.from].id,
                    to: self.nodes[e.to].id,
                    length: e.length,
                    cells: e.cells,
                })
                .collect(),
        }
    }

    pub fn serialize(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("network document is serializable")
    }
}

/// Parse a network description document.
pub fn parse_network(text: &str) -> Result<Network> {
    Network::parse(text)
}

/// Incident edges of a node together with their orientation signs.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeLocalFrame {
    pub node: usize,
    pub edges: Vec<Incidence>,
}

impl NodeLocalFrame {
    pub fn degree(&self) -> usize {
        self.edges.len()
    }

    pub fn signs(&self) -> Vec<f64> {
        self.edges.iter().map(|i| i.end.sign()).collect()
    }

    /// Map a boundary trace between the physical and the all-outgoing frame.
    /// `parity` holds +1 for components that are even under x -> -x and -1
    /// for odd ones. The map is an involution.
    pub fn transform(&self, slot: usize, trace: &mut [f64], parity: &[f64]) {
        if self.edges[slot].end == EdgeEnd::End {
            reflect(trace, parity);
        }
    }
}

/// Apply the reflection x -> -x to a state vector with the given parity.
pub fn reflect(state: &mut [f64], parity: &[f64]) {
    debug_assert_eq!(state.len(), parity.len());
    for (s, p) in state.iter_mut().zip(parity) {
        *s *= p;
    }
}

/// Convenience lookup of a node's local frame.
pub fn node_local_frame(net: &Network, node: usize) -> Result<NodeLocalFrame> {
    net.node_local_frame(node)
}
