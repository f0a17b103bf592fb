//! Two-layer network model: packet switches riding on an optical ROADM ring.
//!
//! Topologies are declared in a TOML document with `nodes`, `ports` and
//! `links` arrays and validated on load. Once loaded a [`MultilayerTopology`]
//! is immutable and can be shared across concurrent compilations.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Three-ROADM ring with two attached switches, shipped with the crate.
pub const DEFAULT_TESTBED: &str = include_str!("../testbed.topo");

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Self {
        NodeId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_owned())
    }
}

/// A port on a node. Port names such as `1-7-C1` are opaque.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PortId {
    pub node: NodeId,
    pub name: String,
}

impl PortId {
    pub fn new(node: impl Into<NodeId>, name: impl Into<String>) -> Self {
        PortId {
            node: node.into(),
            name: name.into(),
        }
    }
}

impl From<String> for NodeId {
    fn from(s: String) -> Self {
        NodeId(s)
    }
}

impl fmt::Display for PortId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.node, self.name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeKind {
    PacketSwitch,
    Roadm,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
    pub mgmt_address: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PortRole {
    ClientPort,
    NetworkPort,
    HostPort,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Port {
    pub node: NodeId,
    pub name: String,
    pub role: PortRole,
    #[serde(default)]
    pub encryption_capable: bool,
}

impl Port {
    pub fn id(&self) -> PortId {
        PortId::new(self.node.clone(), self.name.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LinkLayer {
    Packet,
    Fiber,
    CrossLayer,
}

fn default_hop_weight() -> u32 {
    1
}

/// A bidirectional link. `a`/`z` only name the two ends.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Link {
    pub a: PortId,
    pub z: PortId,
    pub layer: LinkLayer,
    #[serde(default = "default_hop_weight")]
    pub hop_weight: u32,
}

impl Link {
    /// The far end of the link as seen from `node`, if `node` is on it.
    pub fn peer_of(&self, node: &NodeId) -> Option<&NodeId> {
        if &self.a.node == node {
            Some(&self.z.node)
        } else if &self.z.node == node {
            Some(&self.a.node)
        } else {
            None
        }
    }
}

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("malformed topology document: {0}")]
    Parse(String),
    #[error("invalid topology: {0}")]
    Validation(String),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("{0} is not a packet switch")]
    NotPacketSwitch(NodeId),
    #[error("{0} is not a ROADM")]
    NotRoadm(NodeId),
    #[error("switch {0} has no cross-layer attachment")]
    NotAttached(NodeId),
    #[error("switch {0} has more than one cross-layer attachment")]
    Ambiguous(NodeId),
    #[error("no optical path between {0} and {1}")]
    NoPath(NodeId, NodeId),
}

/// On-disk layout of a topology file.
#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TopologyDocument {
    #[serde(default)]
    nodes: Vec<Node>,
    #[serde(default)]
    ports: Vec<Port>,
    #[serde(default)]
    links: Vec<Link>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MultilayerTopology {
    nodes: BTreeMap<NodeId, Node>,
    ports: BTreeMap<PortId, Port>,
    links: Vec<Link>,
}

impl MultilayerTopology {
    /// Parses and validates a topology document.
    pub fn load(document: &[u8]) -> Result<Self, TopologyError> {
        let text = std::str::from_utf8(document)
            .map_err(|e| TopologyError::Parse(format!("not UTF-8: {e}")))?;
        let doc: TopologyDocument =
            toml::from_str(text).map_err(|e| TopologyError::Parse(e.to_string()))?;
        Self::from_parts(doc.nodes, doc.ports, doc.links)
    }

    pub fn default_testbed() -> Self {
        Self::load(DEFAULT_TESTBED.as_bytes()).expect("bundled testbed is valid")
    }

    pub fn from_parts(
        nodes: Vec<Node>,
        ports: Vec<Port>,
        links: Vec<Link>,
    ) -> Result<Self, TopologyError> {
        let mut topo = MultilayerTopology::default();
        let mut addresses = BTreeMap::new();
        for node in nodes {
            if let Some(other) = addresses.insert(node.mgmt_address.clone(), node.id.clone()) {
                return Err(TopologyError::Validation(format!(
                    "mgmt_address {} shared by {} and {}",
                    node.mgmt_address, other, node.id
                )));
            }
            if topo.nodes.contains_key(&node.id) {
                return Err(TopologyError::Validation(format!(
                    "duplicate node {}",
                    node.id
                )));
            }
            topo.nodes.insert(node.id.clone(), node);
        }
        for port in ports {
            let owner = topo.nodes.get(&port.node).ok_or_else(|| {
                TopologyError::Validation(format!(
                    "port {} references unknown node {}",
                    port.name, port.node
                ))
            })?;
            if port.encryption_capable && owner.kind != NodeKind::Roadm {
                return Err(TopologyError::Validation(format!(
                    "port {} is encryption capable but {} is not a ROADM",
                    port.id(),
                    port.node
                )));
            }
            let id = port.id();
            if topo.ports.contains_key(&id) {
                return Err(TopologyError::Validation(format!("duplicate port {id}")));
            }
            topo.ports.insert(id, port);
        }
        for link in links {
            topo.validate_link(&link)?;
            topo.links.push(link);
        }
        Ok(topo)
    }

    fn validate_link(&self, link: &Link) -> Result<(), TopologyError> {
        let end = |id: &PortId| {
            let port = self.ports.get(id).ok_or_else(|| {
                TopologyError::Validation(format!("link references unknown port {id}"))
            })?;
            Ok::<_, TopologyError>((port, self.nodes[&id.node].kind))
        };
        let (pa, ka) = end(&link.a)?;
        let (pz, kz) = end(&link.z)?;
        if link.hop_weight == 0 {
            return Err(TopologyError::Validation(format!(
                "link {} - {} has zero hop_weight",
                link.a, link.z
            )));
        }
        if link.a.node == link.z.node {
            return Err(TopologyError::Validation(format!(
                "link {} - {} is a self loop",
                link.a, link.z
            )));
        }
        let ok = match link.layer {
            LinkLayer::Fiber => {
                ka == NodeKind::Roadm
                    && kz == NodeKind::Roadm
                    && pa.role == PortRole::NetworkPort
                    && pz.role == PortRole::NetworkPort
            }
            LinkLayer::CrossLayer => {
                let switch_to_client = |s: NodeKind, r: NodeKind, rp: &Port| {
                    s == NodeKind::PacketSwitch
                        && r == NodeKind::Roadm
                        && rp.role == PortRole::ClientPort
                };
                switch_to_client(ka, kz, pz) || switch_to_client(kz, ka, pa)
            }
            LinkLayer::Packet => ka == NodeKind::PacketSwitch && kz == NodeKind::PacketSwitch,
        };
        if ok {
            Ok(())
        } else {
            Err(TopologyError::Validation(format!(
                "illegal {:?} link {} - {}",
                link.layer, link.a, link.z
            )))
        }
    }

    /// Serializes back into the on-disk document form.
    pub fn to_document(&self) -> String {
        let doc = TopologyDocument {
            nodes: self.nodes.values().cloned().collect(),
            ports: self.ports.values().cloned().collect(),
            links: self.links.clone(),
        };
        toml::to_string(&doc).expect("topology document serializes")
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.values()
    }

    pub fn ports(&self) -> impl Iterator<Item = &Port> {
        self.ports.values()
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn node(&self, id: &NodeId) -> Option<&Node> {
        self.nodes.get(id)
    }

    pub fn port(&self, id: &PortId) -> Option<&Port> {
        self.ports.get(id)
    }

    pub fn node_by_address(&self, mgmt_address: &str) -> Option<&Node> {
        self.nodes.values().find(|n| n.mgmt_address == mgmt_address)
    }

    pub fn packet_switches(&self) -> impl Iterator<Item = &Node> {
        self.nodes
            .values()
            .filter(|n| n.kind == NodeKind::PacketSwitch)
    }

    /// Resolves the ROADM client port a packet switch hangs off.
    pub fn roadm_client_port_of(&self, switch: &NodeId) -> Result<PortId, TopologyError> {
        let node = self
            .nodes
            .get(switch)
            .ok_or_else(|| TopologyError::UnknownNode(switch.clone()))?;
        if node.kind != NodeKind::PacketSwitch {
            return Err(TopologyError::NotPacketSwitch(switch.clone()));
        }
        let mut attached = self
            .links
            .iter()
            .filter(|l| l.layer == LinkLayer::CrossLayer)
            .filter_map(|l| {
                if &l.a.node == switch {
                    Some(&l.z)
                } else if &l.z.node == switch {
                    Some(&l.a)
                } else {
                    None
                }
            });
        let first = attached
            .next()
            .ok_or_else(|| TopologyError::NotAttached(switch.clone()))?;
        if attached.next().is_some() {
            return Err(TopologyError::Ambiguous(switch.clone()));
        }
        Ok(first.clone())
    }

    /// Minimum hop-weight path over fiber links between two ROADMs.
    ///
    /// Among equal-weight paths the one whose node sequence, read from the
    /// lexicographically smaller endpoint, is smallest wins. This keeps
    /// `optical_path(z, a)` the exact reverse of `optical_path(a, z)`.
    pub fn optical_path(&self, a: &NodeId, z: &NodeId) -> Result<Vec<Link>, TopologyError> {
        for n in [a, z] {
            match self.nodes.get(n) {
                None => return Err(TopologyError::UnknownNode(n.clone())),
                Some(node) if node.kind != NodeKind::Roadm => {
                    return Err(TopologyError::NotRoadm(n.clone()))
                }
                Some(_) => {}
            }
        }
        if a == z {
            return Ok(Vec::new());
        }
        if z < a {
            let mut path = self.optical_path(z, a)?;
            path.reverse();
            return Ok(path);
        }

        let adjacency = self.fiber_adjacency();
        let dist = dijkstra(&adjacency, z);
        let Some(&total) = dist.get(a) else {
            return Err(TopologyError::NoPath(a.clone(), z.clone()));
        };

        // Walk forward from `a`, always stepping to the smallest neighbour that
        // stays on some shortest path.
        let mut path = Vec::new();
        let mut here = a;
        let mut remaining = total;
        while here != z {
            let (next, link_idx, weight) = adjacency[here]
                .iter()
                .filter(|(n, _, w)| dist.get(*n).is_some_and(|d| d + u64::from(*w) == remaining))
                .min_by(|x, y| x.0.cmp(y.0).then(x.2.cmp(&y.2)).then(x.1.cmp(&y.1)))
                .copied()
                .expect("shortest-path predecessor exists");
            path.push(self.links[link_idx].clone());
            remaining -= u64::from(weight);
            here = next;
        }
        Ok(path)
    }

    /// ROADM -> [(neighbour, link index, weight)], keeping the lightest of
    /// any parallel fibers.
    fn fiber_adjacency(&self) -> BTreeMap<&NodeId, Vec<(&NodeId, usize, u32)>> {
        let mut adj: BTreeMap<&NodeId, BTreeMap<&NodeId, (usize, u32)>> = self
            .nodes
            .values()
            .filter(|n| n.kind == NodeKind::Roadm)
            .map(|n| (&n.id, BTreeMap::new()))
            .collect();
        for (idx, link) in self.links.iter().enumerate() {
            if link.layer != LinkLayer::Fiber {
                continue;
            }
            for (from, to) in [(&link.a.node, &link.z.node), (&link.z.node, &link.a.node)] {
                let slot = adj.get_mut(from).expect("fiber ends are ROADMs");
                let entry = slot.entry(to).or_insert((idx, link.hop_weight));
                if link.hop_weight < entry.1 {
                    *entry = (idx, link.hop_weight);
                }
            }
        }
        adj.into_iter()
            .map(|(n, peers)| (n, peers.into_iter().map(|(p, (i, w))| (p, i, w)).collect()))
            .collect()
    }
}

fn dijkstra<'a>(
    adjacency: &BTreeMap<&'a NodeId, Vec<(&'a NodeId, usize, u32)>>,
    source: &'a NodeId,
) -> BTreeMap<&'a NodeId, u64> {
    let mut dist = BTreeMap::new();
    let mut heap = BinaryHeap::new();
    dist.insert(source, 0u64);
    heap.push(Reverse((0u64, source)));
    while let Some(Reverse((d, node))) = heap.pop() {
        if dist.get(node).is_some_and(|&best| d > best) {
            continue;
        }
        for &(peer, _, w) in &adjacency[node] {
            let nd = d + u64::from(w);
            if dist.get(peer).is_none_or(|&best| nd < best) {
                dist.insert(peer, nd);
                heap.push(Reverse((nd, peer)));
            }
        }
    }
    dist
}
