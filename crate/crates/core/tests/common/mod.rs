#![allow(dead_code)]

use std::collections::BTreeSet;

use orchestrator_core::sbi::{CopCall, CopEndpoint, OperStatus, TransportLayer};
use orchestrator_core::topology::{Link, LinkLayer, Node, NodeKind, Port, PortRole};
use proptest::prelude::*;
use orchestrator_core::{MultilayerTopology, NodeId, PortId};
use rand::Rng;

pub fn roadm(id: &str, addr: &str) -> Node {
    Node {
        id: id.into(),
        kind: NodeKind::Roadm,
        mgmt_address: addr.into(),
    }
}

pub fn switch(id: &str, addr: &str) -> Node {
    Node {
        id: id.into(),
        kind: NodeKind::PacketSwitch,
        mgmt_address: addr.into(),
    }
}

pub fn port(node: &str, name: &str, role: PortRole, aes: bool) -> Port {
    Port {
        node: node.into(),
        name: name.into(),
        role,
        encryption_capable: aes,
    }
}

pub fn link(a: (&str, &str), z: (&str, &str), layer: LinkLayer, w: u32) -> Link {
    Link {
        a: PortId::new(a.0, a.1),
        z: PortId::new(z.0, z.1),
        layer,
        hop_weight: w,
    }
}

/// Pure ROADM graph: `edges` are (i, j, weight) over nodes R0..R{n-1}.
pub fn roadm_graph(n: usize, edges: &[(usize, usize, u32)]) -> MultilayerTopology {
    let nodes = (0..n)
        .map(|i| roadm(&format!("R{i}"), &format!("10.0.0.{i}")))
        .collect();
    let mut ports = Vec::new();
    let mut links = Vec::new();
    for (k, &(i, j, w)) in edges.iter().enumerate() {
        let (a, z) = (format!("R{i}"), format!("R{j}"));
        let p = format!("N{k}");
        ports.push(port(&a, &p, PortRole::NetworkPort, false));
        ports.push(port(&z, &p, PortRole::NetworkPort, false));
        links.push(link((&a, &p), (&z, &p), LinkLayer::Fiber, w));
    }
    MultilayerTopology::from_parts(nodes, ports, links).unwrap()
}

/// A ring of `n` ROADMs, each with one client port (AES per `aes[i]`), and
/// one switch `S{i}` attached to every ROADM listed in `attached`.
pub fn ring_with_switches(
    n: usize,
    aes: &[bool],
    attached: &[usize],
    weights: &[u32],
) -> MultilayerTopology {
    let mut nodes: Vec<Node> = (0..n)
        .map(|i| roadm(&format!("R{i}"), &format!("10.0.0.{i}")))
        .collect();
    let mut ports = Vec::new();
    let mut links = Vec::new();
    for i in 0..n {
        let r = format!("R{i}");
        ports.push(port(&r, "C1", PortRole::ClientPort, aes[i]));
        ports.push(port(&r, "E", PortRole::NetworkPort, false));
        ports.push(port(&r, "W", PortRole::NetworkPort, false));
    }
    if n > 1 {
        let last = if n == 2 { 1 } else { n };
        for i in 0..last {
            let j = (i + 1) % n;
            let (a, z) = (format!("R{i}"), format!("R{j}"));
            links.push(link((&a, "E"), (&z, "W"), LinkLayer::Fiber, weights[i % weights.len()]));
        }
    }
    for &i in attached {
        let s = format!("S{i}");
        nodes.push(switch(&s, &format!("192.168.0.{i}")));
        ports.push(port(&s, "eth1", PortRole::NetworkPort, false));
        ports.push(port(&s, "vhost0", PortRole::HostPort, false));
        links.push(link((&s, "eth1"), (&format!("R{i}"), "C1"), LinkLayer::CrossLayer, 1));
    }
    MultilayerTopology::from_parts(nodes, ports, links).unwrap()
}

fn clone_parts(t: &MultilayerTopology) -> (Vec<Node>, Vec<Port>, Vec<Link>) {
    (
        t.nodes().cloned().collect(),
        t.ports().cloned().collect(),
        t.links().to_vec(),
    )
}

/// Default testbed plus OVS3 attached to the ROADM without AES cards.
pub fn testbed_with_ovs3() -> MultilayerTopology {
    let (mut nodes, mut ports, mut links) = clone_parts(&MultilayerTopology::default_testbed());
    nodes.push(switch("OVS3", "192.168.100.3"));
    ports.push(port("OVS3", "eth1", PortRole::NetworkPort, false));
    links.push(link(("OVS3", "eth1"), ("ROADM-3", "1-7-C1"), LinkLayer::CrossLayer, 1));
    MultilayerTopology::from_parts(nodes, ports, links).unwrap()
}

/// Default testbed with the direct ROADM-1/ROADM-2 fiber made expensive so
/// the lightpath detours through ROADM-3 (two hops).
pub fn testbed_two_hop() -> MultilayerTopology {
    let (nodes, ports, mut links) = clone_parts(&MultilayerTopology::default_testbed());
    for l in &mut links {
        let ends: BTreeSet<&str> = [l.a.node.as_str(), l.z.node.as_str()].into();
        if l.layer == LinkLayer::Fiber && ends == BTreeSet::from(["ROADM-1", "ROADM-2"]) {
            l.hop_weight = 3;
        }
    }
    MultilayerTopology::from_parts(nodes, ports, links).unwrap()
}

/// Random simple-ish graph over 2..=6 ROADMs, may contain parallel fibers.
pub fn random_roadm_graph(rng: &mut impl Rng) -> (usize, Vec<(usize, usize, u32)>) {
    let n = rng.gen_range(2..=6);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.gen_bool(0.5) {
                edges.push((i, j, rng.gen_range(1..=3)));
            }
        }
    }
    if rng.gen_bool(0.2) && !edges.is_empty() {
        let (i, j, _) = edges[rng.gen_range(0..edges.len())];
        edges.push((j, i, rng.gen_range(1..=3)));
    }
    (n, edges)
}

/// Exhaustive shortest path: enumerate every simple path, keep the lightest,
/// break ties on the node sequence read from the smaller endpoint.
/// Returns (total weight, node sequence from `a` to `z`).
pub fn brute_force_path(
    n: usize,
    edges: &[(usize, usize, u32)],
    a: usize,
    z: usize,
) -> Option<(u64, Vec<usize>)> {
    if a == z {
        return Some((0, vec![a]));
    }
    let (from, to) = if a < z { (a, z) } else { (z, a) };
    // name order equals index order because names are R0..R5
    let mut best: Option<(u64, Vec<usize>)> = None;
    let mut stack = vec![(from, vec![from], 0u64)];
    while let Some((here, path, w)) = stack.pop() {
        if here == to {
            let better = match &best {
                None => true,
                Some((bw, bp)) => w < *bw || (w == *bw && path < *bp),
            };
            if better {
                best = Some((w, path));
            }
            continue;
        }
        for &(i, j, ew) in edges {
            let next = if i == here {
                j
            } else if j == here {
                i
            } else {
                continue;
            };
            if next < n && !path.contains(&next) {
                let mut p = path.clone();
                p.push(next);
                stack.push((next, p, w + u64::from(ew)));
            }
        }
    }
    best.map(|(w, mut p)| {
        if a > z {
            p.reverse();
        }
        (w, p)
    })
}

/// Node sequence visited by a link path starting at `a`.
pub fn node_sequence(a: &NodeId, path: &[Link]) -> Vec<NodeId> {
    let mut seq = vec![a.clone()];
    for l in path {
        let here = seq.last().unwrap().clone();
        let next = l.peer_of(&here).expect("consecutive links share a node").clone();
        seq.push(next);
    }
    seq
}

pub fn arb_endpoint() -> impl Strategy<Value = CopEndpoint> {
    ("[0-9]{1,3}(\\.[0-9]{1,3}){3}", "[0-9]-[0-9]{1,2}-C[0-9]", ".{0,4}").prop_map(
        |(router, port, iface)| {
            let mut e = CopEndpoint::for_port(&router, &port);
            e.interface_id = iface;
            e
        },
    )
}

pub fn arb_call() -> impl Strategy<Value = CopCall> {
    (
        prop_oneof![Just(OperStatus::Up), Just(OperStatus::Down)],
        "[a-z]{1,8}[0-9]{0,4}",
        arb_endpoint(),
        arb_endpoint(),
        proptest::collection::vec("[a-z\"\\\\ ]{0,6}", 0..3),
        any::<bool>(),
        ("[A-Z_]{1,10}", "BIDIR|UNIDIR", "\\PC{0,6}"),
    )
        .prop_map(|(status, id, a, z, conns, enc, (layer, dir, layer_id))| CopCall {
            oper_status: status,
            call_id: id,
            z_end: z,
            connections: conns.into_iter().map(serde_json::Value::String).collect(),
            a_end: a,
            encryption_present: enc,
            transport_layer: TransportLayer {
                layer,
                direction: dir,
                layer_id,
            },
        })
}
