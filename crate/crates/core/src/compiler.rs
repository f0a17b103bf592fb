//! Intent compilation: endpoint resolution and per-layer action planning.
//!
//! Each encryption layer is provisioned by a [`LayerStrategy`]. Strategies
//! live in a [`StrategyRegistry`] keyed by the layer they handle and are
//! looked up by name or by [`EncryptionLayerChoice`] at compile time, so a
//! deployment can swap in its own provisioning for a layer.

use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

use crate::decision::EncryptionLayerChoice;
use crate::intent::{Intent, IntentId};
use crate::sbi::cop::{CopCall, CopEndpoint, OperStatus, TransportLayer};
use crate::sbi::tunnel::{TunnelConfig, TunnelMode, DEFAULT_KEY_REF};
use crate::topology::{MultilayerTopology, NodeId, NodeKind, PortId, PortRole, TopologyError};

#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    ConfigureTunnel { switch: NodeId, tunnel: TunnelConfig },
    CreateCopCall(CopCall),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionPlan {
    pub intent_id: IntentId,
    pub choice: EncryptionLayerChoice,
    pub actions: Vec<Action>,
}

impl ActionPlan {
    pub fn cop_call(&self) -> Option<&CopCall> {
        self.actions.iter().find_map(|a| match a {
            Action::CreateCopCall(call) => Some(call),
            _ => None,
        })
    }

    pub fn tunnels(&self) -> impl Iterator<Item = (&NodeId, &TunnelConfig)> {
        self.actions.iter().filter_map(|a| match a {
            Action::ConfigureTunnel { switch, tunnel } => Some((switch, tunnel)),
            _ => None,
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CompileError {
    #[error("NoEncryptionCapablePorts: {0}")]
    NoEncryptionCapablePorts(String),
    #[error("NoPath: {0}")]
    NoPath(String),
    #[error("UnattachedEndpoint: {0}")]
    UnattachedEndpoint(String),
    #[error("InvalidEndpoints: {0}")]
    InvalidEndpoints(String),
    #[error("NoStrategy: no provisioning strategy registered for {0}")]
    NoStrategy(EncryptionLayerChoice),
}

/// Resolved facts a strategy plans against.
pub struct CompileContext<'a> {
    pub intent: &'a Intent,
    pub topology: &'a MultilayerTopology,
    /// ROADM client port on the source side.
    pub a_port: PortId,
    /// ROADM client port on the destination side.
    pub z_port: PortId,
}

pub trait LayerStrategy: Send + Sync {
    fn name(&self) -> &'static str;
    fn layer(&self) -> EncryptionLayerChoice;
    fn plan(&self, ctx: &CompileContext<'_>) -> Result<Vec<Action>, CompileError>;
}

/// Encryption on the AES client ports of the ROADMs; one encrypted COP call.
pub struct OpticalEncryption;

impl LayerStrategy for OpticalEncryption {
    fn name(&self) -> &'static str {
        "optical"
    }

    fn layer(&self) -> EncryptionLayerChoice {
        EncryptionLayerChoice::OpticalLayer
    }

    fn plan(&self, ctx: &CompileContext<'_>) -> Result<Vec<Action>, CompileError> {
        let lacking: Vec<String> = [&ctx.a_port, &ctx.z_port]
            .into_iter()
            .filter(|p| !ctx.topology.port(p).is_some_and(|p| p.encryption_capable))
            .map(|p| p.to_string())
            .collect();
        if !lacking.is_empty() {
            return Err(CompileError::NoEncryptionCapablePorts(format!(
                "client port(s) {} have no encryption card",
                lacking.join(", ")
            )));
        }
        let call = build_cop_call(&ctx.intent.id, &ctx.a_port, &ctx.z_port, true, ctx.topology)?;
        Ok(vec![Action::CreateCopCall(call)])
    }
}

/// Encrypted tunnel between the two switches over a plain lightpath.
pub struct IpTunnelEncryption;

impl LayerStrategy for IpTunnelEncryption {
    fn name(&self) -> &'static str {
        "ip"
    }

    fn layer(&self) -> EncryptionLayerChoice {
        EncryptionLayerChoice::IpLayer
    }

    fn plan(&self, ctx: &CompileContext<'_>) -> Result<Vec<Action>, CompileError> {
        let (src, dst) = (&ctx.intent.src, &ctx.intent.dst);
        let id = &ctx.intent.id;
        let call = build_cop_call(id, &ctx.a_port, &ctx.z_port, false, ctx.topology)?;
        Ok(vec![
            Action::ConfigureTunnel {
                switch: src.clone(),
                tunnel: build_tunnel_config(src, dst, id, ctx.topology)?,
            },
            Action::ConfigureTunnel {
                switch: dst.clone(),
                tunnel: build_tunnel_config(dst, src, id, ctx.topology)?,
            },
            Action::CreateCopCall(call),
        ])
    }
}

/// Plain connectivity.
pub struct NoEncryption;

impl LayerStrategy for NoEncryption {
    fn name(&self) -> &'static str {
        "unencrypted"
    }

    fn layer(&self) -> EncryptionLayerChoice {
        EncryptionLayerChoice::Unencrypted
    }

    fn plan(&self, ctx: &CompileContext<'_>) -> Result<Vec<Action>, CompileError> {
        let call = build_cop_call(&ctx.intent.id, &ctx.a_port, &ctx.z_port, false, ctx.topology)?;
        Ok(vec![Action::CreateCopCall(call)])
    }
}

#[derive(Clone, Default)]
pub struct StrategyRegistry {
    by_layer: BTreeMap<EncryptionLayerChoice, Arc<dyn LayerStrategy>>,
}

impl StrategyRegistry {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn with_defaults() -> Self {
        let mut registry = Self::empty();
        registry.register(Arc::new(NoEncryption));
        registry.register(Arc::new(OpticalEncryption));
        registry.register(Arc::new(IpTunnelEncryption));
        registry
    }

    /// Installs `strategy` for its layer, returning whatever it replaced.
    pub fn register(&mut self, strategy: Arc<dyn LayerStrategy>) -> Option<Arc<dyn LayerStrategy>> {
        self.by_layer.insert(strategy.layer(), strategy)
    }

    pub fn get(&self, layer: EncryptionLayerChoice) -> Option<&Arc<dyn LayerStrategy>> {
        self.by_layer.get(&layer)
    }

    pub fn by_name(&self, name: &str) -> Option<&Arc<dyn LayerStrategy>> {
        self.by_layer.values().find(|s| s.name() == name)
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.by_layer.values().map(|s| s.name()).collect()
    }

    pub fn compile(
        &self,
        intent: &Intent,
        choice: EncryptionLayerChoice,
        topology: &MultilayerTopology,
    ) -> Result<ActionPlan, CompileError> {
        let strategy = self.get(choice).ok_or(CompileError::NoStrategy(choice))?;
        let resolve = |n: &NodeId| {
            topology
                .roadm_client_port_of(n)
                .map_err(|e| CompileError::UnattachedEndpoint(e.to_string()))
        };
        let a_port = resolve(&intent.src)?;
        let z_port = resolve(&intent.dst)?;
        topology
            .optical_path(&a_port.node, &z_port.node)
            .map_err(|e| match e {
                TopologyError::NoPath(..) => CompileError::NoPath(e.to_string()),
                other => CompileError::InvalidEndpoints(other.to_string()),
            })?;
        let ctx = CompileContext {
            intent,
            topology,
            a_port,
            z_port,
        };
        let actions = strategy.plan(&ctx)?;
        Ok(ActionPlan {
            intent_id: intent.id.clone(),
            choice,
            actions,
        })
    }
}

/// Compiles with the built-in strategies.
pub fn compile(
    intent: &Intent,
    choice: EncryptionLayerChoice,
    topology: &MultilayerTopology,
) -> Result<ActionPlan, CompileError> {
    StrategyRegistry::with_defaults().compile(intent, choice, topology)
}

pub fn build_cop_call(
    intent_id: &IntentId,
    a_port: &PortId,
    z_port: &PortId,
    encrypted: bool,
    topology: &MultilayerTopology,
) -> Result<CopCall, CompileError> {
    if a_port == z_port {
        return Err(CompileError::InvalidEndpoints(format!(
            "both call ends are {a_port}"
        )));
    }
    let endpoint = |p: &PortId| {
        let node = topology.node(&p.node).filter(|n| n.kind == NodeKind::Roadm);
        let port = topology.port(p).filter(|p| p.role == PortRole::ClientPort);
        match (node, port) {
            (Some(node), Some(_)) => Ok(CopEndpoint::for_port(&node.mgmt_address, &p.name)),
            _ => Err(CompileError::InvalidEndpoints(format!(
                "{p} is not a ROADM client port"
            ))),
        }
    };
    Ok(CopCall {
        oper_status: OperStatus::Up,
        call_id: intent_id.to_string(),
        z_end: endpoint(z_port)?,
        connections: Vec::new(),
        a_end: endpoint(a_port)?,
        encryption_present: encrypted,
        transport_layer: TransportLayer::default(),
    })
}

pub fn tunnel_name(intent_id: &IntentId) -> String {
    format!("gre-{intent_id}")
}

pub fn build_tunnel_config(
    local: &NodeId,
    remote: &NodeId,
    intent_id: &IntentId,
    topology: &MultilayerTopology,
) -> Result<TunnelConfig, CompileError> {
    let switch = |n: &NodeId| {
        topology
            .node(n)
            .filter(|n| n.kind == NodeKind::PacketSwitch)
            .ok_or_else(|| CompileError::InvalidEndpoints(format!("{n} is not a packet switch")))
    };
    let (l, r) = (switch(local)?, switch(remote)?);
    Ok(TunnelConfig {
        name: tunnel_name(intent_id),
        local_node: l.id.clone(),
        remote_node: r.id.clone(),
        local_addr: l.mgmt_address.clone(),
        remote_addr: r.mgmt_address.clone(),
        mode: TunnelMode::EncryptedGre,
        key_ref: DEFAULT_KEY_REF.into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intent::{ConstraintSet, IntentStore};
    use crate::sbi::cop::encode_cop_call;
    use crate::topology::{Link, LinkLayer, Node, Port};

    const GOLDEN: &[u8] = include_bytes!("../tests/fixtures/cop_call_encrypted.json");

    fn intent(topo: &MultilayerTopology, src: &str, dst: &str) -> Intent {
        IntentStore::default()
            .submit(topo, &src.into(), &dst.into(), ConstraintSet::new(true, true, 1_000_000))
            .unwrap()
    }

    /// Testbed plus a third switch hanging off the ROADM without an AES card.
    fn testbed_with_ovs3() -> MultilayerTopology {
        let base = MultilayerTopology::default_testbed();
        let mut nodes: Vec<Node> = base.nodes().cloned().collect();
        let mut ports: Vec<Port> = base.ports().cloned().collect();
        let mut links: Vec<Link> = base.links().to_vec();
        nodes.push(Node {
            id: "OVS3".into(),
            kind: NodeKind::PacketSwitch,
            mgmt_address: "192.168.100.3".into(),
        });
        ports.push(Port {
            node: "OVS3".into(),
            name: "eth1".into(),
            role: PortRole::NetworkPort,
            encryption_capable: false,
        });
        links.push(Link {
            a: PortId::new("OVS3", "eth1"),
            z: PortId::new("ROADM-3", "1-7-C1"),
            layer: LinkLayer::CrossLayer,
            hop_weight: 1,
        });
        MultilayerTopology::from_parts(nodes, ports, links).unwrap()
    }

    #[test]
    fn optical_plan_is_single_encrypted_call() {
        let topo = MultilayerTopology::default_testbed();
        let i = intent(&topo, "OVS1", "OVS2");
        let plan = compile(&i, EncryptionLayerChoice::OpticalLayer, &topo).unwrap();
        assert_eq!(plan.actions.len(), 1);
        let call = plan.cop_call().unwrap();
        assert_eq!(call.call_id, "acino1");
        assert_eq!(call.a_end.endpoint_id, "10.12.105.39|1-7-C1");
        assert_eq!(call.z_end.endpoint_id, "10.12.105.38|1-7-C1");
        assert!(call.encryption_present);
        assert_eq!(encode_cop_call(call), GOLDEN);
    }

    #[test]
    fn ip_plan_orders_tunnels_first() {
        let topo = MultilayerTopology::default_testbed();
        let i = intent(&topo, "OVS1", "OVS2");
        let plan = compile(&i, EncryptionLayerChoice::IpLayer, &topo).unwrap();
        assert_eq!(plan.actions.len(), 3);
        match (&plan.actions[0], &plan.actions[1], &plan.actions[2]) {
            (
                Action::ConfigureTunnel { switch: s1, tunnel: t1 },
                Action::ConfigureTunnel { switch: s2, tunnel: t2 },
                Action::CreateCopCall(call),
            ) => {
                assert_eq!((s1.as_str(), s2.as_str()), ("OVS1", "OVS2"));
                assert_eq!(t1.name, "gre-acino1");
                assert_eq!(t1.name, t2.name);
                assert!(!call.encryption_present);
            }
            other => panic!("unexpected plan shape {other:?}"),
        }
    }

    #[test]
    fn unencrypted_plan_has_plain_call() {
        let topo = MultilayerTopology::default_testbed();
        let i = intent(&topo, "OVS2", "OVS1");
        let plan = compile(&i, EncryptionLayerChoice::Unencrypted, &topo).unwrap();
        assert_eq!(plan.actions.len(), 1);
        let call = plan.cop_call().unwrap();
        assert!(!call.encryption_present);
        assert_eq!(call.a_end.router_id, "10.12.105.38");
    }

    #[test]
    fn optical_to_non_aes_roadm_fails() {
        let topo = testbed_with_ovs3();
        let i = intent(&topo, "OVS1", "OVS3");
        let err = compile(&i, EncryptionLayerChoice::OpticalLayer, &topo).unwrap_err();
        assert!(matches!(err, CompileError::NoEncryptionCapablePorts(_)));
        assert!(err.to_string().starts_with("NoEncryptionCapablePorts"));
        // the IP route does not need AES cards
        assert!(compile(&i, EncryptionLayerChoice::IpLayer, &topo).is_ok());
    }

    #[test]
    fn disconnected_ring_is_no_path() {
        let base = MultilayerTopology::default_testbed();
        let links = base
            .links()
            .iter()
            .filter(|l| l.layer != LinkLayer::Fiber)
            .cloned()
            .collect();
        let topo = MultilayerTopology::from_parts(
            base.nodes().cloned().collect(),
            base.ports().cloned().collect(),
            links,
        )
        .unwrap();
        let i = intent(&topo, "OVS1", "OVS2");
        assert!(matches!(
            compile(&i, EncryptionLayerChoice::Unencrypted, &topo),
            Err(CompileError::NoPath(_))
        ));
    }

    #[test]
    fn degenerate_cop_call_rejected() {
        let topo = MultilayerTopology::default_testbed();
        let p = PortId::new("ROADM-1", "1-7-C1");
        assert!(build_cop_call(&"acino1".into(), &p, &p, true, &topo).is_err());
        let net = PortId::new("ROADM-2", "1-1-N1");
        assert!(build_cop_call(&"acino1".into(), &p, &net, true, &topo).is_err());
    }

    #[test]
    fn tunnel_configs_mirror() {
        let topo = MultilayerTopology::default_testbed();
        let id: IntentId = "acino1".into();
        let fwd = build_tunnel_config(&"OVS1".into(), &"OVS2".into(), &id, &topo).unwrap();
        let rev = build_tunnel_config(&"OVS2".into(), &"OVS1".into(), &id, &topo).unwrap();
        assert_eq!(fwd.name, "gre-acino1");
        assert_eq!(fwd.name, rev.name);
        assert_eq!((fwd.local_addr.as_str(), fwd.remote_addr.as_str()), ("192.168.100.1", "192.168.100.2"));
        assert_eq!((fwd.local_addr.clone(), fwd.remote_addr.clone()), (rev.remote_addr, rev.local_addr));
        assert!(build_tunnel_config(&"OVS1".into(), &"ROADM-1".into(), &id, &topo).is_err());
    }

    #[test]
    fn registry_lookup() {
        let registry = StrategyRegistry::with_defaults();
        assert_eq!(registry.names(), vec!["unencrypted", "optical", "ip"]);
        assert_eq!(
            registry.by_name("ip").unwrap().layer(),
            EncryptionLayerChoice::IpLayer
        );
        let empty = StrategyRegistry::empty();
        let topo = MultilayerTopology::default_testbed();
        let i = intent(&topo, "OVS1", "OVS2");
        assert_eq!(
            empty.compile(&i, EncryptionLayerChoice::IpLayer, &topo),
            Err(CompileError::NoStrategy(EncryptionLayerChoice::IpLayer))
        );
    }

    #[test]
    fn plan_shape_and_marker_over_all_choices() {
        let topo = MultilayerTopology::default_testbed();
        for (src, dst) in [("OVS1", "OVS2"), ("OVS2", "OVS1")] {
            let i = intent(&topo, src, dst);
            for choice in EncryptionLayerChoice::ALL {
                let plan = compile(&i, choice, &topo).unwrap();
                let expected_len = if choice == EncryptionLayerChoice::IpLayer { 3 } else { 1 };
                assert_eq!(plan.actions.len(), expected_len);
                assert!(matches!(plan.actions.last(), Some(Action::CreateCopCall(_))));
                assert_eq!(
                    plan.cop_call().unwrap().encryption_present,
                    choice == EncryptionLayerChoice::OpticalLayer
                );
                assert_eq!(plan, compile(&i, choice, &topo).unwrap());
            }
        }
    }
}
