//! Simulated device plane: one optical controller for the ROADM ring and one
//! agent per packet switch, each served on its own local listener.

pub mod agent;
pub mod ovc;

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;
use tokio::task::JoinHandle;

pub use agent::{AgentReject, SimSwitchAgent, TunnelRecord, TunnelStatus};
pub use ovc::{CallRecord, CallStatus, LightpathUp, OvcReject, SimOvc};

use crate::compiler::tunnel_name;
use crate::config::Config;
use crate::intent::IntentId;
use crate::sbi::AddressBook;
use crate::server::{serve, ServerHandle};
use crate::topology::{MultilayerTopology, NodeId};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("cannot bind {component} on {address}: {source}")]
    Bind {
        component: String,
        address: String,
        source: std::io::Error,
    },
    #[error("unknown intent {0}")]
    UnknownIntent(IntentId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EncryptedAt {
    Optical,
    Ip,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EndToEnd {
    pub connectivity: bool,
    pub encrypted_at: EncryptedAt,
}

pub struct SimPlane {
    ovc: Arc<SimOvc>,
    agents: BTreeMap<NodeId, Arc<SimSwitchAgent>>,
    book: AddressBook,
    _servers: Vec<ServerHandle>,
    listeners: Vec<JoinHandle<()>>,
}

impl Drop for SimPlane {
    fn drop(&mut self) {
        for l in &self.listeners {
            l.abort();
        }
    }
}

impl SimPlane {
    /// Starts the controller and every switch agent on the addresses in
    /// `config`; switches without an address get an ephemeral local port.
    pub async fn start(
        topology: Arc<MultilayerTopology>,
        config: &Config,
    ) -> Result<SimPlane, SimError> {
        let ovc = SimOvc::new(Arc::clone(&topology), config.per_hop_delay());
        let ovc_server = serve(&config.ovc.address, ovc.router())
            .await
            .map_err(|source| SimError::Bind {
                component: "optical controller".into(),
                address: config.ovc.address.clone(),
                source,
            })?;
        let mut servers = vec![];
        let mut listeners = vec![];
        let mut agents = BTreeMap::new();
        let mut addresses = HashMap::new();
        for switch in topology.packet_switches() {
            let (agent, listener) =
                SimSwitchAgent::spawn(switch.id.clone(), Arc::clone(&topology), Arc::clone(&ovc));
            listeners.push(listener);
            let bind = config
                .agents
                .get(&switch.id)
                .cloned()
                .unwrap_or_else(|| "127.0.0.1:0".into());
            let server = serve(&bind, agent.router())
                .await
                .map_err(|source| SimError::Bind {
                    component: format!("agent {}", switch.id),
                    address: bind.clone(),
                    source,
                })?;
            addresses.insert(switch.id.clone(), server.addr());
            servers.push(server);
            agents.insert(switch.id.clone(), agent);
        }
        let book = AddressBook {
            ovc: ovc_server.addr(),
            agents: addresses,
        };
        servers.push(ovc_server);
        Ok(SimPlane {
            ovc,
            agents,
            book,
            _servers: servers,
            listeners,
        })
    }

    pub fn address_book(&self) -> AddressBook {
        self.book.clone()
    }

    pub fn ovc(&self) -> &Arc<SimOvc> {
        &self.ovc
    }

    pub fn agent(&self, node: &NodeId) -> Option<&Arc<SimSwitchAgent>> {
        self.agents.get(node)
    }

    pub fn agents(&self) -> impl Iterator<Item = &Arc<SimSwitchAgent>> {
        self.agents.values()
    }

    /// Tunnels belonging to an intent, across all agents.
    pub fn tunnels_for(&self, intent: &IntentId) -> Vec<(NodeId, TunnelRecord)> {
        let name = tunnel_name(intent);
        self.agents
            .values()
            .filter_map(|a| a.tunnel(&name).map(|t| (a.node().clone(), t)))
            .collect()
    }

    /// Whether the intent's hosts can reach each other, and which layer
    /// encrypts their traffic.
    pub fn end_to_end_check(&self, intent: &IntentId) -> Result<EndToEnd, SimError> {
        let call = self.ovc.call(intent.as_str());
        let tunnels = self.tunnels_for(intent);
        if call.is_none() && tunnels.is_empty() {
            return Err(SimError::UnknownIntent(intent.clone()));
        }
        let lightpath_up = call.as_ref().is_some_and(|c| c.status == CallStatus::Up);
        let down = EndToEnd {
            connectivity: false,
            encrypted_at: EncryptedAt::None,
        };
        if !tunnels.is_empty() {
            let all_active = tunnels.len() >= 2
                && tunnels.iter().all(|(_, t)| t.status == TunnelStatus::Active);
            return Ok(if lightpath_up && all_active {
                EndToEnd {
                    connectivity: true,
                    encrypted_at: EncryptedAt::Ip,
                }
            } else {
                down
            });
        }
        let call = call.expect("checked above");
        Ok(match (lightpath_up, call.call.encryption_present) {
            (false, _) => down,
            (true, true) => EndToEnd {
                connectivity: true,
                encrypted_at: EncryptedAt::Optical,
            },
            (true, false) => EndToEnd {
                connectivity: true,
                encrypted_at: EncryptedAt::None,
            },
        })
    }

    /// Polls [`Self::end_to_end_check`] until connectivity or `timeout`.
    pub async fn wait_for_connectivity(
        &self,
        intent: &IntentId,
        timeout: Duration,
    ) -> Result<EndToEnd, SimError> {
        let deadline = Instant::now() + timeout;
        loop {
            let check = self.end_to_end_check(intent);
            match &check {
                Ok(e) if e.connectivity => return check,
                _ if Instant::now() >= deadline => return check,
                _ => tokio::time::sleep(Duration::from_millis(5)).await,
            }
        }
    }
}
