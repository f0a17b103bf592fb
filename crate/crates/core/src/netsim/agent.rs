//! Simulated switch agent. Tunnels are accepted as Pending and flip to
//! Active once the optical controller reports the lightpath between the two
//! switches' ROADM client ports as Up.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex, Weak};
use std::time::Instant;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Serialize;
use thiserror::Error;
use tokio::sync::broadcast::error::RecvError;
use tokio::task::JoinHandle;

use super::ovc::SimOvc;
use crate::sbi::tunnel::TunnelBody;
use crate::topology::{MultilayerTopology, NodeId, PortId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TunnelStatus {
    Pending,
    Active,
}

#[derive(Debug, Clone)]
pub struct TunnelRecord {
    pub body: TunnelBody,
    pub status: TunnelStatus,
    pub configured_at: Instant,
    pub activated_at: Option<Instant>,
    /// Client ports whose lightpath carries this tunnel, when resolvable.
    underlay: Option<(PortId, PortId)>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AgentReject {
    #[error("DuplicateTunnel: {0} already configured")]
    DuplicateTunnel(String),
    #[error("MalformedBody: {0}")]
    MalformedBody(String),
    #[error("ForeignTunnel: localAddr {0} does not belong to this switch")]
    ForeignTunnel(String),
}

pub struct SimSwitchAgent {
    node: NodeId,
    topology: Arc<MultilayerTopology>,
    ovc: Arc<SimOvc>,
    /// The virtual host interface used for end-to-end checks.
    host_interface: bool,
    tunnels: Mutex<BTreeMap<String, TunnelRecord>>,
}

impl SimSwitchAgent {
    /// Creates the agent and starts its lightpath listener.
    pub fn spawn(
        node: NodeId,
        topology: Arc<MultilayerTopology>,
        ovc: Arc<SimOvc>,
    ) -> (Arc<Self>, JoinHandle<()>) {
        let host_interface = topology
            .ports()
            .any(|p| p.node == node && p.role == crate::topology::PortRole::HostPort);
        let mut events = ovc.subscribe();
        let agent = Arc::new(SimSwitchAgent {
            node,
            topology,
            ovc,
            host_interface,
            tunnels: Mutex::default(),
        });
        let weak: Weak<Self> = Arc::downgrade(&agent);
        let listener = tokio::spawn(async move {
            loop {
                match events.recv().await {
                    Ok(up) => match weak.upgrade() {
                        Some(agent) => agent.on_lightpath_up(&up.a_port, &up.z_port),
                        None => break,
                    },
                    Err(RecvError::Lagged(_)) => match weak.upgrade() {
                        Some(agent) => agent.rescan(),
                        None => break,
                    },
                    Err(RecvError::Closed) => break,
                }
            }
        });
        (agent, listener)
    }

    pub fn node(&self) -> &NodeId {
        &self.node
    }

    pub fn has_host_interface(&self) -> bool {
        self.host_interface
    }

    pub fn handle_tunnel(&self, body: TunnelBody) -> Result<(), AgentReject> {
        let me = self.topology.node(&self.node).expect("agent node exists");
        if body.local_addr != me.mgmt_address {
            return Err(AgentReject::ForeignTunnel(body.local_addr));
        }
        let underlay = self.underlay_for(&body.remote_addr);
        let name = body.name.clone();
        {
            let mut tunnels = self.tunnels.lock().expect("agent state poisoned");
            if tunnels.contains_key(&name) {
                return Err(AgentReject::DuplicateTunnel(name));
            }
            tunnels.insert(
                name.clone(),
                TunnelRecord {
                    body,
                    status: TunnelStatus::Pending,
                    configured_at: Instant::now(),
                    activated_at: None,
                    underlay: underlay.clone(),
                },
            );
        }
        // The lightpath may already be up; later ups arrive via the listener.
        if let Some((x, y)) = underlay {
            if self.ovc.up_lightpath_between(&x, &y).is_some() {
                self.on_lightpath_up(&x, &y);
            }
        }
        Ok(())
    }

    fn underlay_for(&self, remote_addr: &str) -> Option<(PortId, PortId)> {
        let remote = self.topology.node_by_address(remote_addr)?;
        let local_port = self.topology.roadm_client_port_of(&self.node).ok()?;
        let remote_port = self.topology.roadm_client_port_of(&remote.id).ok()?;
        Some((local_port, remote_port))
    }

    fn on_lightpath_up(&self, x: &PortId, y: &PortId) {
        let now = Instant::now();
        let mut tunnels = self.tunnels.lock().expect("agent state poisoned");
        for t in tunnels.values_mut() {
            if t.status != TunnelStatus::Pending {
                continue;
            }
            let Some((a, b)) = &t.underlay else { continue };
            if (a == x && b == y) || (a == y && b == x) {
                t.status = TunnelStatus::Active;
                t.activated_at = Some(now);
            }
        }
    }

    fn rescan(&self) {
        let pending: Vec<(PortId, PortId)> = self
            .tunnels
            .lock()
            .expect("agent state poisoned")
            .values()
            .filter(|t| t.status == TunnelStatus::Pending)
            .filter_map(|t| t.underlay.clone())
            .collect();
        for (x, y) in pending {
            if self.ovc.up_lightpath_between(&x, &y).is_some() {
                self.on_lightpath_up(&x, &y);
            }
        }
    }

    pub fn remove_tunnel(&self, name: &str) -> bool {
        self.tunnels
            .lock()
            .expect("agent state poisoned")
            .remove(name)
            .is_some()
    }

    pub fn tunnel(&self, name: &str) -> Option<TunnelRecord> {
        self.tunnels
            .lock()
            .expect("agent state poisoned")
            .get(name)
            .cloned()
    }

    pub fn tunnels(&self) -> Vec<TunnelRecord> {
        self.tunnels
            .lock()
            .expect("agent state poisoned")
            .values()
            .cloned()
            .collect()
    }

    pub fn router(self: &Arc<Self>) -> Router {
        Router::new()
            .route("/tunnels/{name}", post(post_tunnel).delete(delete_tunnel))
            .route("/state", get(state))
            .with_state(Arc::clone(self))
    }
}

async fn post_tunnel(
    State(agent): State<Arc<SimSwitchAgent>>,
    Path(name): Path<String>,
    body: Bytes,
) -> Response {
    let parsed: Result<TunnelBody, _> = serde_json::from_slice(&body);
    let result = parsed
        .map_err(|e| AgentReject::MalformedBody(e.to_string()))
        .and_then(|b| {
            if b.name != name {
                Err(AgentReject::MalformedBody(format!(
                    "path names {name} but body names {}",
                    b.name
                )))
            } else {
                agent.handle_tunnel(b)
            }
        });
    match result {
        Ok(()) => StatusCode::CREATED.into_response(),
        Err(e @ AgentReject::DuplicateTunnel(_)) => {
            (StatusCode::CONFLICT, e.to_string()).into_response()
        }
        Err(e) => (StatusCode::BAD_REQUEST, e.to_string()).into_response(),
    }
}

async fn delete_tunnel(
    State(agent): State<Arc<SimSwitchAgent>>,
    Path(name): Path<String>,
) -> StatusCode {
    if agent.remove_tunnel(&name) {
        StatusCode::NO_CONTENT
    } else {
        StatusCode::NOT_FOUND
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct AgentView {
    node: NodeId,
    host_interface: bool,
    tunnels: Vec<TunnelView>,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct TunnelView {
    name: String,
    remote_addr: String,
    status: TunnelStatus,
}

async fn state(State(agent): State<Arc<SimSwitchAgent>>) -> Json<AgentView> {
    Json(AgentView {
        node: agent.node.clone(),
        host_interface: agent.host_interface,
        tunnels: agent
            .tunnels()
            .into_iter()
            .map(|t| TunnelView {
                name: t.body.name,
                remote_addr: t.body.remote_addr,
                status: t.status,
            })
            .collect(),
    })
}
