//! HTTP clients for the optical controller and switch agents, and the plan
//! executor that drives them.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::time::{Duration, Instant};

use reqwest::StatusCode;
use thiserror::Error;

use super::cop::{call_path, decode_cop_call, encode_cop_call, CopCall, OperStatus};
use super::tunnel::{tunnel_path, TunnelConfig};
use crate::compiler::{Action, ActionPlan};
use crate::topology::NodeId;
use crate::trace::Protocol;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(5);

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SbiError {
    #[error("ControllerUnreachable: {0}")]
    ControllerUnreachable(String),
    #[error("ControllerRejected: {0}")]
    ControllerRejected(String),
    #[error("AgentUnreachable: {0}")]
    AgentUnreachable(String),
    #[error("AgentRejected: {0}")]
    AgentRejected(String),
    #[error("UnknownAgent: no address for switch {0}")]
    UnknownAgent(NodeId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CopAck {
    pub call_id: String,
    pub oper_status: OperStatus,
}

/// Where each southbound peer listens.
#[derive(Debug, Clone)]
pub struct AddressBook {
    pub ovc: SocketAddr,
    pub agents: HashMap<NodeId, SocketAddr>,
}

impl AddressBook {
    pub fn agent(&self, switch: &NodeId) -> Result<SocketAddr, SbiError> {
        self.agents
            .get(switch)
            .copied()
            .ok_or_else(|| SbiError::UnknownAgent(switch.clone()))
    }
}

/// A southbound message about to leave the orchestrator.
#[derive(Debug, Clone)]
pub struct Emission {
    pub at: Instant,
    pub destination: String,
    pub protocol: Protocol,
    pub info: String,
}

pub trait EmissionObserver: Send + Sync {
    fn emitted(&self, emission: Emission);
}

impl EmissionObserver for () {
    fn emitted(&self, _: Emission) {}
}

impl<F: Fn(Emission) + Send + Sync> EmissionObserver for F {
    fn emitted(&self, emission: Emission) {
        self(emission)
    }
}

#[derive(Clone)]
pub struct SbiClient {
    http: reqwest::Client,
}

impl Default for SbiClient {
    fn default() -> Self {
        Self::new(DEFAULT_TIMEOUT)
    }
}

impl SbiClient {
    pub fn new(timeout: Duration) -> Self {
        let http = reqwest::Client::builder()
            .timeout(timeout)
            .no_proxy()
            .build()
            .expect("http client builds");
        SbiClient { http }
    }

    pub async fn push_cop_call(
        &self,
        endpoint: SocketAddr,
        call: &CopCall,
        observer: &dyn EmissionObserver,
    ) -> Result<CopAck, SbiError> {
        let path = call_path(&call.call_id);
        let body = encode_cop_call(call);
        observer.emitted(Emission {
            at: Instant::now(),
            destination: "OVC".into(),
            protocol: Protocol::Cop,
            info: format!("POST {path} HTTP/1.1"),
        });
        let resp = self
            .http
            .post(format!("http://{endpoint}{path}"))
            .header("content-type", "application/json")
            .body(body)
            .send()
            .await
            .map_err(|e| SbiError::ControllerUnreachable(format!("{endpoint}: {e}")))?;
        let status = resp.status();
        let bytes = resp
            .bytes()
            .await
            .map_err(|e| SbiError::ControllerUnreachable(format!("{endpoint}: {e}")))?;
        if !status.is_success() {
            return Err(SbiError::ControllerRejected(
                String::from_utf8_lossy(&bytes).into_owned(),
            ));
        }
        let reply = decode_cop_call(&bytes)
            .map_err(|e| SbiError::ControllerRejected(format!("unreadable reply: {e}")))?;
        Ok(CopAck {
            call_id: reply.call_id,
            oper_status: reply.oper_status,
        })
    }

    pub async fn delete_cop_call(
        &self,
        endpoint: SocketAddr,
        call_id: &str,
        observer: &dyn EmissionObserver,
    ) -> Result<(), SbiError> {
        let path = call_path(call_id);
        observer.emitted(Emission {
            at: Instant::now(),
            destination: "OVC".into(),
            protocol: Protocol::Cop,
            info: format!("DELETE {path} HTTP/1.1"),
        });
        let resp = self
            .http
            .delete(format!("http://{endpoint}{path}"))
            .send()
            .await
            .map_err(|e| SbiError::ControllerUnreachable(format!("{endpoint}: {e}")))?;
        match resp.status() {
            s if s.is_success() || s == StatusCode::NOT_FOUND => Ok(()),
            _ => Err(SbiError::ControllerRejected(
                resp.text().await.unwrap_or_default(),
            )),
        }
    }

    pub async fn push_tunnel_config(
        &self,
        switch: &NodeId,
        agent: SocketAddr,
        config: &TunnelConfig,
        observer: &dyn EmissionObserver,
    ) -> Result<(), SbiError> {
        let path = tunnel_path(&config.name);
        observer.emitted(Emission {
            at: Instant::now(),
            destination: switch.to_string(),
            protocol: Protocol::Tunnelcfg,
            info: format!("POST {path} (port {})", agent.port()),
        });
        let resp = self
            .http
            .post(format!("http://{agent}{path}"))
            .header("content-type", "application/json")
            .body(config.encode())
            .send()
            .await
            .map_err(|e| SbiError::AgentUnreachable(format!("{switch} at {agent}: {e}")))?;
        if resp.status().is_success() {
            Ok(())
        } else {
            Err(SbiError::AgentRejected(
                resp.text().await.unwrap_or_default(),
            ))
        }
    }

    pub async fn delete_tunnel(
        &self,
        switch: &NodeId,
        agent: SocketAddr,
        name: &str,
        observer: &dyn EmissionObserver,
    ) -> Result<(), SbiError> {
        let path = tunnel_path(name);
        observer.emitted(Emission {
            at: Instant::now(),
            destination: switch.to_string(),
            protocol: Protocol::Tunnelcfg,
            info: format!("DELETE {path} (port {})", agent.port()),
        });
        let resp = self
            .http
            .delete(format!("http://{agent}{path}"))
            .send()
            .await
            .map_err(|e| SbiError::AgentUnreachable(format!("{switch} at {agent}: {e}")))?;
        match resp.status() {
            s if s.is_success() || s == StatusCode::NOT_FOUND => Ok(()),
            _ => Err(SbiError::AgentRejected(resp.text().await.unwrap_or_default())),
        }
    }

    /// Dispatches a plan's actions strictly in order, awaiting each ack
    /// before sending the next message.
    pub async fn execute_plan(
        &self,
        plan: &ActionPlan,
        book: &AddressBook,
        observer: &dyn EmissionObserver,
    ) -> Result<(), SbiError> {
        for action in &plan.actions {
            match action {
                Action::ConfigureTunnel { switch, tunnel } => {
                    let agent = book.agent(switch)?;
                    self.push_tunnel_config(switch, agent, tunnel, observer).await?;
                }
                Action::CreateCopCall(call) => {
                    self.push_cop_call(book.ovc, call, observer).await?;
                }
            }
        }
        Ok(())
    }

    /// Removes what `plan` installed: tunnels last-to-first, then the call.
    pub async fn teardown_plan(
        &self,
        plan: &ActionPlan,
        book: &AddressBook,
        observer: &dyn EmissionObserver,
    ) -> Result<(), SbiError> {
        let tunnels: Vec<_> = plan.tunnels().collect();
        for (switch, tunnel) in tunnels.into_iter().rev() {
            let agent = book.agent(switch)?;
            self.delete_tunnel(switch, agent, &tunnel.name, observer).await?;
        }
        if let Some(call) = plan.cop_call() {
            self.delete_cop_call(book.ovc, &call.call_id, observer).await?;
        }
        Ok(())
    }
}
