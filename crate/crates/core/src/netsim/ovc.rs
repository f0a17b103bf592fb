//! Simulated optical controller: accepts COP calls, routes them over the
//! ROADM ring and brings each lightpath up after a per-hop setup delay.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Serialize;
use thiserror::Error;
use tokio::sync::broadcast;
use tokio::task::AbortHandle;

use crate::sbi::cop::{decode_cop_call, encode_cop_call, CopCall, CopEndpoint, OperStatus};
use crate::topology::{Link, MultilayerTopology, NodeKind, PortId, PortRole, TopologyError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CallStatus {
    SettingUp,
    Up,
    Failed,
}

#[derive(Debug, Clone)]
pub struct CallRecord {
    pub call: CopCall,
    /// Body exactly as it arrived on the wire.
    pub raw_body: Vec<u8>,
    pub a_port: PortId,
    pub z_port: PortId,
    pub path: Vec<Link>,
    pub status: CallStatus,
    pub accepted_at: Instant,
    pub up_at: Option<Instant>,
}

impl CallRecord {
    pub fn hops(&self) -> usize {
        self.path.len()
    }

    pub fn setup_time(&self) -> Option<Duration> {
        self.up_at.map(|up| up.duration_since(self.accepted_at))
    }

    fn joins(&self, x: &PortId, y: &PortId) -> bool {
        (&self.a_port == x && &self.z_port == y) || (&self.a_port == y && &self.z_port == x)
    }
}

#[derive(Debug, Clone)]
pub struct LightpathUp {
    pub call_id: String,
    pub a_port: PortId,
    pub z_port: PortId,
    pub at: Instant,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OvcReject {
    #[error("MalformedBody: {0}")]
    MalformedBody(String),
    #[error("RejectUnknownPort: {0}")]
    UnknownPort(String),
    #[error("RejectNoEncryptionCapablePort: no encryption-capable port at {0}")]
    NoEncryptionCapablePort(String),
    #[error("RejectNoPath: {0}")]
    NoPath(String),
    #[error("RejectDuplicateCall: call {0} already exists")]
    DuplicateCall(String),
}

pub struct SimOvc {
    topology: Arc<MultilayerTopology>,
    per_hop_delay: Duration,
    calls: Mutex<HashMap<String, CallRecord>>,
    timers: Mutex<HashMap<String, AbortHandle>>,
    events: broadcast::Sender<LightpathUp>,
}

impl SimOvc {
    pub fn new(topology: Arc<MultilayerTopology>, per_hop_delay: Duration) -> Arc<Self> {
        let (events, _) = broadcast::channel(1024);
        Arc::new(SimOvc {
            topology,
            per_hop_delay,
            calls: Mutex::default(),
            timers: Mutex::default(),
            events,
        })
    }

    pub fn per_hop_delay(&self) -> Duration {
        self.per_hop_delay
    }

    pub fn subscribe(&self) -> broadcast::Receiver<LightpathUp> {
        self.events.subscribe()
    }

    /// Decodes a raw COP body and handles it.
    pub fn handle_body(self: &Arc<Self>, raw: &[u8]) -> Result<CopCall, OvcReject> {
        let call = decode_cop_call(raw).map_err(|e| OvcReject::MalformedBody(e.to_string()))?;
        self.handle_call(call, raw.to_vec())
    }

    /// Validates and accepts a call, scheduling its lightpath. Returns the
    /// call with its current operational status.
    pub fn handle_call(
        self: &Arc<Self>,
        call: CopCall,
        raw_body: Vec<u8>,
    ) -> Result<CopCall, OvcReject> {
        let a_port = self.resolve(&call.a_end)?;
        let z_port = self.resolve(&call.z_end)?;
        if call.encryption_present {
            for p in [&a_port, &z_port] {
                if !self.topology.port(p).is_some_and(|p| p.encryption_capable) {
                    return Err(OvcReject::NoEncryptionCapablePort(p.to_string()));
                }
            }
        }
        let path = self
            .topology
            .optical_path(&a_port.node, &z_port.node)
            .map_err(|e| match e {
                TopologyError::NoPath(..) => OvcReject::NoPath(e.to_string()),
                other => OvcReject::UnknownPort(other.to_string()),
            })?;
        let delay = self.per_hop_delay * path.len() as u32;
        let call_id = call.call_id.clone();

        let mut calls = self.calls.lock().expect("ovc state poisoned");
        if calls.contains_key(&call_id) {
            return Err(OvcReject::DuplicateCall(call_id));
        }
        let now = Instant::now();
        let mut record = CallRecord {
            call,
            raw_body,
            a_port,
            z_port,
            path,
            status: CallStatus::SettingUp,
            accepted_at: now,
            up_at: None,
        };
        if delay.is_zero() {
            record.status = CallStatus::Up;
            record.up_at = Some(now);
            let _ = self.events.send(LightpathUp {
                call_id: call_id.clone(),
                a_port: record.a_port.clone(),
                z_port: record.z_port.clone(),
                at: now,
            });
        } else {
            let me = Arc::downgrade(self);
            let id = call_id.clone();
            let task = tokio::spawn(async move {
                tokio::time::sleep(delay).await;
                if let Some(ovc) = me.upgrade() {
                    ovc.mark_up(&id);
                }
            });
            self.timers
                .lock()
                .expect("ovc timers poisoned")
                .insert(call_id.clone(), task.abort_handle());
        }
        let mut reply = record.call.clone();
        reply.oper_status = oper_status(record.status);
        calls.insert(call_id, record);
        Ok(reply)
    }

    fn mark_up(&self, call_id: &str) {
        let mut calls = self.calls.lock().expect("ovc state poisoned");
        let Some(record) = calls.get_mut(call_id) else {
            return;
        };
        let now = Instant::now();
        record.status = CallStatus::Up;
        record.up_at = Some(now);
        let _ = self.events.send(LightpathUp {
            call_id: call_id.to_owned(),
            a_port: record.a_port.clone(),
            z_port: record.z_port.clone(),
            at: now,
        });
        drop(calls);
        self.timers
            .lock()
            .expect("ovc timers poisoned")
            .remove(call_id);
    }

    fn resolve(&self, end: &CopEndpoint) -> Result<PortId, OvcReject> {
        let unknown = || OvcReject::UnknownPort(end.endpoint_id.clone());
        let node = self
            .topology
            .node_by_address(&end.router_id)
            .filter(|n| n.kind == NodeKind::Roadm)
            .ok_or_else(unknown)?;
        let port = PortId::new(node.id.clone(), end.port_name().ok_or_else(unknown)?);
        match self.topology.port(&port) {
            Some(p) if p.role == PortRole::ClientPort => Ok(port),
            _ => Err(unknown()),
        }
    }

    pub fn delete_call(&self, call_id: &str) -> bool {
        if let Some(timer) = self
            .timers
            .lock()
            .expect("ovc timers poisoned")
            .remove(call_id)
        {
            timer.abort();
        }
        self.calls
            .lock()
            .expect("ovc state poisoned")
            .remove(call_id)
            .is_some()
    }

    pub fn call(&self, call_id: &str) -> Option<CallRecord> {
        self.calls
            .lock()
            .expect("ovc state poisoned")
            .get(call_id)
            .cloned()
    }

    pub fn calls(&self) -> Vec<CallRecord> {
        let mut all: Vec<_> = self
            .calls
            .lock()
            .expect("ovc state poisoned")
            .values()
            .cloned()
            .collect();
        all.sort_by_key(|c| c.accepted_at);
        all
    }

    /// An Up lightpath joining the two client ports, in either direction.
    pub fn up_lightpath_between(&self, x: &PortId, y: &PortId) -> Option<(String, Instant)> {
        let calls = self.calls.lock().expect("ovc state poisoned");
        calls
            .values()
            .filter(|c| c.status == CallStatus::Up && c.joins(x, y))
            .filter_map(|c| c.up_at.map(|t| (c.call.call_id.clone(), t)))
            .min_by_key(|(_, t)| *t)
    }

    pub fn router(self: &Arc<Self>) -> Router {
        Router::new()
            .route("/data/calls/{call}", post(post_call).delete(delete_call))
            .route("/state", get(state))
            .with_state(Arc::clone(self))
    }
}

fn oper_status(status: CallStatus) -> OperStatus {
    match status {
        CallStatus::Up => OperStatus::Up,
        _ => OperStatus::Down,
    }
}

fn call_id_from_path(segment: &str) -> Option<&str> {
    segment.strip_prefix("call-").filter(|id| !id.is_empty())
}

async fn post_call(
    State(ovc): State<Arc<SimOvc>>,
    Path(segment): Path<String>,
    body: Bytes,
) -> Response {
    let Some(id) = call_id_from_path(&segment) else {
        return (StatusCode::NOT_FOUND, "expected /data/calls/call-{id}").into_response();
    };
    let result = decode_cop_call(&body)
        .map_err(|e| OvcReject::MalformedBody(e.to_string()))
        .and_then(|call| {
            if call.call_id != id {
                return Err(OvcReject::MalformedBody(format!(
                    "path names call {id} but body names {}",
                    call.call_id
                )));
            }
            ovc.handle_call(call, body.to_vec())
        });
    match result {
        Ok(reply) => (
            StatusCode::CREATED,
            [("content-type", "application/json")],
            encode_cop_call(&reply),
        )
            .into_response(),
        Err(e) => {
            let status = match e {
                OvcReject::MalformedBody(_) => StatusCode::BAD_REQUEST,
                OvcReject::DuplicateCall(_) => StatusCode::CONFLICT,
                _ => StatusCode::UNPROCESSABLE_ENTITY,
            };
            (status, e.to_string()).into_response()
        }
    }
}

async fn delete_call(State(ovc): State<Arc<SimOvc>>, Path(segment): Path<String>) -> StatusCode {
    match call_id_from_path(&segment) {
        Some(id) if ovc.delete_call(id) => StatusCode::NO_CONTENT,
        _ => StatusCode::NOT_FOUND,
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct CallView {
    call_id: String,
    status: CallStatus,
    encryption: bool,
    hops: usize,
    setup_ms: Option<f64>,
}

async fn state(State(ovc): State<Arc<SimOvc>>) -> Json<Vec<CallView>> {
    Json(
        ovc.calls()
            .into_iter()
            .map(|c| CallView {
                call_id: c.call.call_id.clone(),
                status: c.status,
                encryption: c.call.encryption_present,
                hops: c.hops(),
                setup_ms: c.setup_time().map(|d| d.as_secs_f64() * 1e3),
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compiler::build_cop_call;

    fn call(topo: &MultilayerTopology, a: &str, z: &str, encrypted: bool) -> CopCall {
        build_cop_call(
            &"acino1".into(),
            &PortId::new(a, "1-7-C1"),
            &PortId::new(z, "1-7-C1"),
            encrypted,
            topo,
        )
        .unwrap()
    }

    #[tokio::test]
    async fn zero_delay_is_up_immediately() {
        let topo = Arc::new(MultilayerTopology::default_testbed());
        let ovc = SimOvc::new(Arc::clone(&topo), Duration::ZERO);
        let reply = ovc
            .handle_call(call(&topo, "ROADM-1", "ROADM-2", true), vec![])
            .unwrap();
        assert_eq!(reply.oper_status, OperStatus::Up);
        let rec = ovc.call("acino1").unwrap();
        assert_eq!(rec.status, CallStatus::Up);
        assert_eq!(rec.hops(), 1);
    }

    #[tokio::test(start_paused = true)]
    async fn one_hop_takes_one_delay() {
        let topo = Arc::new(MultilayerTopology::default_testbed());
        let ovc = SimOvc::new(Arc::clone(&topo), Duration::from_secs(2));
        let reply = ovc
            .handle_call(call(&topo, "ROADM-1", "ROADM-2", true), vec![])
            .unwrap();
        assert_eq!(reply.oper_status, OperStatus::Down);
        tokio::time::sleep(Duration::from_millis(1999)).await;
        assert_eq!(ovc.call("acino1").unwrap().status, CallStatus::SettingUp);
        tokio::time::sleep(Duration::from_millis(2)).await;
        tokio::task::yield_now().await;
        assert_eq!(ovc.call("acino1").unwrap().status, CallStatus::Up);
    }

    #[tokio::test]
    async fn encrypted_call_needs_aes_ports() {
        let topo = Arc::new(MultilayerTopology::default_testbed());
        let ovc = SimOvc::new(Arc::clone(&topo), Duration::ZERO);
        let err = ovc
            .handle_call(call(&topo, "ROADM-1", "ROADM-3", true), vec![])
            .unwrap_err();
        assert!(matches!(err, OvcReject::NoEncryptionCapablePort(_)));
        assert!(err.to_string().contains("no encryption-capable port"));
        // plain calls to the same ROADM are fine
        ovc.handle_call(call(&topo, "ROADM-1", "ROADM-3", false), vec![])
            .unwrap();
    }

    #[tokio::test]
    async fn unknown_port_and_duplicates() {
        let topo = Arc::new(MultilayerTopology::default_testbed());
        let ovc = SimOvc::new(Arc::clone(&topo), Duration::ZERO);
        let mut c = call(&topo, "ROADM-1", "ROADM-2", false);
        ovc.handle_call(c.clone(), vec![]).unwrap();
        assert!(matches!(
            ovc.handle_call(c.clone(), vec![]),
            Err(OvcReject::DuplicateCall(_))
        ));
        c.call_id = "other".into();
        c.z_end = CopEndpoint::for_port("10.12.105.38", "9-9-C9");
        assert!(matches!(
            ovc.handle_call(c, vec![]),
            Err(OvcReject::UnknownPort(_))
        ));
    }

    #[tokio::test(start_paused = true)]
    async fn delete_cancels_pending_setup() {
        let topo = Arc::new(MultilayerTopology::default_testbed());
        let ovc = SimOvc::new(Arc::clone(&topo), Duration::from_secs(2));
        let mut events = ovc.subscribe();
        ovc.handle_call(call(&topo, "ROADM-1", "ROADM-2", false), vec![])
            .unwrap();
        assert!(ovc.delete_call("acino1"));
        assert!(!ovc.delete_call("acino1"));
        tokio::time::sleep(Duration::from_secs(5)).await;
        assert!(events.try_recv().is_err());
        assert!(ovc.call("acino1").is_none());
    }
}
