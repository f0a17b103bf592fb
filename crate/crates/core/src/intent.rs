//! Northbound intent model, lifecycle and the shared intent store.

use std::collections::HashMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::RwLock;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::topology::{MultilayerTopology, NodeId, NodeKind};

/// The three constraints a client may attach to a connectivity request.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConstraintSet {
    pub encrypted: bool,
    pub latency_sensitive: bool,
    pub bandwidth_bps: u64,
}

impl ConstraintSet {
    pub fn new(encrypted: bool, latency_sensitive: bool, bandwidth_bps: u64) -> Self {
        ConstraintSet {
            encrypted,
            latency_sensitive,
            bandwidth_bps,
        }
    }

    /// Builds from a signed wire value, rejecting negative bandwidth.
    pub fn from_signed(
        encrypted: bool,
        latency_sensitive: bool,
        bandwidth_bps: i64,
    ) -> Result<Self, IntentError> {
        let bw = u64::try_from(bandwidth_bps).map_err(|_| {
            IntentError::InvalidConstraints(format!("negative bandwidth {bandwidth_bps}"))
        })?;
        Ok(Self::new(encrypted, latency_sensitive, bw))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IntentId(pub String);

impl IntentId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for IntentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for IntentId {
    fn from(s: &str) -> Self {
        IntentId(s.to_owned())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", content = "reason")]
pub enum IntentState {
    Submitted,
    Compiling,
    Installing,
    Installed,
    Failed(String),
    Withdrawn,
}

impl IntentState {
    pub fn is_terminal(&self) -> bool {
        matches!(
            self,
            IntentState::Installed | IntentState::Failed(_) | IntentState::Withdrawn
        )
    }

    pub fn name(&self) -> &'static str {
        match self {
            IntentState::Submitted => "Submitted",
            IntentState::Compiling => "Compiling",
            IntentState::Installing => "Installing",
            IntentState::Installed => "Installed",
            IntentState::Failed(_) => "Failed",
            IntentState::Withdrawn => "Withdrawn",
        }
    }

    /// Whether the lifecycle has an edge from `self` to `next`.
    pub fn can_transition_to(&self, next: &IntentState) -> bool {
        use IntentState::*;
        match (self, next) {
            (Failed(_) | Withdrawn, _) => false,
            (_, Failed(_)) => true,
            (Submitted, Compiling)
            | (Compiling, Installing)
            | (Installing, Installed)
            | (Installed, Withdrawn) => true,
            _ => false,
        }
    }
}

impl fmt::Display for IntentState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IntentState::Failed(reason) => write!(f, "Failed({reason})"),
            other => f.write_str(other.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Intent {
    pub id: IntentId,
    pub src: NodeId,
    pub dst: NodeId,
    pub constraints: ConstraintSet,
    pub state: IntentState,
    pub submitted_at: Instant,
    pub installed_at: Option<Instant>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IntentError {
    #[error("unknown endpoint {0}")]
    UnknownEndpoint(NodeId),
    #[error("invalid constraints: {0}")]
    InvalidConstraints(String),
    #[error("unknown intent {0}")]
    UnknownIntent(IntentId),
    #[error("illegal transition {from} -> {to} for intent {id}")]
    IllegalTransition {
        id: IntentId,
        from: String,
        to: String,
    },
}

#[derive(Default)]
struct StoreInner {
    order: Vec<IntentId>,
    intents: HashMap<IntentId, Intent>,
}

/// Concurrent intent store. Readers share, writers serialize.
pub struct IntentStore {
    prefix: String,
    next: AtomicU64,
    inner: RwLock<StoreInner>,
}

impl Default for IntentStore {
    fn default() -> Self {
        Self::with_prefix(crate::config::DEFAULT_INTENT_ID_PREFIX)
    }
}

impl IntentStore {
    pub fn with_prefix(prefix: impl Into<String>) -> Self {
        IntentStore {
            prefix: prefix.into(),
            next: AtomicU64::new(1),
            inner: RwLock::default(),
        }
    }

    pub fn submit(
        &self,
        topology: &MultilayerTopology,
        src: &NodeId,
        dst: &NodeId,
        constraints: ConstraintSet,
    ) -> Result<Intent, IntentError> {
        for end in [src, dst] {
            match topology.node(end) {
                Some(n) if n.kind == NodeKind::PacketSwitch => {}
                _ => return Err(IntentError::UnknownEndpoint(end.clone())),
            }
        }
        if src == dst {
            return Err(IntentError::InvalidConstraints(format!(
                "source and destination are both {src}"
            )));
        }
        let mut inner = self.inner.write().expect("intent store poisoned");
        let seq = self.next.fetch_add(1, Ordering::Relaxed);
        let intent = Intent {
            id: IntentId(format!("{}{}", self.prefix, seq)),
            src: src.clone(),
            dst: dst.clone(),
            constraints,
            state: IntentState::Submitted,
            submitted_at: Instant::now(),
            installed_at: None,
        };
        inner.order.push(intent.id.clone());
        inner.intents.insert(intent.id.clone(), intent.clone());
        Ok(intent)
    }

    pub fn transition(&self, id: &IntentId, next: IntentState) -> Result<Intent, IntentError> {
        let mut inner = self.inner.write().expect("intent store poisoned");
        let intent = inner
            .intents
            .get_mut(id)
            .ok_or_else(|| IntentError::UnknownIntent(id.clone()))?;
        if !intent.state.can_transition_to(&next) {
            return Err(IntentError::IllegalTransition {
                id: id.clone(),
                from: intent.state.to_string(),
                to: next.to_string(),
            });
        }
        if next == IntentState::Installed {
            intent.installed_at = Some(Instant::now());
        }
        intent.state = next;
        Ok(intent.clone())
    }

    pub fn get(&self, id: &IntentId) -> Result<Intent, IntentError> {
        let inner = self.inner.read().expect("intent store poisoned");
        inner
            .intents
            .get(id)
            .cloned()
            .ok_or_else(|| IntentError::UnknownIntent(id.clone()))
    }

    /// All intents in submission order.
    pub fn list(&self) -> Vec<Intent> {
        let inner = self.inner.read().expect("intent store poisoned");
        inner
            .order
            .iter()
            .map(|id| inner.intents[id].clone())
            .collect()
    }
}
