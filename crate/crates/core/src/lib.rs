//! Intent-driven orchestration for a two-layer IP over optical network.
//!
//! Clients submit connectivity intents carrying three constraints
//! (encryption, latency sensitivity, bandwidth). The orchestrator picks the
//! layer that should encrypt the traffic, compiles the intent into
//! southbound actions and drives a COP-speaking optical controller and
//! tunnel-configuring switch agents. A simulated device plane is included
//! so the whole chain runs in one process.

pub mod compiler;
pub mod config;
pub mod decision;
pub mod intent;
pub mod netsim;
pub mod sbi;
pub mod scenario;
pub mod server;
pub mod service;
pub mod topology;
pub mod trace;

pub use compiler::{compile, Action, ActionPlan, LayerStrategy, StrategyRegistry};
pub use config::Config;
pub use decision::{select_encryption_layer, DecisionConfig, EncryptionLayerChoice};
pub use intent::{ConstraintSet, Intent, IntentId, IntentState, IntentStore};
pub use topology::{MultilayerTopology, NodeId, PortId};
