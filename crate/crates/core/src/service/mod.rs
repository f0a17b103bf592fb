//! The orchestrator: intent intake, the asynchronous decide / compile /
//! execute pipeline, trace recording and processing-time metrics.

pub mod nbi;

use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::compiler::{ActionPlan, StrategyRegistry};
use crate::config::{Config, ConfigError};
use crate::decision::{select_encryption_layer, DecisionConfig, EncryptionLayerChoice};
use crate::intent::{ConstraintSet, Intent, IntentError, IntentId, IntentState, IntentStore};
use crate::sbi::{AddressBook, Emission, SbiClient, SbiError};
use crate::server::{serve, ServerHandle};
use crate::topology::{MultilayerTopology, NodeId};
use crate::trace::{FormatterRegistry, Protocol, TraceEvent, TraceLog};

pub const NBI_PATH: &str = "/onos/v1/intents";
pub const CONTROLLER: &str = "Controller";
pub const CLIENT: &str = "Client";

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error(transparent)]
    Intent(#[from] IntentError),
    #[error("intent {0} is {1}; only installed intents can be withdrawn")]
    Conflict(IntentId, String),
    #[error("teardown failed: {0}")]
    Teardown(SbiError),
    #[error("unknown trace format {0:?}")]
    UnknownFormat(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// Time from NBI receipt to the last southbound setup message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProcessingMetrics {
    pub intent_id: IntentId,
    pub nbi_received_at: Instant,
    pub last_sbi_emitted_at: Option<Instant>,
    /// Offset of the final setup message in the intent's trace.
    pub processing_time: Option<Duration>,
}

impl ProcessingMetrics {
    pub fn processing_time_ms(&self) -> Option<f64> {
        self.processing_time.map(|d| d.as_secs_f64() * 1e3)
    }
}

struct PipelineRecord {
    choice: Option<EncryptionLayerChoice>,
    plan: Option<ActionPlan>,
    metrics: ProcessingMetrics,
    withdrawing: bool,
}

/// Read-back view of an intent.
#[derive(Debug, Clone)]
pub struct IntentReport {
    pub intent: Intent,
    pub choice: Option<EncryptionLayerChoice>,
    pub metrics: ProcessingMetrics,
}

pub struct Orchestrator {
    topology: Arc<MultilayerTopology>,
    store: IntentStore,
    decision: DecisionConfig,
    strategies: StrategyRegistry,
    formatters: FormatterRegistry,
    sbi: SbiClient,
    book: AddressBook,
    traces: TraceLog,
    records: Mutex<HashMap<IntentId, PipelineRecord>>,
}

impl Orchestrator {
    pub fn new(
        topology: Arc<MultilayerTopology>,
        config: &Config,
        book: AddressBook,
    ) -> Result<Arc<Self>, ServiceError> {
        Self::with_strategies(topology, config, book, StrategyRegistry::with_defaults())
    }

    /// Builds an orchestrator that provisions layers with `strategies`.
    pub fn with_strategies(
        topology: Arc<MultilayerTopology>,
        config: &Config,
        book: AddressBook,
        strategies: StrategyRegistry,
    ) -> Result<Arc<Self>, ServiceError> {
        Ok(Arc::new(Orchestrator {
            topology,
            store: IntentStore::with_prefix(config.intent.id_prefix.clone()),
            decision: config.decision_config()?,
            strategies,
            formatters: FormatterRegistry::default(),
            sbi: SbiClient::new(config.sbi_timeout()),
            book,
            traces: TraceLog::default(),
            records: Mutex::default(),
        }))
    }

    pub fn topology(&self) -> &MultilayerTopology {
        &self.topology
    }

    pub fn formatters(&self) -> &FormatterRegistry {
        &self.formatters
    }

    pub async fn serve_nbi(self: &Arc<Self>, bind: &str) -> std::io::Result<ServerHandle> {
        serve(bind, nbi::router(Arc::clone(self))).await
    }

    /// Stores a new intent, records the request and its 201 reply, and
    /// schedules the pipeline. Returns before anything is sent southbound.
    pub fn accept_intent(
        self: &Arc<Self>,
        received_at: Instant,
        src: &NodeId,
        dst: &NodeId,
        constraints: ConstraintSet,
    ) -> Result<Intent, ServiceError> {
        // Holding the records lock across submit keeps store and records in step.
        let mut records = self.records.lock().expect("records poisoned");
        let intent = self.store.submit(&self.topology, src, dst, constraints)?;
        let id = intent.id.clone();
        records.insert(
            id.clone(),
            PipelineRecord {
                choice: None,
                plan: None,
                metrics: ProcessingMetrics {
                    intent_id: id.clone(),
                    nbi_received_at: received_at,
                    last_sbi_emitted_at: None,
                    processing_time: None,
                },
                withdrawing: false,
            },
        );
        drop(records);
        self.traces.record(
            &id,
            received_at,
            CLIENT,
            CONTROLLER,
            Protocol::Http,
            format!("POST {NBI_PATH} HTTP/1.1"),
        );
        self.traces.record(
            &id,
            Instant::now(),
            CONTROLLER,
            CLIENT,
            Protocol::Http,
            "HTTP/1.1 201 Created",
        );
        let me = Arc::clone(self);
        tokio::spawn(async move {
            let end = me.run_pipeline(&id).await;
            tracing::debug!(intent = %id, state = %end, "pipeline finished");
        });
        Ok(intent)
    }

    /// Decide, compile, then dispatch the plan in order.
    pub async fn run_pipeline(&self, id: &IntentId) -> IntentState {
        match self.pipeline(id).await {
            Ok(state) => state,
            Err(reason) => self
                .store
                .transition(id, IntentState::Failed(reason.clone()))
                .map(|i| i.state)
                .unwrap_or(IntentState::Failed(reason)),
        }
    }

    async fn pipeline(&self, id: &IntentId) -> Result<IntentState, String> {
        let intent = self
            .store
            .transition(id, IntentState::Compiling)
            .map_err(|e| e.to_string())?;
        let choice = select_encryption_layer(&intent.constraints, &self.decision);
        self.update(id, |r| r.choice = Some(choice));
        let plan = self
            .strategies
            .compile(&intent, choice, &self.topology)
            .map_err(|e| e.to_string())?;
        self.update(id, |r| r.plan = Some(plan.clone()));
        self.store
            .transition(id, IntentState::Installing)
            .map_err(|e| e.to_string())?;

        let observer = |e: Emission| {
            let offset = self.traces.record(
                id,
                e.at,
                CONTROLLER,
                e.destination,
                e.protocol,
                e.info,
            );
            self.update(id, |r| {
                r.metrics.last_sbi_emitted_at = Some(e.at);
                r.metrics.processing_time = Some(offset);
            });
        };
        self.sbi
            .execute_plan(&plan, &self.book, &observer)
            .await
            .map_err(|e| e.to_string())?;
        self.store
            .transition(id, IntentState::Installed)
            .map(|i| i.state)
            .map_err(|e| e.to_string())
    }

    fn update(&self, id: &IntentId, f: impl FnOnce(&mut PipelineRecord)) {
        if let Some(r) = self.records.lock().expect("records poisoned").get_mut(id) {
            f(r);
        }
    }

    pub fn report(&self, id: &IntentId) -> Result<IntentReport, ServiceError> {
        let intent = self.store.get(id)?;
        let records = self.records.lock().expect("records poisoned");
        let record = &records[id];
        Ok(IntentReport {
            intent,
            choice: record.choice,
            metrics: record.metrics.clone(),
        })
    }

    pub fn reports(&self) -> Vec<IntentReport> {
        self.store
            .list()
            .into_iter()
            .filter_map(|i| self.report(&i.id).ok())
            .collect()
    }

    pub fn plan(&self, id: &IntentId) -> Option<ActionPlan> {
        self.records
            .lock()
            .expect("records poisoned")
            .get(id)
            .and_then(|r| r.plan.clone())
    }

    /// Tears down an installed intent: tunnels in reverse plan order, then
    /// the COP call.
    pub async fn withdraw(&self, id: &IntentId) -> Result<Intent, ServiceError> {
        let plan = {
            let intent = self.store.get(id)?;
            let mut records = self.records.lock().expect("records poisoned");
            let record = records
                .get_mut(id)
                .ok_or_else(|| IntentError::UnknownIntent(id.clone()))?;
            if intent.state != IntentState::Installed || record.withdrawing {
                return Err(ServiceError::Conflict(id.clone(), intent.state.to_string()));
            }
            record.withdrawing = true;
            record.plan.clone().expect("installed intents have a plan")
        };
        let observer = |e: Emission| {
            self.traces
                .record(id, e.at, CONTROLLER, e.destination, e.protocol, e.info);
        };
        let result = self.sbi.teardown_plan(&plan, &self.book, &observer).await;
        self.update(id, |r| r.withdrawing = false);
        result.map_err(ServiceError::Teardown)?;
        Ok(self.store.transition(id, IntentState::Withdrawn)?)
    }

    pub fn trace(&self, id: &IntentId) -> Result<Vec<TraceEvent>, ServiceError> {
        self.store.get(id)?;
        Ok(self.traces.events(id).unwrap_or_default())
    }

    pub fn export_trace(&self, id: &IntentId, format: &str) -> Result<String, ServiceError> {
        let formatter = self
            .formatters
            .get(format)
            .ok_or_else(|| ServiceError::UnknownFormat(format.to_owned()))?;
        Ok(formatter.format(&self.trace(id)?))
    }

    /// Polls until the intent reaches a terminal state or `timeout` passes.
    pub async fn wait_terminal(&self, id: &IntentId, timeout: Duration) -> Result<Intent, ServiceError> {
        let deadline = Instant::now() + timeout;
        loop {
            let intent = self.store.get(id)?;
            if intent.state.is_terminal() || Instant::now() >= deadline {
                return Ok(intent);
            }
            tokio::time::sleep(Duration::from_millis(2)).await;
        }
    }
}
