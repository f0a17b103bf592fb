//! Scenario runner: brings up the simulated devices and the orchestrator
//! in-process, drives intents through the NBI and checks expectations.

use std::fmt::Write as _;
use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use serde::Deserialize;
use thiserror::Error;

use crate::config::Config;
use crate::decision::EncryptionLayerChoice;
use crate::intent::{ConstraintSet, IntentId};
use crate::netsim::{EndToEnd, SimPlane};
use crate::server::ServerHandle;
use crate::service::nbi::{Created, IntentRequest, IntentView};
use crate::service::{Orchestrator, NBI_PATH};
use crate::topology::{MultilayerTopology, NodeId};
use crate::trace::TraceEvent;

const MBIT: u64 = 1_000_000;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{component} failed to start: {message}")]
    Startup { component: &'static str, message: String },
    #[error("malformed scenario file: {0}")]
    ScenarioFile(String),
    #[error("unknown built-in scenario {0:?} (expected optical, ip or all)")]
    UnknownBuiltin(String),
    #[error("NBI request failed: {0}")]
    Nbi(String),
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Expectation {
    pub choice: Option<EncryptionLayerChoice>,
    pub trace_rows: Option<usize>,
    pub max_processing_time_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub src: NodeId,
    pub dst: NodeId,
    #[serde(default)]
    pub encryption: bool,
    #[serde(default)]
    pub latency_sensitive: bool,
    #[serde(default)]
    pub bandwidth_bps: u64,
    #[serde(default)]
    pub expected: Option<Expectation>,
}

impl Scenario {
    pub fn constraints(&self) -> ConstraintSet {
        ConstraintSet::new(self.encryption, self.latency_sensitive, self.bandwidth_bps)
    }

    /// Encrypted, latency-sensitive 1 Mbit/s between the two hosts.
    pub fn optical() -> Self {
        Scenario {
            name: "optical".into(),
            src: "OVS1".into(),
            dst: "OVS2".into(),
            encryption: true,
            latency_sensitive: true,
            bandwidth_bps: MBIT,
            expected: Some(Expectation {
                choice: Some(EncryptionLayerChoice::OpticalLayer),
                trace_rows: Some(3),
                max_processing_time_ms: Some(120.0),
            }),
        }
    }

    /// Encrypted 1 Mbit/s that tolerates latency.
    pub fn ip() -> Self {
        Scenario {
            name: "ip".into(),
            src: "OVS1".into(),
            dst: "OVS2".into(),
            encryption: true,
            latency_sensitive: false,
            bandwidth_bps: MBIT,
            expected: Some(Expectation {
                choice: Some(EncryptionLayerChoice::IpLayer),
                trace_rows: Some(5),
                max_processing_time_ms: Some(200.0),
            }),
        }
    }

    pub fn builtin(name: &str) -> Result<Vec<Scenario>, RunError> {
        match name {
            "optical" => Ok(vec![Self::optical()]),
            "ip" => Ok(vec![Self::ip()]),
            "all" => Ok(vec![Self::optical(), Self::ip()]),
            other => Err(RunError::UnknownBuiltin(other.to_owned())),
        }
    }

    /// Parses a TOML file holding a `[[scenarios]]` array.
    pub fn load_file(text: &str) -> Result<Vec<Scenario>, RunError> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct File {
            scenarios: Vec<Scenario>,
        }
        toml::from_str::<File>(text)
            .map(|f| f.scenarios)
            .map_err(|e| RunError::ScenarioFile(e.to_string()))
    }
}

/// Thin HTTP client for the NBI.
#[derive(Clone)]
pub struct NbiClient {
    base: String,
    http: reqwest::Client,
}

impl NbiClient {
    pub fn new(addr: SocketAddr) -> Self {
        NbiClient {
            base: format!("http://{addr}{NBI_PATH}"),
            http: reqwest::Client::builder()
                .no_proxy()
                .timeout(Duration::from_secs(10))
                .build()
                .expect("http client builds"),
        }
    }

    async fn send(&self, req: reqwest::RequestBuilder) -> Result<(u16, Vec<u8>), RunError> {
        let resp = req.send().await.map_err(|e| RunError::Nbi(e.to_string()))?;
        let status = resp.status().as_u16();
        let body = resp.bytes().await.map_err(|e| RunError::Nbi(e.to_string()))?;
        Ok((status, body.to_vec()))
    }

    /// Raw POST; returns status and body.
    pub async fn post_raw(&self, body: Vec<u8>) -> Result<(u16, Vec<u8>), RunError> {
        self.send(
            self.http
                .post(&self.base)
                .header("content-type", "application/json")
                .body(body),
        )
        .await
    }

    pub async fn submit(&self, request: &IntentRequest) -> Result<Created, RunError> {
        let (status, body) = self
            .post_raw(serde_json::to_vec(request).expect("request serializes"))
            .await?;
        if status != 201 {
            return Err(RunError::Nbi(format!(
                "submit returned {status}: {}",
                String::from_utf8_lossy(&body)
            )));
        }
        serde_json::from_slice(&body).map_err(|e| RunError::Nbi(e.to_string()))
    }

    pub async fn get(&self, id: &IntentId) -> Result<(u16, Option<IntentView>), RunError> {
        let (status, body) = self.send(self.http.get(format!("{}/{id}", self.base))).await?;
        Ok((status, serde_json::from_slice(&body).ok()))
    }

    pub async fn list(&self) -> Result<Vec<IntentView>, RunError> {
        let (_, body) = self.send(self.http.get(&self.base)).await?;
        let list: crate::service::nbi::IntentList =
            serde_json::from_slice(&body).map_err(|e| RunError::Nbi(e.to_string()))?;
        Ok(list.intents)
    }

    pub async fn delete(&self, id: &IntentId) -> Result<(u16, Option<IntentView>), RunError> {
        let (status, body) = self
            .send(self.http.delete(format!("{}/{id}", self.base)))
            .await?;
        Ok((status, serde_json::from_slice(&body).ok()))
    }

    pub async fn trace(&self, id: &IntentId, format: &str) -> Result<(u16, String), RunError> {
        let (status, body) = self
            .send(self.http.get(format!("{}/{id}/trace?format={format}", self.base)))
            .await?;
        Ok((status, String::from_utf8_lossy(&body).into_owned()))
    }

    /// Polls the intent until it is Installed, Failed or Withdrawn.
    pub async fn wait_terminal(&self, id: &IntentId, timeout: Duration) -> Result<IntentView, RunError> {
        let deadline = tokio::time::Instant::now() + timeout;
        loop {
            let (_, view) = self.get(id).await?;
            let view = view.ok_or_else(|| RunError::Nbi(format!("intent {id} vanished")))?;
            let terminal = matches!(view.state.as_str(), "Installed" | "Failed" | "Withdrawn");
            if terminal || tokio::time::Instant::now() >= deadline {
                return Ok(view);
            }
            tokio::time::sleep(Duration::from_millis(2)).await;
        }
    }
}

/// Simulated devices plus an orchestrator with its NBI listening.
pub struct Testbed {
    pub sim: SimPlane,
    pub orchestrator: Arc<Orchestrator>,
    pub nbi: NbiClient,
    pub config: Config,
    _nbi_server: ServerHandle,
}

impl Testbed {
    pub async fn start(topology: MultilayerTopology, config: Config) -> Result<Testbed, RunError> {
        let topology = Arc::new(topology);
        let sim = SimPlane::start(Arc::clone(&topology), &config)
            .await
            .map_err(|e| RunError::Startup {
                component: "device simulator",
                message: e.to_string(),
            })?;
        let orchestrator = Orchestrator::new(topology, &config, sim.address_book()).map_err(|e| {
            RunError::Startup {
                component: "orchestrator",
                message: e.to_string(),
            }
        })?;
        let bind = format!("{}:{}", config.nbi.bind, config.nbi.port);
        let server = orchestrator
            .serve_nbi(&bind)
            .await
            .map_err(|e| RunError::Startup {
                component: "northbound interface",
                message: format!("cannot bind {bind}: {e}"),
            })?;
        Ok(Testbed {
            sim,
            orchestrator,
            nbi: NbiClient::new(server.addr()),
            config,
            _nbi_server: server,
        })
    }

    pub fn nbi_addr(&self) -> SocketAddr {
        self._nbi_server.addr()
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioReport {
    pub name: String,
    pub intent_id: IntentId,
    pub state: String,
    pub reason: Option<String>,
    pub choice: Option<EncryptionLayerChoice>,
    pub processing_time_ms: Option<f64>,
    pub trace: Vec<TraceEvent>,
    pub trace_text: String,
    pub end_to_end: Option<EndToEnd>,
    pub lightpath_setup: Option<Duration>,
    pub failures: Vec<String>,
}

impl ScenarioReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "scenario {} ({})", self.name, self.intent_id);
        let _ = writeln!(
            out,
            "  choice:          {}",
            self.choice.map(|c| c.to_string()).unwrap_or_else(|| "-".into())
        );
        match &self.reason {
            Some(r) => {
                let _ = writeln!(out, "  state:           {} ({r})", self.state);
            }
            None => {
                let _ = writeln!(out, "  state:           {}", self.state);
            }
        }
        let _ = writeln!(
            out,
            "  processing time: {}",
            self.processing_time_ms
                .map(|t| format!("{t:.3} ms"))
                .unwrap_or_else(|| "-".into())
        );
        if let Some(e2e) = &self.end_to_end {
            let _ = writeln!(
                out,
                "  end to end:      connectivity={} encrypted_at={:?}",
                e2e.connectivity, e2e.encrypted_at
            );
        }
        if let Some(setup) = self.lightpath_setup {
            let _ = writeln!(out, "  lightpath setup:  {:.3} s", setup.as_secs_f64());
        }
        let _ = writeln!(out, "  trace:");
        for line in self.trace_text.lines() {
            let _ = writeln!(out, "    {line}");
        }
        for f in &self.failures {
            let _ = writeln!(out, "  FAILED: {f}");
        }
        if self.failures.is_empty() {
            let _ = writeln!(out, "  result: pass");
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub trace_format: String,
    /// Wait for the lightpath (and tunnels) to come up before reporting.
    pub await_connectivity: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            trace_format: "table".into(),
            await_connectivity: true,
        }
    }
}

pub async fn run_scenario(
    testbed: &Testbed,
    scenario: &Scenario,
    options: &RunOptions,
) -> Result<ScenarioReport, RunError> {
    let request = IntentRequest {
        src: scenario.src.clone(),
        dst: scenario.dst.clone(),
        encryption: scenario.encryption,
        latency_sensitive: scenario.latency_sensitive,
        bandwidth_bps: i64::try_from(scenario.bandwidth_bps).unwrap_or(i64::MAX),
    };
    let created = testbed.nbi.submit(&request).await?;
    let view = testbed
        .nbi
        .wait_terminal(&created.id, Duration::from_secs(30))
        .await?;
    let trace = testbed
        .orchestrator
        .trace(&created.id)
        .map_err(|e| RunError::Nbi(e.to_string()))?;
    let (_, trace_text) = testbed.nbi.trace(&created.id, &options.trace_format).await?;

    let mut end_to_end = None;
    let mut lightpath_setup = None;
    if view.state == "Installed" && options.await_connectivity {
        let hops = testbed
            .sim
            .ovc()
            .call(created.id.as_str())
            .map(|c| c.hops())
            .unwrap_or(0);
        let budget = testbed.config.per_hop_delay() * hops as u32 + Duration::from_secs(1);
        end_to_end = testbed
            .sim
            .wait_for_connectivity(&created.id, budget)
            .await
            .ok();
        lightpath_setup = testbed
            .sim
            .ovc()
            .call(created.id.as_str())
            .and_then(|c| c.setup_time());
    }

    let mut failures = Vec::new();
    if let Some(exp) = &scenario.expected {
        if let Some(choice) = exp.choice {
            if view.choice != Some(choice) {
                failures.push(format!("expected choice {choice}, got {:?}", view.choice));
            }
        }
        if view.state != "Installed" {
            failures.push(format!(
                "expected Installed, got {} {}",
                view.state,
                view.reason.clone().unwrap_or_default()
            ));
        }
        if let Some(rows) = exp.trace_rows {
            if trace.len() != rows {
                failures.push(format!("expected {rows} trace rows, got {}", trace.len()));
            }
        }
        if let Some(max) = exp.max_processing_time_ms {
            match view.processing_time_ms {
                Some(t) if t < max => {}
                Some(t) => failures.push(format!("processing time {t:.3} ms not below {max} ms")),
                None => failures.push("no processing time recorded".into()),
            }
        }
    }

    Ok(ScenarioReport {
        name: scenario.name.clone(),
        intent_id: created.id,
        state: view.state,
        reason: view.reason,
        choice: view.choice,
        processing_time_ms: view.processing_time_ms,
        trace,
        trace_text,
        end_to_end,
        lightpath_setup,
        failures,
    })
}

/// Runs scenarios one after another against a fresh testbed.
pub async fn run_all(
    topology: MultilayerTopology,
    config: Config,
    scenarios: &[Scenario],
    options: &RunOptions,
) -> Result<Vec<ScenarioReport>, RunError> {
    let testbed = Testbed::start(topology, config).await?;
    let mut reports = Vec::with_capacity(scenarios.len());
    for s in scenarios {
        reports.push(run_scenario(&testbed, s, options).await?);
    }
    Ok(reports)
}
