//! Orchestrator and simulator configuration.
//!
//! Loaded from one TOML file; any key can then be overridden through
//! `ORCH_*` environment variables.

use std::collections::BTreeMap;
use std::time::Duration;

use serde::Deserialize;
use thiserror::Error;

use crate::decision::{DecisionConfig, DEFAULT_IP_BANDWIDTH_THRESHOLD_BPS};
use crate::topology::NodeId;

pub const DEFAULT_INTENT_ID_PREFIX: &str = "acino";
pub const DEFAULT_NBI_PORT: u16 = 8181;
pub const DEFAULT_OVC_ADDRESS: &str = "127.0.0.1:8080";
pub const DEFAULT_PER_HOP_DELAY_MS: u64 = 2000;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("malformed config: {0}")]
    Parse(String),
    #[error("invalid value for {key}: {reason}")]
    Invalid { key: &'static str, reason: String },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, rename_all = "camelCase", deny_unknown_fields)]
pub struct NbiSection {
    pub bind: String,
    pub port: u16,
}

impl Default for NbiSection {
    fn default() -> Self {
        NbiSection {
            bind: "127.0.0.1".into(),
            port: DEFAULT_NBI_PORT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, rename_all = "camelCase", deny_unknown_fields)]
pub struct OvcSection {
    pub address: String,
}

impl Default for OvcSection {
    fn default() -> Self {
        OvcSection {
            address: DEFAULT_OVC_ADDRESS.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, rename_all = "camelCase", deny_unknown_fields)]
pub struct DecisionSection {
    pub ip_bandwidth_threshold_bps: u64,
}

impl Default for DecisionSection {
    fn default() -> Self {
        DecisionSection {
            ip_bandwidth_threshold_bps: DEFAULT_IP_BANDWIDTH_THRESHOLD_BPS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, rename_all = "camelCase", deny_unknown_fields)]
pub struct SimSection {
    pub per_hop_delay_ms: u64,
}

impl Default for SimSection {
    fn default() -> Self {
        SimSection {
            per_hop_delay_ms: DEFAULT_PER_HOP_DELAY_MS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, rename_all = "camelCase", deny_unknown_fields)]
pub struct SbiSection {
    pub timeout_ms: u64,
}

impl Default for SbiSection {
    fn default() -> Self {
        SbiSection { timeout_ms: 5000 }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, rename_all = "camelCase", deny_unknown_fields)]
pub struct IntentSection {
    pub id_prefix: String,
}

impl Default for IntentSection {
    fn default() -> Self {
        IntentSection {
            id_prefix: DEFAULT_INTENT_ID_PREFIX.into(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub nbi: NbiSection,
    pub ovc: OvcSection,
    /// Switch agent listen addresses. Switches left out get an ephemeral
    /// local port when the simulator is started in-process.
    pub agents: BTreeMap<NodeId, String>,
    pub decision: DecisionSection,
    pub sim: SimSection,
    pub sbi: SbiSection,
    pub intent: IntentSection,
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Config = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Defaults suited to tests: ephemeral ports, no lightpath delay.
    pub fn ephemeral() -> Self {
        let mut cfg = Config::default();
        cfg.nbi.port = 0;
        cfg.ovc.address = "127.0.0.1:0".into();
        cfg.sim.per_hop_delay_ms = 0;
        cfg
    }

    pub fn apply_env(&mut self) -> Result<(), ConfigError> {
        self.apply_overrides(|k| std::env::var(k).ok())
    }

    pub fn apply_overrides(
        &mut self,
        lookup: impl Fn(&str) -> Option<String>,
    ) -> Result<(), ConfigError> {
        fn num<T: std::str::FromStr>(key: &'static str, v: &str) -> Result<T, ConfigError>
        where
            T::Err: std::fmt::Display,
        {
            v.trim().parse().map_err(|e: T::Err| ConfigError::Invalid {
                key,
                reason: e.to_string(),
            })
        }
        if let Some(v) = lookup("ORCH_NBI_BIND") {
            self.nbi.bind = v;
        }
        if let Some(v) = lookup("ORCH_NBI_PORT") {
            self.nbi.port = num("nbi.port", &v)?;
        }
        if let Some(v) = lookup("ORCH_OVC_ADDRESS") {
            self.ovc.address = v;
        }
        if let Some(v) = lookup("ORCH_DECISION_IP_BANDWIDTH_THRESHOLD_BPS") {
            self.decision.ip_bandwidth_threshold_bps =
                num("decision.ipBandwidthThresholdBps", &v)?;
        }
        if let Some(v) = lookup("ORCH_SIM_PER_HOP_DELAY_MS") {
            self.sim.per_hop_delay_ms = num("sim.perHopDelayMs", &v)?;
        }
        if let Some(v) = lookup("ORCH_SBI_TIMEOUT_MS") {
            self.sbi.timeout_ms = num("sbi.timeoutMs", &v)?;
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.decision_config()?;
        if self.intent.id_prefix.is_empty() {
            return Err(ConfigError::Invalid {
                key: "intent.idPrefix",
                reason: "must not be empty".into(),
            });
        }
        Ok(())
    }

    pub fn decision_config(&self) -> Result<DecisionConfig, ConfigError> {
        DecisionConfig::new(self.decision.ip_bandwidth_threshold_bps).map_err(|e| {
            ConfigError::Invalid {
                key: "decision.ipBandwidthThresholdBps",
                reason: e.to_string(),
            }
        })
    }

    pub fn per_hop_delay(&self) -> Duration {
        Duration::from_millis(self.sim.per_hop_delay_ms)
    }

    pub fn sbi_timeout(&self) -> Duration {
        Duration::from_millis(self.sbi.timeout_ms)
    }
}
