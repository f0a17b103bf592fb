//! Per-intent message traces laid out like a capture tool's packet list.
//!
//! Output formats are [`TraceFormatter`]s registered by name in a
//! [`FormatterRegistry`]; `table` and `structured` ship by default.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::intent::IntentId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Protocol {
    Http,
    Cop,
    Tunnelcfg,
    Internal,
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Protocol::Http => "HTTP",
            Protocol::Cop => "COP",
            Protocol::Tunnelcfg => "TUNNELCFG",
            Protocol::Internal => "INTERNAL",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    /// Offset from the first event of the intent, microsecond resolution.
    #[serde(rename = "tOffsetUs", with = "micros")]
    pub t_offset: Duration,
    pub source: String,
    pub destination: String,
    pub protocol: Protocol,
    pub info: String,
}

mod micros {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_micros() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        u64::deserialize(d).map(Duration::from_micros)
    }
}

fn truncate_to_micros(d: Duration) -> Duration {
    Duration::from_micros(d.as_micros() as u64)
}

#[derive(Default)]
struct IntentTrace {
    origin: Option<Instant>,
    events: Vec<TraceEvent>,
}

/// Shared trace recorder for all intents.
#[derive(Default, Clone)]
pub struct TraceLog {
    inner: Arc<Mutex<HashMap<IntentId, IntentTrace>>>,
}

impl TraceLog {
    /// Records an event that happened at `at`. The first event for an intent
    /// becomes its reference point; offsets never go backwards.
    pub fn record(
        &self,
        intent: &IntentId,
        at: Instant,
        source: impl Into<String>,
        destination: impl Into<String>,
        protocol: Protocol,
        info: impl Into<String>,
    ) -> Duration {
        let mut inner = self.inner.lock().expect("trace log poisoned");
        let trace = inner.entry(intent.clone()).or_default();
        let origin = *trace.origin.get_or_insert(at);
        let mut offset = truncate_to_micros(at.saturating_duration_since(origin));
        if let Some(last) = trace.events.last() {
            offset = offset.max(last.t_offset);
        }
        trace.events.push(TraceEvent {
            t_offset: offset,
            source: source.into(),
            destination: destination.into(),
            protocol,
            info: info.into(),
        });
        offset
    }

    pub fn events(&self, intent: &IntentId) -> Option<Vec<TraceEvent>> {
        let inner = self.inner.lock().expect("trace log poisoned");
        inner.get(intent).map(|t| t.events.clone())
    }

    pub fn contains(&self, intent: &IntentId) -> bool {
        self.inner
            .lock()
            .expect("trace log poisoned")
            .contains_key(intent)
    }
}

pub const COLUMNS: [&str; 5] = ["Time", "Source", "Destination", "Protocol", "Info"];

pub trait TraceFormatter: Send + Sync {
    fn name(&self) -> &'static str;
    fn content_type(&self) -> &'static str;
    fn format(&self, events: &[TraceEvent]) -> String;
}

/// Tab-separated rows; the first row's time reads `REF`.
pub struct TableFormat;

impl TraceFormatter for TableFormat {
    fn name(&self) -> &'static str {
        "table"
    }

    fn content_type(&self) -> &'static str {
        "text/tab-separated-values"
    }

    fn format(&self, events: &[TraceEvent]) -> String {
        let mut out = COLUMNS.join("\t");
        out.push('\n');
        for (i, e) in events.iter().enumerate() {
            let time = if i == 0 {
                "REF".to_owned()
            } else {
                format!("{:.6}", e.t_offset.as_secs_f64())
            };
            out.push_str(&format!(
                "{time}\t{}\t{}\t{}\t{}\n",
                e.source, e.destination, e.protocol, e.info
            ));
        }
        out
    }
}

#[derive(Serialize)]
struct StructuredRow<'a> {
    #[serde(rename = "Time")]
    time: String,
    #[serde(rename = "Source")]
    source: &'a str,
    #[serde(rename = "Destination")]
    destination: &'a str,
    #[serde(rename = "Protocol")]
    protocol: Protocol,
    #[serde(rename = "Info")]
    info: &'a str,
}

/// JSON array of row objects keyed by column name.
pub struct StructuredFormat;

impl TraceFormatter for StructuredFormat {
    fn name(&self) -> &'static str {
        "structured"
    }

    fn content_type(&self) -> &'static str {
        "application/json"
    }

    fn format(&self, events: &[TraceEvent]) -> String {
        let rows: Vec<_> = events
            .iter()
            .enumerate()
            .map(|(i, e)| StructuredRow {
                time: if i == 0 {
                    "REF".into()
                } else {
                    format!("{:.6}", e.t_offset.as_secs_f64())
                },
                source: &e.source,
                destination: &e.destination,
                protocol: e.protocol,
                info: &e.info,
            })
            .collect();
        serde_json::to_string_pretty(&rows).expect("trace rows serialize")
    }
}

#[derive(Clone)]
pub struct FormatterRegistry {
    formats: BTreeMap<&'static str, Arc<dyn TraceFormatter>>,
}

impl Default for FormatterRegistry {
    fn default() -> Self {
        let mut registry = FormatterRegistry {
            formats: BTreeMap::new(),
        };
        registry.register(Arc::new(TableFormat));
        registry.register(Arc::new(StructuredFormat));
        registry
    }
}

impl FormatterRegistry {
    pub fn register(&mut self, f: Arc<dyn TraceFormatter>) -> Option<Arc<dyn TraceFormatter>> {
        self.formats.insert(f.name(), f)
    }

    pub fn get(&self, name: &str) -> Option<&Arc<dyn TraceFormatter>> {
        self.formats.get(name)
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.formats.keys().copied().collect()
    }
}
