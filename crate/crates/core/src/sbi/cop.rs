//! COP call objects and their JSON body codec.
//!
//! Member order on the wire is fixed, so an encoded call is byte-stable.
//! `encryption` is a presence marker: it is either emitted as `true` or left
//! out entirely, never written as `false`.

use serde::{Deserialize, Deserializer, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OperStatus {
    #[serde(rename = "UP")]
    Up,
    #[serde(rename = "DOWN")]
    Down,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct CopEndpoint {
    pub router_id: String,
    pub interface_id: String,
    pub endpoint_id: String,
}

impl CopEndpoint {
    /// Endpoint for a client port; `endpointId` is `routerId|port`.
    pub fn for_port(router_id: &str, port_name: &str) -> Self {
        CopEndpoint {
            router_id: router_id.to_owned(),
            interface_id: String::new(),
            endpoint_id: format!("{router_id}|{port_name}"),
        }
    }

    /// Port-name half of `endpointId`, if it is well formed.
    pub fn port_name(&self) -> Option<&str> {
        self.endpoint_id
            .strip_prefix(self.router_id.as_str())
            .and_then(|rest| rest.strip_prefix('|'))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct TransportLayer {
    pub layer: String,
    pub direction: String,
    pub layer_id: String,
}

impl Default for TransportLayer {
    fn default() -> Self {
        TransportLayer {
            layer: "DWDM_LINK".into(),
            direction: "BIDIR".into(),
            layer_id: "layer".into(),
        }
    }
}

fn is_absent(present: &bool) -> bool {
    !*present
}

fn presence<'de, D: Deserializer<'de>>(de: D) -> Result<bool, D::Error> {
    match bool::deserialize(de)? {
        true => Ok(true),
        false => Err(serde::de::Error::custom(
            "encryption is a presence marker and cannot be false",
        )),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct CopCall {
    pub oper_status: OperStatus,
    pub call_id: String,
    pub z_end: CopEndpoint,
    pub connections: Vec<serde_json::Value>,
    pub a_end: CopEndpoint,
    #[serde(
        rename = "encryption",
        default,
        skip_serializing_if = "is_absent",
        deserialize_with = "presence"
    )]
    pub encryption_present: bool,
    pub transport_layer: TransportLayer,
}

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("malformed body: {0}")]
    MalformedBody(String),
}

pub fn encode_cop_call(call: &CopCall) -> Vec<u8> {
    serde_json::to_vec(call).expect("COP call serializes")
}

pub fn decode_cop_call(bytes: &[u8]) -> Result<CopCall, CodecError> {
    let call: CopCall =
        serde_json::from_slice(bytes).map_err(|e| CodecError::MalformedBody(e.to_string()))?;
    for end in [&call.a_end, &call.z_end] {
        if end.port_name().is_none() {
            return Err(CodecError::MalformedBody(format!(
                "endpointId {:?} does not start with routerId {:?}",
                end.endpoint_id, end.router_id
            )));
        }
    }
    Ok(call)
}

/// Request path a call is POSTed to.
pub fn call_path(call_id: &str) -> String {
    format!("/data/calls/call-{call_id}")
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOLDEN: &[u8] = include_bytes!("../../tests/fixtures/cop_call_encrypted.json");

    fn scenario_call(encrypted: bool) -> CopCall {
        CopCall {
            oper_status: OperStatus::Up,
            call_id: "acino1".into(),
            z_end: CopEndpoint::for_port("10.12.105.38", "1-7-C1"),
            connections: vec![],
            a_end: CopEndpoint::for_port("10.12.105.39", "1-7-C1"),
            encryption_present: encrypted,
            transport_layer: TransportLayer::default(),
        }
    }

    #[test]
    fn encrypted_call_matches_golden_bytes() {
        assert_eq!(encode_cop_call(&scenario_call(true)), GOLDEN);
    }

    #[test]
    fn plain_call_omits_marker() {
        let body = String::from_utf8(encode_cop_call(&scenario_call(false))).unwrap();
        assert!(!body.contains("encryption"));
        let golden = std::str::from_utf8(GOLDEN).unwrap();
        assert_eq!(body, golden.replace("\"encryption\":true,", ""));
    }

    #[test]
    fn decode_golden() {
        let call = decode_cop_call(GOLDEN).unwrap();
        assert!(call.encryption_present);
        assert_eq!(call.a_end.router_id, "10.12.105.39");
        assert_eq!(call.a_end.port_name(), Some("1-7-C1"));
        assert_eq!(call, scenario_call(true));
    }

    #[test]
    fn decode_without_marker() {
        let call = decode_cop_call(&encode_cop_call(&scenario_call(false))).unwrap();
        assert!(!call.encryption_present);
    }

    #[test]
    fn decode_rejects_bad_bodies() {
        let truncated = &GOLDEN[..GOLDEN.len() / 2];
        assert!(decode_cop_call(truncated).is_err());

        let explicit_false = std::str::from_utf8(GOLDEN)
            .unwrap()
            .replace("\"encryption\":true", "\"encryption\":false");
        assert!(decode_cop_call(explicit_false.as_bytes()).is_err());

        let extra = std::str::from_utf8(GOLDEN)
            .unwrap()
            .replace("\"connections\"", "\"bogus\":1,\"connections\"");
        assert!(decode_cop_call(extra.as_bytes()).is_err());

        let bad_endpoint = std::str::from_utf8(GOLDEN)
            .unwrap()
            .replacen("10.12.105.38|1-7-C1", "10.99.0.1|1-7-C1", 1);
        assert!(decode_cop_call(bad_endpoint.as_bytes()).is_err());
    }

    #[test]
    fn call_path_prefix() {
        assert_eq!(call_path("acino1"), "/data/calls/call-acino1");
    }
}
