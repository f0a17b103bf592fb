//! Encrypted tunnel configuration pushed to switch agents.

use serde::{Deserialize, Serialize};

use crate::topology::NodeId;

/// Placeholder for the administrator-provisioned pre-shared key.
pub const DEFAULT_KEY_REF: &str = "psk:admin-provisioned";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TunnelMode {
    EncryptedGre,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TunnelConfig {
    pub name: String,
    pub local_node: NodeId,
    pub remote_node: NodeId,
    pub local_addr: String,
    pub remote_addr: String,
    pub mode: TunnelMode,
    pub key_ref: String,
}

/// What actually goes over the wire to `/tunnels/{name}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct TunnelBody {
    pub name: String,
    pub local_addr: String,
    pub remote_addr: String,
    pub mode: TunnelMode,
    pub key_ref: String,
}

impl TunnelConfig {
    pub fn body(&self) -> TunnelBody {
        TunnelBody {
            name: self.name.clone(),
            local_addr: self.local_addr.clone(),
            remote_addr: self.remote_addr.clone(),
            mode: self.mode,
            key_ref: self.key_ref.clone(),
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        serde_json::to_vec(&self.body()).expect("tunnel body serializes")
    }
}

pub fn tunnel_path(name: &str) -> String {
    format!("/tunnels/{name}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wire_members() {
        let cfg = TunnelConfig {
            name: "gre-acino2".into(),
            local_node: "OVS1".into(),
            remote_node: "OVS2".into(),
            local_addr: "192.168.100.1".into(),
            remote_addr: "192.168.100.2".into(),
            mode: TunnelMode::EncryptedGre,
            key_ref: DEFAULT_KEY_REF.into(),
        };
        let text = String::from_utf8(cfg.encode()).unwrap();
        assert_eq!(
            text,
            r#"{"name":"gre-acino2","localAddr":"192.168.100.1","remoteAddr":"192.168.100.2","mode":"EncryptedGre","keyRef":"psk:admin-provisioned"}"#
        );
        let back: TunnelBody = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg.body());
        assert_eq!(tunnel_path(&cfg.name), "/tunnels/gre-acino2");
    }
}
