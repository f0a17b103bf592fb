//! Encryption-layer selection.
//!
//! The encryption flag is checked first, then latency, then bandwidth
//! against the configured IP tunnel capacity.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::intent::ConstraintSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EncryptionLayerChoice {
    Unencrypted,
    OpticalLayer,
    IpLayer,
}

impl EncryptionLayerChoice {
    pub const ALL: [EncryptionLayerChoice; 3] = [
        EncryptionLayerChoice::Unencrypted,
        EncryptionLayerChoice::OpticalLayer,
        EncryptionLayerChoice::IpLayer,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            EncryptionLayerChoice::Unencrypted => "Unencrypted",
            EncryptionLayerChoice::OpticalLayer => "OpticalLayer",
            EncryptionLayerChoice::IpLayer => "IpLayer",
        }
    }
}

impl fmt::Display for EncryptionLayerChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error)]
#[error("unknown encryption layer {0:?}")]
pub struct UnknownLayer(pub String);

impl FromStr for EncryptionLayerChoice {
    type Err = UnknownLayer;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| UnknownLayer(s.to_owned()))
    }
}

pub const DEFAULT_IP_BANDWIDTH_THRESHOLD_BPS: u64 = 1_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecisionConfig {
    ip_bandwidth_threshold_bps: u64,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("IP bandwidth threshold must be positive")]
pub struct ZeroThreshold;

impl DecisionConfig {
    pub fn new(ip_bandwidth_threshold_bps: u64) -> Result<Self, ZeroThreshold> {
        if ip_bandwidth_threshold_bps == 0 {
            return Err(ZeroThreshold);
        }
        Ok(DecisionConfig {
            ip_bandwidth_threshold_bps,
        })
    }

    pub fn ip_bandwidth_threshold_bps(&self) -> u64 {
        self.ip_bandwidth_threshold_bps
    }
}

impl Default for DecisionConfig {
    fn default() -> Self {
        DecisionConfig {
            ip_bandwidth_threshold_bps: DEFAULT_IP_BANDWIDTH_THRESHOLD_BPS,
        }
    }
}

/// Picks the layer that should carry encryption for a request.
///
/// Latency-sensitive traffic always goes optical. Otherwise the IP tunnel is
/// used as long as it can carry the demand; a demand equal to the threshold
/// still fits.
pub fn select_encryption_layer(
    constraints: &ConstraintSet,
    config: &DecisionConfig,
) -> EncryptionLayerChoice {
    if !constraints.encrypted {
        return EncryptionLayerChoice::Unencrypted;
    }
    if constraints.latency_sensitive {
        return EncryptionLayerChoice::OpticalLayer;
    }
    if constraints.bandwidth_bps > config.ip_bandwidth_threshold_bps {
        EncryptionLayerChoice::OpticalLayer
    } else {
        EncryptionLayerChoice::IpLayer
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const MBIT: u64 = 1_000_000;
    const GBIT: u64 = 1_000_000_000;

    fn gbit_threshold() -> DecisionConfig {
        DecisionConfig::new(GBIT).unwrap()
    }

    #[test]
    fn latency_sensitive_goes_optical() {
        let c = ConstraintSet::new(true, true, MBIT);
        assert_eq!(select_encryption_layer(&c, &gbit_threshold()), EncryptionLayerChoice::OpticalLayer);
    }

    #[test]
    fn small_tolerant_flow_goes_ip() {
        let c = ConstraintSet::new(true, false, MBIT);
        assert_eq!(select_encryption_layer(&c, &gbit_threshold()), EncryptionLayerChoice::IpLayer);
    }

    #[test]
    fn unencrypted_ignores_other_flags() {
        let c = ConstraintSet::new(false, true, 10 * GBIT);
        for t in [1, GBIT, u64::MAX] {
            let cfg = DecisionConfig::new(t).unwrap();
            assert_eq!(select_encryption_layer(&c, &cfg), EncryptionLayerChoice::Unencrypted);
        }
    }

    #[test]
    fn line_rate_goes_optical() {
        let c = ConstraintSet::new(true, false, 10 * GBIT);
        assert_eq!(select_encryption_layer(&c, &gbit_threshold()), EncryptionLayerChoice::OpticalLayer);
    }

    #[test]
    fn threshold_equality_stays_ip() {
        let c = ConstraintSet::new(true, false, GBIT);
        assert_eq!(select_encryption_layer(&c, &gbit_threshold()), EncryptionLayerChoice::IpLayer);
    }

    #[test]
    fn zero_threshold_rejected() {
        assert_eq!(DecisionConfig::new(0), Err(ZeroThreshold));
        assert_eq!(DecisionConfig::default().ip_bandwidth_threshold_bps(), GBIT);
    }

    #[test]
    fn parse_layer_names() {
        assert_eq!("iplayer".parse::<EncryptionLayerChoice>().unwrap(), EncryptionLayerChoice::IpLayer);
        assert!("quantum".parse::<EncryptionLayerChoice>().is_err());
    }

    proptest! {
        #[test]
        fn bandwidth_monotone(threshold in 1u64.., a in any::<u64>(), b in any::<u64>()) {
            let cfg = DecisionConfig::new(threshold).unwrap();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let at_lo = select_encryption_layer(&ConstraintSet::new(true, false, lo), &cfg);
            let at_hi = select_encryption_layer(&ConstraintSet::new(true, false, hi), &cfg);
            prop_assert!(!(at_lo == EncryptionLayerChoice::OpticalLayer && at_hi == EncryptionLayerChoice::IpLayer));
        }

        #[test]
        fn unencrypted_independent(latency in any::<bool>(), bw in any::<u64>(), threshold in 1u64..) {
            let cfg = DecisionConfig::new(threshold).unwrap();
            let c = ConstraintSet::new(false, latency, bw);
            prop_assert_eq!(select_encryption_layer(&c, &cfg), EncryptionLayerChoice::Unencrypted);
        }
    }
}
