//! Southbound protocols: COP calls toward the optical controller and
//! encrypted tunnel configuration toward switch agents.

pub mod client;
pub mod cop;
pub mod tunnel;

pub use client::{AddressBook, CopAck, Emission, EmissionObserver, SbiClient, SbiError};
pub use cop::{decode_cop_call, encode_cop_call, CodecError, CopCall, CopEndpoint, OperStatus, TransportLayer};
pub use tunnel::{TunnelBody, TunnelConfig, TunnelMode};
