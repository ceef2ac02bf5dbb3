//! Discrete-event simulation of an IoT / fog / blockchain gateway framework.
//!
//! Devices emit packets that climb a four-tier gateway hierarchy
//! (OGW, IoTG, FGW, BCG). Delivered packets become transactions in a
//! proof-of-work chain, which also anchors the tokens of a token-based
//! authorization protocol. Latency and energy follow closed-form linear
//! models over the counts and bytes the kernel accumulates.

pub mod authz;
pub mod ledger;
pub mod metrics;
pub mod model;
pub mod sim;
