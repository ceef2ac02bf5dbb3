#![allow(dead_code)]

pub mod oracles;
pub mod protocol_ref;
pub mod tamper;
