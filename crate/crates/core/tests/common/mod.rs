//! Support shared by the integration tests and the acceptance suite.
#![allow(dead_code)]

pub mod fixtures;
pub mod gen;
pub mod oracle;
pub mod sim;
