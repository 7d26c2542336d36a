//! Command line interface and HTTP service of the risk-preference workbench.

pub mod cli;
pub mod service;
pub mod session;
