pub mod channel;
pub mod cli;
pub mod error;
pub mod interference;
pub mod queueing;
pub mod report;
pub mod scenario;
pub mod simulator;
pub mod sweep;
pub mod specfun;
pub mod throughput;

pub use error::{Error, Result};
