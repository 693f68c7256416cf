//! File formats, key rings, prototype libraries, profiles, the `tcgx`
//! command line and the HTTP service, on top of the `tcgx-core` kernel.

pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod keyring;
pub mod library;
pub mod ops;
pub mod service;

pub use error::{Error, Result};

/// Current time as a kernel timestamp.
pub fn now() -> tcgx_core::Timestamp {
    tcgx_core::Timestamp(chrono::Utc::now().timestamp())
}
