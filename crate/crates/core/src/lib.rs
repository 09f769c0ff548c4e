//! Group data-sharing access control with a simulated trusted execution
//! environment.
//!
//! * [`ibbe`]: identity-based broadcast encryption whose encryption and
//!   membership updates run with the master secret inside the enclave.
//! * [`groups`]: partitioned group key management on top of [`ibbe`].
//! * [`hybrid`]: the per-member public-key wrapping baseline.
//! * [`asky`]: anonymous file sharing through symmetric key envelopes.
//! * [`enclave`]: the trusted boundary holding every long-term secret.
//! * [`store`]: object storage standing in for the cloud provider.
//! * [`trace`] and [`replay`]: membership traces and their replay.

pub mod algebra;
pub mod asky;
pub mod enclave;
pub mod error;
pub mod groups;
pub mod hybrid;
pub mod ibbe;
pub mod replay;
pub mod store;
pub mod trace;

mod wire;

pub use error::{Error, Result};
