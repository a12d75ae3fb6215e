//! Capacity regions of a two-user multiple access channel aided by
//! intelligent reflecting surfaces (IRS), comparing a distributed deployment
//! (one IRS next to each user) with a centralized one (a single IRS next to
//! the access point).

pub mod channel;
pub mod distributed;
pub mod error;
pub mod export;
pub mod geometry;
pub mod oracle;
pub mod profile;
pub mod sdp;
pub mod sdr;

pub use error::{Error, Result};
