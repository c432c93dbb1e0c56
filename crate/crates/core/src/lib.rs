//! Simulator for a polarization-encoded QKD star network whose relay can be
//! switched between a trusted BB84 receiver and an untrusted Bell-state
//! measurement server.
//!
//! Modules build on each other bottom-up: [`optics`] holds the photon-level
//! physics, [`bb84`] and [`mdi`] the two key-exchange protocols, [`relay`] the
//! reconfigurable node, and [`netsim`] wires users, fibers and the relay into
//! reproducible sessions. [`verify`] runs the end-to-end checks.

pub mod bb84;
pub mod mdi;
pub mod netsim;
pub mod optics;
pub mod relay;
pub mod verify;
