//! Simulation and analysis of receiver-initiated MAC protocols with
//! pseudo-random beacon schedules and adaptive beacon rates.

pub mod energy;
pub mod experiment;
pub mod network;
pub mod prng;
pub mod protocol;
pub mod scenario;
pub mod schedule;
pub mod sim;
