//! Deterministic discrete-event machinery: the event queue, the unit-disk
//! channel with overlap collisions and per-node radio-time accounting.

mod channel;
mod engine;
mod radio;

pub use channel::{neighbors_within, Channel, FrameKind, Reception, Transmission, TxId};
pub use engine::{Event, EventQueue};
pub use radio::{ModeDurations, RadioLog, RadioMode};
