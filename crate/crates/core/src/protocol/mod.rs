//! Sender and receiver state machines of RI-MAC, PW-MAC and EH-MAC.
//!
//! Handlers never touch the channel or the clock directly. They return
//! [`Action`]s that the network driver executes, which keeps each state
//! machine testable on its own.

mod node;
mod receiver;
mod sender;

use std::fmt;
use std::str::FromStr;

pub use node::Node;
pub use receiver::ReceiverState;
pub use sender::{SenderPhase, SenderState};

use crate::energy::EnergyParams;
use crate::scenario::NodeId;
use crate::schedule::{BeaconFields, ScheduleParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MacVariant {
    /// Same beacon schedule, but senders cannot predict it and listen until
    /// the beacon shows up.
    RiMac,
    /// Predictable beacons, fixed rate.
    PwMac,
    /// Predictable beacons plus load-adaptive sub-beacons.
    EhMac,
}

impl MacVariant {
    pub const ALL: [MacVariant; 3] = [MacVariant::RiMac, MacVariant::PwMac, MacVariant::EhMac];

    pub fn name(&self) -> &'static str {
        match self {
            MacVariant::RiMac => "ri-mac",
            MacVariant::PwMac => "pw-mac",
            MacVariant::EhMac => "eh-mac",
        }
    }

    pub fn predictive(&self) -> bool {
        !matches!(self, MacVariant::RiMac)
    }
}

impl fmt::Display for MacVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MacVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ri-mac" | "rimac" | "ri_mac" => Ok(MacVariant::RiMac),
            "pw-mac" | "pwmac" | "pw_mac" => Ok(MacVariant::PwMac),
            "eh-mac" | "ehmac" | "eh_mac" => Ok(MacVariant::EhMac),
            other => Err(format!("unknown MAC variant `{other}` (expected ri-mac, pw-mac or eh-mac)")),
        }
    }
}

/// Radio and protocol timing shared by every node.
#[derive(Debug, Clone, PartialEq)]
pub struct MacConfig {
    pub variant: MacVariant,
    pub schedule: ScheduleParams,
    pub energy: EnergyParams,
    /// kb/s, i.e. bits per millisecond.
    pub link_rate: f64,
    pub beacon_bits: u32,
    pub data_bits: u32,
    pub ack_bits: u32,
    /// Senders wake this long before a predicted beacon (ms).
    pub guard: f64,
    /// Extra slack after the expected end of an ack (ms).
    pub ack_guard: f64,
    /// Rate-window length (inter-arrival samples).
    pub window_capacity: usize,
    /// Forces EH-MAC receivers to a constant factor.
    pub pinned_factor: Option<f64>,
    /// EH-MAC receivers also count data frames that collide during their
    /// answer window as arrivals when estimating the load.
    pub count_collisions: bool,
    /// After the k-th consecutive failed attempt a sender lets a uniform
    /// number of beacons in `0..2^min(k, backoff_cap)` pass.
    pub backoff_cap: u32,
}

impl Default for MacConfig {
    fn default() -> Self {
        Self {
            variant: MacVariant::EhMac,
            schedule: ScheduleParams::default(),
            energy: EnergyParams::default(),
            link_rate: 250.0,
            beacon_bits: 60,
            data_bits: 128 * 8,
            ack_bits: 60,
            guard: 10.0,
            ack_guard: 1.0,
            window_capacity: 15,
            pinned_factor: None,
            count_collisions: true,
            backoff_cap: 6,
        }
    }
}

impl MacConfig {
    pub fn for_variant(variant: MacVariant) -> Self {
        Self { variant, ..Self::default() }
    }

    pub fn airtime(&self, bits: u32) -> f64 {
        bits as f64 / self.link_rate
    }

    pub fn beacon_airtime(&self) -> f64 {
        self.airtime(self.beacon_bits)
    }

    pub fn data_airtime(&self) -> f64 {
        self.airtime(self.data_bits)
    }

    pub fn ack_airtime(&self) -> f64 {
        self.airtime(self.ack_bits)
    }

    /// How long a receiver listens after its beacon ends.
    pub fn answer_window(&self) -> f64 {
        self.guard + self.data_airtime() + self.ack_airtime()
    }

    /// Whether receivers pick their factor from the measured load.
    pub fn adaptive(&self) -> bool {
        self.variant == MacVariant::EhMac && self.pinned_factor.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Packet {
    pub id: u64,
    pub origin: NodeId,
    /// Generation time (ms).
    pub created: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Frame {
    Beacon { from: NodeId, fields: BeaconFields, primary: bool },
    Data { from: NodeId, to: NodeId, packet: Packet },
    Ack { from: NodeId, to: NodeId, packet_id: u64 },
}

impl Frame {
    pub fn source(&self) -> NodeId {
        match *self {
            Frame::Beacon { from, .. } | Frame::Data { from, .. } | Frame::Ack { from, .. } => from,
        }
    }
}

/// Why a node keeps its radio in receive mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ListenReason {
    /// Receiver waiting for answers after its own beacon.
    Answer,
    /// Sender waiting for its next hop's beacon.
    AwaitBeacon,
    /// Sender waiting for the ack of a data frame.
    AwaitAck,
}

impl ListenReason {
    pub(crate) fn bit(self) -> u8 {
        match self {
            ListenReason::Answer => 1,
            ListenReason::AwaitBeacon => 2,
            ListenReason::AwaitAck => 4,
        }
    }
}

/// Node-local timers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Timer {
    BeaconDue { primary: bool },
    AnswerEnd(u64),
    Wake(u64),
    GiveUp(u64),
    AckTimeout(u64),
}

/// Radio actions requested by a handler, executed in order by the driver.
#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    Transmit(Frame),
    Listen(ListenReason),
    Unlisten(ListenReason),
    Schedule(f64, Timer),
    /// A packet reached the sink.
    Deliver(Packet),
    /// A beacon could not be sent because the radio was busy transmitting.
    BeaconSkipped,
}

/// What a handler may know about the world when it runs.
#[derive(Debug, Clone, Copy)]
pub struct Ctx<'a> {
    pub now: f64,
    pub cfg: &'a MacConfig,
    /// The node's radio is currently transmitting.
    pub transmitting: bool,
}
