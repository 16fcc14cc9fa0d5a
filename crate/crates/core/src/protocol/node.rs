use std::collections::HashSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::scenario::NodeId;
use crate::schedule::ScheduleState;

use super::{Action, Ctx, Frame, ListenReason, Packet, ReceiverState, SenderState, Timer};

/// One simulated node: a receiver that beacons and a sender that forwards.
#[derive(Debug, Clone)]
pub struct Node {
    pub id: NodeId,
    pub is_sink: bool,
    pub receiver: ReceiverState,
    pub sender: SenderState,
    rng: ChaCha8Rng,
    seen: HashSet<u64>,
    listen: u8,
}

impl Node {
    pub fn new(
        id: NodeId,
        is_sink: bool,
        next_hop: Option<NodeId>,
        schedule: ScheduleState,
        window_capacity: usize,
        rng_seed: u64,
    ) -> Self {
        Self {
            id,
            is_sink,
            receiver: ReceiverState::new(schedule, window_capacity),
            sender: SenderState::new(if is_sink { None } else { next_hop }),
            rng: ChaCha8Rng::seed_from_u64(rng_seed),
            seen: HashSet::new(),
            listen: 0,
        }
    }

    /// Initial timer: the first primary beacon.
    pub fn start(&self, out: &mut Vec<Action>) {
        out.push(Action::Schedule(self.receiver.first_beacon(), Timer::BeaconDue { primary: true }));
    }

    pub fn listening(&self) -> bool {
        self.listen != 0
    }

    pub fn is_listening_for(&self, reason: ListenReason) -> bool {
        self.listen & reason.bit() != 0
    }

    pub fn set_listen(&mut self, reason: ListenReason, on: bool) {
        if on {
            self.listen |= reason.bit();
        } else {
            self.listen &= !reason.bit();
        }
    }

    pub fn on_timer(&mut self, timer: Timer, ctx: &Ctx<'_>, out: &mut Vec<Action>) {
        match timer {
            Timer::BeaconDue { primary } => self.receiver.on_beacon_due(self.id, primary, ctx, out),
            Timer::AnswerEnd(t) => self.receiver.on_answer_end(t, ctx, out),
            Timer::Wake(t) => self.sender.on_wake(t, ctx, out),
            Timer::GiveUp(t) => self.sender.on_give_up(t, ctx, out),
            Timer::AckTimeout(t) => self.sender.on_ack_timeout(t, &mut self.rng, ctx, out),
        }
    }

    /// Handles a frame this node decoded.
    pub fn on_frame(&mut self, frame: &Frame, ctx: &Ctx<'_>, out: &mut Vec<Action>) {
        match *frame {
            Frame::Beacon { from, ref fields, .. } => {
                if !self.is_sink {
                    self.sender.on_beacon(self.id, from, fields, ctx, out);
                }
            }
            Frame::Data { from, to, packet } if to == self.id => {
                if self.receiver.on_data(self.id, from, &packet, ctx, out) && self.seen.insert(packet.id) {
                    if self.is_sink {
                        out.push(Action::Deliver(packet));
                    } else {
                        self.sender.enqueue(packet, ctx, out);
                    }
                }
            }
            Frame::Ack { from, to, packet_id } if to == self.id => {
                self.sender.on_ack(from, packet_id, ctx, out);
            }
            _ => {}
        }
    }

    /// A locally generated packet with a valid route.
    pub fn generate(&mut self, packet: Packet, ctx: &Ctx<'_>, out: &mut Vec<Action>) {
        self.seen.insert(packet.id);
        self.sender.enqueue(packet, ctx, out);
    }
}
