use std::collections::{HashMap, VecDeque};

use rand::Rng;

use crate::scenario::NodeId;
use crate::schedule::{BeaconFields, NeighborSchedule};

use super::{Action, Ctx, Frame, ListenReason, Packet, Timer};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SenderPhase {
    Idle,
    /// Radio off until shortly before the predicted beacon at `target`.
    Sleeping { target: f64, token: u64 },
    /// Listening for the next hop's beacon; `deadline` is `None` when the
    /// sender has no prediction and listens until a beacon shows up.
    Waiting { token: u64, deadline: Option<f64> },
    AwaitAck { token: u64 },
}

/// Forwarding side of a node: one FIFO towards the fixed next hop.
#[derive(Debug, Clone)]
pub struct SenderState {
    pub queue: VecDeque<Packet>,
    pub next_hop: Option<NodeId>,
    pub phase: SenderPhase,
    /// Retransmissions so far.
    pub retries: u64,
    /// Consecutive failed attempts of the head packet.
    pub failures: u32,
    cache: HashMap<NodeId, NeighborSchedule>,
    /// Beacons of the next hop still to let pass before the next attempt.
    skip: u32,
    token: u64,
}

impl SenderState {
    pub fn new(next_hop: Option<NodeId>) -> Self {
        Self {
            queue: VecDeque::new(),
            next_hop,
            phase: SenderPhase::Idle,
            retries: 0,
            failures: 0,
            cache: HashMap::new(),
            skip: 0,
            token: 0,
        }
    }

    pub fn knows(&self, neighbor: NodeId) -> bool {
        self.cache.contains_key(&neighbor)
    }

    pub fn enqueue(&mut self, packet: Packet, ctx: &Ctx<'_>, out: &mut Vec<Action>) {
        self.queue.push_back(packet);
        if self.phase == SenderPhase::Idle {
            self.arm(ctx, out);
        }
    }

    fn next_token(&mut self) -> u64 {
        self.token += 1;
        self.token
    }

    /// Plans the rendezvous for the packet at the head of the queue.
    fn arm(&mut self, ctx: &Ctx<'_>, out: &mut Vec<Action>) {
        let Some(hop) = self.next_hop else {
            return;
        };
        if self.queue.is_empty() {
            self.phase = SenderPhase::Idle;
            return;
        }
        let token = self.next_token();
        let guard = ctx.cfg.guard;
        if ctx.cfg.variant.predictive() {
            if let Some(schedule) = self.cache.get_mut(&hop) {
                let target = schedule
                    .beacons_after(ctx.now)
                    .nth(self.skip as usize)
                    .expect("beacon schedules are unbounded");
                self.skip = 0;
                let wake = target - guard;
                if wake <= ctx.now {
                    self.phase = SenderPhase::Waiting { token, deadline: Some(target + guard) };
                    out.push(Action::Listen(ListenReason::AwaitBeacon));
                    out.push(Action::Schedule(target + guard, Timer::GiveUp(token)));
                } else {
                    self.phase = SenderPhase::Sleeping { target, token };
                    out.push(Action::Schedule(wake, Timer::Wake(token)));
                }
                return;
            }
        }
        self.phase = SenderPhase::Waiting { token, deadline: None };
        out.push(Action::Listen(ListenReason::AwaitBeacon));
    }

    pub fn on_wake(&mut self, token: u64, ctx: &Ctx<'_>, out: &mut Vec<Action>) {
        if let SenderPhase::Sleeping { target, token: t } = self.phase {
            if t == token {
                let deadline = target + ctx.cfg.guard;
                self.phase = SenderPhase::Waiting { token, deadline: Some(deadline) };
                out.push(Action::Listen(ListenReason::AwaitBeacon));
                out.push(Action::Schedule(deadline, Timer::GiveUp(token)));
            }
        }
    }

    /// The predicted beacon never came: aim at the next one.
    pub fn on_give_up(&mut self, token: u64, ctx: &Ctx<'_>, out: &mut Vec<Action>) {
        if matches!(self.phase, SenderPhase::Waiting { token: t, .. } if t == token) {
            out.push(Action::Unlisten(ListenReason::AwaitBeacon));
            self.phase = SenderPhase::Idle;
            self.arm(ctx, out);
        }
    }

    pub fn on_beacon(&mut self, id: NodeId, from: NodeId, fields: &BeaconFields, ctx: &Ctx<'_>, out: &mut Vec<Action>) {
        if ctx.cfg.variant.predictive() {
            self.cache.insert(from, NeighborSchedule::new(fields, ctx.cfg.schedule));
        }
        if self.next_hop != Some(from) {
            return;
        }
        let waiting = match self.phase {
            SenderPhase::Waiting { .. } => true,
            // Overheard while awake for another reason: good enough, unless
            // backing off.
            SenderPhase::Sleeping { .. } if ctx.cfg.variant.predictive() && self.failures == 0 => false,
            _ => return,
        };
        if !ctx.cfg.variant.predictive() && self.skip > 0 {
            self.skip -= 1;
            return;
        }
        let Some(&packet) = self.queue.front() else {
            return;
        };
        out.push(Action::Transmit(Frame::Data { from: id, to: from, packet }));
        if waiting {
            out.push(Action::Unlisten(ListenReason::AwaitBeacon));
        }
        let token = self.next_token();
        self.phase = SenderPhase::AwaitAck { token };
        out.push(Action::Listen(ListenReason::AwaitAck));
        let cfg = ctx.cfg;
        let timeout = ctx.now + cfg.data_airtime() + cfg.ack_airtime() + cfg.ack_guard;
        out.push(Action::Schedule(timeout, Timer::AckTimeout(token)));
    }

    /// Returns the packet the next hop just acknowledged.
    pub fn on_ack(&mut self, from: NodeId, packet_id: u64, ctx: &Ctx<'_>, out: &mut Vec<Action>) -> Option<Packet> {
        if !matches!(self.phase, SenderPhase::AwaitAck { .. }) || self.next_hop != Some(from) {
            return None;
        }
        if self.queue.front().map(|p| p.id) != Some(packet_id) {
            return None;
        }
        out.push(Action::Unlisten(ListenReason::AwaitAck));
        let done = self.queue.pop_front();
        self.phase = SenderPhase::Idle;
        self.skip = 0;
        self.failures = 0;
        self.arm(ctx, out);
        done
    }

    /// No ack: retry the same packet, skipping a random number of upcoming
    /// beacons of the next hop. The range starts at {0, 1} and doubles with
    /// every consecutive failure.
    pub fn on_ack_timeout<R: Rng + ?Sized>(&mut self, token: u64, rng: &mut R, ctx: &Ctx<'_>, out: &mut Vec<Action>) {
        if self.phase != (SenderPhase::AwaitAck { token }) {
            return;
        }
        out.push(Action::Unlisten(ListenReason::AwaitAck));
        self.retries += 1;
        self.failures += 1;
        let window = 1u32 << self.failures.min(ctx.cfg.backoff_cap.clamp(1, 16));
        self.skip = rng.random_range(0..window);
        self.phase = SenderPhase::Idle;
        self.arm(ctx, out);
    }
}
