use crate::energy::optimal_factor;
use crate::scenario::NodeId;
use crate::schedule::{announce_factor, estimate_lambda, RateWindow, ScheduleState};

use super::{Action, Ctx, Frame, ListenReason, MacVariant, Packet, Timer};

/// Beacon side of a node.
#[derive(Debug, Clone)]
pub struct ReceiverState {
    pub schedule: ScheduleState,
    pub window: RateWindow,
    started: bool,
    last_rx: Option<f64>,
    answer: Option<u64>,
    collided: u32,
    token: u64,
}

impl ReceiverState {
    /// `schedule` describes the cycle starting at the node's first primary beacon.
    pub fn new(schedule: ScheduleState, window_capacity: usize) -> Self {
        Self {
            schedule,
            window: RateWindow::new(window_capacity),
            started: false,
            last_rx: None,
            answer: None,
            collided: 0,
            token: 0,
        }
    }

    pub fn first_beacon(&self) -> f64 {
        self.schedule.last_primary
    }

    pub fn factor(&self) -> f64 {
        self.schedule.factor
    }

    pub fn answering(&self) -> bool {
        self.answer.is_some()
    }

    /// Factor for the cycle starting now. EH-MAC announces the optimum for
    /// the measured load rounded to the one-byte field; the other variants
    /// stay at 1.
    fn select_factor(&self, ctx: &Ctx<'_>) -> f64 {
        let cfg = ctx.cfg;
        let f_max = cfg.schedule.max_factor();
        if cfg.variant != MacVariant::EhMac {
            return 1.0;
        }
        if let Some(f) = cfg.pinned_factor {
            return f.clamp(1.0, f_max);
        }
        let lambda = estimate_lambda(&self.window, cfg.schedule.mean_cycle);
        let f = optimal_factor(lambda, &cfg.energy, f_max).value();
        (announce_factor(f) as f64).min(f_max)
    }

    pub fn on_beacon_due(&mut self, id: NodeId, primary: bool, ctx: &Ctx<'_>, out: &mut Vec<Action>) {
        if primary {
            if self.started {
                self.schedule = self.schedule.advance();
            }
            self.started = true;
            self.schedule.factor = self.select_factor(ctx);
            for t in self.schedule.realized_sub_beacons() {
                out.push(Action::Schedule(t, Timer::BeaconDue { primary: false }));
            }
            out.push(Action::Schedule(self.schedule.next_primary, Timer::BeaconDue { primary: true }));
        }
        if ctx.transmitting {
            out.push(Action::BeaconSkipped);
            return;
        }
        out.push(Action::Transmit(Frame::Beacon { from: id, fields: self.schedule.fields(), primary }));
        self.token += 1;
        self.answer = Some(self.token);
        out.push(Action::Listen(ListenReason::Answer));
        let close = ctx.now + ctx.cfg.beacon_airtime() + ctx.cfg.answer_window();
        out.push(Action::Schedule(close, Timer::AnswerEnd(self.token)));
    }

    pub fn on_answer_end(&mut self, token: u64, ctx: &Ctx<'_>, out: &mut Vec<Action>) {
        if self.answer == Some(token) {
            self.answer = None;
            self.record_arrivals(ctx.now, 0);
            out.push(Action::Unlisten(ListenReason::Answer));
        }
    }

    /// A data frame was destroyed by a collision while the answer window was
    /// open. Only EH-MAC with collision counting takes note.
    pub fn on_collided_data(&mut self, ctx: &Ctx<'_>) {
        if self.answer.is_some() && ctx.cfg.variant == MacVariant::EhMac && ctx.cfg.count_collisions {
            self.collided += 1;
        }
    }

    /// Adds `decoded` plus the pending collided frames as arrivals at `now`,
    /// spreading them evenly over the time since the previous arrival.
    fn record_arrivals(&mut self, now: f64, decoded: u32) {
        let k = decoded + std::mem::take(&mut self.collided);
        if k == 0 {
            return;
        }
        if let Some(last) = self.last_rx {
            let gap = (now - last) / k as f64;
            for _ in 0..k {
                self.window.push(gap);
            }
        }
        self.last_rx = Some(now);
    }

    /// A data frame for this node was decoded. Returns whether it was
    /// accepted (and acked): only one frame per beacon is.
    pub fn on_data(&mut self, id: NodeId, from: NodeId, packet: &Packet, ctx: &Ctx<'_>, out: &mut Vec<Action>) -> bool {
        if self.answer.is_none() {
            return false;
        }
        self.record_arrivals(ctx.now, 1);
        self.answer = None;
        out.push(Action::Transmit(Frame::Ack { from: id, to: from, packet_id: packet.id }));
        out.push(Action::Unlisten(ListenReason::Answer));
        true
    }
}
