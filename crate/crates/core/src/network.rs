//! Event-driven execution of a whole network: nodes, channel and radios.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::prng::LcgState;
use crate::protocol::{Action, Ctx, Frame, MacConfig, Node, Packet, Timer};
use crate::scenario::{NodeId, Topology};
use crate::schedule::ScheduleState;
use crate::sim::{Channel, Event, EventQueue, FrameKind, ModeDurations, RadioLog, RadioMode, Reception, Transmission, TxId};

#[derive(Debug, Clone, Copy, PartialEq)]
enum WorldEvent {
    Timer(NodeId, Timer),
    TxEnd(TxId),
    Arrival(NodeId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PacketStatus {
    Queued,
    Delivered,
    Unroutable,
}

/// Seeds of the independent random streams used inside a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetworkSeeds {
    /// Beacon-schedule seeds and first-beacon phases.
    pub schedule: u64,
    /// Node-local protocol randomness (retry skips).
    pub protocol: u64,
}

/// Raw outcome of one run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NetworkReport {
    pub duration_ms: f64,
    pub generated: u64,
    pub delivered: u64,
    pub unroutable: u64,
    pub queued_at_end: u64,
    /// Data frames destroyed by an overlap at their listening destination.
    pub collisions: u64,
    pub retries: u64,
    pub beacons_sent: u64,
    pub beacons_skipped: u64,
    pub data_sent: u64,
    /// Sum of end-to-end delays of delivered packets (ms).
    pub delay_sum_ms: f64,
    /// Mean factor announced in primary beacons.
    pub mean_factor: f64,
    /// Data frames not sent right on a beacon from their destination.
    pub rendezvous_violations: u64,
    pub radio: Vec<ModeDurations>,
    /// `(origin, packet id)` in the order the sink received them.
    pub deliveries: Vec<(NodeId, u64)>,
    pub events: u64,
}

impl NetworkReport {
    pub fn mean_duty_cycle(&self) -> f64 {
        if self.radio.is_empty() {
            return 0.0;
        }
        self.radio.iter().map(|d| d.duty_cycle()).sum::<f64>() / self.radio.len() as f64
    }
}

pub struct Network<'a> {
    cfg: MacConfig,
    queue: EventQueue<WorldEvent>,
    channel: Channel<Frame>,
    radio: RadioLog,
    nodes: Vec<Node>,
    tx_busy: Vec<bool>,
    routable: Vec<bool>,
    packets: Vec<PacketStatus>,
    last_beacon_heard: Vec<Option<(NodeId, f64)>>,
    report: NetworkReport,
    factor_sum: f64,
    primaries: u64,
    trace: Option<Box<dyn Write + 'a>>,
}

impl<'a> Network<'a> {
    /// Builds the network. `traffic[i]` holds node `i`'s packet generation
    /// times in milliseconds.
    pub fn new(topo: &Topology, cfg: MacConfig, seeds: NetworkSeeds, traffic: &[Vec<f64>]) -> Self {
        let n = topo.len();
        let hops = topo.next_hops();
        let mut sched_rng = ChaCha8Rng::seed_from_u64(seeds.schedule);
        let mut proto_rng = ChaCha8Rng::seed_from_u64(seeds.protocol);
        let nodes: Vec<Node> = (0..n)
            .map(|i| {
                let seed = LcgState::primary(sched_rng.random_range(1..LcgState::PRIMARY_MODULUS));
                let first = sched_rng.random::<f64>() * cfg.schedule.mean_cycle;
                let schedule = ScheduleState::new(seed, first, 1.0, cfg.schedule);
                Node::new(i, i == topo.sink, hops[i], schedule, cfg.window_capacity, proto_rng.random())
            })
            .collect();
        let mut queue = EventQueue::new();
        let mut start = Vec::new();
        for node in &nodes {
            node.start(&mut start);
            for a in start.drain(..) {
                if let Action::Schedule(t, timer) = a {
                    queue.schedule(t, WorldEvent::Timer(node.id, timer));
                }
            }
        }
        for (i, times) in traffic.iter().enumerate().take(n) {
            for &t in times {
                queue.schedule(t, WorldEvent::Arrival(i));
            }
        }
        Self {
            queue,
            channel: Channel::new(&topo.nodes, topo.range),
            radio: RadioLog::new(n, 0.0),
            nodes,
            tx_busy: vec![false; n],
            routable: topo.routable(),
            packets: Vec::new(),
            last_beacon_heard: vec![None; n],
            report: NetworkReport { mean_factor: 1.0, ..Default::default() },
            factor_sum: 0.0,
            primaries: 0,
            trace: None,
            cfg,
        }
    }

    /// Dumps one tab-separated line per dispatched event.
    pub fn with_trace(mut self, out: impl Write + 'a) -> Self {
        self.trace = Some(Box::new(out));
        self
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn now(&self) -> f64 {
        self.queue.now()
    }

    /// Runs every event up to `end_ms` and returns the report.
    pub fn run(mut self, end_ms: f64) -> std::io::Result<NetworkReport> {
        self.advance(end_ms)?;
        Ok(self.report(end_ms))
    }

    /// Dispatches every event with time `<= end_ms`.
    pub fn advance(&mut self, end_ms: f64) -> std::io::Result<()> {
        while self.queue.peek_time().is_some_and(|t| t <= end_ms) {
            let ev = self.queue.pop().expect("peeked");
            self.trace_event(&ev)?;
            self.report.events += 1;
            self.dispatch(ev);
        }
        self.queue.run_until(end_ms, |_, _| {});
        if let Some(t) = self.trace.as_mut() {
            t.flush()?;
        }
        Ok(())
    }

    /// Metrics as of `end_ms`, which must not precede the last event.
    pub fn report(&self, end_ms: f64) -> NetworkReport {
        let mut r = self.report.clone();
        r.duration_ms = end_ms;
        r.queued_at_end = self.packets.iter().filter(|&&s| s == PacketStatus::Queued).count() as u64;
        r.retries = self.nodes.iter().map(|n| n.sender.retries).sum();
        r.radio = (0..self.nodes.len()).map(|i| self.radio.durations(i, end_ms)).collect();
        if self.primaries > 0 {
            r.mean_factor = self.factor_sum / self.primaries as f64;
        }
        r
    }

    fn trace_event(&mut self, ev: &Event<WorldEvent>) -> std::io::Result<()> {
        let Some(out) = self.trace.as_mut() else {
            return Ok(());
        };
        let (kind, node, detail) = match ev.payload {
            WorldEvent::Timer(n, t) => {
                let (k, d) = match t {
                    Timer::BeaconDue { primary } => ("beacon_due", if primary { "primary".to_string() } else { "sub".to_string() }),
                    Timer::AnswerEnd(x) => ("answer_end", x.to_string()),
                    Timer::Wake(x) => ("wake", x.to_string()),
                    Timer::GiveUp(x) => ("give_up", x.to_string()),
                    Timer::AckTimeout(x) => ("ack_timeout", x.to_string()),
                };
                (k, n, d)
            }
            WorldEvent::TxEnd(id) => {
                let (tx, frame) = self.channel.frame(id).expect("transmission is on the air");
                let detail = match *frame {
                    Frame::Beacon { primary, ref fields, .. } => {
                        format!("{id} beacon {} f={}", if primary { "primary" } else { "sub" }, fields.factor)
                    }
                    Frame::Data { to, packet, .. } => format!("{id} data to={to} packet={}", packet.id),
                    Frame::Ack { to, packet_id, .. } => format!("{id} ack to={to} packet={packet_id}"),
                };
                ("tx_end", tx.source, detail)
            }
            WorldEvent::Arrival(n) => ("arrival", n, String::new()),
        };
        writeln!(out, "{:.6}\t{}\t{}\t{}\t{}", ev.time, ev.seq, kind, node, detail)
    }

    fn dispatch(&mut self, ev: Event<WorldEvent>) {
        let mut out = Vec::new();
        match ev.payload {
            WorldEvent::Timer(node, timer) => {
                let ctx = Ctx { now: self.queue.now(), cfg: &self.cfg, transmitting: self.tx_busy[node] };
                self.nodes[node].on_timer(timer, &ctx, &mut out);
                self.apply(node, out);
            }
            WorldEvent::Arrival(node) => {
                let id = self.packets.len() as u64;
                self.report.generated += 1;
                if !self.routable[node] {
                    self.report.unroutable += 1;
                    self.packets.push(PacketStatus::Unroutable);
                    return;
                }
                self.packets.push(PacketStatus::Queued);
                let packet = Packet { id, origin: node, created: self.queue.now() };
                let ctx = Ctx { now: self.queue.now(), cfg: &self.cfg, transmitting: self.tx_busy[node] };
                self.nodes[node].generate(packet, &ctx, &mut out);
                self.apply(node, out);
            }
            WorldEvent::TxEnd(id) => self.end_transmission(id),
        }
    }

    fn end_transmission(&mut self, id: TxId) {
        let (tx, frame, receptions) = self.channel.finish(id).expect("transmission is on the air");
        self.tx_busy[tx.source] = false;
        self.refresh(tx.source);
        for (j, outcome) in receptions {
            self.refresh(j);
            match outcome {
                Reception::Decoded => {
                    if let Frame::Beacon { from, .. } = frame {
                        self.last_beacon_heard[j] = Some((from, self.queue.now()));
                    }
                    let mut out = Vec::new();
                    let ctx = Ctx { now: self.queue.now(), cfg: &self.cfg, transmitting: self.tx_busy[j] };
                    self.nodes[j].on_frame(&frame, &ctx, &mut out);
                    self.apply(j, out);
                }
                Reception::Collided => {
                    if let Frame::Data { to, .. } = frame {
                        if to == j {
                            self.report.collisions += 1;
                        }
                        let ctx = Ctx { now: self.queue.now(), cfg: &self.cfg, transmitting: self.tx_busy[j] };
                        self.nodes[j].receiver.on_collided_data(&ctx);
                    }
                }
                Reception::Missed => {}
            }
        }
    }

    fn apply(&mut self, node: NodeId, actions: Vec<Action>) {
        for a in actions {
            match a {
                Action::Transmit(frame) => self.transmit(node, frame),
                Action::Listen(r) => {
                    self.nodes[node].set_listen(r, true);
                    self.refresh(node);
                }
                Action::Unlisten(r) => {
                    self.nodes[node].set_listen(r, false);
                    self.refresh(node);
                }
                Action::Schedule(t, timer) => {
                    self.queue.schedule(t, WorldEvent::Timer(node, timer));
                }
                Action::Deliver(p) => {
                    let now = self.queue.now();
                    self.report.delivered += 1;
                    self.report.delay_sum_ms += now - p.created;
                    self.report.deliveries.push((p.origin, p.id));
                    self.packets[p.id as usize] = PacketStatus::Delivered;
                }
                Action::BeaconSkipped => self.report.beacons_skipped += 1,
            }
        }
    }

    fn transmit(&mut self, node: NodeId, frame: Frame) {
        assert!(!self.tx_busy[node], "node {node} asked to transmit while transmitting");
        let now = self.queue.now();
        let (kind, bits) = match frame {
            Frame::Beacon { primary, ref fields, .. } => {
                self.report.beacons_sent += 1;
                if primary {
                    self.primaries += 1;
                    self.factor_sum += fields.factor;
                }
                (FrameKind::Beacon, self.cfg.beacon_bits)
            }
            Frame::Data { to, .. } => {
                self.report.data_sent += 1;
                if self.last_beacon_heard[node] != Some((to, now)) {
                    self.report.rendezvous_violations += 1;
                }
                (FrameKind::Data, self.cfg.data_bits)
            }
            Frame::Ack { .. } => (FrameKind::Ack, self.cfg.ack_bits),
        };
        let tx = Transmission::new(node, now, kind, bits, self.cfg.link_rate);
        self.tx_busy[node] = true;
        let (nodes, busy) = (&self.nodes, &self.tx_busy);
        let id = self.channel.start(tx, frame, |j| nodes[j].listening() && !busy[j]);
        self.refresh(node);
        for k in 0..self.channel.neighbors(node).len() {
            let j = self.channel.neighbors(node)[k];
            self.refresh(j);
        }
        self.queue.schedule(tx.end, WorldEvent::TxEnd(id));
    }

    fn refresh(&mut self, j: NodeId) {
        let mode = if self.tx_busy[j] {
            RadioMode::Tx
        } else if self.nodes[j].listening() {
            if self.channel.carrier(j) {
                RadioMode::Rx
            } else {
                RadioMode::Listen
            }
        } else {
            RadioMode::Sleep
        };
        if mode != self.radio.mode(j) {
            if matches!(mode, RadioMode::Sleep | RadioMode::Tx) {
                self.channel.deafen(j);
            }
            self.radio.set_radio(j, mode, self.queue.now());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::MacVariant;
    use crate::scenario::{Field, Position};

    fn topo(points: &[(f64, f64)]) -> Topology {
        Topology {
            field: Field::default(),
            nodes: points.iter().map(|&(x, y)| Position { x, y }).collect(),
            sink: 0,
            range: 35.0,
        }
    }

    fn cfg(variant: MacVariant) -> MacConfig {
        MacConfig::for_variant(variant)
    }

    const SEEDS: NetworkSeeds = NetworkSeeds { schedule: 11, protocol: 12 };

    struct Line {
        time: f64,
        kind: String,
        node: usize,
        detail: String,
    }

    fn traced(topo: &Topology, cfg: MacConfig, traffic: &[Vec<f64>], end: f64) -> (NetworkReport, Vec<Line>, Vec<u8>) {
        let mut buf = Vec::new();
        let report = Network::new(topo, cfg, SEEDS, traffic).with_trace(&mut buf).run(end).unwrap();
        let lines = String::from_utf8(buf.clone())
            .unwrap()
            .lines()
            .map(|l| {
                let f: Vec<&str> = l.split('\t').collect();
                Line { time: f[0].parse().unwrap(), kind: f[2].into(), node: f[3].parse().unwrap(), detail: f[4].into() }
            })
            .collect();
        (report, lines, buf)
    }

    #[test]
    fn unanswered_beacons_cost_beacon_plus_window() {
        let c = cfg(MacVariant::PwMac);
        let per = c.beacon_airtime() + c.answer_window();
        let end = 20_000.0;
        let t = topo(&[(50.0, 50.0)]);
        let mut net = Network::new(&t, c, SEEDS, &[vec![]]);
        net.advance(end).unwrap();
        let r = net.report(end);
        // The schedule is a pure function of the node's state: replay it.
        let mut expected = 0.0;
        let mut s = Network::new(&t, cfg(MacVariant::PwMac), SEEDS, &[vec![]]).nodes()[0].receiver.schedule.clone();
        let mut b = s.last_primary;
        while b < end {
            expected += (end - b).min(per);
            s = s.advance();
            b = s.last_primary;
        }
        assert!(r.beacons_sent > 10);
        assert!((r.radio[0].awake() - expected).abs() < 1e-6, "{} vs {expected}", r.radio[0].awake());
        assert!((r.radio[0].tx - r.beacons_sent as f64 * 0.24).abs() < 1e-9);
    }

    #[test]
    fn single_sender_is_acked_and_window_grows() {
        let t = topo(&[(50.0, 50.0), (70.0, 50.0)]);
        let traffic = vec![vec![], vec![5_000.0, 9_000.0, 15_000.0]];
        let mut net = Network::new(&t, cfg(MacVariant::EhMac), SEEDS, &traffic);
        net.advance(30_000.0).unwrap();
        let r = net.report(30_000.0);
        assert_eq!((r.generated, r.delivered, r.collisions, r.retries), (3, 3, 0, 0));
        assert_eq!(r.rendezvous_violations, 0);
        assert_eq!(r.deliveries, vec![(1, 0), (1, 1), (1, 2)]);
        assert_eq!(net.nodes()[0].receiver.window.len(), 2);
        assert!(net.nodes()[1].sender.queue.is_empty());
    }

    #[test]
    fn two_hidden_senders_collide_then_separate() {
        // Both senders reach the sink but not each other.
        let t = topo(&[(50.0, 50.0), (20.0, 50.0), (80.0, 50.0)]);
        let traffic = vec![vec![], vec![0.0], vec![0.0]];
        let mut net = Network::new(&t, cfg(MacVariant::PwMac), SEEDS, &traffic);
        let first = net.nodes()[0].receiver.first_beacon();
        // Just past the first beacon's answer window.
        net.advance(first + 20.0).unwrap();
        let r = net.report(first + 20.0);
        assert_eq!((r.collisions, r.delivered), (2, 0));
        assert_eq!(net.nodes()[0].receiver.window.len(), 0);
        net.advance(60_000.0).unwrap();
        let r = net.report(60_000.0);
        assert_eq!(r.delivered, 2);
        assert!(r.retries >= 2);
    }

    #[test]
    fn eh_receiver_counts_collided_answers() {
        let t = topo(&[(50.0, 50.0), (20.0, 50.0), (80.0, 50.0)]);
        let traffic = vec![vec![], vec![0.0], vec![0.0]];
        let mut on = cfg(MacVariant::EhMac);
        let mut net = Network::new(&t, on.clone(), SEEDS, &traffic);
        net.advance(60_000.0).unwrap();
        let counted = net.nodes()[0].receiver.window.len();
        on.count_collisions = false;
        let mut net = Network::new(&t, on, SEEDS, &traffic);
        net.advance(60_000.0).unwrap();
        // Two successes give a single sample; collisions add more.
        assert_eq!(net.nodes()[0].receiver.window.len(), 1);
        assert!(counted > 1);
    }

    #[test]
    fn predictive_sender_wakes_one_guard_early() {
        let t = topo(&[(50.0, 50.0), (70.0, 50.0)]);
        let traffic = vec![vec![], vec![1_000.0, 7_777.0]];
        let (r, lines, _) = traced(&t, cfg(MacVariant::PwMac), &traffic, 20_000.0);
        assert_eq!(r.delivered, 2);
        let wakes: Vec<f64> = lines.iter().filter(|l| l.kind == "wake" && l.node == 1).map(|l| l.time).collect();
        assert_eq!(wakes.len(), 1, "first packet is a cold start, second one sleeps");
        let beacon = lines
            .iter()
            .find(|l| l.kind == "beacon_due" && l.node == 0 && l.time > wakes[0])
            .expect("a beacon after the wake-up");
        assert!((beacon.time - wakes[0] - 10.0).abs() < 1e-9);
        assert!(lines.iter().any(|l| l.kind == "tx_end" && l.node == 1 && l.detail.contains("data to=0 packet=1")));
    }

    fn random_world(n: usize, seed: u64) -> (Topology, Vec<Vec<f64>>) {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = crate::scenario::place_nodes(n as f64, Field::default(), 35.0, &mut rng).unwrap();
        t.sink = 0;
        let traffic = crate::scenario::gen_traffic(t.len(), 0, 0.1, 120.0, &mut rng);
        (t, traffic)
    }

    #[test]
    fn ri_listens_more_than_pw_on_same_trace() {
        for seed in 0..3 {
            let (t, traffic) = random_world(15, seed);
            let ri = Network::new(&t, cfg(MacVariant::RiMac), SEEDS, &traffic).run(120_000.0).unwrap();
            let pw = Network::new(&t, cfg(MacVariant::PwMac), SEEDS, &traffic).run(120_000.0).unwrap();
            assert!(ri.mean_duty_cycle() > pw.mean_duty_cycle());
        }
    }

    #[test]
    fn pinned_eh_replays_pw_exactly() {
        for seed in 0..3 {
            let (t, traffic) = random_world(20, seed);
            let (pw, _, a) = traced(&t, cfg(MacVariant::PwMac), &traffic, 60_000.0);
            let pinned = MacConfig { pinned_factor: Some(1.0), ..cfg(MacVariant::EhMac) };
            let (eh, _, b) = traced(&t, pinned, &traffic, 60_000.0);
            assert_eq!(pw, eh);
            assert!(a == b);
        }
    }

    #[test]
    fn bookkeeping_invariants_on_random_worlds() {
        for seed in 0..6 {
            let (t, traffic) = random_world(25, seed);
            for v in MacVariant::ALL {
                let end = 120_000.0;
                let r = Network::new(&t, cfg(v), SEEDS, &traffic).run(end).unwrap();
                for d in &r.radio {
                    assert!((d.total() - end).abs() < 1e-6 * end, "{v}: {} != {end}", d.total());
                }
                assert_eq!(r.generated, r.delivered + r.queued_at_end + r.unroutable, "{v}");
                assert_eq!(r.rendezvous_violations, 0, "{v}");
                let mut last = std::collections::HashMap::new();
                for &(origin, id) in &r.deliveries {
                    let prev = last.insert(origin, id);
                    assert!(prev.is_none_or(|p| p < id), "{v}: out of order from {origin}");
                }
            }
        }
    }

    #[test]
    fn traces_are_deterministic() {
        let (t, traffic) = random_world(20, 9);
        let (_, _, a) = traced(&t, cfg(MacVariant::EhMac), &traffic, 60_000.0);
        let (_, _, b) = traced(&t, cfg(MacVariant::EhMac), &traffic, 60_000.0);
        assert!(!a.is_empty());
        assert!(a == b);
    }
}
