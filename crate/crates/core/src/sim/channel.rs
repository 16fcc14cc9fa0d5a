use std::collections::BTreeMap;

use crate::scenario::{NodeId, Position};

/// Neighbour lists of the unit-disk graph; the boundary is inclusive.
pub fn neighbors_within(positions: &[Position], range: f64) -> Vec<Vec<NodeId>> {
    positions
        .iter()
        .enumerate()
        .map(|(i, p)| {
            positions
                .iter()
                .enumerate()
                .filter(|&(j, q)| j != i && p.distance(q) <= range)
                .map(|(j, _)| j)
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FrameKind {
    Beacon,
    Data,
    Ack,
}

/// One frame on the air over `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transmission {
    pub source: NodeId,
    pub start: f64,
    pub end: f64,
    pub kind: FrameKind,
    pub bits: u32,
}

impl Transmission {
    /// `link_rate` in kb/s, i.e. bits per millisecond.
    pub fn new(source: NodeId, start: f64, kind: FrameKind, bits: u32, link_rate: f64) -> Self {
        Self { source, start, end: start + bits as f64 / link_rate, kind, bits }
    }

    pub fn airtime(&self) -> f64 {
        self.end - self.start
    }
}

pub type TxId = u64;

/// What a neighbour of the source got out of a finished transmission.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reception {
    Decoded,
    /// Another in-range frame overlapped it at this listener.
    Collided,
    /// The listener was not listening for the whole frame.
    Missed,
}

#[derive(Debug, Clone)]
struct Incoming {
    tx: TxId,
    end: f64,
    overlapped: bool,
    missed: bool,
}

/// Unit-disk channel with zero propagation delay and no capture: any overlap
/// at a listener destroys every overlapping frame there.
pub struct Channel<F> {
    neighbors: Vec<Vec<NodeId>>,
    active: BTreeMap<TxId, (Transmission, F)>,
    incoming: Vec<Vec<Incoming>>,
    next_id: TxId,
}

impl<F> Channel<F> {
    pub fn new(positions: &[Position], range: f64) -> Self {
        let neighbors = neighbors_within(positions, range);
        let incoming = vec![Vec::new(); positions.len()];
        Self { neighbors, active: BTreeMap::new(), incoming, next_id: 0 }
    }

    pub fn neighbors(&self, node: NodeId) -> &[NodeId] {
        &self.neighbors[node]
    }

    /// True while any in-range frame is on the air at `node`.
    pub fn carrier(&self, node: NodeId) -> bool {
        !self.incoming[node].is_empty()
    }

    /// Puts a frame on the air. `listening(j)` tells whether neighbour `j`
    /// can receive right now. The source's own pending receptions are lost.
    pub fn start(&mut self, tx: Transmission, frame: F, listening: impl Fn(NodeId) -> bool) -> TxId {
        let id = self.next_id;
        self.next_id += 1;
        self.deafen(tx.source);
        for &j in &self.neighbors[tx.source] {
            let list = &mut self.incoming[j];
            let mut overlapped = false;
            for other in list.iter_mut().filter(|o| o.end > tx.start) {
                other.overlapped = true;
                overlapped = true;
            }
            list.push(Incoming { tx: id, end: tx.end, overlapped, missed: !listening(j) });
        }
        self.active.insert(id, (tx, frame));
        id
    }

    /// `node` stopped listening: everything it was receiving is lost.
    pub fn deafen(&mut self, node: NodeId) {
        for inc in &mut self.incoming[node] {
            inc.missed = true;
        }
    }

    /// Takes a frame off the air and reports the outcome at every neighbour
    /// of the source, in increasing node order.
    pub fn finish(&mut self, id: TxId) -> Option<(Transmission, F, Vec<(NodeId, Reception)>)> {
        let (tx, frame) = self.active.remove(&id)?;
        let mut out = Vec::with_capacity(self.neighbors[tx.source].len());
        for &j in &self.neighbors[tx.source] {
            let list = &mut self.incoming[j];
            if let Some(pos) = list.iter().position(|o| o.tx == id) {
                let inc = list.swap_remove(pos);
                let r = if inc.missed {
                    Reception::Missed
                } else if inc.overlapped {
                    Reception::Collided
                } else {
                    Reception::Decoded
                };
                out.push((j, r));
            }
        }
        Some((tx, frame, out))
    }

    pub fn frame(&self, id: TxId) -> Option<&(Transmission, F)> {
        self.active.get(&id)
    }

    pub fn on_air(&self) -> usize {
        self.active.len()
    }
}
