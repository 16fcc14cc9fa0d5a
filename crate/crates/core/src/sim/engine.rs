use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// A dispatched event. `seq` is the insertion order and breaks time ties.
#[derive(Debug, Clone, PartialEq)]
pub struct Event<P> {
    pub time: f64,
    pub seq: u64,
    pub payload: P,
}

struct Entry<P>(Event<P>);

impl<P> PartialEq for Entry<P> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<P> Eq for Entry<P> {}

impl<P> PartialOrd for Entry<P> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<P> Ord for Entry<P> {
    // Reversed: BinaryHeap is a max-heap and we want the earliest first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .time
            .total_cmp(&self.0.time)
            .then_with(|| other.0.seq.cmp(&self.0.seq))
    }
}

/// Future event list ordered by `(time, seq)`.
pub struct EventQueue<P> {
    heap: BinaryHeap<Entry<P>>,
    now: f64,
    next_seq: u64,
}

impl<P> Default for EventQueue<P> {
    fn default() -> Self {
        Self::new()
    }
}

impl<P> EventQueue<P> {
    pub fn new() -> Self {
        Self { heap: BinaryHeap::new(), now: 0.0, next_seq: 0 }
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Enqueues `payload` at `time` and returns its sequence number.
    ///
    /// Panics when `time` lies before the current clock or is NaN: that is a
    /// logic error in the caller, never a recoverable condition.
    pub fn schedule(&mut self, time: f64, payload: P) -> u64 {
        assert!(
            time >= self.now,
            "event scheduled into the past: t={time} < now={}",
            self.now
        );
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Entry(Event { time, seq, payload }));
        seq
    }

    pub fn peek_time(&self) -> Option<f64> {
        self.heap.peek().map(|e| e.0.time)
    }

    /// Removes the earliest event and advances the clock to it.
    pub fn pop(&mut self) -> Option<Event<P>> {
        let Entry(ev) = self.heap.pop()?;
        self.now = ev.time;
        Some(ev)
    }

    /// Dispatches every event with `time <= end`, then moves the clock to
    /// `end`. The handler may schedule further events. Returns the number of
    /// events dispatched.
    pub fn run_until(&mut self, end: f64, mut handler: impl FnMut(&mut Self, Event<P>)) -> usize {
        let mut n = 0;
        while self.peek_time().is_some_and(|t| t <= end) {
            let ev = self.pop().expect("peeked");
            handler(self, ev);
            n += 1;
        }
        if end > self.now {
            self.now = end;
        }
        n
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ties_dispatch_in_insertion_order() {
        let mut q = EventQueue::new();
        for i in 0..5 {
            q.schedule(3.0, i);
        }
        q.schedule(1.0, 99);
        let mut seen = Vec::new();
        q.run_until(10.0, |_, e| seen.push(e.payload));
        assert_eq!(seen, vec![99, 0, 1, 2, 3, 4]);
    }

    #[test]
    fn empty_queue_advances_clock() {
        let mut q: EventQueue<()> = EventQueue::new();
        assert_eq!(q.run_until(42.5, |_, _| {}), 0);
        assert_eq!(q.now(), 42.5);
    }

    #[test]
    fn events_past_the_end_stay_queued() {
        let mut q = EventQueue::new();
        q.schedule(5.0, 'a');
        q.schedule(5.0000001, 'b');
        assert_eq!(q.run_until(5.0, |_, _| {}), 1);
        assert_eq!(q.len(), 1);
    }

    #[test]
    fn handler_can_schedule_more() {
        let mut q = EventQueue::new();
        q.schedule(0.0, 0u32);
        let mut count = 0;
        q.run_until(100.0, |q, e| {
            count += 1;
            if e.payload < 9 {
                let t = q.now() + 1.0;
                q.schedule(t, e.payload + 1);
            }
        });
        assert_eq!(count, 10);
    }

    #[test]
    #[should_panic(expected = "into the past")]
    fn scheduling_into_the_past_is_fatal() {
        let mut q = EventQueue::new();
        q.schedule(5.0, ());
        q.pop();
        q.schedule(4.0, ());
    }

    #[test]
    fn random_events_come_out_sorted() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut q = EventQueue::new();
        let n = 1_000_000;
        let mut oracle: Vec<(f64, u64)> = Vec::with_capacity(n);
        for _ in 0..n {
            // Coarse times force plenty of ties.
            let t = (rng.random::<f64>() * 1000.0).floor();
            let seq = q.schedule(t, ());
            oracle.push((t, seq));
        }
        oracle.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut got = Vec::with_capacity(n);
        let mut last = f64::NEG_INFINITY;
        q.run_until(f64::INFINITY, |q, e| {
            assert!(q.now() >= last);
            last = q.now();
            got.push((e.time, e.seq));
        });
        assert_eq!(got, oracle);
    }
}
