/// Radio state of a node. Everything but `Sleep` counts as awake.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RadioMode {
    Sleep,
    Listen,
    Rx,
    Tx,
}

impl RadioMode {
    fn index(self) -> usize {
        self as usize
    }
}

/// Time spent in each mode (ms).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ModeDurations {
    pub sleep: f64,
    pub listen: f64,
    pub rx: f64,
    pub tx: f64,
}

impl ModeDurations {
    pub fn total(&self) -> f64 {
        self.sleep + self.listen + self.rx + self.tx
    }

    pub fn awake(&self) -> f64 {
        self.listen + self.rx + self.tx
    }

    /// Fraction of the time the radio was not sleeping.
    pub fn duty_cycle(&self) -> f64 {
        let total = self.total();
        if total > 0.0 {
            self.awake() / total
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone)]
struct NodeRadio {
    mode: RadioMode,
    since: f64,
    acc: [f64; 4],
}

/// Per-node accumulated radio time.
#[derive(Debug, Clone)]
pub struct RadioLog {
    nodes: Vec<NodeRadio>,
}

impl RadioLog {
    /// All `n` radios asleep from `start`.
    pub fn new(n: usize, start: f64) -> Self {
        Self {
            nodes: vec![NodeRadio { mode: RadioMode::Sleep, since: start, acc: [0.0; 4] }; n],
        }
    }

    pub fn mode(&self, node: usize) -> RadioMode {
        self.nodes[node].mode
    }

    /// Closes the running interval and switches `node` to `mode`.
    ///
    /// Panics on `Tx -> Tx` (a radio cannot start a second transmission) and
    /// on time running backwards.
    pub fn set_radio(&mut self, node: usize, mode: RadioMode, now: f64) {
        let r = &mut self.nodes[node];
        assert!(
            !(r.mode == RadioMode::Tx && mode == RadioMode::Tx),
            "node {node}: transmission started while already transmitting"
        );
        assert!(now >= r.since, "node {node}: radio time went backwards");
        r.acc[r.mode.index()] += now - r.since;
        r.mode = mode;
        r.since = now;
    }

    /// Durations up to `now`, including the still-open interval.
    pub fn durations(&self, node: usize, now: f64) -> ModeDurations {
        let r = &self.nodes[node];
        let mut acc = r.acc;
        acc[r.mode.index()] += (now - r.since).max(0.0);
        ModeDurations { sleep: acc[0], listen: acc[1], rx: acc[2], tx: acc[3] }
    }

    pub fn duty_cycle(&self, node: usize, now: f64) -> f64 {
        self.durations(node, now).duty_cycle()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn asleep_all_run() {
        let log = RadioLog::new(1, 0.0);
        assert_eq!(log.duty_cycle(0, 1_000_000.0), 0.0);
    }

    #[test]
    fn fifty_ms_of_a_second() {
        let mut log = RadioLog::new(1, 0.0);
        log.set_radio(0, RadioMode::Listen, 100.0);
        log.set_radio(0, RadioMode::Tx, 120.0);
        log.set_radio(0, RadioMode::Sleep, 150.0);
        assert!((log.duty_cycle(0, 1000.0) - 0.05).abs() < 1e-12);
        let d = log.durations(0, 1000.0);
        assert_eq!(d.listen, 20.0);
        assert_eq!(d.tx, 30.0);
    }

    #[test]
    #[should_panic(expected = "already transmitting")]
    fn double_tx_is_fatal() {
        let mut log = RadioLog::new(1, 0.0);
        log.set_radio(0, RadioMode::Tx, 1.0);
        log.set_radio(0, RadioMode::Tx, 2.0);
    }

    #[test]
    fn modes_sum_to_elapsed_time() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut log = RadioLog::new(3, 0.0);
        let mut now = 0.0;
        for _ in 0..100_000 {
            now += rng.random::<f64>();
            let node = rng.random_range(0..3);
            let mut mode = [RadioMode::Sleep, RadioMode::Listen, RadioMode::Rx, RadioMode::Tx][rng.random_range(0..4)];
            if mode == RadioMode::Tx && log.mode(node) == RadioMode::Tx {
                mode = RadioMode::Listen;
            }
            log.set_radio(node, mode, now);
        }
        for node in 0..3 {
            let d = log.durations(node, now);
            assert!((d.total() - now).abs() <= 1e-9 * now);
            assert!(d.sleep >= 0.0 && d.listen >= 0.0 && d.rx >= 0.0 && d.tx >= 0.0);
        }
    }
}
