//! Node placement, sink choice, greedy geographic routing and Poisson traffic.

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Poisson};
use thiserror::Error;

pub type NodeId = usize;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("mean node count must be positive, got {0}")]
    BadMeanCount(f64),
    #[error("no nodes placed after {0} attempts")]
    EmptyNetwork(u32),
    #[error("topology file line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Rectangular deployment area in metres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Field {
    pub width: f64,
    pub height: f64,
}

impl Default for Field {
    fn default() -> Self {
        Self { width: 100.0, height: 100.0 }
    }
}

impl Field {
    pub fn contains(&self, p: &Position) -> bool {
        (0.0..=self.width).contains(&p.x) && (0.0..=self.height).contains(&p.y)
    }
}

/// Node positions (indexed by [`NodeId`]), the sink and the radio range.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub field: Field,
    pub nodes: Vec<Position>,
    pub sink: NodeId,
    pub range: f64,
}

/// Attempts before giving up on drawing a non-empty network.
pub const MAX_PLACEMENT_ATTEMPTS: u32 = 100;

/// Homogeneous spatial Poisson placement with a uniformly chosen sink.
/// Zero-node draws are redrawn.
pub fn place_nodes<R: Rng + ?Sized>(
    mean_count: f64,
    field: Field,
    range: f64,
    rng: &mut R,
) -> Result<Topology, ScenarioError> {
    if !(mean_count > 0.0 && mean_count.is_finite()) {
        return Err(ScenarioError::BadMeanCount(mean_count));
    }
    let count_dist = Poisson::new(mean_count).map_err(|_| ScenarioError::BadMeanCount(mean_count))?;
    for _ in 0..MAX_PLACEMENT_ATTEMPTS {
        let n = count_dist.sample(rng) as usize;
        if n == 0 {
            continue;
        }
        let nodes = (0..n)
            .map(|_| Position {
                x: rng.random::<f64>() * field.width,
                y: rng.random::<f64>() * field.height,
            })
            .collect();
        let sink = rng.random_range(0..n);
        return Ok(Topology { field, nodes, sink, range });
    }
    Err(ScenarioError::EmptyNetwork(MAX_PLACEMENT_ATTEMPTS))
}

impl Topology {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn distance_to_sink(&self, node: NodeId) -> f64 {
        self.nodes[node].distance(&self.nodes[self.sink])
    }

    /// Next hop of every node (`None` for the sink and for greedy dead ends).
    pub fn next_hops(&self) -> Vec<Option<NodeId>> {
        (0..self.len())
            .map(|i| if i == self.sink { None } else { greedy_next_hop(i, self) })
            .collect()
    }

    /// Whether a packet generated at each node can reach the sink greedily.
    pub fn routable(&self) -> Vec<bool> {
        let hops = self.next_hops();
        (0..self.len())
            .map(|start| {
                let mut at = start;
                // Strict progress bounds the walk by the node count.
                for _ in 0..=self.len() {
                    if at == self.sink {
                        return true;
                    }
                    match hops[at] {
                        Some(n) => at = n,
                        None => return false,
                    }
                }
                false
            })
            .collect()
    }

    /// Text form: a `field W H sink ID` header then one `id x y` line per node.
    pub fn to_text(&self) -> String {
        let mut s = format!("field {} {} sink {}\n", self.field.width, self.field.height, self.sink);
        for (i, p) in self.nodes.iter().enumerate() {
            let _ = writeln!(s, "{i} {} {}", p.x, p.y);
        }
        s
    }

    pub fn from_text(text: &str, range: f64) -> Result<Self, ScenarioError> {
        let err = |line: usize, msg: &str| ScenarioError::Parse { line, msg: msg.to_string() };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (hl, header) = lines.next().ok_or_else(|| err(1, "missing header"))?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 5 || h[0] != "field" || h[3] != "sink" {
            return Err(err(hl + 1, "expected `field W H sink ID`"));
        }
        let num = |s: &str, line: usize| s.parse::<f64>().map_err(|_| err(line, "bad number"));
        let field = Field { width: num(h[1], hl + 1)?, height: num(h[2], hl + 1)? };
        let sink: NodeId = h[4].parse().map_err(|_| err(hl + 1, "bad sink id"))?;
        let mut nodes = Vec::new();
        for (ln, line) in lines {
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(err(ln + 1, "expected `id x y`"));
            }
            let id: usize = parts[0].parse().map_err(|_| err(ln + 1, "bad node id"))?;
            if id != nodes.len() {
                return Err(err(ln + 1, "node ids must be consecutive from 0"));
            }
            let p = Position { x: num(parts[1], ln + 1)?, y: num(parts[2], ln + 1)? };
            if !field.contains(&p) {
                return Err(err(ln + 1, "position outside the field"));
            }
            nodes.push(p);
        }
        if sink >= nodes.len() {
            return Err(err(hl + 1, "sink is not a node"));
        }
        Ok(Self { field, nodes, sink, range })
    }
}

/// Neighbour within range that is strictly closer to the sink and closest to
/// it; ties go to the lowest id. `None` at a greedy void.
pub fn greedy_next_hop(from: NodeId, topo: &Topology) -> Option<NodeId> {
    let here = topo.distance_to_sink(from);
    let origin = topo.nodes[from];
    topo.nodes
        .iter()
        .enumerate()
        .filter(|&(j, p)| j != from && origin.distance(p) <= topo.range)
        .map(|(j, _)| (j, topo.distance_to_sink(j)))
        .filter(|&(_, d)| d < here)
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .map(|(j, _)| j)
}

/// Poisson arrival times (ms) for every node over `duration_s` seconds; the
/// sink generates nothing.
///
/// Each node's stream is a sequence of unit-mean exponentials scaled by
/// `1 / rate`, so for a fixed `rng` state raising the rate never removes an
/// arrival from the horizon.
pub fn gen_traffic<R: Rng + ?Sized>(
    n_nodes: usize,
    sink: NodeId,
    rate: f64,
    duration_s: f64,
    rng: &mut R,
) -> Vec<Vec<f64>> {
    let seeds: Vec<u64> = (0..n_nodes).map(|_| rng.random()).collect();
    seeds
        .into_iter()
        .enumerate()
        .map(|(i, seed)| {
            if i == sink || !(rate > 0.0) {
                return Vec::new();
            }
            let mut node_rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
            let mut t = 0.0;
            let mut out = Vec::new();
            loop {
                let gap: f64 = Exp1.sample(&mut node_rng);
                t += gap / rate;
                if t >= duration_s {
                    break;
                }
                out.push(t * 1000.0);
            }
            out
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn line(xs: &[f64], sink: NodeId) -> Topology {
        Topology {
            field: Field::default(),
            nodes: xs.iter().map(|&x| Position { x, y: 0.0 }).collect(),
            sink,
            range: 35.0,
        }
    }

    #[test]
    fn greedy_examples() {
        let t = line(&[0.0, 30.0, 60.0], 0);
        assert_eq!(greedy_next_hop(2, &t), Some(1));
        assert_eq!(greedy_next_hop(1, &t), Some(0));
        let t = line(&[0.0, 50.0], 0);
        assert_eq!(greedy_next_hop(1, &t), None);
        assert_eq!(t.routable(), vec![true, false]);
    }

    #[test]
    fn greedy_tie_goes_to_lowest_id() {
        let p = |x, y| Position { x, y };
        // 1 and 2 are mirror images: equally close to the sink, both in range of 3.
        let t = Topology {
            field: Field::default(),
            nodes: vec![p(50.0, 50.0), p(45.0, 80.0), p(55.0, 80.0), p(50.0, 90.0)],
            sink: 0,
            range: 35.0,
        };
        assert_eq!(greedy_next_hop(3, &t), Some(1));
        let swapped = Topology { nodes: vec![p(50.0, 50.0), p(55.0, 80.0), p(45.0, 80.0), p(50.0, 90.0)], ..t.clone() };
        assert_eq!(greedy_next_hop(3, &swapped), Some(1));
        let wide = Topology { range: 45.0, ..t };
        assert_eq!(greedy_next_hop(3, &wide), Some(0));
    }

    #[test]
    fn mean_node_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let draws = 10_000;
        let total: usize = (0..draws)
            .map(|_| place_nodes(10.0, Field::default(), 35.0, &mut rng).unwrap().len())
            .sum();
        let mean = total as f64 / draws as f64;
        // Zero-count redraws shift the mean by 10 * e^-10, far below the tolerance.
        assert!((mean - 10.0).abs() / 10.0 < 0.02, "mean {mean}");
    }

    #[test]
    fn placement_is_in_bounds_and_deterministic() {
        let f = Field { width: 80.0, height: 30.0 };
        let a = place_nodes(50.0, f, 35.0, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = place_nodes(50.0, f, 35.0, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
        assert!(a.nodes.iter().all(|p| f.contains(p)));
        assert!(a.sink < a.len());
    }

    #[test]
    fn placement_rejects_bad_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(place_nodes(0.0, Field::default(), 35.0, &mut rng).is_err());
        assert!(place_nodes(-2.0, Field::default(), 35.0, &mut rng).is_err());
    }

    #[test]
    fn tiny_mean_redraws_or_fails() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        match place_nodes(1e-6, Field::default(), 35.0, &mut rng) {
            Err(ScenarioError::EmptyNetwork(n)) => assert_eq!(n, MAX_PLACEMENT_ATTEMPTS),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn greedy_routes_strictly_progress() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let t = place_nodes(50.0, Field::default(), 35.0, &mut rng).unwrap();
            let hops = t.next_hops();
            for (i, h) in hops.iter().enumerate() {
                if let Some(n) = *h {
                    assert!(t.distance_to_sink(n) < t.distance_to_sink(i));
                    assert!(t.nodes[i].distance(&t.nodes[n]) <= t.range);
                }
            }
            assert_eq!(hops[t.sink], None);
            assert!(t.routable()[t.sink]);
        }
    }

    #[test]
    fn zero_rate_no_arrivals() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let tr = gen_traffic(5, 0, 0.0, 1000.0, &mut rng);
        assert!(tr.iter().all(|v| v.is_empty()));
    }

    #[test]
    fn arrival_count_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let reps = 1000;
        let total: usize = (0..reps).map(|_| gen_traffic(2, 0, 0.5, 1000.0, &mut rng)[1].len()).sum();
        let mean = total as f64 / reps as f64;
        assert!((mean - 500.0).abs() / 500.0 < 0.05, "mean {mean}");
    }

    #[test]
    fn sink_is_silent_and_times_sorted() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let tr = gen_traffic(4, 2, 1.0, 100.0, &mut rng);
        assert!(tr[2].is_empty());
        for v in &tr {
            assert!(v.windows(2).all(|w| w[0] < w[1]));
            assert!(v.iter().all(|&t| (0.0..100_000.0).contains(&t)));
        }
    }

    #[test]
    fn arrival_counts_in_disjoint_intervals_look_poisson() {
        // 1000 s at 0.5/s cut into 10 s bins: counts should be Poisson(5).
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut bins = vec![0usize; 0];
        for _ in 0..20 {
            let arr = &gen_traffic(2, 0, 0.5, 1000.0, &mut rng)[1];
            let mut counts = vec![0usize; 100];
            for &t in arr {
                counts[(t / 10_000.0) as usize] += 1;
            }
            bins.extend(counts);
        }
        // Chi-square goodness of fit over classes 0..=9 and 10+.
        let n = bins.len() as f64;
        let lam: f64 = 5.0;
        let mut expected = Vec::new();
        let mut p = (-lam).exp();
        let mut acc = 0.0;
        for k in 0..10 {
            if k > 0 {
                p *= lam / k as f64;
            }
            expected.push(p * n);
            acc += p;
        }
        expected.push((1.0 - acc) * n);
        let mut observed = vec![0.0; 11];
        for &c in &bins {
            observed[c.min(10)] += 1.0;
        }
        let chi2: f64 = observed.iter().zip(&expected).map(|(o, e)| (o - e).powi(2) / e).sum();
        // 10 degrees of freedom, 99.9th percentile = 29.59.
        assert!(chi2 < 29.59, "chi2 = {chi2}");

        // Neighbouring bins are uncorrelated.
        let m = bins.iter().sum::<usize>() as f64 / n;
        let cov: f64 = bins.windows(2).map(|w| (w[0] as f64 - m) * (w[1] as f64 - m)).sum::<f64>() / (n - 1.0);
        let var: f64 = bins.iter().map(|&c| (c as f64 - m).powi(2)).sum::<f64>() / n;
        assert!((cov / var).abs() < 0.1, "lag-1 correlation {}", cov / var);
    }

    #[test]
    fn higher_rate_never_loses_arrivals() {
        for rate in [0.01, 0.05, 0.1, 0.3] {
            let lo = gen_traffic(6, 0, rate, 300.0, &mut ChaCha8Rng::seed_from_u64(4));
            let hi = gen_traffic(6, 0, rate * 1.7, 300.0, &mut ChaCha8Rng::seed_from_u64(4));
            for (a, b) in lo.iter().zip(&hi) {
                assert!(b.len() >= a.len());
            }
        }
    }

    #[test]
    fn topology_text_round_trip() {
        let t = place_nodes(12.0, Field::default(), 35.0, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        let text = t.to_text();
        assert!(text.starts_with(&format!("field 100 100 sink {}\n", t.sink)));
        assert_eq!(Topology::from_text(&text, 35.0).unwrap(), t);
        assert!(Topology::from_text("field 10 10 sink 3\n0 1 1\n", 35.0).is_err());
        assert!(Topology::from_text("nodes 10 10\n", 35.0).is_err());
        assert!(Topology::from_text("field 10 10 sink 0\n0 11 1\n", 35.0).is_err());
    }
}
