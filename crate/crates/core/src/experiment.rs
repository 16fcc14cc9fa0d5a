//! Replications, confidence intervals, sweeps and CSV output.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::energy::{total_waste_poisson, EnergyParams};
use crate::network::{Network, NetworkReport, NetworkSeeds};
use crate::protocol::{MacConfig, MacVariant};
use crate::scenario::{gen_traffic, place_nodes, Field, ScenarioError, Topology};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

impl ExperimentError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        ExperimentError::Io { path: path.into(), source }
    }
}

/// Default per-node rates (packets/s) of a sweep.
pub const DEFAULT_RATES: [f64; 8] = [0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.35, 0.5];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mean_nodes: f64,
    /// Packets per second per node.
    pub rate: f64,
    /// Seconds.
    pub duration: f64,
    pub replications: u32,
    pub master_seed: u64,
    pub field: Field,
    pub range: f64,
    /// Variant, timing, frame sizes, schedule and energy parameters.
    pub mac: MacConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mean_nodes: 50.0,
            rate: 0.1,
            duration: 1000.0,
            replications: 100,
            master_seed: 1,
            field: Field::default(),
            range: 35.0,
            mac: MacConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn variant(&self) -> MacVariant {
        self.mac.variant
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::Config(m));
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if self.replications < 1 {
            return bad("replications must be at least 1".into());
        }
        if !positive(self.duration) {
            return bad(format!("duration must be positive, got {}", self.duration));
        }
        if !positive(self.mean_nodes) {
            return bad(format!("mean node count must be positive, got {}", self.mean_nodes));
        }
        if !(self.rate >= 0.0 && self.rate.is_finite()) {
            return bad(format!("rate must be non-negative, got {}", self.rate));
        }
        if !positive(self.field.width) || !positive(self.field.height) {
            return bad("field dimensions must be positive".into());
        }
        if !positive(self.range) {
            return bad(format!("range must be positive, got {}", self.range));
        }
        let m = &self.mac;
        if !positive(m.link_rate) || m.beacon_bits == 0 || m.data_bits == 0 || m.ack_bits == 0 {
            return bad("link rate and frame sizes must be positive".into());
        }
        if !(m.guard >= 0.0) || !(m.ack_guard >= 0.0) {
            return bad("guard times must be non-negative".into());
        }
        if m.window_capacity < 2 {
            return bad("rate window needs at least 2 samples".into());
        }
        m.schedule.validate().map_err(|e| ExperimentError::Config(e.to_string()))?;
        EnergyParams::new(m.energy.e_beacon, m.energy.e_wait, m.energy.e_tx)
            .map_err(|e| ExperimentError::Config(e.to_string()))?;
        Ok(())
    }
}

/// Purpose tags for [`derive_seed`].
pub mod tag {
    pub const TOPOLOGY: u64 = 1;
    pub const TRAFFIC: u64 = 2;
    pub const SCHEDULE: u64 = 3;
    pub const PROTOCOL: u64 = 4;
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent seed for one random stream of one replication.
pub fn derive_seed(master: u64, rep: u64, purpose: u64) -> u64 {
    splitmix(splitmix(splitmix(master) ^ rep) ^ purpose)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    /// Network mean of per-node awake fraction.
    pub duty_cycle: f64,
    /// Delivered over routable generated packets; 1 when nothing was routable.
    pub delivery_ratio: f64,
    /// Mean end-to-end delay of delivered packets in seconds.
    pub mean_delay: Option<f64>,
    pub collisions: u64,
    pub generated: u64,
    pub delivered: u64,
    pub unroutable: u64,
    pub queued_at_end: u64,
    pub nodes: usize,
    pub mean_factor: f64,
}

impl RunMetrics {
    pub fn from_report(r: &NetworkReport) -> Self {
        let routable = r.generated - r.unroutable;
        Self {
            duty_cycle: r.mean_duty_cycle(),
            delivery_ratio: if routable == 0 { 1.0 } else { r.delivered as f64 / routable as f64 },
            mean_delay: (r.delivered > 0).then(|| r.delay_sum_ms / r.delivered as f64 / 1000.0),
            collisions: r.collisions,
            generated: r.generated,
            delivered: r.delivered,
            unroutable: r.unroutable,
            queued_at_end: r.queued_at_end,
            nodes: r.radio.len(),
            mean_factor: r.mean_factor,
        }
    }
}

/// Topology and traffic of one replication; shared by all variants.
pub fn build_scenario(cfg: &ExperimentConfig, rep: u64) -> Result<(Topology, Vec<Vec<f64>>), ExperimentError> {
    let mut topo_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.master_seed, rep, tag::TOPOLOGY));
    let topo = place_nodes(cfg.mean_nodes, cfg.field, cfg.range, &mut topo_rng)?;
    let mut traffic_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.master_seed, rep, tag::TRAFFIC));
    let traffic = gen_traffic(topo.len(), topo.sink, cfg.rate, cfg.duration, &mut traffic_rng);
    Ok((topo, traffic))
}

fn network_seeds(cfg: &ExperimentConfig, rep: u64) -> NetworkSeeds {
    NetworkSeeds {
        schedule: derive_seed(cfg.master_seed, rep, tag::SCHEDULE),
        protocol: derive_seed(cfg.master_seed, rep, tag::PROTOCOL),
    }
}

/// Runs replication `rep` and returns the raw report.
pub fn run_report(cfg: &ExperimentConfig, rep: u64, trace: Option<&mut dyn Write>) -> Result<NetworkReport, ExperimentError> {
    cfg.validate()?;
    let (topo, traffic) = build_scenario(cfg, rep)?;
    let mut net = Network::new(&topo, cfg.mac.clone(), network_seeds(cfg, rep), &traffic);
    if let Some(out) = trace {
        net = net.with_trace(out);
    }
    net.run(cfg.duration * 1000.0).map_err(|e| ExperimentError::io("<trace>", e))
}

pub fn run_replication(cfg: &ExperimentConfig, rep: u64) -> Result<RunMetrics, ExperimentError> {
    run_report(cfg, rep, None).map(|r| RunMetrics::from_report(&r))
}

/// All replications of `cfg`, in replication order.
pub fn run_all(cfg: &ExperimentConfig) -> Result<Vec<RunMetrics>, ExperimentError> {
    cfg.validate()?;
    (0..cfg.replications as u64).into_par_iter().map(|rep| run_replication(cfg, rep)).collect()
}

/// Mean and Student-t 95% half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    /// `None` with fewer than two samples.
    pub half_width: Option<f64>,
    pub n: usize,
}

impl Estimate {
    pub fn of(samples: &[f64]) -> Option<Self> {
        let n = samples.len();
        if n == 0 {
            return None;
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        if n == 1 {
            return Some(Self { mean, half_width: None, n });
        }
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let t = StudentsT::new(0.0, 1.0, (n - 1) as f64).expect("n >= 2").inverse_cdf(0.975);
        Some(Self { mean, half_width: Some(t * var.sqrt() / (n as f64).sqrt()), n })
    }

    pub fn interval(&self) -> Option<(f64, f64)> {
        self.half_width.map(|h| (self.mean - h, self.mean + h))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub duty_cycle: Estimate,
    pub delivery_ratio: Estimate,
    /// Over replications that delivered something.
    pub mean_delay: Option<Estimate>,
    pub collisions: Estimate,
    pub reps: usize,
}

pub fn aggregate(runs: &[RunMetrics]) -> Option<Aggregate> {
    let pick = |f: fn(&RunMetrics) -> f64| runs.iter().map(f).collect::<Vec<_>>();
    let delays: Vec<f64> = runs.iter().filter_map(|r| r.mean_delay).collect();
    Some(Aggregate {
        duty_cycle: Estimate::of(&pick(|r| r.duty_cycle))?,
        delivery_ratio: Estimate::of(&pick(|r| r.delivery_ratio))?,
        mean_delay: Estimate::of(&delays),
        collisions: Estimate::of(&pick(|r| r.collisions as f64))?,
        reps: runs.len(),
    })
}

/// `%g`-style formatting with 6 significant digits.
pub fn fmt_g(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.5e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let m = mantissa.trim_end_matches('0').trim_end_matches('.');
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{m}e{sign}{:02}", exp.abs());
    }
    let decimals = (5 - exp).max(0) as usize;
    let s = format!("{:.*}", decimals, x);
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub const CSV_HEADER: &str = "variant,nodes,rate,duty_mean,duty_ci,dr_mean,dr_ci,delay_mean,delay_ci,coll_mean,coll_ci,reps";

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub variant: MacVariant,
    pub nodes: f64,
    pub rate: f64,
    pub aggregate: Aggregate,
    pub runs: Vec<RunMetrics>,
}

impl SweepRow {
    pub fn csv_line(&self) -> String {
        let a = &self.aggregate;
        let ci = |e: &Estimate| e.half_width.map_or("NA".to_string(), fmt_g);
        let (dm, dc) = match &a.mean_delay {
            Some(e) => (fmt_g(e.mean), ci(e)),
            None => ("NA".into(), "NA".into()),
        };
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.variant,
            fmt_g(self.nodes),
            fmt_g(self.rate),
            fmt_g(a.duty_cycle.mean),
            ci(&a.duty_cycle),
            fmt_g(a.delivery_ratio.mean),
            ci(&a.delivery_ratio),
            dm,
            dc,
            fmt_g(a.collisions.mean),
            ci(&a.collisions),
            a.reps
        )
    }
}

pub fn summary_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&r.csv_line());
        s.push('\n');
    }
    s
}

/// One line per replication, including delivered counts.
pub fn runs_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from(
        "variant,nodes,rate,rep,node_count,duty_cycle,delivery_ratio,mean_delay,collisions,generated,delivered,unroutable,queued_at_end,mean_factor\n",
    );
    for row in rows {
        for (rep, r) in row.runs.iter().enumerate() {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                row.variant,
                fmt_g(row.nodes),
                fmt_g(row.rate),
                rep,
                r.nodes,
                fmt_g(r.duty_cycle),
                fmt_g(r.delivery_ratio),
                r.mean_delay.map_or("NA".to_string(), fmt_g),
                r.collisions,
                r.generated,
                r.delivered,
                r.unroutable,
                r.queued_at_end,
                fmt_g(r.mean_factor)
            );
        }
    }
    s
}

/// Cartesian product of variants, densities and rates.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub variants: Vec<MacVariant>,
    pub nodes: Vec<f64>,
    pub rates: Vec<f64>,
    pub duration: f64,
    pub reps: u32,
    pub seed: u64,
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self {
            variants: MacVariant::ALL.to_vec(),
            nodes: vec![10.0, 50.0],
            rates: DEFAULT_RATES.to_vec(),
            duration: 1000.0,
            reps: 100,
            seed: 1,
        }
    }
}

impl SweepGrid {
    /// Parses `key = value` lines; lists are comma separated, `#` starts a
    /// comment. Missing keys keep their defaults.
    pub fn parse(text: &str) -> Result<Self, ExperimentError> {
        let mut grid = SweepGrid::default();
        let mut seen = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |m: String| ExperimentError::Config(format!("grid line {}: {m}", i + 1));
            let (key, value) = line
                .split_once('=')
                .or_else(|| line.split_once(':'))
                .ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
            let key = key.trim().to_ascii_lowercase();
            let value = value.trim();
            if seen.insert(key.clone(), i).is_some() {
                return Err(err(format!("duplicate key `{key}`")));
            }
            let list = || value.split(',').map(str::trim).filter(|s| !s.is_empty());
            let num = |s: &str| s.parse::<f64>().map_err(|_| err(format!("`{s}` is not a number")));
            match key.as_str() {
                "variants" => {
                    grid.variants = list().map(|s| s.parse::<MacVariant>().map_err(err)).collect::<Result<_, _>>()?
                }
                "nodes" => grid.nodes = list().map(num).collect::<Result<_, _>>()?,
                "rates" => grid.rates = list().map(num).collect::<Result<_, _>>()?,
                "duration" => grid.duration = num(value)?,
                "reps" => grid.reps = value.parse().map_err(|_| err(format!("`{value}` is not a count")))?,
                "seed" => grid.seed = value.parse().map_err(|_| err(format!("`{value}` is not a seed")))?,
                _ => return Err(err(format!("unknown key `{key}`"))),
            }
        }
        if grid.variants.is_empty() || grid.nodes.is_empty() || grid.rates.is_empty() {
            return Err(ExperimentError::Config("grid has an empty axis".into()));
        }
        Ok(grid)
    }

    /// Concrete configurations, sorted by (variant name, nodes, rate).
    pub fn configs(&self, base: &ExperimentConfig) -> Vec<ExperimentConfig> {
        let mut out = Vec::new();
        for &v in &self.variants {
            for &n in &self.nodes {
                for &r in &self.rates {
                    let mut c = base.clone();
                    c.mac.variant = v;
                    c.mean_nodes = n;
                    c.rate = r;
                    c.duration = self.duration;
                    c.replications = self.reps;
                    c.master_seed = self.seed;
                    out.push(c);
                }
            }
        }
        out.sort_by(|a, b| {
            a.variant()
                .name()
                .cmp(b.variant().name())
                .then(a.mean_nodes.total_cmp(&b.mean_nodes))
                .then(a.rate.total_cmp(&b.rate))
        });
        out.dedup();
        out
    }
}

/// Runs every configuration of the grid. Replication `k` of every
/// configuration with the same density and rate shares topology and traffic,
/// so variants are compared on identical scenarios.
pub fn sweep(grid: &SweepGrid, base: &ExperimentConfig) -> Result<Vec<SweepRow>, ExperimentError> {
    let configs = grid.configs(base);
    if configs.is_empty() {
        return Err(ExperimentError::Config("empty grid".into()));
    }
    for c in &configs {
        c.validate()?;
    }
    let jobs: Vec<(usize, u64)> =
        (0..configs.len()).flat_map(|i| (0..configs[i].replications as u64).map(move |r| (i, r))).collect();
    let results: Vec<RunMetrics> =
        jobs.par_iter().map(|&(i, r)| run_replication(&configs[i], r)).collect::<Result<_, _>>()?;
    let mut rows = Vec::with_capacity(configs.len());
    let mut it = results.into_iter();
    for c in configs {
        let runs: Vec<RunMetrics> = it.by_ref().take(c.replications as usize).collect();
        rows.push(SweepRow {
            variant: c.variant(),
            nodes: c.mean_nodes,
            rate: c.rate,
            aggregate: aggregate(&runs).expect("at least one replication"),
            runs,
        });
    }
    Ok(rows)
}

pub const FIG2_HEADER: &str = "lambda,f,waste,ratio";

/// Waste surface over λ ∈ 0.5..=10 (step 0.5) and f ∈ 1..=f_max (step 0.1).
/// `ratio` is the waste relative to f = 1 at the same λ.
pub fn fig2_csv(ep: &EnergyParams, f_max: f64) -> Result<String, ExperimentError> {
    let mut s = String::from(FIG2_HEADER);
    s.push('\n');
    let steps = ((f_max - 1.0) * 10.0).round() as u32;
    for li in 1..=20 {
        let lambda = li as f64 * 0.5;
        let base = total_waste_poisson(1.0, lambda, ep).map_err(|e| ExperimentError::Config(e.to_string()))?;
        for fi in 0..=steps {
            let f = 1.0 + fi as f64 / 10.0;
            let w = total_waste_poisson(f, lambda, ep).map_err(|e| ExperimentError::Config(e.to_string()))?;
            let _ = writeln!(s, "{},{},{},{}", fmt_g(lambda), fmt_g(f), fmt_g(w), fmt_g(w / base));
        }
    }
    Ok(s)
}
