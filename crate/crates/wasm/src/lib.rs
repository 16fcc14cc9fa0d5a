//! Browser bindings for the beacon-rate optimizer, the beacon schedule and a
//! single simulation run. Results cross the boundary as JSON text.

use ehmac::energy::{optimal_factor, optimal_factor_exact, total_waste_poisson, EnergyParams};
use ehmac::experiment::{run_report, ExperimentConfig, RunMetrics};
use ehmac::prng::LcgState;
use ehmac::protocol::MacVariant;
use ehmac::schedule::{ScheduleParams, ScheduleState};
use serde::Serialize;
use wasm_bindgen::prelude::*;

const CURVE_POINTS: usize = 100;
const MAX_CYCLES: u32 = 50;

#[derive(Debug, Serialize)]
pub struct Optimum {
    pub f_star: f64,
    pub exact: f64,
    pub waste_f_star: f64,
    pub waste_exact: f64,
    pub regret: f64,
    /// `(f, expected waste)` over `[1, f_max]`.
    pub curve: Vec<(f64, f64)>,
}

#[derive(Debug, Serialize)]
pub struct Cycle {
    pub start: f64,
    pub end: f64,
    pub threshold: f64,
    pub subs: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct RunSummary {
    pub nodes: usize,
    pub duty_cycle: f64,
    pub delivery_ratio: f64,
    /// Seconds; absent when nothing was delivered.
    pub mean_delay: Option<f64>,
    pub collisions: u64,
    pub generated: u64,
    pub delivered: u64,
    pub mean_factor: f64,
}

pub fn optimize_at(lambda: f64, eb: f64, ew: f64, etx: f64) -> Result<Optimum, String> {
    let ep = EnergyParams::new(eb, ew, etx).map_err(|e| e.to_string())?;
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err("lambda must be a non-negative number".into());
    }
    let f_max = ScheduleParams::default().max_factor();
    let waste = |f: f64| total_waste_poisson(f, lambda, &ep).map_err(|e| e.to_string());
    let f_star = optimal_factor(lambda, &ep, f_max).value();
    let exact = optimal_factor_exact(lambda, &ep, f_max).map_err(|e| e.to_string())?.value();
    let (waste_f_star, waste_exact) = (waste(f_star)?, waste(exact)?);
    let curve = (0..=CURVE_POINTS)
        .map(|i| {
            let f = 1.0 + (f_max - 1.0) * i as f64 / CURVE_POINTS as f64;
            waste(f).map(|w| (f, w))
        })
        .collect::<Result<_, _>>()?;
    let regret = if waste_exact > 0.0 { waste_f_star / waste_exact } else { 1.0 };
    Ok(Optimum { f_star, exact, waste_f_star, waste_exact, regret, curve })
}

/// First `cycles` cycles of a receiver seeded with `seed`, first primary at 0.
pub fn schedule_of(seed: u32, factor: f64, cycles: u32) -> Result<Vec<Cycle>, String> {
    let params = ScheduleParams::default();
    if !(1.0..=params.max_factor()).contains(&factor) {
        return Err(format!("factor must be in [1, {}]", params.max_factor()));
    }
    let seed = u64::from(seed) % (1 << 31);
    let mut state = ScheduleState::new(LcgState::primary(seed), 0.0, factor, params);
    let mut out = Vec::new();
    for _ in 0..cycles.min(MAX_CYCLES) {
        out.push(Cycle {
            start: state.last_primary,
            end: state.next_primary,
            threshold: state.threshold(),
            subs: state.realized_sub_beacons(),
        });
        state = state.advance();
    }
    Ok(out)
}

/// One replication on the calling thread.
pub fn simulate_once(variant: &str, nodes: f64, rate: f64, duration: f64, seed: u64) -> Result<RunSummary, String> {
    let mut cfg = ExperimentConfig {
        mean_nodes: nodes,
        rate,
        duration,
        replications: 1,
        master_seed: seed,
        ..Default::default()
    };
    cfg.mac.variant = variant.parse::<MacVariant>().map_err(|e| e.to_string())?;
    let m = RunMetrics::from_report(&run_report(&cfg, 0, None).map_err(|e| e.to_string())?);
    Ok(RunSummary {
        nodes: m.nodes,
        duty_cycle: m.duty_cycle,
        delivery_ratio: m.delivery_ratio,
        mean_delay: m.mean_delay,
        collisions: m.collisions,
        generated: m.generated,
        delivered: m.delivered,
        mean_factor: m.mean_factor,
    })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn optimize(lambda: f64, eb: f64, ew: f64, etx: f64) -> Result<String, JsError> {
    to_js(optimize_at(lambda, eb, ew, etx))
}

#[wasm_bindgen]
pub fn schedule(seed: u32, factor: f64, cycles: u32) -> Result<String, JsError> {
    to_js(schedule_of(seed, factor, cycles))
}

#[wasm_bindgen]
pub fn simulate(variant: &str, nodes: f64, rate: f64, duration: f64, seed: u32) -> Result<String, JsError> {
    to_js(simulate_once(variant, nodes, rate, duration, u64::from(seed)))
}
