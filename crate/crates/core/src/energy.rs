//! Per-cycle energy-waste model of a beaconing receiver and the choice of the
//! beacon speeding factor that minimises it.
//!
//! Energies are abstract, configurable constants. `lambda` is always the
//! incoming rate in packets per mean cycle.

use std::f64::consts::E;

use statrs::function::factorial::ln_factorial;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnergyError {
    #[error("arrival rate must be non-negative, got {0}")]
    NegativeRate(f64),
    #[error("arrival rate must be strictly positive for the Taylor expansion, got {0}")]
    NonPositiveRate(f64),
    #[error("energy constants must be strictly positive (E_b={0}, E_w={1}, E_tx={2})")]
    InvalidEnergy(f64, f64, f64),
    #[error("speeding factor {value} outside [1, {max}]")]
    FactorOutOfRange { value: f64, max: f64 },
}

/// Beacon, waiting and data-transmission energies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyParams {
    pub e_beacon: f64,
    pub e_wait: f64,
    pub e_tx: f64,
}

impl EnergyParams {
    pub fn new(e_beacon: f64, e_wait: f64, e_tx: f64) -> Result<Self, EnergyError> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !(ok(e_beacon) && ok(e_wait) && ok(e_tx)) {
            return Err(EnergyError::InvalidEnergy(e_beacon, e_wait, e_tx));
        }
        Ok(Self { e_beacon, e_wait, e_tx })
    }

    /// Energy squandered by one sender that loses its frame: `E_w + E_tx`.
    pub fn sender_loss(&self) -> f64 {
        self.e_wait + self.e_tx
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            e_beacon: self.e_beacon * c,
            e_wait: self.e_wait * c,
            e_tx: self.e_tx * c,
        }
    }
}

impl Default for EnergyParams {
    fn default() -> Self {
        Self { e_beacon: 1.0, e_wait: 4.0, e_tx: 4.0 }
    }
}

/// Distribution of the number of arrivals in one (sub-)cycle.
pub trait ArrivalModel {
    /// Probability of exactly `k` arrivals when the mean is `lambda`.
    fn pmf(&self, lambda: f64, k: u32) -> f64;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Poisson;

impl ArrivalModel for Poisson {
    fn pmf(&self, lambda: f64, k: u32) -> f64 {
        if lambda == 0.0 {
            return if k == 0 { 1.0 } else { 0.0 };
        }
        (k as f64 * lambda.ln() - lambda - ln_factorial(k as u64)).exp()
    }
}

/// Truncation point: stop once this much probability mass has been seen.
const MASS_CUTOFF: f64 = 1.0 - 1e-12;
const MAX_TERMS: u32 = 100_000;

/// Sums `weight(i) * F(lambda, i)` over `i >= from`, truncating once the
/// cumulative mass from zero reaches `1 - 1e-12`.
fn tail_sum(am: &dyn ArrivalModel, lambda: f64, from: u32, weight: impl Fn(u32) -> f64) -> f64 {
    let mut mass = 0.0;
    let mut sum = 0.0;
    for k in 0..MAX_TERMS {
        let p = am.pmf(lambda, k);
        mass += p;
        if k >= from {
            sum += weight(k) * p;
        }
        if mass >= MASS_CUTOFF && k >= from && (k as f64) > lambda {
            break;
        }
    }
    sum
}

fn check_rate(lambda: f64) -> Result<(), EnergyError> {
    if lambda.is_nan() || lambda < 0.0 {
        Err(EnergyError::NegativeRate(lambda))
    } else {
        Ok(())
    }
}

/// Energy lost to collisions in one cycle without sub-beacons, charging
/// `E_w + E_tx` once per collision event.
pub fn collision_waste_single(lambda: f64, ep: &EnergyParams, am: &dyn ArrivalModel) -> Result<f64, EnergyError> {
    check_rate(lambda)?;
    Ok(ep.e_beacon + ep.sender_loss() * tail_sum(am, lambda, 2, |_| 1.0))
}

/// Same as [`collision_waste_single`] but charging `E_w + E_tx` to every
/// colliding sender. This is the variant whose Poisson form matches
/// [`total_waste_poisson`].
pub fn collision_waste_single_per_sender(
    lambda: f64,
    ep: &EnergyParams,
    am: &dyn ArrivalModel,
) -> Result<f64, EnergyError> {
    check_rate(lambda)?;
    Ok(ep.e_beacon + ep.sender_loss() * tail_sum(am, lambda, 2, |i| i as f64))
}

/// Collision waste over a whole cycle split into `f` sub-cycles.
pub fn collision_waste(f: f64, lambda: f64, ep: &EnergyParams, am: &dyn ArrivalModel) -> Result<f64, EnergyError> {
    check_rate(lambda)?;
    check_factor(f)?;
    Ok(f * collision_waste_single(lambda / f, ep, am)?)
}

pub fn collision_waste_per_sender(
    f: f64,
    lambda: f64,
    ep: &EnergyParams,
    am: &dyn ArrivalModel,
) -> Result<f64, EnergyError> {
    check_rate(lambda)?;
    check_factor(f)?;
    Ok(f * collision_waste_single_per_sender(lambda / f, ep, am)?)
}

/// Energy spent on beacons nobody answers.
pub fn idle_beacon_waste(f: f64, lambda: f64, ep: &EnergyParams, am: &dyn ArrivalModel) -> Result<f64, EnergyError> {
    check_rate(lambda)?;
    check_factor(f)?;
    Ok(f * ep.e_beacon * am.pmf(lambda / f, 0))
}

/// Total waste for an arbitrary arrival model, built from the per-sender
/// collision term and the idle-beacon term.
pub fn total_waste(f: f64, lambda: f64, ep: &EnergyParams, am: &dyn ArrivalModel) -> Result<f64, EnergyError> {
    Ok(collision_waste_per_sender(f, lambda, ep, am)? + idle_beacon_waste(f, lambda, ep, am)?)
}

/// Closed form of the total waste under Poisson arrivals. This is the
/// objective every optimiser in this module minimises.
pub fn total_waste_poisson(f: f64, lambda: f64, ep: &EnergyParams) -> Result<f64, EnergyError> {
    check_rate(lambda)?;
    check_factor(f)?;
    Ok(closed_form(f, lambda, ep))
}

fn closed_form(f: f64, lambda: f64, ep: &EnergyParams) -> f64 {
    let w = ep.sender_loss();
    f * ep.e_beacon + lambda * w + (-lambda / f).exp() * (f * ep.e_beacon - lambda * w)
}

fn check_factor(f: f64) -> Result<(), EnergyError> {
    if f.is_nan() || f < 1.0 {
        Err(EnergyError::FactorOutOfRange { value: f, max: f64::INFINITY })
    } else {
        Ok(())
    }
}

/// Second-order expansion of the waste around `f = lambda`, term for term.
pub fn taylor_waste(f: f64, lambda: f64, ep: &EnergyParams) -> Result<f64, EnergyError> {
    if lambda.is_nan() || lambda <= 0.0 {
        return Err(EnergyError::NonPositiveRate(lambda));
    }
    let (eb, w) = (ep.e_beacon, ep.sender_loss());
    let d = f - lambda;
    let constant = lambda * ((1.0 + E) * eb - (1.0 - E) * w) / E;
    let quadratic = (w + eb) * d * d / (2.0 * E * lambda);
    let linear = ((w - 2.0 * eb) / E + eb) * d / (2.0 * E * lambda);
    Ok(constant + quadratic - linear)
}

/// A beacon speeding factor, `1 <= value <= max`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct SpeedFactor {
    value: f64,
    max: f64,
}

impl SpeedFactor {
    pub const MIN: f64 = 1.0;

    /// Upper bound that keeps the sub-beacon threshold inside `[0, 1]`.
    pub fn max_for(n_sub_slots: u32) -> f64 {
        n_sub_slots as f64 + 1.0
    }

    pub fn new(value: f64, max: f64) -> Result<Self, EnergyError> {
        if !(Self::MIN..=max).contains(&value) {
            return Err(EnergyError::FactorOutOfRange { value, max });
        }
        Ok(Self { value, max })
    }

    pub fn clamped(value: f64, max: f64) -> Self {
        let value = if value.is_nan() { Self::MIN } else { value.clamp(Self::MIN, max) };
        Self { value, max }
    }

    pub fn unit(max: f64) -> Self {
        Self { value: 1.0, max }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn max(&self) -> f64 {
        self.max
    }
}

/// The sensor-side rule: unclamped linear optimum in `lambda`.
pub fn optimal_factor_raw(lambda: f64, ep: &EnergyParams) -> f64 {
    let w = ep.sender_loss();
    lambda * (2.0 * w - (1.0 + E) * ep.e_beacon) / (ep.e_beacon + w)
}

/// [`optimal_factor_raw`] clamped into `[1, f_max]`.
pub fn optimal_factor(lambda: f64, ep: &EnergyParams, f_max: f64) -> SpeedFactor {
    SpeedFactor::clamped(optimal_factor_raw(lambda.max(0.0), ep), f_max)
}

const GOLDEN_TOL: f64 = 1e-6;
const COARSE_POINTS: usize = 200;
const FALLBACK_STEP: f64 = 1e-3;

/// Numerical minimiser of [`total_waste_poisson`] over `[1, f_max]`.
///
/// A coarse scan brackets the minimum; golden-section search refines it to
/// `|df| <= 1e-6`. If the coarse profile is not unimodal the bracket comes
/// from a dense scan at step `1e-3` instead.
pub fn optimal_factor_exact(lambda: f64, ep: &EnergyParams, f_max: f64) -> Result<SpeedFactor, EnergyError> {
    check_rate(lambda)?;
    let objective = |f: f64| closed_form(f, lambda, ep);
    let (lo, hi) = bracket(&objective, 1.0, f_max, COARSE_POINTS)
        .or_else(|| {
            let n = ((f_max - 1.0) / FALLBACK_STEP).ceil() as usize;
            bracket_any(&objective, 1.0, f_max, n.max(2))
        })
        .expect("a dense scan always yields a bracket");
    Ok(SpeedFactor::clamped(golden_section(&objective, lo, hi, GOLDEN_TOL), f_max))
}

fn grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..=n).map(move |i| if i == n { hi } else { lo + (hi - lo) * i as f64 / n as f64 })
}

/// Bracket around the best grid point, provided the sampled profile is unimodal.
fn bracket(obj: &impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> Option<(f64, f64)> {
    let xs: Vec<f64> = grid(lo, hi, n).collect();
    let ys: Vec<f64> = xs.iter().map(|&x| obj(x)).collect();
    let best = argmin(&ys);
    let descending = ys[..=best].windows(2).all(|w| w[1] <= w[0]);
    let ascending = ys[best..].windows(2).all(|w| w[1] >= w[0]);
    if !(descending && ascending) {
        return None;
    }
    Some((xs[best.saturating_sub(1)], xs[(best + 1).min(n)]))
}

fn bracket_any(obj: &impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> Option<(f64, f64)> {
    let xs: Vec<f64> = grid(lo, hi, n).collect();
    let ys: Vec<f64> = xs.iter().map(|&x| obj(x)).collect();
    let best = argmin(&ys);
    Some((xs[best.saturating_sub(1)], xs[(best + 1).min(n)]))
}

fn argmin(ys: &[f64]) -> usize {
    ys.iter()
        .enumerate()
        .fold(0, |best, (i, &y)| if y < ys[best] { i } else { best })
}

/// Golden-section search for the minimum of `obj` on `[lo, hi]`.
pub fn golden_section(obj: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (obj(x1), obj(x2));
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = obj(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = obj(x2);
        }
    }
    // Endpoints are candidates too when the minimum sits on the boundary.
    let mid = 0.5 * (lo + hi);
    [lo, mid, hi]
        .into_iter()
        .min_by(|a, b| obj(*a).total_cmp(&obj(*b)))
        .unwrap_or(mid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const F_MAX: f64 = 11.0;

    fn ep(eb: f64, ew: f64, etx: f64) -> EnergyParams {
        EnergyParams::new(eb, ew, etx).unwrap()
    }

    /// Independent oracle: direct summation of the Poisson tail by recurrence.
    fn poisson_tail_oracle(lambda: f64, from: u32, per_sender: bool) -> f64 {
        let mut p = (-lambda).exp();
        let mut s = 0.0;
        for k in 0..2000u32 {
            if k > 0 {
                p *= lambda / k as f64;
            }
            if k >= from {
                s += if per_sender { k as f64 * p } else { p };
            }
        }
        s
    }

    #[test]
    fn poisson_pmf_sums_to_one() {
        for lambda in [0.0, 0.1, 1.0, 7.5, 30.0, 50.0] {
            let total: f64 = (0..500).map(|k| Poisson.pmf(lambda, k)).sum();
            assert!((total - 1.0).abs() < 1e-9, "lambda={lambda} total={total}");
        }
    }

    #[test]
    fn collision_single_examples() {
        let unit = ep(1.0, 1.0, 1.0);
        assert_eq!(collision_waste_single(0.0, &unit, &Poisson).unwrap(), 1.0);
        // 1 + 2(1 - 2/e), cross-checked against the recurrence oracle.
        let v = collision_waste_single(1.0, &unit, &Poisson).unwrap();
        assert_relative_eq!(v, 1.528_482_235_314_230_7, epsilon = 1e-10);
        assert_relative_eq!(v, 1.0 + 2.0 * poisson_tail_oracle(1.0, 2, false), epsilon = 1e-12);
        let big = collision_waste_single(50.0, &unit, &Poisson).unwrap();
        assert!((big - 3.0).abs() < 1e-6);
    }

    #[test]
    fn collision_single_rejects_negative_rate() {
        assert!(collision_waste_single(-0.1, &EnergyParams::default(), &Poisson).is_err());
        assert!(idle_beacon_waste(1.0, -1.0, &EnergyParams::default(), &Poisson).is_err());
        assert!(total_waste_poisson(1.0, -1.0, &EnergyParams::default()).is_err());
    }

    #[test]
    fn collision_over_cycle_examples() {
        let unit = ep(1.0, 1.0, 1.0);
        let single = collision_waste_single(2.5, &unit, &Poisson).unwrap();
        assert_eq!(collision_waste(1.0, 2.5, &unit, &Poisson).unwrap(), single);
        assert_eq!(collision_waste(2.0, 0.0, &unit, &Poisson).unwrap(), 2.0);
        let v = collision_waste(4.0, 4.0, &unit, &Poisson).unwrap();
        assert_relative_eq!(v, 6.113_928_941_256_923, epsilon = 1e-9);
    }

    #[test]
    fn idle_beacon_examples() {
        let p = ep(1.5, 1.0, 1.0);
        assert_eq!(idle_beacon_waste(3.0, 0.0, &p, &Poisson).unwrap(), 4.5);
        assert_relative_eq!(idle_beacon_waste(1.0, 1.0, &p, &Poisson).unwrap(), 1.5 * (-1f64).exp(), epsilon = 1e-15);
        assert_relative_eq!(
            idle_beacon_waste(2.0, 4.0, &p, &Poisson).unwrap(),
            2.0 * 1.5 * (-2f64).exp(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn closed_form_examples() {
        let p = ep(1.0, 1.0, 1.0);
        assert_eq!(total_waste_poisson(3.0, 0.0, &p).unwrap(), 6.0);
        assert_relative_eq!(
            total_waste_poisson(1.0, 1.0, &p).unwrap(),
            3.0 - (-1f64).exp(),
            epsilon = 1e-15
        );
        assert_relative_eq!(total_waste_poisson(1.0, 1.0, &p).unwrap(), 2.632_120_558_828_558, epsilon = 1e-12);
    }

    #[test]
    fn closed_form_beats_unit_factor_near_lambda() {
        for w in [4.0, 8.0] {
            let p = ep(1.0, w / 2.0, w / 2.0);
            for lambda in 3..=10 {
                let l = lambda as f64;
                let at_lambda = total_waste_poisson(l, l, &p).unwrap();
                let at_one = total_waste_poisson(1.0, l, &p).unwrap();
                assert!(at_lambda / at_one < 1.0, "w={w} lambda={l}");
            }
        }
    }

    #[test]
    fn per_sender_decomposition_matches_closed_form() {
        let p = EnergyParams::default();
        for li in 0..=40 {
            let lambda = li as f64 * 0.5;
            for fi in 0..=20 {
                let f = 1.0 + fi as f64 * 0.5;
                let parts = total_waste(f, lambda, &p, &Poisson).unwrap();
                let closed = total_waste_poisson(f, lambda, &p).unwrap();
                assert!((parts - closed).abs() < 1e-9 * closed.max(1.0), "f={f} lambda={lambda}: {parts} vs {closed}");
            }
        }
    }

    #[test]
    fn printed_collision_term_differs_from_per_sender_term() {
        let p = EnergyParams::default();
        let literal = collision_waste(2.0, 6.0, &p, &Poisson).unwrap();
        let per_sender = collision_waste_per_sender(2.0, 6.0, &p, &Poisson).unwrap();
        assert!(per_sender > literal);
    }

    #[test]
    fn closed_form_limit_for_heavy_load() {
        let p = EnergyParams::default();
        let (f, lambda) = (2.0, 80.0);
        let limit = f * p.e_beacon + lambda * p.sender_loss();
        let v = total_waste_poisson(f, lambda, &p).unwrap();
        assert!(((v - limit) / limit).abs() < 1e-6);
    }

    #[test]
    fn taylor_examples() {
        let p = EnergyParams::default();
        let lambda = 4.0;
        let expected = lambda * ((1.0 + E) * 1.0 - (1.0 - E) * 8.0) / E;
        assert_relative_eq!(taylor_waste(lambda, lambda, &p).unwrap(), expected, epsilon = 1e-12);

        // Symmetric pair: the difference is exactly twice the linear term.
        let d = 0.7;
        let hi = taylor_waste(lambda + d, lambda, &p).unwrap();
        let lo = taylor_waste(lambda - d, lambda, &p).unwrap();
        let linear = ((8.0 - 2.0) / E + 1.0) * d / (2.0 * E * lambda);
        assert_relative_eq!(lo - hi, 2.0 * linear, epsilon = 1e-12);

        assert!(taylor_waste(1.0, 0.0, &p).is_err());
        assert!(taylor_waste(1.0, -2.0, &p).is_err());
    }

    #[test]
    fn taylor_tracks_closed_form_near_lambda() {
        let p = EnergyParams::default();
        for li in 0..=80 {
            let lambda = 2.0 + li as f64 * 0.1;
            for k in -20..=20 {
                let f = lambda * (1.0 + k as f64 / 100.0);
                let t = taylor_waste(f, lambda, &p).unwrap();
                let c = total_waste_poisson(f, lambda, &p).unwrap();
                assert!(((t - c) / c).abs() <= 0.1, "lambda={lambda} f={f}");
            }
        }
    }

    #[test]
    fn optimal_factor_examples() {
        let p = ep(1.0, 2.0, 2.0);
        assert_eq!(optimal_factor(0.0, &p, F_MAX).value(), 1.0);
        assert_relative_eq!(optimal_factor_raw(7.0, &p), 5.994_405_440_157_338, epsilon = 1e-12);
        assert_relative_eq!(optimal_factor(7.0, &p, F_MAX).value(), 5.994_405_440_157_338, epsilon = 1e-12);
        assert_eq!(optimal_factor(100.0, &p, F_MAX).value(), F_MAX);
    }

    #[test]
    fn optimal_factor_is_linear_in_rate() {
        let p = EnergyParams::default();
        let (a, b, c) = (optimal_factor_raw(1.0, &p), optimal_factor_raw(2.5, &p), optimal_factor_raw(4.0, &p));
        assert_relative_eq!(b - a, c - b, epsilon = 1e-12);
        assert_eq!(optimal_factor_raw(0.0, &p), 0.0);
    }

    /// Independent oracle: dense grid scan of the closed form.
    fn grid_argmin(lambda: f64, p: &EnergyParams, step: f64) -> f64 {
        let n = ((F_MAX - 1.0) / step).round() as usize;
        (0..=n)
            .map(|i| 1.0 + i as f64 * step)
            .min_by(|a, b| {
                total_waste_poisson(*a, lambda, p)
                    .unwrap()
                    .total_cmp(&total_waste_poisson(*b, lambda, p).unwrap())
            })
            .unwrap()
    }

    #[test]
    fn exact_optimum_examples() {
        let p = ep(1.0, 2.0, 2.0);
        assert_eq!(optimal_factor_exact(0.0, &p, F_MAX).unwrap().value(), 1.0);
        let f = optimal_factor_exact(7.0, &p, F_MAX).unwrap().value();
        let g = grid_argmin(7.0, &p, 1e-4);
        assert!((f - g).abs() <= 2e-4, "golden {f} vs grid {g}");
        assert!((f - 6.067_949_58).abs() < 1e-5);
        assert!(f > 1.0 && f < F_MAX);
    }

    #[test]
    fn exact_optimum_is_scale_invariant() {
        let p = ep(1.0, 3.0, 1.5);
        for lambda in [0.5, 2.0, 6.0, 9.0] {
            let base = optimal_factor_exact(lambda, &p, F_MAX).unwrap().value();
            for c in [1e-3, 0.5, 7.0, 1e4] {
                let scaled = optimal_factor_exact(lambda, &p.scaled(c), F_MAX).unwrap().value();
                assert!((base - scaled).abs() < 1e-5, "lambda={lambda} c={c}");
            }
        }
    }

    #[test]
    fn regret_of_linear_rule_is_small() {
        let p = EnergyParams::default();
        for lambda in 2..=10 {
            let l = lambda as f64;
            let fast = optimal_factor(l, &p, F_MAX).value();
            let exact = optimal_factor_exact(l, &p, F_MAX).unwrap().value();
            let r = total_waste_poisson(fast, l, &p).unwrap() / total_waste_poisson(exact, l, &p).unwrap();
            assert!(r <= 1.05, "lambda={l} regret={r}");
        }
    }

    #[test]
    fn speed_factor_bounds() {
        assert!(SpeedFactor::new(0.99, 11.0).is_err());
        assert!(SpeedFactor::new(11.01, 11.0).is_err());
        assert_eq!(SpeedFactor::clamped(-3.0, 11.0).value(), 1.0);
        assert_eq!(SpeedFactor::clamped(f64::NAN, 11.0).value(), 1.0);
        assert_eq!(SpeedFactor::max_for(10), 11.0);
    }

    #[test]
    fn golden_section_finds_parabola_minimum() {
        let x = golden_section(&|x: f64| (x - 2.3).powi(2), 0.0, 10.0, 1e-9);
        assert!((x - 2.3).abs() < 1e-6);
        let edge = golden_section(&|x: f64| x, 1.0, 5.0, 1e-9);
        assert_eq!(edge, 1.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn fast_rule_always_clamped(lambda in 0.0f64..1e4, eb in 0.01f64..10.0, ew in 0.01f64..10.0, etx in 0.01f64..10.0) {
                let p = EnergyParams::new(eb, ew, etx).unwrap();
                let f = optimal_factor(lambda, &p, F_MAX).value();
                prop_assert!((1.0..=F_MAX).contains(&f));
            }

            #[test]
            fn exact_never_worse_than_fast(lambda in 0.0f64..15.0, eb in 0.1f64..5.0, w in 0.1f64..20.0) {
                let p = EnergyParams::new(eb, w / 2.0, w / 2.0).unwrap();
                let exact = optimal_factor_exact(lambda, &p, F_MAX).unwrap().value();
                let fast = optimal_factor(lambda, &p, F_MAX).value();
                let we = total_waste_poisson(exact, lambda, &p).unwrap();
                let wf = total_waste_poisson(fast, lambda, &p).unwrap();
                prop_assert!(we <= wf * (1.0 + 1e-9));
            }
        }
    }
}
