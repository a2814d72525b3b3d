//! Transmit-queue drop probabilities under a threshold policy.
//!
//! A node with per-slot transmit probability `φ` serves its head-of-line
//! packet after a geometric number of slots. The queue is treated as M/M/1
//! with service rate `μ = φ` per slot: the delay-violation probability uses the
//! M/M/1 sojourn-time tail and the overflow probability comes from the birth
//! chain whose admission probabilities are Poisson tails of the normalized
//! buffer `Bη` (packet lengths are exponential).

use crate::error::{Error, Result};
use crate::specfun::gamma_p;

/// Relative slack under which `μ/T_slt` falling short of `λ` is read as
/// sitting exactly on the stability boundary rather than past it.
const BOUNDARY_SLACK: f64 = 1e-9;

/// Queue parameters for one node; rates in packets/s, times in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueueParams {
    pub arrival_rate: f64,
    pub slot_duration: f64,
    pub delay_threshold: f64,
    /// Buffer size times inverse mean packet length (`Bη`).
    pub buffer_capacity: f64,
}

impl QueueParams {
    pub fn new(arrival_rate: f64, slot_duration: f64, delay_threshold: f64, buffer_capacity: f64) -> Result<Self> {
        let q = Self {
            arrival_rate,
            slot_duration,
            delay_threshold,
            buffer_capacity,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("arrival_rate", self.arrival_rate),
            ("slot_duration", self.slot_duration),
            ("delay_threshold", self.delay_threshold),
            ("buffer_capacity", self.buffer_capacity),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(field, format!("must be positive and finite, got {v}")));
            }
        }
        Ok(())
    }

    /// Mean arrivals per slot, `λ·T_slt`.
    pub fn load_per_slot(&self) -> f64 {
        self.arrival_rate * self.slot_duration
    }

    /// Offered load `ρ = λ·T_slt / μ`.
    pub fn offered_load(&self, mu: f64) -> f64 {
        self.load_per_slot() / mu
    }
}

fn check_phi(phi: f64) -> Result<()> {
    if phi == 0.0 {
        return Err(Error::DegeneratePolicy);
    }
    if !(phi > 0.0 && phi <= 1.0) {
        return Err(Error::domain("transmit probability", format!("phi = {phi} outside (0, 1]")));
    }
    Ok(())
}

/// Probability that the head-of-line packet leaves in exactly the `k`-th slot.
pub fn slots_to_transmit_pmf(phi: f64, k: u64) -> Result<f64> {
    check_phi(phi)?;
    if k == 0 {
        return Err(Error::domain("slots_to_transmit_pmf", "k must be at least 1"));
    }
    if k == 1 {
        return Ok(phi);
    }
    Ok(((k - 1) as f64 * (-phi).ln_1p()).exp() * phi)
}

/// Per-slot service rate of the exponential approximation; equal to `φ`.
pub fn service_rate(phi: f64) -> Result<f64> {
    check_phi(phi)?;
    Ok(phi)
}

fn stability_error(mu: f64, q: &QueueParams) -> Error {
    Error::Stability {
        rho: q.offered_load(mu),
        deficit: (q.arrival_rate - mu / q.slot_duration).max(0.0),
    }
}

/// `Pr(sojourn > T_th) = exp(-(μ/T_slt - λ)·T_th)`.
pub fn p_delay(mu: f64, q: &QueueParams) -> Result<f64> {
    if !(mu > 0.0) {
        return Err(stability_error(mu.max(0.0), q));
    }
    let margin = mu / q.slot_duration - q.arrival_rate;
    if margin < -BOUNDARY_SLACK * q.arrival_rate {
        return Err(stability_error(mu, q));
    }
    Ok((-margin.max(0.0) * q.delay_threshold).exp())
}

/// Buffer-overflow probability `(1-ρ)e^{-a(1-ρ)} / (1 - ρ e^{-a(1-ρ)})`, `a = Bη`.
pub fn p_overflow(mu: f64, q: &QueueParams) -> Result<f64> {
    let rho = check_rho(mu, q)?;
    let a = q.buffer_capacity;
    let x = -a * (1.0 - rho);
    // 1 - ρe^x = (1 - ρ) - ρ(e^x - 1), no cancellation near ρ = 1
    let denom = (1.0 - rho) - rho * x.exp_m1();
    Ok(((1.0 - rho) * x.exp() / denom).min(1.0))
}

/// Value of [`p_overflow`] in the limit `ρ → 1`.
pub fn p_overflow_at_boundary(q: &QueueParams) -> f64 {
    1.0 / (1.0 + q.buffer_capacity)
}

fn check_rho(mu: f64, q: &QueueParams) -> Result<f64> {
    if !(mu > 0.0) {
        return Err(stability_error(mu.max(0.0), q));
    }
    let rho = q.offered_load(mu);
    if !(rho < 1.0) {
        return Err(stability_error(mu, q));
    }
    Ok(rho)
}

/// Probability that a packet finding `i` packets queued is admitted,
/// `Pr(X_1 + … + X_{i+1} ≤ B | X_1 + … + X_i ≤ B)`.
pub fn admission_probability(i: usize, buffer_capacity: f64) -> Result<f64> {
    let below = poisson_tail(i, buffer_capacity)?;
    if below == 0.0 {
        return Ok(0.0);
    }
    Ok(poisson_tail(i + 1, buffer_capacity)? / below)
}

/// `Pr(Poisson(a) >= i)`.
fn poisson_tail(i: usize, a: f64) -> Result<f64> {
    if i == 0 {
        return Ok(1.0);
    }
    if a == 0.0 {
        return Ok(0.0);
    }
    gamma_p(i as f64, a)
}

/// Stationary queue-length distribution `P_0, P_1, …`.
///
/// Stops at the first index whose remaining tail is provably below `1e-12`,
/// or after `max_states` entries.
pub fn state_distribution(mu: f64, q: &QueueParams, max_states: usize) -> Result<Vec<f64>> {
    let rho = check_rho(mu, q)?;
    let a = q.buffer_capacity;
    if max_states == 0 {
        return Ok(Vec::new());
    }
    let p0 = (1.0 - rho) / ((1.0 - rho) - rho * (-a * (1.0 - rho)).exp_m1());
    let mut out = Vec::with_capacity(max_states.min(4096));
    let mut geometric = p0;
    for i in 0..max_states {
        out.push(geometric * poisson_tail(i, a)?);
        let next = geometric * rho;
        if next / (1.0 - rho) < 1e-12 {
            break;
        }
        geometric = next;
    }
    Ok(out)
}
