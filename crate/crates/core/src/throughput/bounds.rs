use crate::channel::FadingModel;
use crate::error::{Error, Result};
use crate::queueing::QueueParams;
use crate::specfun::{erf, marcum_q1};
use std::f64::consts::SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaBounds {
    pub lower: f64,
    pub upper: f64,
}

/// Per-channel exceedance probability `1 - (1 - λT)^{1/|F|}` needed to keep up with arrivals.
fn required_tail(q: &QueueParams, num_channels: u32) -> Result<f64> {
    if num_channels == 0 {
        return Err(Error::domain("beta_upper", "num_channels must be at least 1"));
    }
    let load = q.load_per_slot();
    if !(load > 0.0) {
        return Err(Error::domain("beta_upper", format!("arrival load {load} must be positive")));
    }
    if load >= 1.0 {
        return Err(Error::InfeasibleLoad(load));
    }
    Ok(-((-load).ln_1p() / num_channels as f64).exp_m1())
}

/// Largest threshold that keeps the queue stable: `φ(β) = λ·T_slt`.
pub fn beta_upper(model: &FadingModel, q: &QueueParams, num_channels: u32) -> Result<f64> {
    let u = required_tail(q, num_channels)?;
    match *model {
        FadingModel::Rayleigh { omega } => Ok((-omega * u.ln()).sqrt()),
        FadingModel::Rician { b } => {
            let mut lo = 0.0;
            let mut hi = b + 1.0;
            while marcum_q1(b, hi)? > u {
                lo = hi;
                hi *= 2.0;
                if hi > 1e6 {
                    return Err(Error::Numerical(format!("no Rician threshold bracket for tail {u:e}")));
                }
            }
            // bisection keeps lo on the stable side: Q1(b, lo) >= u
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if marcum_q1(b, mid)? >= u {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Ok(lo)
        }
    }
}

/// Gaussian surrogate for the Rician bound,
/// `erf((b - β)/√2) = 1 - 2(1 - λT)^{1/|F|}`; intended for `b > 3`.
pub fn beta_upper_erf(b: f64, q: &QueueParams, num_channels: u32) -> Result<f64> {
    let u = required_tail(q, num_channels)?;
    Ok((b - SQRT_2 * erf_inv(2.0 * u - 1.0)?).max(0.0))
}

/// Inverse error function on `(-1, 1)`.
pub fn erf_inv(y: f64) -> Result<f64> {
    if !(y > -1.0 && y < 1.0) {
        return Err(Error::domain("erf_inv", format!("y = {y} outside (-1, 1)")));
    }
    let (mut lo, mut hi) = (-6.0f64, 6.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if erf(mid)? < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
