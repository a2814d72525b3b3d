//! Slope and curvature of the delay-plus-error loss in the node's own threshold.
//!
//! Overflow is left out: it is small next to the other two terms and the
//! lower bound only needs the sign of the curvature. With `F`, `f`, `f'` the
//! fading CDF, density and density slope at `β`, `N = |F|` and
//! `k = T_th / T_slt`:
//!
//! ```text
//! P_dly  = exp(-(φ/T_slt - λ) T_th),   φ = 1 - F^N
//! P_dly' = P_dly · A,                  A  = k N F^{N-1} f
//! P_dly''= P_dly · (A² + A'),          A' = k N [(N-1) F^{N-2} f² + F^{N-1} f']
//! U      = ∫_β^∞ f(x) v(c x² - P_N) dx
//! U'     = -f v(g),                    g  = c β² - P_N
//! U''    = -f' v(g) + f ζ(g) 2cβ
//! ```
//!
//! where `v` and `ζ` are the interference CCDF and density. The conditional
//! error `U / (1 - F)` is differentiated with the quotient rule.

use super::bounds::beta_upper;
use crate::channel::FadingModel;
use crate::error::{Error, Result};
use crate::interference::{
    error_integral_raw, interference_ccdf, interference_density, ErrorNormalization, InterferenceLaw,
};
use crate::queueing::{p_delay, QueueParams};

/// Everything besides `β` that the loss of one node depends on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossContext {
    pub queue: QueueParams,
    pub num_channels: u32,
    /// `P ĥ² / γ_th` of the node's own link.
    pub sinr_scale: f64,
    pub noise_power: f64,
    pub law: InterferenceLaw,
    pub normalization: ErrorNormalization,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossDerivatives {
    pub first: f64,
    pub second: f64,
}

fn transmit_probability(model: &FadingModel, beta: f64, n: u32) -> Result<f64> {
    Ok(1.0 - model.cdf(beta)?.powi(n as i32))
}

/// `P_dly(β) + P_err(β)`, the quantity [`loss_derivative`] differentiates.
pub fn loss_value(model: &FadingModel, beta: f64, ctx: &LossContext) -> Result<f64> {
    let phi = transmit_probability(model, beta, ctx.num_channels)?;
    let delay = p_delay(phi, &ctx.queue)?;
    let parts = error_integral_raw(model, beta, ctx.sinr_scale, ctx.noise_power, &ctx.law)?;
    let error = match ctx.normalization {
        ErrorNormalization::Literal => parts.integral,
        ErrorNormalization::Conditional => {
            if parts.survival == 0.0 {
                return Err(Error::DegeneratePolicy);
            }
            parts.integral / parts.survival
        }
    };
    Ok(delay + error)
}

pub fn loss_derivative(model: &FadingModel, beta: f64, ctx: &LossContext) -> Result<LossDerivatives> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::domain("loss_derivative", format!("beta = {beta} must be finite and >= 0")));
    }
    let n = ctx.num_channels;
    let cdf = model.cdf(beta)?;
    let f = model.pdf(beta);
    let fp = model.pdf_derivative(beta);

    let phi = 1.0 - cdf.powi(n as i32);
    let pd = p_delay(phi, &ctx.queue)?;
    let k = ctx.queue.delay_threshold / ctx.queue.slot_duration;
    let nf = n as f64;
    let a = k * nf * cdf.powi(n as i32 - 1) * f;
    let a_prime = if n == 1 {
        k * fp
    } else {
        k * nf * ((nf - 1.0) * cdf.powi(n as i32 - 2) * f * f + cdf.powi(n as i32 - 1) * fp)
    };
    let delay_first = pd * a;
    let delay_second = pd * (a * a + a_prime);

    let c = ctx.sinr_scale;
    let g = c * beta * beta - ctx.noise_power;
    let v = interference_ccdf(&ctx.law, g);
    let dv = if g > 0.0 {
        -interference_density(&ctx.law, g) * 2.0 * c * beta
    } else {
        0.0
    };
    let u1 = -f * v;
    let u2 = -fp * v - f * dv;

    let (err_first, err_second) = match ctx.normalization {
        ErrorNormalization::Literal => (u1, u2),
        ErrorNormalization::Conditional => {
            let parts = error_integral_raw(model, beta, c, ctx.noise_power, &ctx.law)?;
            let s = parts.survival;
            if s == 0.0 {
                return Err(Error::DegeneratePolicy);
            }
            let u = parts.integral;
            let (s1, s2) = (-f, -fp);
            let num = u1 * s - u * s1;
            (num / (s * s), (u2 * s - u * s2) / (s * s) - 2.0 * s1 * num / (s * s * s))
        }
    };

    Ok(LossDerivatives {
        first: delay_first + err_first,
        second: delay_second + err_second,
    })
}

/// Smallest threshold at which the loss turns convex, scanning 512 points.
pub fn beta_lower(model: &FadingModel, ctx: &LossContext) -> Result<f64> {
    beta_lower_with_grid(model, ctx, 512)
}

pub fn beta_lower_with_grid(model: &FadingModel, ctx: &LossContext, grid: usize) -> Result<f64> {
    if grid == 0 {
        return Err(Error::domain("beta_lower", "grid must have at least one point"));
    }
    let upper = beta_upper(model, &ctx.queue, ctx.num_channels)?;
    let second = |b: f64| loss_derivative(model, b, ctx).map(|d| d.second);
    let mut prev = 0.0;
    let mut max_second = f64::NEG_INFINITY;
    for i in 1..=grid {
        let b = upper * i as f64 / grid as f64;
        let s = second(b)?;
        if s > 0.0 {
            if i == 1 {
                return Ok(0.0);
            }
            let (mut lo, mut hi) = (prev, b);
            while hi - lo > 1e-6 {
                let mid = 0.5 * (lo + hi);
                if second(mid)? > 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Ok(0.5 * (lo + hi));
        }
        max_second = max_second.max(s);
        prev = b;
    }
    Err(Error::NoLowerBound {
        upper,
        points: grid,
        max_second,
    })
}
