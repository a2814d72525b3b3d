//! Modified Bessel functions of the first kind, orders zero and one.
//!
//! Below [`ASYMPTOTIC_FROM`] the ascending power series is summed directly;
//! every term is positive so there is no cancellation. Above it the Hankel
//! asymptotic expansion is used in exponentially scaled form, which keeps
//! `i0e`/`i1e` finite for arguments far past the point where `I0` overflows.

use crate::error::{Error, Result};
use std::f64::consts::PI;

const ASYMPTOTIC_FROM: f64 = 30.0;

fn check(func: &'static str, x: f64) -> Result<()> {
    if !x.is_finite() {
        return Err(Error::domain(func, format!("x = {x} is not finite")));
    }
    if x < 0.0 {
        return Err(Error::domain(func, format!("x = {x} is negative")));
    }
    Ok(())
}

fn series(order: u32, x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = if order == 0 { 1.0 } else { 0.5 * x };
    let mut sum = term;
    let mut k = 1.0;
    loop {
        term *= q / (k * (k + order as f64));
        sum += term;
        if term <= sum * 1e-17 {
            return sum;
        }
        k += 1.0;
    }
}

/// `sqrt(2 pi x) e^{-x} I_order(x)` for large `x`.
fn asymptotic_scaled(order: u32, x: f64) -> f64 {
    let mu = 4.0 * (order * order) as f64;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        let odd = 2.0 * k - 1.0;
        let next = -term * (mu - odd * odd) / (k * 8.0 * x);
        if next.abs() >= term.abs() {
            // the expansion started diverging; truncating at the smallest term is optimal
            return sum;
        }
        term = next;
        sum += term;
        if term.abs() <= sum.abs() * 1e-17 {
            return sum;
        }
        k += 1.0;
    }
}

/// `I0(x)`.
pub fn bessel_i0(x: f64) -> Result<f64> {
    check("bessel_i0", x)?;
    if x <= ASYMPTOTIC_FROM {
        Ok(series(0, x))
    } else {
        Ok(x.exp() * asymptotic_scaled(0, x) / (2.0 * PI * x).sqrt())
    }
}

/// `I1(x)`.
pub fn bessel_i1(x: f64) -> Result<f64> {
    check("bessel_i1", x)?;
    if x <= ASYMPTOTIC_FROM {
        Ok(series(1, x))
    } else {
        Ok(x.exp() * asymptotic_scaled(1, x) / (2.0 * PI * x).sqrt())
    }
}

/// Exponentially scaled `e^{-x} I0(x)`.
pub fn bessel_i0e(x: f64) -> Result<f64> {
    check("bessel_i0e", x)?;
    if x <= ASYMPTOTIC_FROM {
        Ok(series(0, x) * (-x).exp())
    } else {
        Ok(asymptotic_scaled(0, x) / (2.0 * PI * x).sqrt())
    }
}

/// Exponentially scaled `e^{-x} I1(x)`.
pub fn bessel_i1e(x: f64) -> Result<f64> {
    check("bessel_i1e", x)?;
    if x <= ASYMPTOTIC_FROM {
        Ok(series(1, x) * (-x).exp())
    } else {
        Ok(asymptotic_scaled(1, x) / (2.0 * PI * x).sqrt())
    }
}
