//! Link geometry, line-of-sight probability, path loss and small-scale fading.
//!
//! A link is classified once from its elevation angle: line-of-sight links get
//! Rician fading whose LoS amplitude grows with elevation, the rest get
//! Rayleigh fading. A node transmits only when the best of its `|F|` i.i.d.
//! channel draws clears its threshold `beta`, so the per-slot transmit
//! probability is `1 - CDF(beta)^|F|`.

use crate::error::{Error, Result};
use crate::specfun::{bessel_i0e, bessel_i1e, integrate, marcum_p1, marcum_q1, QuadratureSpec};
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub z: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn horizontal_distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn vertical_distance(&self, other: &Position) -> f64 {
        (self.z - other.z).abs()
    }

    pub fn distance(&self, other: &Position) -> f64 {
        self.horizontal_distance(other)
            .hypot(self.vertical_distance(other))
    }
}

/// Propagation environment constants.
///
/// `a1`/`b1` shape the logistic LoS probability (`b1` per radian), `k0`/`k_pi2`
/// are the Rician K factors at 0 and 90 degrees elevation, `alpha0`/`alpha_pi2`
/// the path-loss exponents at the same two angles and `omega` the Rayleigh
/// fading factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvironmentParams {
    pub a1: f64,
    pub b1: f64,
    pub k0: f64,
    pub k_pi2: f64,
    pub alpha0: f64,
    pub alpha_pi2: f64,
    pub omega: f64,
    pub d0: f64,
    pub carrier_frequency: f64,
}

impl Default for EnvironmentParams {
    /// Urban logistic LoS fit (9.61, 0.16 per degree) with the 900 MHz,
    /// 20 m reference-distance setup used throughout the presets.
    fn default() -> Self {
        Self {
            a1: 9.61,
            b1: 0.16 * 180.0 / PI,
            k0: 1.0,
            k_pi2: 15.0,
            alpha0: 3.5,
            alpha_pi2: 2.0,
            omega: 2.0,
            d0: 20.0,
            carrier_frequency: 900e6,
        }
    }
}

impl EnvironmentParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("environment.a1", self.a1),
            ("environment.b1", self.b1),
            ("environment.k0", self.k0),
            ("environment.omega", self.omega),
            ("environment.d0", self.d0),
            ("environment.carrier_frequency", self.carrier_frequency),
        ];
        for (field, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(field, format!("must be positive and finite, got {v}")));
            }
        }
        if !(self.k_pi2 >= self.k0 && self.k_pi2.is_finite()) {
            return Err(Error::invalid(
                "environment.k_pi2",
                format!("must be >= k0 = {}, got {}", self.k0, self.k_pi2),
            ));
        }
        if !(self.alpha_pi2 >= 2.0 && self.alpha0 >= self.alpha_pi2 && self.alpha0.is_finite()) {
            return Err(Error::invalid(
                "environment.alpha0",
                format!(
                    "need alpha0 >= alpha_pi2 >= 2, got alpha0 = {}, alpha_pi2 = {}",
                    self.alpha0, self.alpha_pi2
                ),
            ));
        }
        Ok(())
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_frequency
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FadingKind {
    Rayleigh,
    Rician,
}

/// Small-scale fading amplitude law.
///
/// `Rayleigh { omega }` has density `(2x/Ω) e^{-x²/Ω}`; `Rician { b }` has
/// density `x e^{-(x²+b²)/2} I0(xb)` (unit diffuse variance per dimension).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FadingModel {
    Rayleigh { omega: f64 },
    Rician { b: f64 },
}

impl FadingModel {
    pub fn rayleigh(omega: f64) -> Result<Self> {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::domain("FadingModel::rayleigh", format!("omega = {omega} must be positive")));
        }
        Ok(FadingModel::Rayleigh { omega })
    }

    pub fn rician(b: f64) -> Result<Self> {
        if !(b >= 0.0 && b.is_finite()) {
            return Err(Error::domain("FadingModel::rician", format!("b = {b} must be non-negative")));
        }
        Ok(FadingModel::Rician { b })
    }

    pub fn kind(&self) -> FadingKind {
        match self {
            FadingModel::Rayleigh { .. } => FadingKind::Rayleigh,
            FadingModel::Rician { .. } => FadingKind::Rician,
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match *self {
            FadingModel::Rayleigh { omega } => 2.0 * x / omega * (-x * x / omega).exp(),
            FadingModel::Rician { b } => {
                let d = x - b;
                x * (-0.5 * d * d).exp() * bessel_i0e(x * b).unwrap_or(0.0)
            }
        }
    }

    /// d/dx of [`pdf`](Self::pdf).
    pub fn pdf_derivative(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        match *self {
            FadingModel::Rayleigh { omega } => {
                2.0 / omega * (-x * x / omega).exp() * (1.0 - 2.0 * x * x / omega)
            }
            FadingModel::Rician { b } => {
                let d = x - b;
                let z = x * b;
                let i0e = bessel_i0e(z).unwrap_or(0.0);
                let i1e = bessel_i1e(z).unwrap_or(0.0);
                (-0.5 * d * d).exp() * ((1.0 - x * x) * i0e + z * i1e)
            }
        }
    }

    /// `Pr(h < beta)`.
    pub fn cdf(&self, beta: f64) -> Result<f64> {
        check_beta(beta)?;
        match *self {
            FadingModel::Rayleigh { omega } => Ok(-(-beta * beta / omega).exp_m1()),
            FadingModel::Rician { b } => marcum_p1(b, beta),
        }
    }

    /// `Pr(h >= beta)`.
    pub fn ccdf(&self, beta: f64) -> Result<f64> {
        check_beta(beta)?;
        match *self {
            FadingModel::Rayleigh { omega } => Ok((-beta * beta / omega).exp()),
            FadingModel::Rician { b } => marcum_q1(b, beta),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            FadingModel::Rayleigh { omega } => {
                let e: f64 = Exp1.sample(rng);
                (omega * e).sqrt()
            }
            FadingModel::Rician { b } => {
                let i: f64 = StandardNormal.sample(rng);
                let q: f64 = StandardNormal.sample(rng);
                (b + i).hypot(q)
            }
        }
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta >= 0.0) || beta.is_nan() {
        return Err(Error::domain("fading threshold", format!("beta = {beta} must be non-negative")));
    }
    Ok(())
}

fn check_theta(func: &'static str, theta: f64) -> Result<()> {
    if !(0.0..=FRAC_PI_2).contains(&theta) {
        return Err(Error::domain(func, format!("theta = {theta} outside [0, pi/2]")));
    }
    Ok(())
}

/// Resolved channel between one transmitter and the destination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkChannel {
    pub fading: FadingModel,
    pub path_loss_amplitude: f64,
    pub distance: f64,
    pub elevation: f64,
}

impl LinkChannel {
    pub fn between(
        tx: &Position,
        rx: &Position,
        env: &EnvironmentParams,
        fading_override: Option<FadingKind>,
    ) -> Result<Self> {
        let elevation = elevation_angle(tx, rx)?;
        let distance = tx.distance(rx);
        Ok(Self {
            fading: classify_link(tx, rx, env, fading_override)?,
            path_loss_amplitude: path_loss_amplitude(distance, elevation, env)?,
            distance,
            elevation,
        })
    }

    /// Mean received power gain `ĥ²`.
    pub fn path_gain(&self) -> f64 {
        self.path_loss_amplitude * self.path_loss_amplitude
    }
}

pub fn elevation_angle(a: &Position, b: &Position) -> Result<f64> {
    let h = a.horizontal_distance(b);
    let v = a.vertical_distance(b);
    if h == 0.0 && v == 0.0 {
        return Err(Error::Geometry(format!("coincident positions {a:?}")));
    }
    if h == 0.0 {
        return Ok(FRAC_PI_2);
    }
    Ok((v / h).atan())
}

pub fn p_los(theta: f64, env: &EnvironmentParams) -> Result<f64> {
    check_theta("p_los", theta)?;
    Ok(1.0 / (1.0 + env.a1 * (-env.b1 * theta).exp()))
}

/// Elevation-dependent exponent `α(θ) = (α_{π/2} - α_0) P_LoS(θ) + α_0`.
pub fn path_loss_exponent(theta: f64, env: &EnvironmentParams) -> Result<f64> {
    let a2 = env.alpha_pi2 - env.alpha0;
    let b2 = env.alpha0;
    Ok(a2 * p_los(theta, env)? + b2)
}

/// `ĥ = c/(4πf) · sqrt(d0^{α-2} / d^α)`, valid for `d >= d0`.
pub fn path_loss_amplitude(d: f64, theta: f64, env: &EnvironmentParams) -> Result<f64> {
    if !(d >= env.d0) || !d.is_finite() {
        return Err(Error::domain(
            "path_loss_amplitude",
            format!("distance {d} m is inside the reference distance d0 = {} m", env.d0),
        ));
    }
    let alpha = path_loss_exponent(theta, env)?;
    let free_space = env.wavelength() / (4.0 * PI);
    Ok(free_space * (env.d0.powf(alpha - 2.0) / d.powf(alpha)).sqrt())
}

/// Rician LoS amplitude `b = sqrt(2 K(θ))` with `K(θ) = k0 (k_{π/2}/k0)^{2θ/π}`.
pub fn rician_b(theta: f64, env: &EnvironmentParams) -> Result<f64> {
    check_theta("rician_b", theta)?;
    let b3 = 2.0 / PI * (env.k_pi2 / env.k0).ln();
    Ok((2.0 * env.k0 * (b3 * theta).exp()).sqrt())
}

pub fn fading_pdf(model: &FadingModel, x: f64) -> f64 {
    model.pdf(x)
}

pub fn fading_cdf(model: &FadingModel, beta: f64) -> Result<f64> {
    model.cdf(beta)
}

/// Probability that the best of `num_channels` independent draws reaches `beta`.
pub fn transmit_prob(model: &FadingModel, beta: f64, num_channels: u32) -> Result<f64> {
    if num_channels == 0 {
        return Err(Error::domain("transmit_prob", "num_channels must be at least 1"));
    }
    let below = model.cdf(beta)?;
    Ok(1.0 - below.powi(num_channels as i32))
}

/// `E[h^power · 1{h >= beta}]` for `power` 2 or 4.
pub fn truncated_power_moment(model: &FadingModel, beta: f64, power: u32) -> Result<f64> {
    truncated_power_moment_with(model, beta, power, &QuadratureSpec::default())
}

pub fn truncated_power_moment_with(
    model: &FadingModel,
    beta: f64,
    power: u32,
    spec: &QuadratureSpec,
) -> Result<f64> {
    check_beta(beta)?;
    if power != 2 && power != 4 {
        return Err(Error::domain("truncated_power_moment", format!("power must be 2 or 4, got {power}")));
    }
    match *model {
        FadingModel::Rayleigh { omega } => {
            let s = beta * beta;
            let tail = (-s / omega).exp();
            Ok(if power == 2 {
                (s + omega) * tail
            } else {
                (s * s + 2.0 * omega * s + 2.0 * omega * omega) * tail
            })
        }
        FadingModel::Rician { .. } => {
            let p = power as i32;
            let r = integrate(|x| x.powi(p) * model.pdf(x), beta, f64::INFINITY, spec)?;
            Ok(r.value.max(0.0))
        }
    }
}

/// Rician when the link is more likely LoS than not, Rayleigh otherwise,
/// unless `fading_override` forces a family.
pub fn classify_link(
    a: &Position,
    b: &Position,
    env: &EnvironmentParams,
    fading_override: Option<FadingKind>,
) -> Result<FadingModel> {
    let theta = elevation_angle(a, b)?;
    let kind = match fading_override {
        Some(kind) => kind,
        None if p_los(theta, env)? >= 0.5 => FadingKind::Rician,
        None => FadingKind::Rayleigh,
    };
    match kind {
        FadingKind::Rician => FadingModel::rician(rician_b(theta, env)?),
        FadingKind::Rayleigh => FadingModel::rayleigh(env.omega),
    }
}
