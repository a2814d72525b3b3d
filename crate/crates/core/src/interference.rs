//! Aggregate interference at the destination and transmission-error probability.
//!
//! Each interferer `m` lands on the observed channel with probability
//! `φ(β_m)/|F|` and, when it does, contributes `P_m ĥ_m² h²` with `h` drawn
//! from its fading law truncated at `β_m`. The sum is replaced by a Gamma law
//! with the same mean and variance, and a packet fails when
//! `P ĥ² x² / (P_N + I) < γ_th`.

use crate::channel::{transmit_prob, truncated_power_moment, FadingModel, LinkChannel};
use crate::error::{Error, Result};
use crate::specfun::{gamma_density, gamma_q, integrate, QuadratureSpec};

pub const BOLTZMANN: f64 = 1.38e-23;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfererLink {
    pub transmit_power: f64,
    pub path_loss_amplitude: f64,
    pub fading: FadingModel,
    pub beta: f64,
}

impl InterfererLink {
    pub fn new(transmit_power: f64, channel: &LinkChannel, beta: f64) -> Self {
        Self {
            transmit_power,
            path_loss_amplitude: channel.path_loss_amplitude,
            fading: channel.fading,
            beta,
        }
    }

    /// This link's share of the aggregate `(mean, variance)`.
    pub fn moments(&self, num_channels: u32) -> Result<(f64, f64)> {
        if !(self.transmit_power > 0.0) || !(self.path_loss_amplitude > 0.0) {
            return Err(Error::domain(
                "InterfererLink",
                format!(
                    "power {} and path-loss amplitude {} must be positive",
                    self.transmit_power, self.path_loss_amplitude
                ),
            ));
        }
        if self.beta.is_infinite() {
            return Ok((0.0, 0.0));
        }
        let hit = transmit_prob(&self.fading, self.beta, num_channels)? / num_channels as f64;
        if hit == 0.0 {
            return Ok((0.0, 0.0));
        }
        let t2 = truncated_power_moment(&self.fading, self.beta, 2)?;
        let t4 = truncated_power_moment(&self.fading, self.beta, 4)?;
        let c = self.transmit_power * self.path_loss_amplitude.powi(2) * hit;
        let spread = t4 - t2 * t2;
        let var = if spread >= 0.0 {
            c * c * spread
        } else if -spread <= 1e-15 * t4 {
            0.0
        } else {
            return Err(Error::Numerical(format!(
                "truncated moments give negative spread {spread:e} (T2 = {t2:e}, T4 = {t4:e})"
            )));
        };
        Ok((c * t2, var))
    }
}

/// Gamma law with `shape · scale = mean` and `shape · scale² = variance`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaFit {
    pub shape: f64,
    pub scale: f64,
}

impl GammaFit {
    pub fn mean(&self) -> f64 {
        self.shape * self.scale
    }

    pub fn variance(&self) -> f64 {
        self.shape * self.scale * self.scale
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InterferenceLaw {
    /// No interference energy reaches the destination.
    Zero,
    Gamma(GammaFit),
}

/// Thermal noise `P_N = k·T·W`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub boltzmann: f64,
    pub temperature: f64,
    pub bandwidth: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            boltzmann: BOLTZMANN,
            temperature: 290.0,
            bandwidth: 1e6,
        }
    }
}

impl NoiseModel {
    pub fn power(&self) -> f64 {
        self.boltzmann * self.temperature * self.bandwidth
    }

    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("noise.boltzmann", self.boltzmann),
            ("noise.temperature", self.temperature),
            ("noise.bandwidth", self.bandwidth),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(field, format!("must be positive and finite, got {v}")));
            }
        }
        Ok(())
    }
}

/// Mean and variance of the aggregate interference on one channel.
///
/// Interferers are independent, so the variance is the sum of per-link
/// variances; the cross products in the expanded second moment cancel
/// against the squared mean.
pub fn interference_moments(links: &[InterfererLink], num_channels: u32) -> Result<(f64, f64)> {
    if num_channels == 0 {
        return Err(Error::domain("interference_moments", "num_channels must be at least 1"));
    }
    let mut mean = 0.0;
    let mut var = 0.0;
    for link in links {
        let (m, v) = link.moments(num_channels)?;
        mean += m;
        var += v;
    }
    Ok((mean, var))
}

pub fn fit_gamma(mean: f64, variance: f64) -> Result<GammaFit> {
    if !(mean > 0.0 && variance > 0.0) || !mean.is_finite() || !variance.is_finite() {
        return Err(Error::DegenerateInterference { mean, variance });
    }
    Ok(GammaFit {
        shape: mean * mean / variance,
        scale: variance / mean,
    })
}

/// Gamma fit of the aggregate, or [`InterferenceLaw::Zero`] when nothing interferes.
pub fn interference_law(links: &[InterfererLink], num_channels: u32) -> Result<InterferenceLaw> {
    let (mean, var) = interference_moments(links, num_channels)?;
    law_from_moments(mean, var)
}

pub fn law_from_moments(mean: f64, variance: f64) -> Result<InterferenceLaw> {
    if mean == 0.0 || variance == 0.0 {
        // every term vanished, possibly by underflow of a far tail
        return Ok(InterferenceLaw::Zero);
    }
    Ok(InterferenceLaw::Gamma(fit_gamma(mean, variance)?))
}

/// `Pr(I > x)`.
pub fn interference_ccdf(law: &InterferenceLaw, x: f64) -> f64 {
    match law {
        InterferenceLaw::Zero => {
            if x < 0.0 {
                1.0
            } else {
                0.0
            }
        }
        InterferenceLaw::Gamma(fit) => {
            if x <= 0.0 {
                1.0
            } else {
                gamma_q(fit.shape, x / fit.scale).unwrap_or(0.0)
            }
        }
    }
}

/// Density of the interference law; zero for the degenerate law.
pub fn interference_density(law: &InterferenceLaw, x: f64) -> f64 {
    match law {
        InterferenceLaw::Zero => 0.0,
        InterferenceLaw::Gamma(fit) => {
            if x <= 0.0 {
                0.0
            } else {
                gamma_density(fit.shape, fit.scale, x)
            }
        }
    }
}

/// How the error integral over `x >= β` is reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ErrorNormalization {
    /// Divide by `Pr(h >= β)`: error probability given that a packet is sent.
    #[default]
    Conditional,
    /// The bare integral against the unconditioned fading density.
    Literal,
}

/// The observed link: transmitter power, channel and threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MainLink {
    pub channel: LinkChannel,
    pub transmit_power: f64,
    pub beta: f64,
}

impl MainLink {
    /// `P ĥ² / γ_th`: received power per unit squared fading, scaled by the threshold.
    pub fn sinr_scale(&self, gamma_th: f64) -> f64 {
        self.transmit_power * self.channel.path_gain() / gamma_th
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinrParams {
    pub noise_power: f64,
    pub gamma_th: f64,
    pub num_channels: u32,
    pub normalization: ErrorNormalization,
}

/// Transmission-error probability of `main` under the given interferers.
pub fn p_error(main: &MainLink, links: &[InterfererLink], params: &SinrParams) -> Result<f64> {
    let law = interference_law(links, params.num_channels)?;
    p_error_with_law(main, &law, params)
}

/// Like [`p_error`] but with the interference law already fitted.
pub fn p_error_with_law(main: &MainLink, law: &InterferenceLaw, params: &SinrParams) -> Result<f64> {
    let parts = error_integral(main, law, params)?;
    match params.normalization {
        ErrorNormalization::Literal => Ok(parts.integral.clamp(0.0, 1.0)),
        ErrorNormalization::Conditional => {
            if parts.survival == 0.0 {
                return Err(Error::DegeneratePolicy);
            }
            Ok((parts.integral / parts.survival).clamp(0.0, 1.0))
        }
    }
}

/// `∫_β^∞ f(x) v(c x² - P_N) dx` together with `Pr(h >= β)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct ErrorIntegral {
    pub integral: f64,
    pub survival: f64,
}

pub(crate) fn error_integral(
    main: &MainLink,
    law: &InterferenceLaw,
    params: &SinrParams,
) -> Result<ErrorIntegral> {
    if !(params.gamma_th > 0.0) {
        return Err(Error::domain("p_error", format!("gamma_th = {} must be positive", params.gamma_th)));
    }
    error_integral_raw(
        &main.channel.fading,
        main.beta,
        main.sinr_scale(params.gamma_th),
        params.noise_power,
        law,
    )
}

/// Same integral with the link reduced to its fading law and `c = P ĥ² / γ_th`.
pub(crate) fn error_integral_raw(
    fading: &FadingModel,
    beta: f64,
    c: f64,
    noise_power: f64,
    law: &InterferenceLaw,
) -> Result<ErrorIntegral> {
    if !(beta >= 0.0) {
        return Err(Error::domain("p_error", format!("beta = {beta} must be non-negative")));
    }
    let survival = fading.ccdf(beta)?;
    if survival == 0.0 {
        return Ok(ErrorIntegral { integral: 0.0, survival });
    }
    // below x0 the noise alone defeats the packet
    let x0 = (noise_power / c).sqrt();
    let start = beta.max(x0);
    let outage = if x0 > beta { survival - fading.ccdf(x0)? } else { 0.0 };
    let tail = match law {
        InterferenceLaw::Zero => 0.0,
        InterferenceLaw::Gamma(_) => {
            let spec = QuadratureSpec {
                absolute_tolerance: 1e-13 * survival.max(1e-300),
                relative_tolerance: 1e-10,
                max_subdivisions: 400,
            };
            let f = |x: f64| fading.pdf(x) * interference_ccdf(law, c * x * x - noise_power);
            integrate(f, start, f64::INFINITY, &spec)?.value
        }
    };
    Ok(ErrorIntegral {
        integral: outage + tail,
        survival,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::Position;
    use crate::channel::{EnvironmentParams, FadingKind};
    use crate::specfun::lower_incomplete_gamma;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ray(beta: f64, power: f64) -> InterfererLink {
        InterfererLink {
            transmit_power: power,
            path_loss_amplitude: 1.0,
            fading: FadingModel::Rayleigh { omega: 2.0 },
            beta,
        }
    }

    #[test]
    fn moments_examples() {
        assert_eq!(interference_moments(&[], 15).unwrap(), (0.0, 0.0));
        let (m, v) = interference_moments(&[ray(0.0, 1.0)], 1).unwrap();
        assert!((m - 2.0).abs() < 1e-15 && (v - 4.0).abs() < 1e-15);
        let (m, v) = interference_moments(&[ray(0.0, 1.0), ray(0.0, 1.0)], 1).unwrap();
        assert!((m - 4.0).abs() < 1e-15 && (v - 8.0).abs() < 1e-15);
    }

    #[test]
    fn variance_equals_expanded_second_moment_form() {
        // Σ S_m + Σ_{m1≠m2} E_m1 E_m2 - (Σ E_m)², with S_m the scaled fourth moment
        let links = [
            ray(0.7, 0.6),
            ray(1.55, 0.9),
            InterfererLink {
                transmit_power: 0.8,
                path_loss_amplitude: 1.2e-3,
                fading: FadingModel::Rician { b: 4.1 },
                beta: 5.1,
            },
        ];
        let f = 15;
        let mut e = Vec::new();
        let mut s = Vec::new();
        for l in &links {
            let hit = transmit_prob(&l.fading, l.beta, f).unwrap() / f as f64;
            let g = l.transmit_power * l.path_loss_amplitude.powi(2);
            e.push(g * truncated_power_moment(&l.fading, l.beta, 2).unwrap() * hit);
            s.push(g * g * truncated_power_moment(&l.fading, l.beta, 4).unwrap() * hit * hit);
        }
        let mean: f64 = e.iter().sum();
        let mut second: f64 = s.iter().sum();
        for i in 0..e.len() {
            for j in 0..e.len() {
                if i != j {
                    second += e[i] * e[j];
                }
            }
        }
        let printed = second - mean * mean;
        let (m, v) = interference_moments(&links, f).unwrap();
        assert!(((m - mean) / mean).abs() < 1e-14);
        assert!(((v - printed) / v).abs() < 1e-9, "{v} vs {printed}");
    }

    #[test]
    fn two_rayleigh_interferers_against_monte_carlo() {
        let links = [ray(0.0, 1.0), ray(0.0, 1.0)];
        let (mean, var) = interference_moments(&links, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 10_000_000;
        let (mut s1, mut s2, mut s4) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            let i: f64 = links.iter().map(|l| l.fading.sample(&mut rng).powi(2)).sum();
            s1 += i;
            s2 += i * i;
            s4 += i.powi(4);
        }
        let nf = n as f64;
        let m = s1 / nf;
        let v = s2 / nf - m * m;
        let se_m = (v / nf).sqrt();
        assert!((m - mean).abs() < 3.0 * se_m);
        let se_v = ((s4 / nf - (s2 / nf).powi(2)) / nf).sqrt();
        assert!((v - var).abs() < 3.0 * se_v, "{v} vs {var}");
    }

    #[test]
    fn gamma_fit_examples() {
        assert_eq!(fit_gamma(1.0, 1.0).unwrap(), GammaFit { shape: 1.0, scale: 1.0 });
        assert_eq!(fit_gamma(4.0, 8.0).unwrap(), GammaFit { shape: 2.0, scale: 2.0 });
        assert_eq!(fit_gamma(2.0, 4.0).unwrap(), GammaFit { shape: 1.0, scale: 2.0 });
        assert!(matches!(fit_gamma(0.0, 1.0), Err(Error::DegenerateInterference { .. })));
        assert!(matches!(fit_gamma(1.0, 0.0), Err(Error::DegenerateInterference { .. })));
        assert_eq!(law_from_moments(0.0, 0.0).unwrap(), InterferenceLaw::Zero);
    }

    #[test]
    fn ccdf_examples() {
        let exp2 = InterferenceLaw::Gamma(GammaFit { shape: 1.0, scale: 2.0 });
        assert_eq!(interference_ccdf(&exp2, 0.0), 1.0);
        assert_eq!(interference_ccdf(&exp2, -3.0), 1.0);
        assert!((interference_ccdf(&exp2, 2.0) - (-1f64).exp()).abs() < 1e-15);
        let g2 = InterferenceLaw::Gamma(GammaFit { shape: 2.0, scale: 1.0 });
        assert!((interference_ccdf(&g2, 3.0) - 4.0 * (-3f64).exp()).abs() < 1e-15);
        let via_lower = 1.0 - lower_incomplete_gamma(2.0, 3.0).unwrap();
        assert!((interference_ccdf(&g2, 3.0) - via_lower).abs() < 1e-14);
        assert_eq!(interference_ccdf(&InterferenceLaw::Zero, -1e-30), 1.0);
        assert_eq!(interference_ccdf(&InterferenceLaw::Zero, 0.0), 0.0);
    }

    #[test]
    fn ccdf_log_concave_tail() {
        // for shape >= 1 the Gamma survival function is log-concave
        for &(k, t) in &[(1.0, 1.0), (2.5, 0.3), (7.0, 2.0)] {
            let law = InterferenceLaw::Gamma(GammaFit { shape: k, scale: t });
            let xs: Vec<f64> = (1..200).map(|i| i as f64 * 0.1 * k * t).collect();
            let l: Vec<f64> = xs.iter().map(|&x| interference_ccdf(&law, x).ln()).collect();
            for w in l.windows(3) {
                if w.iter().all(|v| v.is_finite()) {
                    assert!(w[0] + w[2] - 2.0 * w[1] <= 1e-9);
                }
            }
            assert!(interference_ccdf(&law, 1e4 * k * t) < 1e-100);
        }
    }

    fn main_link(b: f64, amp: f64, power: f64, beta: f64) -> MainLink {
        MainLink {
            channel: LinkChannel {
                fading: FadingModel::Rician { b },
                path_loss_amplitude: amp,
                distance: 50.0,
                elevation: 1.0,
            },
            transmit_power: power,
            beta,
        }
    }

    fn params(gamma_th: f64) -> SinrParams {
        SinrParams {
            noise_power: NoiseModel::default().power(),
            gamma_th,
            num_channels: 15,
            normalization: ErrorNormalization::Conditional,
        }
    }

    #[test]
    fn noise_only_cases() {
        let strong = main_link(4.0, 1e-3, 0.5, 1.0);
        assert_eq!(p_error(&strong, &[], &params(8.0)).unwrap(), 0.0);

        // weak link: noise alone defeats small fades
        let weak = main_link(2.0, 3e-7, 0.5, 0.5);
        let p = params(8.0);
        let x0 = (p.noise_power / weak.sinr_scale(8.0)).sqrt();
        assert!(x0 > 0.5);
        let f = weak.channel.fading;
        let expect = (f.cdf(x0).unwrap() - f.cdf(0.5).unwrap()) / f.ccdf(0.5).unwrap();
        let got = p_error(&weak, &[], &p).unwrap();
        assert!((got - expect).abs() < 1e-12);

        let lit = SinrParams { normalization: ErrorNormalization::Literal, ..p };
        let raw = p_error(&weak, &[], &lit).unwrap();
        assert!((raw - expect * f.ccdf(0.5).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn gamma_integral_matches_independent_quadrature() {
        let main = main_link(4.5, 9e-4, 0.5, 3.0);
        let links = [
            InterfererLink {
                transmit_power: 0.8,
                path_loss_amplitude: 8e-4,
                fading: FadingModel::Rician { b: 4.0 },
                beta: 4.0,
            },
            InterfererLink {
                transmit_power: 0.6,
                path_loss_amplitude: 5e-4,
                fading: FadingModel::Rayleigh { omega: 2.0 },
                beta: 1.55,
            },
        ];
        let p = params(8.0);
        let got = p_error(&main, &links, &p).unwrap();
        let (m, v) = interference_moments(&links, 15).unwrap();
        let (k, t) = (m * m / v, v / m);
        let c = main.sinr_scale(8.0);
        let f = main.channel.fading;
        // integrate the CDF of the SINR deficit directly over [β, 40]
        let spec = QuadratureSpec::new(1e-14, 1e-12, 2000).unwrap();
        let num = integrate(
            |x| {
                let y = c * x * x - p.noise_power;
                f.pdf(x) * if y <= 0.0 { 1.0 } else { gamma_q(k, y / t).unwrap() }
            },
            3.0,
            40.0,
            &spec,
        )
        .unwrap()
        .value;
        let expect = num / f.ccdf(3.0).unwrap();
        assert!(got > 0.0 && got < 1.0);
        assert!((got - expect).abs() < 1e-8, "{got} vs {expect}");
    }

    fn scenario_links(seed: u64, count: usize) -> (MainLink, Vec<InterfererLink>) {
        use rand::Rng;
        let env = EnvironmentParams::default();
        let uav = Position::new(20.0, 20.0, 50.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let link = |rng: &mut ChaCha8Rng, kind: Option<FadingKind>| {
            let p = Position::new(rng.random_range(0.0..40.0), rng.random_range(0.0..40.0), 0.0);
            LinkChannel::between(&p, &uav, &env, kind).unwrap()
        };
        let main = MainLink {
            channel: link(&mut rng, None),
            transmit_power: 0.5,
            beta: 4.0,
        };
        let links = (0..count)
            .map(|i| {
                let kind = if i % 2 == 0 { FadingKind::Rician } else { FadingKind::Rayleigh };
                let ch = link(&mut rng, Some(kind));
                let beta = if kind == FadingKind::Rician { 4.5 } else { 1.2 };
                InterfererLink::new(rng.random_range(0.5..1.0), &ch, beta)
            })
            .collect();
        (main, links)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn adding_an_interferer_never_helps(seed in any::<u64>(), count in 1usize..6) {
            let (main, links) = scenario_links(seed, count);
            let p = params(8.0);
            let mut last = p_error(&main, &[], &p).unwrap();
            for n in 1..=links.len() {
                let now = p_error(&main, &links[..n], &p).unwrap();
                prop_assert!(now >= last - 1e-9, "{n}: {now} < {last}");
                last = now;
            }
        }

        #[test]
        fn error_monotone_in_power_and_threshold(seed in any::<u64>(), scale in 1.1f64..3.0) {
            let (main, links) = scenario_links(seed, 3);
            let base = p_error(&main, &links, &params(8.0)).unwrap();
            prop_assert!((0.0..=1.0).contains(&base));
            let louder = MainLink { transmit_power: main.transmit_power * scale, ..main };
            prop_assert!(p_error(&louder, &links, &params(8.0)).unwrap() <= base + 1e-9);
            prop_assert!(p_error(&main, &links, &params(8.0 * scale)).unwrap() >= base - 1e-9);
            let hot: Vec<_> = links
                .iter()
                .map(|l| InterfererLink { transmit_power: l.transmit_power * scale, ..*l })
                .collect();
            prop_assert!(p_error(&main, &hot, &params(8.0)).unwrap() >= base - 1e-9);
        }

        #[test]
        fn fit_preserves_moments(mean in 1e-12f64..1e3, cv in 0.01f64..10.0) {
            let var = (mean * cv).powi(2);
            let fit = fit_gamma(mean, var).unwrap();
            prop_assert!(((fit.mean() - mean) / mean).abs() < 1e-12);
            prop_assert!(((fit.variance() - var) / var).abs() < 1e-12);
        }
    }
}
