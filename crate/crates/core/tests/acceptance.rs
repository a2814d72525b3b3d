//! End-to-end acceptance checks. Each test prints one PASS/FAIL line to
//! stderr, bypassing the harness capture, then asserts.

use std::io::Write;
use std::time::Instant;

use uavq::channel::{transmit_prob, truncated_power_moment, FadingModel};
use uavq::interference::fit_gamma;
use uavq::queueing::{p_delay, QueueParams};
use uavq::report::ResultTable;
use uavq::scenario::{load_scenario, Scenario};
use uavq::simulator::{self, InterfererTraffic, SimConfig};
use uavq::specfun::{integrate, marcum_p1, marcum_q1, QuadratureSpec};
use uavq::sweep::{preset, run_sweep};
use uavq::throughput::{
    beta_upper, beta_upper_erf, compose_loss, expected_throughput, jacobi_best_response, loss_derivative,
    loss_value, EvalOptions, Evaluator, JacobiConfig, LossContext, PolicyVector, ThroughputMode,
};

fn verdict(id: u32, name: &str, start: Instant, failures: &[String]) {
    let status = if failures.is_empty() { "PASS" } else { "FAIL" };
    let mut err = std::io::stderr().lock();
    let _ = writeln!(
        err,
        "acceptance {id:>2} {status} {name} ({:.1} s)",
        start.elapsed().as_secs_f64()
    );
    for f in failures.iter().take(12) {
        let _ = writeln!(err, "    {f}");
    }
    if failures.len() > 12 {
        let _ = writeln!(err, "    ... {} more", failures.len() - 12);
    }
    assert!(failures.is_empty(), "acceptance {id} failed with {} violations", failures.len());
}

/// Rows of `table` grouped by the value in `key`, in first-seen order.
fn groups(table: &ResultTable, key: &str, value: &str) -> Vec<(f64, Vec<f64>)> {
    let keys = table.numbers(key).unwrap();
    let values = table.numbers(value).unwrap();
    let mut out: Vec<(f64, Vec<f64>)> = Vec::new();
    for (k, v) in keys.into_iter().zip(values) {
        match out.iter_mut().find(|(g, _)| *g == k) {
            Some((_, vs)) => vs.push(v),
            None => out.push((k, vec![v])),
        }
    }
    out
}

fn sweep_preset(name: &str) -> ResultTable {
    let p = preset(name).unwrap();
    run_sweep(&p.scenario, &p.sweep).unwrap()
}

#[test]
fn a01_fig2_throughput_shape() {
    let start = Instant::now();
    let table = sweep_preset("fig2");
    let tol = 1e-9;
    let mut failures = Vec::new();
    let beta_n = table.numbers("beta_n").unwrap();
    let beta_m = table.numbers("beta_m").unwrap();
    let thr = table.numbers("throughput").unwrap();
    if thr.iter().any(|v| !v.is_finite()) {
        failures.push("sweep contains infeasible points".into());
    }

    for (bn, curve) in groups(&table, "beta_n", "throughput") {
        for w in curve.windows(2) {
            if w[1] < w[0] - tol * w[0].abs().max(1.0) {
                failures.push(format!("beta_n {bn}: throughput falls in beta_m ({} -> {})", w[0], w[1]));
            }
        }
    }
    let mut m_values: Vec<f64> = beta_m.clone();
    m_values.dedup_by(|a, b| a == b);
    m_values.sort_by(f64::total_cmp);
    m_values.dedup();
    for bm in m_values {
        let curve: Vec<(f64, f64)> = (0..thr.len())
            .filter(|&i| beta_m[i] == bm)
            .map(|i| (beta_n[i], thr[i]))
            .collect();
        let peak = (0..curve.len())
            .max_by(|&a, &b| curve[a].1.total_cmp(&curve[b].1))
            .unwrap();
        let slack = |v: f64| tol * v.abs().max(1.0);
        let rising = curve[..=peak].windows(2).all(|w| w[1].1 >= w[0].1 - slack(w[0].1));
        let falling = curve[peak..].windows(2).all(|w| w[1].1 <= w[0].1 + slack(w[0].1));
        if !(rising && falling) {
            failures.push(format!("beta_m {bm}: throughput is not unimodal in beta_n"));
        }
        let argmax = curve[peak].0;
        if (argmax - 5.1).abs() > 0.5 {
            failures.push(format!("beta_m {bm}: argmax beta_n {argmax} is not within 0.5 of 5.1"));
        }
    }
    verdict(1, "fig2 monotone in beta_m, unimodal in beta_n, peak near 5.1", start, &failures);
}

#[test]
fn a02_fig3_interferer_count() {
    let start = Instant::now();
    let table = sweep_preset("fig3");
    let mut failures = Vec::new();
    for (low, curve) in groups(&table, "power_low", "throughput") {
        for (k, w) in curve.windows(2).enumerate() {
            if !(w[1] < w[0]) {
                failures.push(format!("power from {low}: throughput does not fall from {k} to {} interferers", k + 1));
            }
        }
        let drops: Vec<f64> = curve.windows(2).map(|w| w[0] - w[1]).collect();
        let later = drops[2..].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !(drops[0] > later && drops[1] > later) {
            failures.push(format!(
                "power from {low}: first drops {:.4}, {:.4} do not exceed the later maximum {later:.4}",
                drops[0], drops[1]
            ));
        }
    }
    verdict(2, "fig3 strictly decreasing, first two interferers dominate", start, &failures);
}

#[test]
fn a03_fig4_error_probability() {
    let start = Instant::now();
    let table = sweep_preset("fig4");
    let mut failures = Vec::new();
    let by_gamma = groups(&table, "gamma_th", "p_error");
    for (g, curve) in &by_gamma {
        for (k, w) in curve.windows(2).enumerate() {
            if !(w[1] > w[0]) {
                failures.push(format!("gamma_th {g}: p_error does not rise from {k} to {} interferers", k + 1));
            }
        }
    }
    let mut gammas: Vec<&(f64, Vec<f64>)> = by_gamma.iter().collect();
    gammas.sort_by(|a, b| a.0.total_cmp(&b.0));
    for pair in gammas.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        for k in 0..lo.1.len() {
            let ok = if k == 0 { lo.1[k] <= hi.1[k] } else { lo.1[k] < hi.1[k] };
            if !ok {
                failures.push(format!(
                    "{k} interferers: p_error at gamma_th {} ({:e}) not below gamma_th {} ({:e})",
                    lo.0, lo.1[k], hi.0, hi.1[k]
                ));
            }
        }
    }
    verdict(3, "fig4 p_error rises with interferers and with gamma_th", start, &failures);
}

#[test]
fn a04_fig5_queue_drop() {
    let start = Instant::now();
    let table = sweep_preset("fig5");
    let mut failures = Vec::new();
    let curves = groups(&table, "beta_n", "queue_drop");
    for (bn, curve) in &curves {
        for w in curve.windows(2) {
            if !(w[1] > w[0]) {
                failures.push(format!("beta_n {bn}: queue drop not increasing ({} -> {})", w[0], w[1]));
            }
        }
    }
    let (bn, last) = curves.last().unwrap();
    let at_max = *last.last().unwrap();
    if !(at_max >= 0.99) {
        failures.push(format!("beta_n {bn} at the longest slot: queue drop {at_max} < 0.99"));
    }
    verdict(4, "fig5 queue drop increasing in slot duration, near one at the bound", start, &failures);
}

const ORACLE_ERROR: &str = r#"
num_channels = 1
[[nodes]]
id = "source"
role = "source"
position = { x = 20.0, y = 20.0 }
fading = "rayleigh"
buffer_capacity = 1e6
[[nodes]]
id = "a"
role = "interferer"
position = { x = 28.0, y = 20.0 }
transmit_power = 0.02
fading = "rayleigh"
beta = 0.0
[[nodes]]
id = "b"
role = "interferer"
position = { x = 20.0, y = 28.0 }
transmit_power = 0.03
fading = "rayleigh"
beta = 0.0
[[nodes]]
id = "c"
role = "interferer"
position = { x = 0.0, y = 0.0 }
transmit_power = 0.05
fading = "rayleigh"
beta = 0.0
"#;

#[test]
fn a05_error_probability_oracle() {
    let start = Instant::now();
    let base = load_scenario(ORACLE_ERROR).unwrap();
    let mut failures = Vec::new();
    let mut err = std::io::stderr().lock();
    for beta in [0.5, 1.0, 1.5] {
        let mut s = base.clone();
        s.nodes[0].beta = beta;
        let policy = PolicyVector::new(s.betas()).unwrap();
        let eval = Evaluator::new(&s, EvalOptions::default()).unwrap();
        let analytic = eval.evaluate_node(&policy, 0).unwrap().p_error;
        let cfg = SimConfig {
            replication_count: 8,
            warmup_slots: 10_000,
            interferers: InterfererTraffic::Backlogged,
            ..SimConfig::new(1_000_000, 5)
        };
        let sim = simulator::run(&s, &policy, &cfg).unwrap();
        let gap = (analytic - sim.p_error.mean).abs();
        let _ = writeln!(
            err,
            "    beta {beta}: p_error analytic {analytic:.4} simulated {:.4} ± {:.4} (gap {gap:.4})",
            sim.p_error.mean, sim.p_error.halfwidth
        );
        if gap > 0.03 {
            failures.push(format!("beta {beta}: gap {gap:.4} > 0.03"));
        }
    }
    drop(err);
    verdict(5, "p_error Gamma fit vs simulation within 0.03", start, &failures);
}

fn queue_scenario(lambda: f64, beta: f64) -> Scenario {
    load_scenario(&format!(
        r#"
[[nodes]]
id = "source"
role = "source"
position = {{ x = 0.0, y = 0.0 }}
fading = "rician"
arrival_rate = {lambda}
delay_threshold = 0.04
buffer_capacity = 100
beta = {beta}
"#
    ))
    .unwrap()
}

#[test]
fn a06_queue_oracle() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut err = std::io::stderr().lock();
    for lambda in [60.0, 80.0, 120.0] {
        for beta in [4.6, 5.1, 5.6] {
            let s = queue_scenario(lambda, beta);
            let policy = PolicyVector::new(s.betas()).unwrap();
            let analytic = Evaluator::new(&s, EvalOptions::default())
                .unwrap()
                .evaluate_node(&policy, 0)
                .unwrap();
            let cfg = SimConfig {
                replication_count: 8,
                ..SimConfig::new(1_000_000, 11)
            };
            let sim = simulator::run(&s, &policy, &cfg).unwrap();
            let load = lambda * s.nodes[0].queue.slot_duration;
            for (name, an, em) in [
                ("p_delay", analytic.p_delay, sim.p_delay),
                ("p_overflow", analytic.p_overflow, sim.p_overflow),
            ] {
                let gap = (an - em.mean).abs();
                let _ = writeln!(
                    err,
                    "    load {load:.2} beta {beta}: {name} analytic {an:.4} simulated {:.4} ± {:.4} (gap {gap:.4})",
                    em.mean, em.halfwidth
                );
                if gap > 0.05 {
                    failures.push(format!("load {load:.2} beta {beta}: {name} gap {gap:.4} > 0.05"));
                }
            }
        }
    }
    drop(err);
    verdict(6, "queue drops vs simulation within 0.05", start, &failures);
}

#[test]
fn a07_formula_self_consistency() {
    use rand::{Rng, SeedableRng};
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);

    for _ in 0..10_000 {
        let (ov, dly, er): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
        let direct = 1.0 - (1.0 - ov) * (1.0 - dly) * (1.0 - er);
        let composed = compose_loss(ov, dly, er);
        if (composed - direct).abs() > 1e-12 {
            failures.push(format!("composition ({ov}, {dly}, {er}): {composed} vs {direct}"));
        }
        let lambda = 100.0 * rng.random::<f64>();
        let r = expected_throughput(lambda, ov, dly, er, ThroughputMode::Exact);
        if (r - lambda * (1.0 - composed)).abs() > 1e-12 * lambda.max(1.0) {
            failures.push(format!("throughput at lambda {lambda}: {r}"));
        }
    }

    for _ in 0..10_000 {
        let mean = 10f64.powf(rng.random_range(-15.0..0.0));
        let var = 10f64.powf(rng.random_range(-30.0..0.0));
        let fit = fit_gamma(mean, var).unwrap();
        let m = fit.shape * fit.scale;
        let v = fit.shape * fit.scale * fit.scale;
        if ((m - mean) / mean).abs() > 1e-12 || ((v - var) / var).abs() > 1e-12 {
            failures.push(format!("gamma fit ({mean:e}, {var:e}) gives ({m:e}, {v:e})"));
        }
    }

    let tight = QuadratureSpec::new(1e-14, 1e-12, 400).unwrap();
    for omega in [0.25, 1.0, 2.0, 7.5] {
        let model = FadingModel::rayleigh(omega).unwrap();
        for beta in [0.0, 0.1, 0.5, 1.0, 2.0, 3.5] {
            for p in [2u32, 4] {
                let closed = truncated_power_moment(&model, beta, p).unwrap();
                let quad = integrate(|x| x.powi(p as i32) * model.pdf(x), beta, f64::INFINITY, &tight)
                    .unwrap()
                    .value;
                if ((closed - quad) / quad).abs() > 1e-8 {
                    failures.push(format!("Rayleigh omega {omega} beta {beta} T{p}: {closed:e} vs {quad:e}"));
                }
            }
        }
    }

    for a in [0.0, 0.5, 1.0, 3.0, 5.1, 8.0, 15.0, 30.0] {
        for b in [0.0, 0.1, 1.0, 2.5, 5.0, 5.5, 8.0, 12.0, 20.0, 40.0] {
            let sum = marcum_p1(a, b).unwrap() + marcum_q1(a, b).unwrap();
            if (sum - 1.0).abs() > 1e-9 {
                failures.push(format!("Marcum P + Q at ({a}, {b}) = {sum}"));
            }
        }
    }

    let models = [
        FadingModel::rayleigh(1.0).unwrap(),
        FadingModel::rayleigh(2.0).unwrap(),
        FadingModel::rician(3.2).unwrap(),
        FadingModel::rician(5.1).unwrap(),
    ];
    for model in &models {
        for lambda in [60.0, 80.0, 100.0, 120.0] {
            for slot in [0.0005, 0.002, 0.004] {
                for n in [1u32, 4, 15] {
                    let q = QueueParams::new(lambda, slot, 0.04, 100.0).unwrap();
                    let upper = beta_upper(model, &q, n).unwrap();
                    let phi = transmit_prob(model, upper, n).unwrap();
                    let pd = p_delay(phi, &q).unwrap();
                    if (pd - 1.0).abs() > 1e-9 {
                        failures.push(format!("{model:?} lambda {lambda} slot {slot} |F| {n}: P_dly {pd} at the bound"));
                    }
                }
            }
        }
    }
    verdict(7, "formula self-consistency", start, &failures);
}

/// Richardson-extrapolated central differences `(first, second)` of `f` at `x`.
fn richardson(f: impl Fn(f64) -> f64, x: f64, h: f64) -> (f64, f64) {
    let d1 = |h: f64| (f(x + h) - f(x - h)) / (2.0 * h);
    let d2 = |h: f64| (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
    ((4.0 * d1(h / 2.0) - d1(h)) / 3.0, (4.0 * d2(h / 2.0) - d2(h)) / 3.0)
}

const DERIVATIVE_SCENARIO: &str = r#"
num_channels = 15
gamma_th = 8.0
[[nodes]]
id = "source"
role = "source"
position = { x = 5.0, y = 5.0 }
fading = "FAMILY"
[[nodes]]
role = "interferer"
position = { x = 30.0, y = 12.0 }
fading = "rician"
beta = 5.1
[[nodes]]
role = "interferer"
position = { x = 14.0, y = 35.0 }
fading = "rayleigh"
beta = 1.55
"#;

#[test]
fn a08_derivatives_match_finite_differences() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut err = std::io::stderr().lock();
    for family in ["rayleigh", "rician"] {
        let s = load_scenario(&DERIVATIVE_SCENARIO.replace("FAMILY", family)).unwrap();
        let eval = Evaluator::new(&s, EvalOptions::default()).unwrap();
        let policy = PolicyVector::new(s.betas()).unwrap();
        let contributions = eval.contributions(&policy).unwrap();
        let law = eval.law_excluding(&contributions, 0).unwrap();
        let ctx: LossContext = eval.loss_context(0, law);
        let model = eval.links()[0].fading;
        let upper = eval.beta_upper(0).unwrap();
        let h = 1e-3 * upper;
        let (mut worst_first, mut worst_second) = (0.0f64, 0.0f64);
        for k in 0..32 {
            let beta = upper * (0.05 + 0.9 * k as f64 / 31.0);
            let analytic = loss_derivative(&model, beta, &ctx).unwrap();
            let (first, second) = richardson(|b| loss_value(&model, b, &ctx).unwrap(), beta, h);
            let rel = |a: f64, n: f64| (a - n).abs() / n.abs().max(a.abs()).max(f64::MIN_POSITIVE);
            worst_first = worst_first.max(rel(analytic.first, first));
            worst_second = worst_second.max(rel(analytic.second, second));
            if rel(analytic.first, first) > 1e-4 {
                failures.push(format!(
                    "{family} beta {beta:.4}: first {:e} vs {first:e}",
                    analytic.first
                ));
            }
            if rel(analytic.second, second) > 1e-3 {
                failures.push(format!(
                    "{family} beta {beta:.4}: second {:e} vs {second:e}",
                    analytic.second
                ));
            }
        }
        let _ = writeln!(
            err,
            "    {family}: worst relative error {worst_first:.2e} (first), {worst_second:.2e} (second)"
        );
    }
    drop(err);
    verdict(8, "loss derivatives vs Richardson differences", start, &failures);
}

#[test]
fn a09_upper_bounds() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut err = std::io::stderr().lock();
    for lambda in [60.0, 80.0, 100.0, 120.0] {
        for slot in [0.0005, 0.001, 0.002, 0.004] {
            for n in [1u32, 4, 15] {
                let q = QueueParams::new(lambda, slot, 0.04, 100.0).unwrap();
                let load = lambda * slot;
                for model in [
                    FadingModel::rayleigh(0.5).unwrap(),
                    FadingModel::rayleigh(2.0).unwrap(),
                    FadingModel::rician(1.0).unwrap(),
                    FadingModel::rician(5.1).unwrap(),
                ] {
                    let upper = beta_upper(&model, &q, n).unwrap();
                    let phi = transmit_prob(&model, upper, n).unwrap();
                    if (phi - load).abs() > 1e-9 {
                        failures.push(format!("{model:?} load {load} |F| {n}: phi {phi} at the bound"));
                    }
                }
            }
        }
    }
    for b in [3.1, 3.5, 4.0, 5.0, 6.0, 8.0] {
        let model = FadingModel::rician(b).unwrap();
        let mut worst: f64 = 0.0;
        for lambda in [60.0, 80.0, 100.0, 120.0] {
            for n in [1u32, 15] {
                let q = QueueParams::new(lambda, 0.002, 0.04, 100.0).unwrap();
                let exact = beta_upper(&model, &q, n).unwrap();
                let surrogate = beta_upper_erf(b, &q, n).unwrap();
                let gap = (exact - surrogate).abs();
                worst = worst.max(gap);
                if gap > 0.1 {
                    failures.push(format!(
                        "b {b} lambda {lambda} |F| {n}: erf bound {surrogate:.4} vs exact {exact:.4}"
                    ));
                }
            }
        }
        let _ = writeln!(err, "    b {b}: largest erf bound gap {worst:.4}");
    }
    drop(err);
    verdict(9, "upper bounds hit the arrival load, erf surrogate within 0.1", start, &failures);
}

const SYMMETRIC: &str = r#"
[[nodes]]
id = "left"
role = "source"
position = { x = 10.0, y = 20.0 }
fading = "rician"
[[nodes]]
id = "right"
role = "interferer"
position = { x = 30.0, y = 20.0 }
fading = "rician"
"#;

#[test]
fn a10_best_response_matches_grid_search() {
    let start = Instant::now();
    let s = load_scenario(SYMMETRIC).unwrap();
    let eval = Evaluator::new(&s, EvalOptions::default()).unwrap();
    let grid_size = 64;
    let cfg = JacobiConfig {
        grid_size,
        ..JacobiConfig::default()
    };
    let mut failures = Vec::new();
    let uppers = [eval.beta_upper(0).unwrap(), eval.beta_upper(1).unwrap()];
    if (uppers[0] - uppers[1]).abs() > 1e-12 {
        failures.push(format!("nodes are not symmetric: upper bounds {uppers:?}"));
    }
    let step = uppers[0] / grid_size as f64;
    let grid: Vec<f64> = (0..grid_size).map(|k| k as f64 * step).collect();

    // best response of the left node to each threshold of the right one;
    // by symmetry it is also the right node's
    let respond = |other: f64| -> usize {
        let values: Vec<f64> = grid
            .iter()
            .map(|&own| {
                let p = PolicyVector::new(vec![own, other]).unwrap();
                eval.evaluate_node(&p, 0).map(|b| b.throughput).unwrap_or(f64::NEG_INFINITY)
            })
            .collect();
        (0..values.len()).fold(0, |best, i| if values[i] > values[best] { i } else { best })
    };
    let responses: Vec<usize> = grid.iter().map(|&b| respond(b)).collect();
    let equilibria: Vec<(usize, usize)> = (0..grid_size)
        .flat_map(|i| (0..grid_size).map(move |j| (i, j)))
        .filter(|&(i, j)| responses[j] == i && responses[i] == j)
        .collect();
    if equilibria.is_empty() {
        failures.push("grid search found no mutual best response".into());
    }

    let start_policy = PolicyVector::new(vec![0.5 * uppers[0], 0.5 * uppers[1]]).unwrap();
    let out = jacobi_best_response(&eval, &start_policy, &cfg).unwrap();
    let [l, r] = [out.policy.betas[0], out.policy.betas[1]];
    if !out.converged {
        failures.push(format!("Jacobi did not converge in {} iterations", out.iterations));
    }
    if (l - r).abs() > 1e-12 {
        failures.push(format!("Jacobi profile ({l}, {r}) is not symmetric"));
    }
    let near = equilibria
        .iter()
        .any(|&(i, j)| (grid[i] - l).abs() <= step * (1.0 + 1e-9) && (grid[j] - r).abs() <= step * (1.0 + 1e-9));
    if !near {
        let found: Vec<(f64, f64)> = equilibria.iter().map(|&(i, j)| (grid[i], grid[j])).collect();
        failures.push(format!("Jacobi profile ({l}, {r}) is not within a grid step of {found:?}"));
    }
    let _ = writeln!(
        std::io::stderr().lock(),
        "    Jacobi ({l:.4}, {r:.4}) after {} iterations; grid equilibria {:?}",
        out.iterations,
        equilibria.iter().map(|&(i, j)| (grid[i], grid[j])).collect::<Vec<_>>()
    );
    verdict(10, "Jacobi best response vs exhaustive grid search", start, &failures);
}
