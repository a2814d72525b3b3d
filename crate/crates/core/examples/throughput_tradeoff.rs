// Expected throughput against the source threshold, with the convexity and stability bounds.

use uavq::scenario::load_scenario;
use uavq::throughput::{beta_lower, EvalOptions, Evaluator, PolicyVector};

const SCENARIO: &str = r#"
placement_seed = 7
[[nodes]]
role = "source"
position = { x = 0.0, y = 0.0 }
arrival_rate = 120.0
delay_threshold = 0.03
[[nodes]]
role = "interferer"
count = 9
position = "sampled"
transmit_power = "sampled"
beta = 6.0
"#;

pub fn run_example() -> uavq::Result<()> {
    let s = load_scenario(SCENARIO)?;
    let eval = Evaluator::new(&s, EvalOptions::default())?;
    let policy = PolicyVector::new(s.betas())?;
    let upper = eval.beta_upper(0)?;
    let contributions = eval.contributions(&policy)?;
    let law = eval.law_excluding(&contributions, 0)?;
    let lower = beta_lower(&eval.links()[0].fading, &eval.loss_context(0, law))?;
    println!("beta range [{lower:.4}, {upper:.4}]");
    println!("{:>6} {:>11} {:>11} {:>11} {:>10}", "beta", "P_dly", "P_ov", "P_err", "R");
    let mut best = (0.0, f64::MIN);
    for k in 0..=20 {
        let beta = upper * k as f64 / 20.0;
        let b = eval.breakdown(0, beta, &law)?;
        if b.throughput > best.1 {
            best = (beta, b.throughput);
        }
        println!("{beta:>6.3} {:>11.3e} {:>11.3e} {:>11.3e} {:>10.4}", b.p_delay, b.p_overflow, b.p_error, b.throughput);
    }
    println!("best threshold on this grid: {:.3} ({:.3} packets/s)", best.0, best.1);
    Ok(())
}

#[allow(dead_code)]
fn main() -> uavq::Result<()> {
    run_example()
}
