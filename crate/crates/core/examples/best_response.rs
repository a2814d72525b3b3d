// Every node picks its own best threshold against the others until nobody moves.

use uavq::scenario::load_scenario;
use uavq::throughput::{jacobi_best_response, EvalOptions, Evaluator, JacobiConfig, Objective, PolicyVector};

const SCENARIO: &str = r#"
placement_seed = 21
[[nodes]]
role = "source"
position = { x = 0.0, y = 0.0 }
beta = 3.0
[[nodes]]
role = "interferer"
count = 4
position = "sampled"
transmit_power = "sampled"
arrival_rate = "sampled"
beta = 3.0
"#;

pub fn run_example() -> uavq::Result<()> {
    let s = load_scenario(SCENARIO)?;
    let eval = Evaluator::new(&s, EvalOptions::default())?;
    for objective in [Objective::Own, Objective::Sum] {
        let cfg = JacobiConfig {
            grid_size: 48,
            objective,
            ..JacobiConfig::default()
        };
        let out = jacobi_best_response(&eval, &PolicyVector::new(s.betas())?, &cfg)?;
        println!("{objective:?}: converged={} after {} iterations", out.converged, out.iterations);
        for (node, (beta, r)) in s.nodes.iter().zip(out.policy.betas.iter().zip(&out.throughputs)) {
            println!("  {:<8} beta {beta:.4}  R {r:.3}", node.id);
        }
        println!("  total {:.3} packets/s", out.throughputs.iter().sum::<f64>());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> uavq::Result<()> {
    run_example()
}
