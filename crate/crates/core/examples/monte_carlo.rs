// Slotted simulation of the real system next to the analytic model.
//
// With one channel and always-busy interferers that never hold back, the
// analytic error probability differs from the simulation only through the
// Gamma fit of the interference.

use uavq::scenario::load_scenario;
use uavq::simulator::{run, InterfererTraffic, SimConfig};
use uavq::throughput::{evaluate, PolicyVector};

const SCENARIO: &str = r#"
num_channels = 1
[[nodes]]
role = "source"
position = { x = 20.0, y = 20.0 }
fading = "rayleigh"
beta = 1.0
buffer_capacity = 1e6
[[nodes]]
id = "a"
role = "interferer"
position = { x = 28.0, y = 20.0 }
transmit_power = 0.02
fading = "rayleigh"
[[nodes]]
id = "b"
role = "interferer"
position = { x = 20.0, y = 28.0 }
transmit_power = 0.03
fading = "rayleigh"
[[nodes]]
id = "c"
role = "interferer"
position = { x = 0.0, y = 0.0 }
transmit_power = 0.05
fading = "rayleigh"
"#;

pub fn run_example() -> uavq::Result<()> {
    let s = load_scenario(SCENARIO)?;
    let policy = PolicyVector::new(s.betas())?;
    let analytic = evaluate(&s, &policy)?;
    let cfg = SimConfig {
        replication_count: 4,
        interferers: InterfererTraffic::Backlogged,
        ..SimConfig::new(50_000, 2024)
    };
    let sim = run(&s, &policy, &cfg)?;
    println!("P_err analytic {:.4}  simulated {:.4} ± {:.4}", analytic.p_error, sim.p_error.mean, sim.p_error.halfwidth);
    println!("R     analytic {:.3}  simulated {:.3} ± {:.3}", analytic.throughput, sim.throughput.mean, sim.throughput.halfwidth);
    let c = sim.counts;
    println!(
        "{} arrivals = {} delivered + {} errors + {} delay + {} overflow + {} queued",
        c.arrivals, c.delivered, c.error_drops, c.delay_drops, c.overflow_drops, c.still_queued
    );
    assert!(c.is_conserved());
    Ok(())
}

#[allow(dead_code)]
fn main() -> uavq::Result<()> {
    run_example()
}
