// Delay and overflow drops of a finite-buffer queue as the threshold rises.

use uavq::channel::{transmit_prob, FadingModel};
use uavq::queueing::{p_delay, p_overflow, p_overflow_at_boundary, service_rate, QueueParams};
use uavq::throughput::beta_upper;

pub fn run_example() -> uavq::Result<()> {
    let fading = FadingModel::rician(30f64.sqrt())?;
    for buffer in [5.0, 100.0] {
        let q = QueueParams::new(80.0, 0.002, 0.04, buffer)?;
        let upper = beta_upper(&fading, &q, 15)?;
        println!("buffer {buffer}: stable while beta <= {upper:.4}");
        for frac in [0.5, 0.8, 0.9, 0.95, 0.99, 1.0] {
            let beta = upper * frac;
            let phi = transmit_prob(&fading, beta, 15)?;
            let mu = service_rate(phi)?;
            let ov = p_overflow(mu, &q).unwrap_or_else(|_| p_overflow_at_boundary(&q));
            println!(
                "  beta {beta:.4}  phi {phi:.4}  rho {:.3}  P_dly {:.4e}  P_ov {ov:.4e}",
                q.offered_load(mu),
                p_delay(phi, &q)?
            );
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> uavq::Result<()> {
    run_example()
}
