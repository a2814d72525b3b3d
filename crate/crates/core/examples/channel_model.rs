// Elevation-dependent line-of-sight probability, path loss and fading per link.

use uavq::channel::{
    elevation_angle, p_los, path_loss_exponent, transmit_prob, EnvironmentParams, FadingModel, LinkChannel, Position,
};

pub fn run_example() -> uavq::Result<()> {
    let env = EnvironmentParams::default();
    let uav = Position::new(20.0, 20.0, 50.0);
    println!("{:>10} {:>8} {:>7} {:>6} {:>12} {:>10}", "ground x", "theta", "P_LoS", "alpha", "amplitude", "fading");
    for x in [20.0, 10.0, 0.0, -40.0, -150.0] {
        let ground = Position::new(x, 20.0, 0.0);
        let theta = elevation_angle(&ground, &uav)?;
        let link = LinkChannel::between(&ground, &uav, &env, None)?;
        let fading = match link.fading {
            FadingModel::Rician { b } => format!("Rice b={b:.2}"),
            FadingModel::Rayleigh { omega } => format!("Ray Ω={omega}"),
        };
        println!(
            "{x:>10} {:>7.1}° {:>7.3} {:>6.3} {:>12.4e} {fading:>10}",
            theta.to_degrees(),
            p_los(theta, &env)?,
            path_loss_exponent(theta, &env)?,
            link.path_loss_amplitude,
        );
    }
    // chance that the best of 15 channels clears a threshold
    let rice = FadingModel::rician(30f64.sqrt())?;
    let ray = FadingModel::rayleigh(2.0)?;
    for beta in [1.0, 1.55, 3.0, 5.1, 6.0] {
        println!(
            "beta {beta:>4}: phi_rice {:.6}  phi_ray {:.6}",
            transmit_prob(&rice, beta, 15)?,
            transmit_prob(&ray, beta, 15)?
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> uavq::Result<()> {
    run_example()
}
