// Gamma moment matching of aggregate interference and the resulting error probability.

use uavq::channel::{EnvironmentParams, LinkChannel, Position};
use uavq::interference::{
    interference_law, p_error, ErrorNormalization, InterferenceLaw, InterfererLink, MainLink, NoiseModel, SinrParams,
};

pub fn run_example() -> uavq::Result<()> {
    let env = EnvironmentParams::default();
    let uav = Position::new(20.0, 20.0, 50.0);
    let main = MainLink {
        channel: LinkChannel::between(&Position::new(0.0, 0.0, 0.0), &uav, &env, None)?,
        transmit_power: 0.5,
        beta: 5.1,
    };
    let spots = [(35.0, 5.0, 0.9), (5.0, 38.0, 0.6), (30.0, 30.0, 0.75), (12.0, 25.0, 0.55)];
    let params = SinrParams {
        noise_power: NoiseModel::default().power(),
        gamma_th: 8.0,
        num_channels: 15,
        normalization: ErrorNormalization::Conditional,
    };
    for beta_m in [0.0, 4.0, 5.1, 6.0, 7.0] {
        let links = spots
            .iter()
            .map(|&(x, y, p)| Ok(InterfererLink::new(p, &LinkChannel::between(&Position::new(x, y, 0.0), &uav, &env, None)?, beta_m)))
            .collect::<uavq::Result<Vec<_>>>()?;
        let law = interference_law(&links, 15)?;
        let fit = match law {
            InterferenceLaw::Zero => "no interference".to_string(),
            InterferenceLaw::Gamma(g) => format!("Gamma(k={:.3}, θ={:.3e})", g.shape, g.scale),
        };
        println!("beta_m {beta_m:>3}: {fit:<34} P_err {:.6}", p_error(&main, &links, &params)?);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> uavq::Result<()> {
    run_example()
}
