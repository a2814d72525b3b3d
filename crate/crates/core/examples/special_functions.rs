// Marcum Q, modified Bessel functions and the regularized incomplete gamma.

use uavq::specfun::{bessel_i0, bessel_i0e, gamma_p, gamma_q, marcum_p1, marcum_q1};

pub fn run_example() -> uavq::Result<()> {
    println!("{:>6} {:>6} {:>14} {:>14}", "a", "b", "Q1(a, b)", "P1 + Q1");
    for (a, b) in [(0.0, 1.0), (1.0, 1.0), (5.477, 5.1), (5.477, 7.0), (30.0, 35.0)] {
        let q = marcum_q1(a, b)?;
        let p = marcum_p1(a, b)?;
        println!("{a:>6} {b:>6} {q:>14.6e} {:>14.12}", p + q);
    }
    // the scaled Bessel function stays finite where I0 overflows
    for x in [1.0, 50.0, 800.0] {
        println!("I0({x}) = {:e}, e^-x I0({x}) = {:.9}", bessel_i0(x)?, bessel_i0e(x)?);
    }
    let (k, x) = (2.5, 3.0);
    println!("P({k}, {x}) = {:.12}, Q = {:.12}", gamma_p(k, x)?, gamma_q(k, x)?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> uavq::Result<()> {
    run_example()
}
