// The thinning operator and its exact mixture formulas.

use tuplewise_clt::sparsifier::{binomial_weights, cdf_mixture, kappa_positions, moment_mixture, sparsify};
use tuplewise_clt::Result;

pub fn run_example() -> Result<()> {
    let source = [0.4, -1.1, 0.9];
    let marks = [0, 1, 1, 0, 1];
    println!("kappa {:?}", kappa_positions(&marks)?.kappa);
    println!("thinned {:?}", sparsify(&source, &marks)?);

    // uniform on (-sqrt3, sqrt3) has F(0) = 1/2
    println!("P(X~ <= 0) = {}", cdf_mixture(0.5, 0.5, 0.0)?);

    let h = 4;
    let base: Vec<f64> = (1..=h).map(|j| j as f64).collect(); // E S(X, j)^2 = j
    println!("binomial weights {:?}", binomial_weights(h, 0.5));
    println!("E S(X~, 4)^2 = {}", moment_mixture(0.5, h, 2, &base)?);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
