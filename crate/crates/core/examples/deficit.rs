// Where the sixth moment falls short of the Gaussian value: the exact
// level-1 deficit and the negative sub-block products at level 2.

use tuplewise_clt::oracle;
use tuplewise_clt::statistics::{estimate_moment, subblock_product_check};
use tuplewise_clt::{ConstructionParams, Process, Result};

pub fn run_example() -> Result<()> {
    let exact = oracle::exact_partial_sum_moment_level1(6, 12, 6, true)?;
    println!(
        "exact E S(X,12)^6 = {exact:.4}, Gaussian 25920, shortfall {:.2}",
        25_920.0 - exact
    );

    let params = ConstructionParams::new(6, 1, 0.5, 5)?;
    let mc = estimate_moment(Process::X, &params, 12, 6, 100_000)?.with_reference(exact);
    println!("Monte Carlo {:.1} +- {:.1}", mc.estimate, mc.std_error);

    let r = subblock_product_check(&params, 2, 20_000)?;
    println!(
        "level 2: E prod T = {:.3}, -(E|t|)^6 = {:.3}, largest product {:.3e}",
        r.product.estimate, r.check_value, r.max_product
    );
    println!("floors hold: {}", r.floors_hold());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
