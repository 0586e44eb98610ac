// Five coordinates look independent; six coordinates of one block never do.

use tuplewise_clt::statistics::{sign_product_census, tuple_independence_discrepancy};
use tuplewise_clt::{ConstructionParams, Process, Result};

pub fn run_example() -> Result<()> {
    let params = ConstructionParams::new(6, 1, 0.5, 3)?;
    let r = tuple_independence_discrepancy(Process::X, &params, &[0, 2, 5, 7, 9], &[0.0], 100_000)?;
    println!(
        "5-tuple: {} cells, max standardized discrepancy {:.2}, passes {}",
        r.cells,
        r.max_z,
        r.passes()
    );

    let census = sign_product_census(&params, 10_000)?;
    println!(
        "6-tuple sign product negative on {} of {} blocks",
        census.negative, census.draws
    );
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
