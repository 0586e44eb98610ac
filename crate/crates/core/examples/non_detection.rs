// A Kolmogorov-Smirnov comparison cannot see the non-normal limit at
// feasible sample sizes.

use tuplewise_clt::statistics::ks_non_detection;
use tuplewise_clt::{ConstructionParams, Result};

pub fn run_example() -> Result<()> {
    let params = ConstructionParams::new(6, 2, 0.5, 23)?;
    let c = ks_non_detection(&params, 64, 20_000, 1e-3)?;
    println!(
        "KS distance {:.4}, i.i.d. normal control {:.4}, critical {:.4}, indistinguishable {}",
        c.distance, c.control_distance, c.critical_distance, c.indistinguishable
    );
    println!("{}", c.statement);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
