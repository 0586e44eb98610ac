// Cylinder events, the mixing gap over increasing lags, and agreement of
// cylinder laws across levels.
//
// Specs use the grammar `i:(a,b];j:[c,d);marks=0110`; see the README.

use tuplewise_clt::statistics::{level_consistency_gap, mixing_gap_table, CylinderSpec};
use tuplewise_clt::{ConstructionParams, Result};

pub fn run_example() -> Result<()> {
    let a: CylinderSpec = "0:(0.5,inf)".parse()?;
    let b: CylinderSpec = "0:(-inf,-0.3)".parse()?;
    let params = ConstructionParams::new(6, 0, 0.5, 17)?;
    for row in mixing_gap_table(&params, &a, &b, &[4, 16, 64], 50_000)? {
        println!(
            "N = {:>2}: gap {:+.2e} +- {:.1e}",
            row.lag, row.gap.estimate, row.gap.std_error
        );
    }

    let spec: CylinderSpec = "0:(0,inf);2:(-inf,0.5];marks=101010".parse()?;
    let level1 = ConstructionParams::new(6, 1, 0.5, 19)?;
    let gap = level_consistency_gap(&level1, 2, &spec, 20_000)?;
    println!(
        "P level 2 - P level 1 for {spec}: {:+.2e} +- {:.1e}",
        gap.estimate, gap.std_error
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
