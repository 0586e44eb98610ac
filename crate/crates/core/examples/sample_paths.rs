// Draws one block of each level and windows of the three processes.
//
// ```text
// cargo run --example sample_paths
// ```

use tuplewise_clt::{build_block, sample_window, subblock_sums, ConstructionParams, CounterRng, Process, Result};

pub fn run_example() -> Result<()> {
    let params = ConstructionParams::new(6, 2, 0.5, 7)?;

    let block = build_block(&params, 1, &CounterRng::new(1))?;
    let sign: f64 = block.values.iter().map(|v| v.signum()).product();
    println!("level-1 block {:?}", block.values);
    println!("sign product {sign}");

    let block = build_block(&params, 2, &CounterRng::new(2))?;
    let sums = subblock_sums(&block, params.arity(), 1)?;
    println!(
        "level-2 sub-block sums {sums:.3?} (product {:.4})",
        sums.iter().product::<f64>()
    );

    for process in [Process::Y, Process::X, Process::XTilde] {
        let w = sample_window(process, &params, 8, &params.stream())?;
        println!("{process:>7}: {:+.3?}", w.values);
        if let Some(marks) = &w.marks {
            println!("  marks: {marks:?}");
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
