// Monte Carlo moments with standard errors, compared to exact values.

use tuplewise_clt::oracle;
use tuplewise_clt::statistics::{estimate_moment, estimate_normalized_moment, mixture_check};
use tuplewise_clt::{ConstructionParams, Process, Result};

pub fn run_example() -> Result<()> {
    let params = ConstructionParams::new(6, 1, 0.5, 11)?;
    let reps = 50_000;

    let fourth = estimate_moment(Process::XTilde, &params, 1, 4, reps)?.with_reference(0.9);
    println!(
        "E X~^4 = {:.4} +- {:.4}, z {:+.2}",
        fourth.estimate,
        fourth.std_error,
        fourth.z_score.unwrap()
    );

    for n in [1, 4, 16] {
        let r = estimate_normalized_moment(Process::XTilde, &params, n, 4, reps)?
            .with_reference(oracle::normalized_fourth_moment(n as u64)?);
        println!("n = {n:>2}: {:.4} vs {:.4}", r.estimate, r.exact_ref.unwrap());
    }

    let m = mixture_check(&params, 8, 2, reps)?;
    println!(
        "h = 8, r = 2: thinned {:.4}, mixture {:.4}, z {:+.2}",
        m.thinned.estimate,
        m.mixture.estimate,
        m.difference.z_score.unwrap()
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
