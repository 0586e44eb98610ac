// Exact reference values: moments of the level-1 process, the deficit
// bound, binomial residues and the Gaussian-mixture moment.

use num_rational::BigRational;
use tuplewise_clt::oracle::{self, MomentQuery};
use tuplewise_clt::Result;

pub fn run_example() -> Result<()> {
    let l = 6;
    let aligned = oracle::exact_partial_sum_moment_level1(l, 12, 6, false)?;
    let shifted = oracle::exact_partial_sum_moment_level1(l, 12, 6, true)?;
    let gaussian = 15.0 * 12f64.powi(3);
    let bound = gaussian - oracle::deficit_bound(l, 0)?;
    println!("E S(Y,12)^6 = {aligned:.4}, E S(X,12)^6 = {shifted:.4}, bound {bound}, gaussian {gaussian}");

    // any five coordinates of one block are independent; all six are not
    let five = MomentQuery::new((0..5).map(|i| (i, 2)).collect(), 1, false)?;
    let six = MomentQuery::new((0..6).map(|i| (i, 1)).collect(), 1, false)?;
    println!(
        "E prod_5 X^2 = {}, E prod_6 X = {:.6}",
        oracle::parity_moment_level1(l, &five)?,
        oracle::parity_moment_level1(l, &six)?
    );

    println!("CLT gap constant {:.4e}", oracle::clt_gap_constant(l)?);

    let tol = BigRational::from_float(1e-6).expect("finite");
    if let Some(d) = oracle::least_equidistributed_trials(6, &tol, 1_000)? {
        println!("beta_m mod 6 is within 1e-6 of uniform from m = {}", d.trials());
    }

    let h = oracle::gaussian_mixture_settling_index(6, 0.5, 1e-3, 10_000)?;
    println!("Gaussian-mixture sixth moment within 1e-3 of 15/8 from h = {h:?}");
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
