//! The Doob transform of the perturbed walk is a reversible Markov chain.
//! A long trajectory's occupation measure approaches its stationary law.

use pvlab::gibbs::{doob_kernel, occupation, simulate_chain, total_variation};
use pvlab::kernel::WalkKernel;
use pvlab::lattice::Point;
use pvlab::potential::GeometricSparse;
use pvlab::spectral::{perron_pair, TruncatedOperator};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let k = WalkKernel::simple1d();
    let spec = GeometricSparse::new(1, 1.0, 3)
        .anchor(Point::new(&[0]), 2.0)
        .box_radius(60)
        .build()?;
    let op = TruncatedOperator::new(&k, &spec, 60)?;
    let pair = perron_pair(&op)?;
    let chain = doob_kernel(&op, &pair)?;
    println!(
        "row deficit {:.1e}, detailed balance {:.1e}",
        chain.row_deficit,
        chain.detailed_balance_violation()
    );
    for steps in [1_000, 10_000, 100_000] {
        let path = simulate_chain(&chain, &Point::new(&[0]), steps, 7)?;
        let tv = total_variation(&occupation(&chain, &path), &chain.stationary);
        println!("{steps:>7} steps: total variation to stationary {tv:.4}");
    }
    Ok(())
}
