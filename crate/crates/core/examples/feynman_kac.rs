//! Path expectations weighted by the potential, computed exactly and by
//! Monte Carlo.

use pvlab::gibbs::{fk_monte_carlo, fk_semigroup};
use pvlab::kernel::WalkKernel;
use pvlab::lattice::Point;
use pvlab::potential::PotentialSpec;
use pvlab::spectral::TruncatedOperator;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let k = WalkKernel::simple1d();
    let origin = Point::new(&[0]);
    let spec = PotentialSpec::single_site(origin, 1.0, 30)?;
    let op = TruncatedOperator::new(&k, &spec, 30)?;
    let n = 20;
    let exact = fk_semigroup(&op, &vec![1.0; op.len()], n)[op.origin_index()];
    println!("exact {exact:.6}");
    for samples in [10_000, 100_000, 400_000] {
        let est = fk_monte_carlo(&k, &spec, |_| 1.0, &origin, n, samples, 2024)?;
        println!(
            "{samples:>7} samples: {:.6} +- {:.6} ({:+.2} stderr)",
            est.estimate,
            est.stderr,
            (est.estimate - exact) / est.stderr
        );
    }
    Ok(())
}
