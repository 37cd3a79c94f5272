//! Finite-horizon path measures converge to the Doob chain's path law, and
//! the partition function grows like the top eigenvalue.

use pvlab::gibbs::{convergence_rate, doob_kernel, partition_growth};
use pvlab::kernel::WalkKernel;
use pvlab::lattice::Point;
use pvlab::potential::GeometricSparse;
use pvlab::spectral::{perron_pair, TruncatedOperator};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let k = WalkKernel::lazy1d(0.3)?;
    let spec = GeometricSparse::new(1, 1.0, 3)
        .anchor(Point::new(&[0]), 2.0)
        .box_radius(80)
        .build()?;
    let op = TruncatedOperator::new(&k, &spec, 80)?;
    let pair = perron_pair(&op)?;
    let chain = doob_kernel(&op, &pair)?;

    let step = Point::new(&[1]);
    let horizons: Vec<usize> = (10..=60).collect();
    let fit = convergence_rate(&op, &chain, 1, &horizons, move |p: &[Point]| {
        f64::from(u8::from(p[0] == step))
    })?;
    println!("first-step marginal converges at rate {:.6}", fit.epsilon);
    for (n, d) in fit.horizons.iter().zip(&fit.discrepancy).step_by(10) {
        println!("  n = {n:>2}: {d:.3e}");
    }

    println!("top eigenvalue {:.10}", pair.value);
    for p in partition_growth(&op, 80).iter().step_by(20) {
        println!(
            "  N = {:>2}: Z_N^(1/N) = {:.8}, two-step ratio {:.10}",
            p.n, p.root, p.two_step_ratio
        );
    }
    Ok(())
}
