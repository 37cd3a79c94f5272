//! Plane waves cut off to growing boxes are approximate eigenvectors; the
//! residual shrinks like the inverse square root of the box size.

use pvlab::kernel::WalkKernel;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for (k, theta) in [(WalkKernel::simple1d(), vec![1.0]), (WalkKernel::simple2d(), vec![1.0, 0.5])] {
        let lambda = k.char_function(&theta);
        println!("d = {}, lambda = {lambda:.6}", k.dim());
        for n in [10, 40, 160] {
            let r = k.weyl_sequence_residual(&theta, lambda, n)?;
            println!("  n = {n:>3}: residual {r:.5}, sqrt(n) * residual {:.5}", r * (n as f64).sqrt());
        }
    }
    Ok(())
}
